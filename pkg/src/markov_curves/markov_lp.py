"""Discrete tangential Markov factors as linear programs.

The Markov factor of a sampled set S with basepoint x0, direction v and
degree n is

    M = sup { |D_v p(x0)| : deg p <= n,  |p(x)| <= 1 for all x in S },

a finite linear program once S is finite: the objective is the exact
directional-derivative functional in a polynomial basis and the
constraints are two-sided bounds at the samples.  Solved at a vertex,
the optimizer is an extremal polynomial that equioscillates on a
support subset of S.

The basis is a product Chebyshev family scaled to the bounding box of
the samples, which keeps the constraint matrix well conditioned far
past where a raw monomial basis degrades.  Coordinates in which the
samples are flat (for example a planar germ whose trace lies in a line)
are frozen out of the basis; the direction v must stay inside the
sampled slice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .curve_model import (DomainError, InconsistentGermError, NumericError,
                          SampleSet, multiplicity, sample_real_trace,
                          tangent_vector)
from .lp import UnboundedProblemError, solve_sup_norm_lp

#: Above this condition estimate the sample/basis pairing is rejected.
CONDITION_LIMIT = 1e12

#: Degenerate-coordinate threshold relative to the box diameter.
FLAT_TOL = 1e-14

DEFAULT_DEGREES = (2, 3, 4, 6, 8, 12)
DEFAULT_DENSITY = 120


class TooFewSamplesError(ValueError):
    """Fewer samples than basis dimensions: the factor is unbounded."""


class ConditioningError(RuntimeError):
    """Sample/basis pairing too ill-conditioned to trust."""


def _chebyshev_table(u, degree):
    """T_0..T_degree at u, shape (*u.shape, degree+1). Complex safe."""
    u = np.asarray(u)
    table = np.empty(u.shape + (degree + 1,), dtype=u.dtype)
    table[..., 0] = 1.0
    if degree >= 1:
        table[..., 1] = u
    for j in range(2, degree + 1):
        table[..., j] = 2.0 * u * table[..., j - 1] - table[..., j - 2]
    return table


def _chebyshev_derivative_table(u, degree):
    """T_0'..T_degree' at scalar u via T_m' = m * U_{m-1}."""
    out = np.zeros(degree + 1, dtype=np.asarray(u).dtype)
    if degree >= 1:
        # Second-kind values U_0..U_{degree-1}.
        second = np.empty(degree, dtype=out.dtype)
        second[0] = 1.0
        if degree >= 2:
            second[1] = 2.0 * u
        for j in range(2, degree):
            second[j] = 2.0 * u * second[j - 1] - second[j - 2]
        out[1:] = np.arange(1, degree + 1) * second
    return out


def _graded_indices(dims, degree, frozen):
    """Multi-indices with |alpha| <= degree, graded lexicographic.

    ``frozen`` marks coordinates forced to exponent zero.
    """
    indices = []
    active = [d for d in range(dims) if not frozen[d]]
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(active, total):
            alpha = [0] * dims
            for d in combo:
                alpha[d] += 1
            indices.append(tuple(alpha))
    return tuple(indices)


@dataclass(frozen=True)
class PolynomialBasis:
    """Product Chebyshev basis T_a1((x1-c1)/h1) * ... of total degree <= n.

    The constant element is 1 everywhere, in particular at the box
    center.  ``frozen`` marks coordinates without sample variation;
    those never carry a positive exponent.
    """

    ambient_dim: int
    degree: int
    center: tuple
    half_width: tuple
    frozen: tuple
    indices: tuple

    @classmethod
    def from_points(cls, points, degree):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2:
            raise DomainError("sample array must have shape (m, n)")
        if degree < 0:
            raise DomainError("degree must be nonnegative")
        low = points.min(axis=0)
        high = points.max(axis=0)
        center = 0.5 * (low + high)
        half = 0.5 * (high - low)
        diameter = float(np.max(high - low))
        frozen = tuple(bool(h <= FLAT_TOL * max(1.0, diameter)) for h in half)
        half = tuple(1.0 if flat else float(h)
                     for h, flat in zip(half, frozen))
        indices = _graded_indices(points.shape[1], degree, frozen)
        return cls(ambient_dim=points.shape[1], degree=degree,
                   center=tuple(float(c) for c in center),
                   half_width=half, frozen=frozen, indices=indices)

    @property
    def count(self):
        return len(self.indices)

    def evaluate(self, points):
        """Basis matrix of shape (m, count); complex points allowed."""
        points = np.asarray(points)
        if points.ndim == 1:
            points = points[None, :]
        center = np.asarray(self.center, dtype=points.dtype)
        half = np.asarray(self.half_width, dtype=points.dtype)
        u = (points - center) / half
        tables = [_chebyshev_table(u[:, d], self.degree)
                  for d in range(self.ambient_dim)]
        alpha = np.asarray(self.indices)
        out = np.ones((points.shape[0], self.count), dtype=u.dtype)
        for d in range(self.ambient_dim):
            out *= tables[d][:, alpha[:, d]]
        return out

    def derivative_row(self, x0, v):
        """Exact directional-derivative functional at x0.

        Row r with r @ coefficients == D_v p(x0); differentiates the
        scaled Chebyshev recurrences (no finite differences).
        """
        x0 = np.asarray(x0, dtype=float)
        v = np.asarray(v, dtype=float)
        if x0.shape != (self.ambient_dim,) or v.shape != (self.ambient_dim,):
            raise DomainError("x0 and v must be ambient-dimension vectors")
        for d in range(self.ambient_dim):
            if self.frozen[d] and abs(v[d]) > 1e-12:
                raise DomainError(
                    f"direction leaves the sampled slice (coordinate {d})")
        u = (x0 - np.asarray(self.center)) / np.asarray(self.half_width)
        values = [_chebyshev_table(np.asarray(u[d]), self.degree)
                  for d in range(self.ambient_dim)]
        derivs = [_chebyshev_derivative_table(u[d], self.degree) /
                  self.half_width[d]
                  for d in range(self.ambient_dim)]
        row = np.zeros(self.count)
        for pos, alpha in enumerate(self.indices):
            for d in range(self.ambient_dim):
                if v[d] == 0.0:
                    continue
                term = v[d] * derivs[d][alpha[d]]
                for other in range(self.ambient_dim):
                    if other != d:
                        term *= values[other][alpha[other]]
                row[pos] += term
        return row


def directional_derivative_functional(basis, x0, v):
    """Functional row of D_v at x0 in ``basis`` coordinates."""
    return basis.derivative_row(x0, v)


@dataclass(frozen=True)
class MarkovProblem:
    """A discrete Markov extremal problem.

    ``ball_radius`` records the geometric radius the samples realize
    (eps**k around a singular basepoint, eps otherwise); it does not
    enter the optimization.
    """

    samples: object  # SampleSet or (m, n) array
    x0: tuple
    v: tuple
    degree: int
    ball_radius: float = float("nan")

    def sample_array(self):
        if isinstance(self.samples, SampleSet):
            return self.samples.images
        return np.asarray(self.samples, dtype=float)

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if not math.isclose(float(np.linalg.norm(v)), 1.0, rel_tol=0, abs_tol=1e-9):
            raise DomainError("direction v must have unit Euclidean norm")
        if self.degree < 0:
            raise DomainError("degree must be nonnegative")


@dataclass(frozen=True)
class LpStats:
    iterations: int
    max_residual: float
    solves: int


@dataclass(frozen=True)
class MarkovResult:
    """Solved Markov factor with its extremal polynomial."""

    factor: float
    coefficients: np.ndarray
    status: str  # 'optimal' | 'unbounded' | 'degenerate'
    lp_stats: LpStats
    basis: PolynomialBasis
    support_count: int


def _reduce_columns(matrix, functional):
    """Restrict (matrix, functional) to the numerically spanned columns.

    Returns (reduced matrix, reduced functional, back map, effective
    condition number); the back map lifts reduced coefficient vectors
    to the full basis (minimal-norm representative).  Raises
    TooFewSamplesError when the functional has a component the sampled
    function space cannot see, since the discrete problem is then
    effectively unbounded.
    """
    singular, vt = np.linalg.svd(matrix, full_matrices=False)[1:]
    if singular[0] == 0.0:
        return matrix, functional, np.eye(matrix.shape[1]), 1.0
    cutoff = singular[0] * max(matrix.shape) * np.finfo(float).eps
    rank = int(np.sum(singular > cutoff))
    condition = float(singular[0] / singular[rank - 1])
    if rank == matrix.shape[1]:
        return matrix, functional, np.eye(matrix.shape[1]), condition
    back_map = vt[:rank].T
    reduced = back_map.T @ functional
    leak = float(np.linalg.norm(functional - back_map @ reduced))
    scale = float(np.linalg.norm(functional))
    if leak > 1e-6 * max(1.0, scale):
        raise TooFewSamplesError(
            "samples do not resolve the derivative functional "
            f"(unresolved component {leak:.3e}); add sample points")
    return matrix @ back_map, reduced, back_map, condition


def markov_factor(problem, *, condition_limit=CONDITION_LIMIT):
    """Solve the Markov LP; both objective orientations are taken.

    Raises TooFewSamplesError when the factor is unbounded (fewer
    samples than basis dimensions, or samples in special position) and
    ConditioningError when the basis matrix cannot be trusted.
    """
    points = problem.sample_array()
    basis = PolynomialBasis.from_points(points, problem.degree)
    if points.shape[0] < basis.count:
        raise TooFewSamplesError(
            f"{points.shape[0]} samples cannot bound a basis of "
            f"dimension {basis.count}")
    matrix = basis.evaluate(points)
    functional = basis.derivative_row(np.asarray(problem.x0, dtype=float),
                                      np.asarray(problem.v, dtype=float))
    # Restriction to an algebraic curve can have a genuine kernel
    # (x**3 - y**2 vanishes identically on a (2,3) cusp trace), which
    # would leave permanently degenerate artificials in the simplex.
    # Project onto the column space the samples actually span; curve
    # ideal members have zero tangential derivative, so the functional
    # survives the projection whenever the samples resolve it.
    lp_matrix, lp_objective, back_map, condition = _reduce_columns(
        matrix, functional)
    if not np.isfinite(condition) or condition > condition_limit:
        raise ConditioningError(
            f"basis condition estimate {condition:.3e} exceeds "
            f"{condition_limit:.1e}; lower the degree or rescale")
    constraints = np.vstack([lp_matrix, -lp_matrix])
    try:
        forward = solve_sup_norm_lp(constraints, lp_objective)
        backward = solve_sup_norm_lp(constraints, -lp_objective)
    except UnboundedProblemError as exc:
        raise TooFewSamplesError(str(exc)) from exc
    chosen = forward if forward.value >= backward.value else backward
    coefficients = back_map @ chosen.coefficients
    trace = matrix @ coefficients
    support_count = int(np.sum(np.abs(np.abs(trace) - 1.0) <= 1e-6))
    status = "degenerate" if chosen.degenerate else "optimal"
    stats = LpStats(iterations=forward.iterations + backward.iterations,
                    max_residual=max(forward.max_residual,
                                     backward.max_residual),
                    solves=2)
    return MarkovResult(factor=chosen.value,
                        coefficients=coefficients,
                        status=status, lp_stats=stats, basis=basis,
                        support_count=support_count)


@dataclass(frozen=True)
class FitResult:
    """Joint log-log fit  log M = alpha_deg*log n + alpha_eps*log(1/eps) + b."""

    alpha_deg: float
    alpha_eps: float
    intercept: float
    residual_norm: float
    design: tuple  # rows (degree, epsilon, factor, used_in_fit)


@dataclass(frozen=True)
class ScalingStudy:
    germ_label: str
    rows: tuple  # (degree, epsilon, factor)
    fit: FitResult


def fit_scaling(design):
    """Least-squares exponents from (degree, epsilon, factor, used) rows."""
    used = [(n, eps, m) for n, eps, m, keep in design if keep]
    degrees = sorted({n for n, _, _ in used})
    epsilons = sorted({eps for _, eps, _ in used})
    if len(degrees) < 3 or len(epsilons) < 3:
        raise DomainError(
            "scaling fit needs at least 3 distinct degrees and 3 distinct "
            "epsilon values after excluding the largest epsilon")
    if any(m <= 0 for _, _, m in used):
        raise NumericError("nonpositive Markov factor in the scaling grid")
    rows = np.array([[math.log(n), math.log(1.0 / eps), 1.0]
                     for n, eps, _ in used])
    rhs = np.array([math.log(m) for _, _, m in used])
    coeffs, _, _, _ = np.linalg.lstsq(rows, rhs, rcond=None)
    residual = float(np.linalg.norm(rows @ coeffs - rhs))
    return FitResult(alpha_deg=float(coeffs[0]), alpha_eps=float(coeffs[1]),
                     intercept=float(coeffs[2]), residual_norm=residual,
                     design=tuple(design))


def scaling_study(germ, degrees=DEFAULT_DEGREES, epsilons=(0.5, 0.25, 0.125, 0.0625),
                  density=DEFAULT_DENSITY, mapper=map):
    """Markov factors over a (degree, epsilon) grid with a joint fit.

    Samples realize the trace ball parametrically: parameters run to
    eps along the star rays, so the geometric radius is eps**k at a
    singular basepoint and eps otherwise (recorded per cell).  The
    largest epsilon is excluded from the fit; its cells see the most
    ball-boundary discretization bias.

    ``mapper`` may be an executor map for concurrent cells; cells are
    independent and reassembled in grid order.
    """
    degrees = tuple(int(n) for n in degrees)
    epsilons = tuple(float(e) for e in epsilons)
    if not degrees or not epsilons:
        raise DomainError("degree and epsilon grids must be nonempty")
    power = multiplicity(germ.branch) if germ.point_class == "singular" else 1
    direction = tangent_vector(germ)
    cells = [(n, eps) for n in degrees for eps in epsilons]

    def solve(cell):
        n, eps = cell
        samples = sample_real_trace(germ, eps, density)
        problem = MarkovProblem(samples=samples, x0=germ.basepoint,
                                v=tuple(direction), degree=n,
                                ball_radius=eps ** power)
        try:
            return markov_factor(problem).factor
        except Exception as exc:
            raise NumericError(
                f"scaling cell degree={n} epsilon={eps:g} failed: {exc}"
            ) from exc

    factors = list(mapper(solve, cells))
    rows = tuple((n, eps, fac) for (n, eps), fac in zip(cells, factors))
    largest = max(epsilons)
    design = tuple((n, eps, fac, eps != largest) for n, eps, fac in rows)
    return ScalingStudy(germ_label=germ.label or "germ", rows=rows,
                        fit=fit_scaling(design))


def evaluate_monomials(coefficients, points):
    """Evaluate sum c_alpha x**alpha at complex points (m, n)."""
    points = np.asarray(points)
    if points.ndim == 1:
        points = points[None, :]
    total = np.zeros(points.shape[0], dtype=complex)
    for alpha, coeff in coefficients.items():
        term = np.full(points.shape[0], complex(coeff))
        for d, power in enumerate(alpha):
            if power:
                term *= points[:, d] ** power
        total += term
    return total


def monomial_gradient(coefficients, x0):
    """Exact gradient of a monomial-coefficient polynomial at x0."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros(x0.shape[0])
    for alpha, coeff in coefficients.items():
        for d, power in enumerate(alpha):
            if power == 0:
                continue
            term = coeff * power
            for other, p_other in enumerate(alpha):
                exponent = p_other - (1 if other == d else 0)
                if exponent:
                    term *= x0[other] ** exponent
            grad[d] += term
    return grad


@dataclass(frozen=True)
class CauchyDerivativeReport:
    """One instance of the disk-derivative bound on a germ.

    With m the germ multiplicity and L the leading coefficient vector
    of the parametrization, the coefficient of z**m in p(phi(z)) equals
    norm(L) * D_v p(x0), so the Cauchy estimate on the disk of radius r
    gives  |D_v p(x0)| <= max_{|z|=r} |p(phi(z))| / (r**m * norm(L)).
    """

    lhs: float
    bound: float
    constant: float
    radius: float
    order: int
    holds: bool
    slack: float


def cauchy_derivative_check(germ, coefficients, radius, quad_points=512):
    """Check the disk-derivative bound for one polynomial.

    ``coefficients`` maps monomial multi-indices to real coefficients.
    The supremum over the circle |z| = r is discretized with
    ``quad_points`` equispaced points; the reported constant is
    1/norm(L), exact for the leading-order extraction.
    """
    if not (0.0 < radius < 1.0):
        raise DomainError("radius must lie in (0, 1)")
    if quad_points < 16:
        raise DomainError("need at least 16 circle points")
    order, lead = germ.branch.leading_vector()
    lead_norm = float(np.linalg.norm(lead))
    if float(np.max(np.abs(lead.imag))) > 1e-12 * (1.0 + lead_norm):
        raise InconsistentGermError(
            "leading coefficient vector is not real; the germ has no "
            "real tangent direction at the basepoint")
    direction = tangent_vector(germ)
    gradient = monomial_gradient(coefficients, germ.basepoint)
    lhs = abs(float(direction @ gradient))
    circle = radius * np.exp(2j * math.pi * np.arange(quad_points) / quad_points)
    values = np.abs(evaluate_monomials(coefficients, germ.evaluate(circle)))
    peak = float(values.max())
    constant = 1.0 / lead_norm
    bound = constant * peak / radius ** order
    slack = bound - lhs
    holds = lhs <= bound * (1.0 + 1e-9) + 1e-12
    return CauchyDerivativeReport(lhs=lhs, bound=bound, constant=constant,
                                  radius=float(radius), order=order,
                                  holds=bool(holds), slack=slack)
