"""Green functions with pole at infinity and their inequality checks.

Segments get the exact closed form log|w| with w = z + sqrt(z*z - 1)
on the branch with |w| >= 1.  General finite sample sets get a lower
bound through the discrete extremal problem

    M(z) = sup { |p(z)| : deg p <= n,  |p| <= 1 on the samples },

solved as a linear program, with value acosh(M)/n.  For a segment the
degree-n extremal polynomial has modulus cosh(n V) at z, so this
normalization is exact there at every degree, and it is a monotone,
clipped-at-zero transform of the raw LP optimum everywhere else.

Complex moduli are relaxed polygonally: |p| <= 1 becomes
Re(exp(2 pi i m / facets) p) <= 1 over all facet directions, and an
objective |p(z)| for nonreal z becomes the best facet orientation of
Re(p(z)).  The relaxation slack log(1/cos(pi/facets))/degree is
reported, never silently absorbed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .curve_model import (DomainError, SampleSet, chebyshev_grid,
                          sample_real_trace)
from .lp import UnboundedProblemError, solve_sup_norm_lp
from .markov_lp import (CONDITION_LIMIT, ConditioningError, PolynomialBasis,
                        _reduce_columns)

#: Ratio reports ignore probe points whose reference value is below this.
RHS_TOLERANCE = 1e-6

DEFAULT_FACETS = 16


class DegenerateSegmentError(ValueError):
    """Segment endpoints coincide; no Green function to pull back."""


class TooFewPointsError(ValueError):
    """Sample set cannot bound the polynomial space at this degree."""


class ProbeRuleError(ValueError):
    """An HCP probe landed on the set (nonpositive Green value)."""


class ProbeGridError(ValueError):
    """Every probe point fell on the reference set."""


def green_interval(z):
    """Green function of [-1, 1] at z; exact, zero on the interval.

    The square root is exp(half the principal log) and |w| >= 1 is
    enforced by flipping to the reciprocal root, which keeps the value
    stable across the branch cut along the interval itself.
    """
    z = complex(z)
    root = cmath.sqrt(z * z - 1.0)
    w = z + root
    if abs(w) < 1.0:
        w = z - root
    return max(0.0, math.log(abs(w)))


def green_segment(z, a, b):
    """Green function of the segment [a, b] via affine pullback."""
    a = complex(a)
    b = complex(b)
    if abs(b - a) <= 1e-300 + 1e-15 * (abs(a) + abs(b)):
        raise DegenerateSegmentError(f"segment [{a}, {b}] has no interior")
    return green_interval((2.0 * z - a - b) / (b - a))


@dataclass(frozen=True)
class GreenEvaluation:
    """One Green-function value with its provenance.

    ``facet_slack`` bounds how far below the true modulus the polygonal
    relaxation can sit; it is zero for closed forms and for the
    real-sample real-point path where no relaxation happens.
    """

    point: object
    value: float
    method: str  # 'closed_form' | 'lp_siciak'
    degree_used: Optional[int] = None
    facet_slack: float = 0.0

    def __post_init__(self):
        if self.value < 0.0:
            raise DomainError("Green values are nonnegative")
        if self.method not in ("closed_form", "lp_siciak"):
            raise DomainError(f"unknown method '{self.method}'")


def star_points(angles, epsilon, count):
    """Planar samples of a union of rays [0, epsilon*e^{i angle}]."""
    if not angles:
        raise DomainError("need at least one ray angle")
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    if count < 2:
        raise DomainError("need at least 2 points per ray")
    radii = chebyshev_grid(0.0, epsilon, count)
    rays = [radii * cmath.exp(1j * angle) for angle in angles]
    return np.concatenate(rays)


def _coerce_samples(samples):
    """Split input into ('real', (m,n) floats) or ('planar', (m,) complex)."""
    if isinstance(samples, SampleSet):
        return "real", samples.images
    array = np.asarray(samples)
    if np.iscomplexobj(array):
        if array.ndim != 1:
            raise DomainError("planar point lists must be one-dimensional")
        if np.max(np.abs(array.imag)) <= 1e-14 * (1.0 + np.max(np.abs(array))):
            return "real", array.real.reshape(-1, 1)
        return "planar", array.astype(complex)
    array = array.astype(float)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2:
        raise DomainError("sample array must have shape (m,) or (m, n)")
    return "real", array


def _facet_orientations(facets):
    """Representative half-circle angles; +/- symmetry covers the rest."""
    return [2.0 * math.pi * m / facets for m in range((facets + 1) // 2)]


def _siciak_real(points, z, degree, facets):
    basis = PolynomialBasis.from_points(points, degree)
    if points.shape[0] < basis.count:
        raise TooFewPointsError(
            f"{points.shape[0]} samples cannot bound a degree-{degree} "
            f"basis of dimension {basis.count}")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (basis.ambient_dim,):
        raise DomainError(
            f"evaluation point must have dimension {basis.ambient_dim}")
    matrix = basis.evaluate(points)
    row = basis.evaluate(z[None, :]).ravel()
    try:
        lp_matrix, lp_row, _, condition = _reduce_columns(matrix, row)
    except ValueError as exc:
        raise TooFewPointsError(str(exc)) from exc
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise ConditioningError(
            f"basis condition estimate {condition:.3e} exceeds "
            f"{CONDITION_LIMIT:.1e}; lower the degree or rescale")
    constraints = np.vstack([lp_matrix, -lp_matrix])
    real_point = bool(np.max(np.abs(z.imag)) <= 1e-14 * (1.0 + np.max(np.abs(z))))
    if real_point:
        objectives = [lp_row.real, -lp_row.real]
        slack = 0.0
    else:
        objectives = [np.real(cmath.exp(1j * theta) * lp_row)
                      for theta in _facet_orientations(facets)]
        slack = math.log(1.0 / math.cos(math.pi / facets)) / degree
    best = 0.0
    for objective in objectives:
        solution = solve_sup_norm_lp(constraints, objective)
        best = max(best, solution.value)
    return best, slack


def _siciak_planar(points, z, degree, facets):
    if points.shape[0] < degree + 1:
        raise TooFewPointsError(
            f"{points.shape[0]} planar samples cannot bound degree {degree}")
    center = complex(points.mean())
    scale = float(np.max(np.abs(points - center)))
    if scale <= 0.0:
        raise TooFewPointsError("all planar samples coincide")
    columns = _complex_chebyshev(points, degree, center, scale)
    target = _complex_chebyshev(np.asarray([complex(z)]), degree,
                                center, scale).ravel()
    blocks = []
    for m in range(facets):
        phase = cmath.exp(2j * math.pi * m / facets)
        rotated = phase * columns
        blocks.append(np.hstack([rotated.real, -rotated.imag]))
    constraints = np.vstack(blocks)
    objective = np.concatenate([target.real, -target.imag])
    try:
        lp_matrix, lp_objective, _, condition = _reduce_columns(
            constraints, objective)
    except ValueError as exc:
        raise TooFewPointsError(str(exc)) from exc
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise ConditioningError(
            f"basis condition estimate {condition:.3e} exceeds "
            f"{CONDITION_LIMIT:.1e}; lower the degree or rescale")
    solution = solve_sup_norm_lp(lp_matrix, lp_objective)
    slack = math.log(1.0 / math.cos(math.pi / facets)) / degree
    return solution.value, slack


def _complex_chebyshev(points, degree, center, scale):
    """Chebyshev columns T_j((zeta - c)/s), shape (m, degree + 1)."""
    u = (np.asarray(points, dtype=complex) - center) / scale
    table = np.empty((u.shape[0], degree + 1), dtype=complex)
    table[:, 0] = 1.0
    if degree >= 1:
        table[:, 1] = u
    for j in range(2, degree + 1):
        table[:, j] = 2.0 * u * table[:, j - 1] - table[:, j - 2]
    return table


def siciak_lp(samples, z, degree, facets=DEFAULT_FACETS):
    """Discrete extremal lower bound of the Green function at z.

    ``samples`` is a SampleSet, a real (m, n) array, or a planar list
    of complex points.  The LP maximizes |p(z)| over polynomials
    bounded by 1 on the samples; the returned value is
    acosh(max(M, 1))/degree, which reproduces the closed form exactly
    on segments and never goes negative.  The polygonal relaxation
    slack is carried in the result, not folded into the value.
    """
    if degree < 1:
        raise DomainError("degree must be at least 1")
    if facets < 8:
        raise DomainError("need at least 8 facet directions")
    kind, points = _coerce_samples(samples)
    try:
        if kind == "real":
            peak, slack = _siciak_real(points, z, degree, facets)
        else:
            peak, slack = _siciak_planar(points, z, degree, facets)
    except UnboundedProblemError as exc:
        raise TooFewPointsError(
            f"discrete set looks polar at degree {degree}: {exc}") from exc
    value = math.acosh(max(float(peak), 1.0)) / degree
    return GreenEvaluation(point=z, value=value, method="lp_siciak",
                           degree_used=degree, facet_slack=slack)


@dataclass(frozen=True)
class HcpFit:
    """Least-squares exponent of V against the probe distance."""

    deltas: tuple
    values: tuple
    alpha: float
    constant: float
    r_squared: float
    set_description: str = ""

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise DomainError("deltas must be strictly decreasing")
        if any(v < 0.0 for v in self.values):
            raise DomainError("Green values are nonnegative")
        if not math.isfinite(self.alpha):
            raise DomainError("fitted exponent must be finite")


def hcp_fit(green, set_description, deltas, probe_rule):
    """Fit  V(probe(delta)) ~ constant * delta**alpha  by least squares.

    ``green`` maps a probe point to a Green value and ``probe_rule``
    maps a distance to a probe point.  Needs at least 4 distances
    spanning at least 2 decades; a nonpositive value at positive
    distance means the probe rule walked onto the set.
    """
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if len(deltas) < 4:
        raise DomainError("need at least 4 probe distances")
    if len(set(deltas)) != len(deltas):
        raise DomainError("probe distances must be distinct")
    if min(deltas) <= 0.0:
        raise DomainError("probe distances must be positive")
    if deltas[0] / deltas[-1] < 100.0:
        raise DomainError("probe distances must span at least 2 decades")
    values = []
    for delta in deltas:
        value = float(green(probe_rule(delta)))
        if value <= 0.0:
            raise ProbeRuleError(
                f"probe at distance {delta:g} landed on the set "
                f"(value {value:g})")
        values.append(value)
    log_d = np.log(deltas)
    log_v = np.log(values)
    design = np.column_stack([log_d, np.ones_like(log_d)])
    (slope, intercept), *_ = np.linalg.lstsq(design, log_v, rcond=None)
    predicted = design @ (slope, intercept)
    ss_res = float(np.sum((log_v - predicted) ** 2))
    ss_tot = float(np.sum((log_v - log_v.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return HcpFit(deltas=tuple(deltas), values=tuple(values),
                  alpha=float(slope), constant=float(math.exp(intercept)),
                  r_squared=r_squared, set_description=set_description)


@dataclass(frozen=True)
class BernsteinWalshReport:
    lhs: float
    sample_norm: float
    envelope: float
    ratio: float
    slack: float
    holds: bool


def bernstein_walsh_check(coefficients, samples, z, green_value):
    """Check |p(z)| against the growth envelope of the sampled set.

    ``coefficients`` are monomial coefficients, constant term first.
    The envelope is cosh(deg * V) times the sample sup norm; a degree-n
    segment extremal polynomial meets it with equality, and it implies
    the classical exp(deg * V) bound.
    """
    coeffs = np.asarray(coefficients, dtype=float)
    nonzero = np.nonzero(coeffs)[0]
    degree = int(nonzero[-1]) if nonzero.size else 0
    kind, points = _coerce_samples(samples)
    if kind != "real" or points.shape[1] != 1:
        raise DomainError("expected one-dimensional real samples")
    if green_value < 0.0:
        raise DomainError("green_value must be nonnegative")
    xs = points.ravel()
    sample_norm = float(np.max(np.abs(np.polynomial.polynomial.polyval(
        xs, coeffs))))
    lhs = abs(complex(np.polynomial.polynomial.polyval(complex(z), coeffs)))
    envelope = sample_norm * math.cosh(degree * green_value)
    ratio = lhs / envelope if envelope > 0.0 else (0.0 if lhs == 0.0
                                                   else math.inf)
    holds = lhs <= envelope * (1.0 + 1e-9) + 1e-15
    return BernsteinWalshReport(lhs=lhs, sample_norm=sample_norm,
                                envelope=envelope, ratio=ratio,
                                slack=envelope - lhs, holds=bool(holds))


@dataclass(frozen=True)
class DiskBoundReport:
    supremum: float
    bound: float
    constant: float
    slack: float
    violations: int


def segment_disk_bound_check(b, r, epsilon, grid=64):
    """Sup of V_{[-eps, eps]} over the disk D(b, r) against c*log(1+r).

    The constant is c = max(1, 2/dist(b, endpoints)).  Needs a real
    center strictly inside the segment with the disk clear of the
    endpoints (r < eps - |b|).
    """
    b = float(b)
    r = float(r)
    epsilon = float(epsilon)
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    if abs(b) == epsilon:
        raise DomainError("disk center must avoid the segment endpoints")
    if r <= 0.0 or r >= epsilon - abs(b):
        raise DomainError(
            "disk radius must be positive and keep the disk away from "
            "the segment endpoints (r < epsilon - |b|)")
    if grid < 8:
        raise DomainError("need at least 8 grid angles")
    angles = 2.0 * math.pi * np.arange(grid) / grid
    rings = r * np.linspace(0.25, 1.0, max(2, grid // 16))
    supremum = 0.0
    for ring in rings:
        zs = b + ring * np.exp(1j * angles)
        for z in zs:
            supremum = max(supremum, green_segment(z, -epsilon, epsilon))
    distance = epsilon - abs(b)
    constant = max(1.0, 2.0 / distance)
    bound = constant * math.log1p(r)
    violations = int(supremum > bound * (1.0 + 1e-12))
    return DiskBoundReport(supremum=supremum, bound=bound, constant=constant,
                           slack=bound - supremum, violations=violations)


@dataclass(frozen=True)
class StarDominationReport:
    """Ratio of trace Green values to star Green values over a probe grid.

    ``max_ratios`` holds the grid maximum at the two probe degrees and
    ``relative_change`` their relative difference; a bounded, stable
    ratio is the testable content.
    """

    epsilon: float
    degrees: tuple
    max_ratios: tuple
    relative_change: float
    probe_count: int
    excluded: int


def _star_green(germ, epsilon, degree, facets, density):
    """Evaluator for the realized star of a germ at parameter scale eps."""
    angles = sorted(a % (2.0 * math.pi) for a in germ.ray_angles())
    if len(angles) == 1:
        theta = angles[0]
        end = epsilon * cmath.exp(1j * theta)
        return lambda z: green_segment(z, 0.0, end)
    if len(angles) == 2 and math.isclose(angles[1] - angles[0], math.pi,
                                         rel_tol=0.0, abs_tol=1e-12):
        end = epsilon * cmath.exp(1j * angles[0])
        return lambda z: green_segment(z, -end, end)
    points = star_points(angles, epsilon, density)
    return lambda z: siciak_lp(points, z, degree, facets).value


def star_domination_check(germ, epsilon, degree, grid=8, *,
                          density=80, facets=DEFAULT_FACETS):
    """Bounded-ratio check between trace and star Green functions.

    For probe parameters z in the disk of radius epsilon (off the star
    rays), compares the trace value siciak(phi(z)) against the star
    value at z, at ``degree`` and at degree + degree//2, and reports
    the maximum ratio and its stability.  Probes where the star value
    is below RHS_TOLERANCE are excluded and counted.
    """
    if epsilon <= 0.0 or epsilon > 1.0:
        raise DomainError("epsilon must lie in (0, 1]")
    if grid < 4:
        raise DomainError("need at least 4 probe angles")
    degrees = (int(degree), int(degree) + max(1, int(degree) // 2))
    samples = sample_real_trace(germ, epsilon, density)
    star = _star_green(germ, epsilon, degrees[0], facets, density)
    probe_angles = 2.0 * math.pi * (np.arange(grid) + 0.5) / grid
    probes = [epsilon * rho * cmath.exp(1j * theta)
              for rho in (0.4, 0.6, 0.8) for theta in probe_angles]
    reference = [star(z) for z in probes]
    kept = [(z, rhs) for z, rhs in zip(probes, reference)
            if rhs > RHS_TOLERANCE]
    excluded = len(probes) - len(kept)
    if not kept:
        raise ProbeGridError(
            "every probe point fell on the star set; widen the grid")
    max_ratios = []
    for deg in degrees:
        worst = 0.0
        for z, rhs in kept:
            trace_value = siciak_lp(samples, germ.evaluate(z), deg,
                                    facets).value
            worst = max(worst, trace_value / rhs)
        max_ratios.append(worst)
    base = max(max_ratios[0], 1e-12)
    change = abs(max_ratios[1] - max_ratios[0]) / base
    return StarDominationReport(epsilon=float(epsilon), degrees=degrees,
                                max_ratios=tuple(max_ratios),
                                relative_change=change,
                                probe_count=len(probes), excluded=excluded)
