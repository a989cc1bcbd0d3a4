"""Dense two-phase simplex solver for sup-norm extremal problems.

Every linear program in this package has the shape

    maximize    f @ w
    subject to  G @ w <= 1        (M one-sided constraints, w free),

where ``w`` is the coefficient vector of a candidate polynomial and the
rows of ``G`` evaluate that polynomial (possibly rotated by a facet
phase) at sample points.  The feasible set contains ``w = 0``, so the
problem is always feasible and its value is nonnegative; it is
unbounded exactly when the sample set is too thin to pin down a
polynomial of the requested degree.

We solve the equivalent bounded problem

    minimize    sum(u)
    subject to  G.T @ u = f,   u >= 0,

with a dense tableau simplex.  Pricing is steepest-coefficient
(Dantzig) while the objective makes progress and falls back to Bland's
anti-cycling rule on stalls, which keeps the method finite under
degeneracy without paying Bland's crawl on every pivot.  Phase one
drives artificial variables out of the basis; a positive phase-one
optimum certifies that the original problem is unbounded.  The simplex
multipliers of the optimal basis recover the extremal coefficient
vector ``w``, and the basic columns identify the support constraints
(the equioscillation set for interval problems).  The reported optimum
is re-derived from a fresh factorization of the final basis, so tableau
drift cannot leak into results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEASIBILITY_TOL = 1e-9
MAX_ITERATIONS = 200_000
# Consecutive non-improving pivots tolerated before Bland's rule kicks in.
STALL_LIMIT = 12


class SimplexError(Exception):
    """Base class for simplex solver failures."""


class UnboundedProblemError(SimplexError):
    """The sup-norm problem is unbounded (constraint set too thin)."""


class PivotLimitError(SimplexError):
    """The pivot budget was exhausted before reaching an optimum."""


@dataclass(frozen=True)
class SupNormSolution:
    """Optimum of ``max f @ w  s.t.  G @ w <= 1``.

    ``support`` lists the constraint rows active in the optimal basis,
    ``max_residual`` is the largest constraint violation of the
    recovered coefficient vector (nonnegative, ~0 at a clean optimum),
    and ``degenerate`` flags bases with zero-valued basic variables.
    """

    value: float
    coefficients: np.ndarray
    support: np.ndarray
    iterations: int
    max_residual: float
    degenerate: bool


def _pivot_loop(tableau, basis, costs, blocked, tol, budget, target=None):
    """Pivot in place until optimal; return the iteration count.

    ``blocked`` marks columns that may never enter (retired
    artificials).  ``target`` optionally stops early once the objective
    reaches it (used by phase one, whose optimum cannot go below zero).
    """
    m, width = tableau.shape
    n = width - 1
    body = tableau[:, :n]
    iterations = 0
    bland = False
    stall = 0
    previous = np.inf
    while True:
        objective = float(costs[basis] @ tableau[:, -1])
        if target is not None and objective <= target:
            return iterations
        if objective < previous - tol * (1.0 + abs(previous)):
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True
        previous = objective

        reduced = costs - costs[basis] @ body
        reduced[blocked] = 0.0
        eligible = np.flatnonzero(reduced < -tol)
        if eligible.size == 0:
            return iterations
        if iterations >= budget:
            raise PivotLimitError(
                f"no optimum after {iterations} pivots "
                f"(m={m}, n={n}); problem may be badly scaled"
            )
        if bland:
            enter = int(eligible[0])
        else:
            enter = int(eligible[np.argmin(reduced[eligible])])
        column = tableau[:, enter]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            # Unreachable for our bounded-below objectives; defensive.
            raise UnboundedProblemError("entering column has no positive pivot")
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * (1.0 + abs(best))]
        leave = int(ties[np.argmin(basis[ties])])
        pivot = tableau[leave, enter]
        tableau[leave] /= pivot
        other = column.copy()
        other[leave] = 0.0
        tableau -= np.outer(other, tableau[leave])
        # Clamp roundoff in the basic solution column.
        np.maximum(tableau[:, -1], 0.0, out=tableau[:, -1])
        basis[leave] = enter
        iterations += 1


def solve_sup_norm_lp(constraints, objective, *, tol=FEASIBILITY_TOL,
                      max_iterations=MAX_ITERATIONS):
    """Maximize ``objective @ w`` subject to ``constraints @ w <= 1``.

    Parameters
    ----------
    constraints : (M, N) array
        One-sided constraint rows ``g_j`` with right-hand side 1.
    objective : (N,) array
        Linear functional to maximize.

    Returns
    -------
    SupNormSolution

    Raises
    ------
    UnboundedProblemError
        If the functional is unbounded on the constraint set.
    """
    G = np.asarray(constraints, dtype=float)
    f = np.asarray(objective, dtype=float)
    if G.ndim != 2:
        raise ValueError("constraints must be a 2-d array")
    M, N = G.shape
    if f.shape != (N,):
        raise ValueError(f"objective has shape {f.shape}, expected ({N},)")

    # Equality system A @ u = b over u >= 0, A = G.T with sign-flipped
    # rows so that b >= 0.
    A = G.T.copy()
    b = f.astype(float).copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    scale = 1.0 + float(b.sum())

    full = np.empty((N, M + N), dtype=float)
    full[:, :M] = A
    full[:, M:] = np.eye(N)

    tableau = np.empty((N, M + N + 1), dtype=float)
    tableau[:, :M + N] = full
    tableau[:, -1] = b
    basis = np.arange(M, M + N)

    # Phase one: minimize the artificial total.  Artificials start
    # basic and may leave, but never re-enter.
    phase1 = np.zeros(M + N)
    phase1[M:] = 1.0
    blocked = np.zeros(M + N, dtype=bool)
    blocked[M:] = True
    iters = _pivot_loop(tableau, basis, phase1, blocked, tol, max_iterations,
                        target=1e-14 * scale)
    infeasibility = float(phase1[basis] @ tableau[:, -1])
    if infeasibility > tol * scale:
        raise UnboundedProblemError(
            "objective is unbounded on the constraint set "
            f"(phase-one residual {infeasibility:.3e}); "
            "add sample points or lower the degree"
        )

    # Phase two: artificials stuck in the basis stay at zero with cost
    # zero and remain barred from re-entering.
    phase2 = np.zeros(M + N)
    phase2[:M] = 1.0

    w = np.zeros(N)
    value = 0.0
    residual = np.inf
    for attempt in range(4):
        iters += _pivot_loop(tableau, basis, phase2, blocked, tol,
                             max_iterations - iters)
        # Re-derive the solution from a fresh factorization of the
        # final basis; the pivoted tableau only chooses the basis.
        basis_matrix = full[:, basis]
        try:
            u = np.linalg.solve(basis_matrix, b)
            w = np.linalg.solve(basis_matrix.T, phase2[basis])
        except np.linalg.LinAlgError as exc:
            raise SimplexError(f"singular optimal basis: {exc}") from exc
        w[flip] *= -1.0
        value = float(phase2[basis] @ u)
        residual = float(max(0.0, (G @ w).max(initial=0.0) - 1.0))
        if residual <= 10.0 * tol * (1.0 + abs(value)):
            break
        # Drift led to a not-quite-optimal basis: rebuild the tableau
        # exactly at this basis and keep pivoting.
        rebuilt = np.linalg.solve(basis_matrix,
                                  np.column_stack([full, b]))
        tableau[:] = rebuilt
        np.maximum(tableau[:, -1], 0.0, out=tableau[:, -1])

    support = np.sort(basis[basis < M])
    degenerate = bool(np.any(basis >= M) or
                      np.any(np.abs(np.linalg.solve(full[:, basis], b))
                             <= tol))
    return SupNormSolution(
        value=max(value, 0.0),
        coefficients=w,
        support=support,
        iterations=iters,
        max_residual=residual,
        degenerate=degenerate,
    )
