"""Dense two-phase revised primal simplex for small equality-form programs.

Solves min c.x subject to A x = b, x >= 0, with A dense and small enough that
factoring the basis matrix from scratch at every pivot is cheap (hundreds of
rows). The implementation is self-contained so that pivoting order,
tie-breaking, and therefore the exact optimizer output are reproducible
across platforms and library versions.

Each iteration computes the dual vector, the basic solution, and the entering
direction by LAPACK solves against the current basis matrix itself. Nothing
is maintained incrementally, so there is no factorization drift to manage;
the only numerical failure mode left is a genuinely ill-conditioned basis,
which is detected by norm growth of the solves and by loss of feasibility in
the basic solution, and surfaces as a retry with a fresh perturbation.

Programs built from Pauli expectation vectors are degenerate on both sides:
right-hand sides carry many exact zeros (chains of zero-step pivots) and the
uniform costs over near-duplicate columns tie huge blocks of reduced costs
(pricing crawl). `solve_equality_lp` therefore first solves a copy with tiny
deterministic generic perturbations of both b and c, then checks the final
basis against the true program; a basis whose basic solution is nonnegative
for the true b and whose reduced costs are nonnegative for the true c is an
optimal basis of the original program, and the objective it yields is exact.
If the check fails the solver retries with fresh draws and finally solves
the unperturbed program directly.

Pricing is Dantzig (most negative reduced cost); after a run of non-improving
pivots it temporarily switches to Bland's rule, which cannot cycle, and
returns to Dantzig as soon as a pivot makes real progress. The ratio test is
the two-pass kind attributed to Harris: the first pass bounds the step using
a small feasibility slack, the second picks the largest pivot element among
the rows that stay within the bound, which steers the walk away from
ill-conditioned bases at the price of transient infeasibilities no larger
than the slack. An entering column whose best pivot element is still tiny is
shelved and pricing moves on, so a bad pivot is taken only when every
improving column is equally bad; if a solve still degrades, it is retried
with an ever larger floor on acceptable pivot elements. Artificial variables
are barred from re-entering once they leave, and redundant rows discovered
at the end of phase one are dropped before phase two.

`minimize_l1` solves min sum |x| subject to D x = b through the standard
positive/negative splitting; at a simplex vertex at most one of each split
pair is basic, so the optimal objective equals the true L1 norm exactly.
Wide programs (tens of thousands of columns) are solved by delayed column
generation: the split program is solved on a working subset of columns, the
full matrix is priced with the dual vector of the subset optimum, and the
most violated columns are pulled in until none remain, at which point the
subset optimum is optimal for the full program.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = ["SimplexResult", "solve_equality_lp", "minimize_l1"]

# Smallest pivot element accepted while other entering columns remain; the
# direct unperturbed solve escalates through the whole ladder.
_PIVOT_MIN = 1e-6
_PIVOT_LADDER = (_PIVOT_MIN, 1e-3, 3e-2)
# Feasibility slack of the two-pass ratio test.
_HARRIS_DELTA = 1e-7
# Norm growth of a basis solve beyond which the basis is treated as singular.
_GROWTH_MAX = 1e8
# Consecutive non-improving pivots tolerated before switching to Bland.
_STALL_LIMIT = 50
# Relative size of the anti-degeneracy right-hand-side and cost perturbations.
_PERTURB_SCALE = 1e-7
_COST_SCALE = 1e-7
# Philox key for the perturbation draws; fixed so results are reproducible.
_PERTURB_KEY = 0x52534459
# L1 programs whose split form has at most this many columns are solved
# directly; wider ones go through column generation.
_CG_THRESHOLD = 4096
# Working-set sizing for column generation.
_CG_INITIAL = 1024
_CG_BATCH = 512
_CG_ROUNDS = 200


class _Infeasible(RuntimeError):
    """The constraints A x = b, x >= 0 admit no solution."""


class _Unstable(RuntimeError):
    """The basis became ill-conditioned; retry with a new perturbation."""


class _Unbounded(RuntimeError):
    """A feasible ray with negative cost exists; independent of b."""


class _LostFeasibility(RuntimeError):
    """A basic value drifted genuinely negative; repairable in place."""


class SimplexResult(NamedTuple):
    value: float
    x: np.ndarray
    iterations: int


def _unit(m, i):
    e = np.zeros(m)
    e[i] = 1.0
    return e


def _basis_matrix(A, basis, n):
    m = A.shape[0]
    cols = np.empty((m, m))
    for i, j in enumerate(basis):
        cols[:, i] = A[:, j] if j < n else _unit(m, j - n)
    return cols


def _checked_solve(B, rhs, scale):
    """Solve B sol = rhs, raising when the basis looks numerically singular.

    LAPACK only reports exact singularity; near-singular systems return
    quietly with huge solutions, so norm growth relative to the right-hand
    side stands in as the conditioning test.
    """
    try:
        sol = np.linalg.solve(B, rhs)
        # Iterative refinement with residuals accumulated in extended
        # precision. Plain double-precision refinement only polishes the
        # backward error, so a solve against an ill-conditioned basis keeps
        # a forward error of order cond times machine epsilon while its
        # corrections shrink to nothing, and the ratio test then digs
        # genuine infeasibilities that surface thousands of pivots later.
        # Extended-precision residuals drive the forward error itself down,
        # and when the basis is too ill-conditioned even for that the
        # corrections fail to converge, which is the signal to abandon the
        # attempt and let the caller retry on a larger pivot floor.
        B_ext = B.astype(np.longdouble)
        rhs_ext = rhs.astype(np.longdouble)
        for _ in range(5):
            resid = np.asarray(rhs_ext - B_ext @ sol.astype(np.longdouble),
                               dtype=float)
            corr = np.linalg.solve(B, resid)
            sol = sol + corr
            rel = np.abs(corr).max(axis=0) / (1.0 + np.abs(sol).max(axis=0))
            if float(np.max(rel)) <= 1e-10:
                break
        else:
            raise _Unstable("ill-conditioned basis matrix")
    except np.linalg.LinAlgError:
        raise _Unstable("singular basis matrix") from None
    if not np.isfinite(sol).all() or np.abs(sol).max(initial=0.0) > \
            _GROWTH_MAX * (1.0 + scale):
        raise _Unstable("ill-conditioned basis matrix")
    return sol


def _price(A, y, c_struct, art_cost, art_allowed, basic_mask, barred, n, tol,
           bland):
    """Return the entering column index, or -1 when nothing prices favorably.

    Structural columns are indexed 0..n-1 and artificial columns n..n+m-1.
    Bland mode picks the lowest eligible index; Dantzig the most negative
    reduced cost (ties to the lower index via argmin). Columns shelved for
    tiny pivot elements are skipped.
    """
    reduced = c_struct - y @ A
    reduced[basic_mask[:n]] = np.inf
    reduced[barred[:n]] = np.inf
    if bland:
        eligible = np.flatnonzero(reduced < -tol)
        if eligible.size:
            return int(eligible[0])
    else:
        j = int(np.argmin(reduced))
        if reduced[j] < -tol:
            return j
    m = y.shape[0]
    for i in range(m):
        if (art_allowed[i] and not basic_mask[n + i] and not barred[n + i]
                and art_cost[i] - y[i] < -tol):
            return n + i
    return -1


def _restore_feasibility(A, b, basis, basic_mask, art_allowed, n, tol):
    """Drive slightly negative basic values back above zero in place.

    Long degenerate crawls occasionally walk through a basis whose solve is
    accurate to far fewer digits than its pivot sizes suggest, and by the
    time a well-conditioned basis exposes the damage the walk holds real
    negative basic values. Rather than abandoning the attempt, run composite
    phase-one pivots from the current basis: price the gradient of the total
    violation, and block both where feasible variables hit zero and where
    violated ones recover it. Returns once no basic value sits below the
    repair tolerance; raises when no pivot can reduce the violation.
    """
    m = A.shape[0]
    b_scale = float(np.abs(b).max(initial=0.0))
    bland = False
    stall = 0
    for _ in range(3000):
        B = _basis_matrix(A, basis, n)
        xb = _checked_solve(B, b, b_scale)
        viol = xb < -1e-9
        if not viol.any():
            return
        y = _checked_solve(B.T, viol.astype(float), 1.0)
        sigma = y @ A
        sigma[basic_mask[:n]] = np.inf
        if bland:
            eligible = np.flatnonzero(sigma < -tol)
            if eligible.size == 0:
                raise _Unstable("feasibility repair stalled")
            j = int(eligible[0])
        else:
            j = int(np.argmin(sigma))
            if sigma[j] >= -tol:
                raise _Unstable("feasibility repair stalled")
        d = _checked_solve(B, A[:, j], 1.0)
        t = np.full(m, np.inf)
        up = ~viol & (d > tol)
        t[up] = np.clip(xb[up], 0.0, None) / d[up]
        down = viol & (d < -tol)
        t[down] = xb[down] / d[down]
        theta = float(t.min())
        if not np.isfinite(theta):
            raise _Unstable("feasibility repair unbounded")
        ties = np.flatnonzero(t <= theta + tol * (1.0 + theta))
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(d[ties]))])
        leaving = basis[r]
        if leaving >= n:
            art_allowed[leaving - n] = False
        basic_mask[leaving] = False
        basic_mask[j] = True
        basis[r] = j
        if theta <= tol:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False
    raise _Unstable("feasibility repair did not converge")


def _simplex(A, b, c, tol, max_iter, pivot_min=_PIVOT_MIN):
    """Two-phase core; expects b >= 0. Returns (value, x, iterations,
    structural basis, rows_dropped)."""
    m, n = A.shape
    # Start from the all-artificial basis: column n+i is the i-th unit vector.
    basis = np.arange(n, n + m)
    basic_mask = np.zeros(n + m, dtype=bool)
    basic_mask[basis] = True
    art_allowed = np.ones(m, dtype=bool)
    bland = False
    stall = 0
    total_iters = 0
    b_scale = float(np.abs(b).max(initial=0.0))

    def column(j):
        return A[:, j] if j < n else _unit(m, j - n)

    def run_phase(c_struct, art_cost, cap):
        nonlocal basis, basic_mask, art_allowed, bland, stall, total_iters
        full_cost = np.concatenate([c_struct, art_cost])
        barred = np.zeros(n + m, dtype=bool)
        nbarred = 0
        tiny_ok = False
        while True:
            if total_iters >= cap:
                raise RuntimeError("simplex iteration limit exceeded")
            total_iters += 1
            B = _basis_matrix(A, basis, n)
            y = _checked_solve(B.T, full_cost[basis],
                               float(np.abs(full_cost[basis]).max(initial=0.0)))
            j = _price(A, y, c_struct, art_cost, art_allowed, basic_mask,
                       barred, n, tol, bland)
            if j < 0:
                if nbarred:
                    # Every improving column was shelved for a tiny pivot.
                    # Admit the least bad one for a single pivot rather than
                    # stopping short of optimality.
                    barred[:] = False
                    nbarred = 0
                    tiny_ok = True
                    continue
                xb = _checked_solve(B, b, b_scale)
                if xb.min() < -1e-6:
                    raise _LostFeasibility("negative basic value at exit")
                np.clip(xb, 0.0, None, out=xb)
                return xb
            a_j = column(j)
            sol = _checked_solve(B, np.column_stack((b, a_j)),
                                 max(b_scale, 1.0))
            xb = sol[:, 0]
            d = sol[:, 1]
            if xb.min() < -1e-6:
                raise _LostFeasibility("negative basic value")
            true_xb = xb.copy()
            np.clip(xb, 0.0, None, out=xb)
            # Every strictly positive entry takes part in the ratio test:
            # masking small ones lets theta overshoot their blocking
            # constraints and walk into an infeasible basis, while keeping
            # them is harmless since their ratios are enormous unless they
            # genuinely block.
            pos = d > 0.0
            if not pos.any():
                raise _Unbounded("linear program is unbounded")
            ratios = np.full(m, np.inf)
            ratios[pos] = xb[pos] / d[pos]
            if bland:
                # Bland's anti-cycling guarantee needs the smallest index
                # among the exact ratio minimizers.
                theta = ratios.min()
                ties = np.flatnonzero(ratios <= theta + tol * (1.0 + theta))
                r = int(ties[np.argmin(basis[ties])])
                theta = max(theta, 0.0)
            else:
                # Two-pass ratio test: bound the step with a small
                # feasibility slack, then take the largest pivot element
                # among the rows that stay within the bound; tiny pivots
                # are what drive the basis toward singularity. The slack
                # bound comes from the unclipped solution so that a row
                # already slightly negative pins the step near zero;
                # bounding from the clipped values instead lets long
                # degenerate crawls dig the same row deeper by the slack
                # amount each pivot until feasibility is genuinely lost.
                slack = np.full(m, np.inf)
                slack[pos] = (true_xb[pos] + _HARRIS_DELTA) / d[pos]
                bound = max(float(slack.min()), 0.0)
                cand = np.flatnonzero(ratios <= bound)
                r = int(cand[np.argmax(d[cand])])
                theta = max(float(ratios[r]), 0.0)
            if d[r] <= pivot_min and not tiny_ok:
                barred[j] = True
                nbarred += 1
                continue
            if d[r] <= tol:
                raise _Unstable("no usable pivot element")
            tiny_ok = False
            leaving = basis[r]
            if leaving >= n:
                art_allowed[leaving - n] = False
            basic_mask[leaving] = False
            basic_mask[j] = True
            basis[r] = j
            if nbarred:
                barred[:] = False
                nbarred = 0
            if theta <= tol:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False

    def run_phase_repairing(c_struct, art_cost):
        nonlocal bland, stall
        for _ in range(3):
            try:
                return run_phase(c_struct, art_cost, max_iter)
            except _LostFeasibility:
                _restore_feasibility(A, b, basis, basic_mask, art_allowed,
                                     n, tol)
                bland = False
                stall = 0
        raise _Unstable("basic solution lost feasibility")

    # Phase one: drive the artificial variables to zero.
    xb = run_phase_repairing(np.zeros(n), np.ones(m))
    art_rows = [i for i in range(m) if basis[i] >= n]
    if any(xb[i] > 1e-7 for i in art_rows):
        raise _Infeasible("linear program is infeasible")

    # Pivot lingering zero-valued artificials out; rows where no structural
    # column has a nonzero tableau entry are redundant and are dropped.
    redundant = []
    for i in art_rows:
        B = _basis_matrix(A, basis, n)
        row = _checked_solve(B.T, _unit(m, i), 1.0) @ A
        row[basic_mask[:n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-7:
            basic_mask[basis[i]] = False
            basic_mask[j] = True
            basis[i] = j
        else:
            redundant.append(i)
    if redundant:
        keep = np.setdiff1d(np.arange(m), redundant)
        for i in redundant:
            basic_mask[basis[i]] = False
        A = A[keep]
        b = b[keep]
        basis = basis[keep]
        m = A.shape[0]
        # No artificial is basic or eligible to enter from here on, so the
        # bookkeeping arrays only need their sizes brought back in line.
        basic_mask = basic_mask[: n + m]
    art_allowed = np.zeros(m, dtype=bool)

    # Phase two: optimize the real objective over the feasible basis.
    bland = False
    stall = 0
    xb = run_phase(c, np.zeros(m), max_iter)

    x = np.zeros(n)
    struct = basis < n
    x[basis[struct]] = xb[struct]
    return float(c @ x), x, total_iters, basis.copy(), bool(redundant)


def _solve(A, b, c, tol, max_iter):
    """Flip negative rows, run the anti-degeneracy pass with its fallback,
    and return (value, x, iterations, basis). The basis is None when the
    solve had to drop redundant rows, in which case no dual vector in the
    original row coordinates is available."""
    m, n = A.shape
    neg = b < 0
    if neg.any():
        A = A.copy()
        b = b.copy()
        A[neg] *= -1.0
        b[neg] *= -1.0

    # Anti-degeneracy passes: solve a copy with generic perturbations of both
    # the right-hand side (removes primal degeneracy, the zero-step pivot
    # chains) and the cost vector (removes dual degeneracy, the huge blocks
    # of tied reduced costs that make Dantzig pricing crawl). The final basis
    # is then checked against the true program: basic solution nonnegative on
    # the true b and reduced costs nonnegative for the true c make it an
    # optimal basis outright, and its objective value is exact. Failures fall
    # through, first to fresh perturbation draws and finally to a direct
    # solve of the unperturbed program. The cost perturbation is positive, so
    # a cost-decreasing feasible ray of the perturbed program is one of the
    # true program as well and unboundedness propagates immediately.
    for attempt in (0, 1, 2):
        rng = np.random.Generator(np.random.Philox(key=_PERTURB_KEY + attempt))
        eta = _PERTURB_SCALE * (1.0 + b) * rng.uniform(1.0, 2.0, size=m)
        delta = _COST_SCALE * (1.0 + np.abs(c)) * rng.uniform(1.0, 2.0, size=n)
        try:
            _, _, iters, basis, dropped = _simplex(A, b + eta, c + delta,
                                                   tol, max_iter)
        except _Unbounded:
            raise
        except RuntimeError:
            continue
        if dropped:
            break
        try:
            xb = np.linalg.solve(A[:, basis], b)
            y = np.linalg.solve(A[:, basis].T, c[basis])
        except np.linalg.LinAlgError:
            continue
        if xb.min() >= -1e-11 and (c - y @ A).min() >= -1e-9:
            x = np.zeros(n)
            x[basis] = np.clip(xb, 0.0, None)
            return float(c @ x), x, iters, basis

    # Exact fallback: solve the unperturbed program directly, raising the
    # floor on acceptable pivot elements if the basis still degrades.
    last = None
    for pivot_min in _PIVOT_LADDER:
        try:
            value, x, iters, basis, dropped = _simplex(A, b, c, tol,
                                                       max_iter, pivot_min)
            return value, x, iters, (None if dropped else basis)
        except _Unbounded:
            raise
        except (_Unstable, _Infeasible) as exc:
            last = exc
    raise last


def solve_equality_lp(A, b, c, *, tol: float = 1e-9,
                      max_iter: int = 200_000) -> SimplexResult:
    """Minimize c.x subject to A x = b, x >= 0.

    Infeasibility and unboundedness raise RuntimeError: the intended callers
    build programs that are feasible and bounded by construction, so either
    condition indicates an internal error upstream.
    """
    A = np.ascontiguousarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],) or c.shape != (A.shape[1],):
        raise ValueError("inconsistent program dimensions")
    value, x, iters, _ = _solve(A, b, c, tol, max_iter)
    return SimplexResult(value, x, iters)


def minimize_l1(D, b, *, tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Minimize sum |x| subject to D x = b; returns (optimum, x)."""
    D = np.asarray(D, dtype=float)
    b = np.asarray(b, dtype=float)
    if D.ndim != 2 or b.shape != (D.shape[0],):
        raise ValueError("inconsistent program dimensions")
    k = D.shape[1]
    if 2 * k <= _CG_THRESHOLD:
        res = solve_equality_lp(np.hstack([D, -D]), b, np.ones(2 * k),
                                tol=tol)
        return res.value, res.x[:k] - res.x[k:]
    return _minimize_l1_wide(D, b, tol)


def _minimize_l1_wide(D, b, tol):
    """Delayed column generation for wide L1 programs.

    Each round solves the split program restricted to a working set of
    columns and recovers the dual vector y of the optimal basis. Columns of
    the full matrix with |y . D_j| > 1 price favorably for one of their two
    split copies; the most violated ones join the working set. When no
    column prices favorably the working-set optimum satisfies the full dual
    feasibility conditions, so it is optimal for the full program and the
    objective value is exact. The working set is seeded with the columns
    most correlated with b plus an even stride across the matrix, and is
    widened if it cannot yet represent b.
    """
    m, k = D.shape
    order = np.argsort(-np.abs(b @ D), kind="stable")
    stride = max(1, k // _CG_INITIAL)
    active = np.union1d(order[:_CG_INITIAL], np.arange(0, k, stride))
    is_active = np.zeros(k, dtype=bool)
    for _ in range(_CG_ROUNDS):
        is_active[:] = False
        is_active[active] = True
        a = active.size
        Dsub = D[:, active]
        A = np.hstack([Dsub, -Dsub])
        c = np.ones(2 * a)
        try:
            value, x, _, basis = _solve(A, b, c, tol, 200_000)
        except _Infeasible:
            if a == k:
                raise
            fresh = order[~is_active[order]][:_CG_INITIAL]
            active = np.union1d(active, fresh)
            continue
        if basis is None:
            # Redundant rows were dropped, so the dual vector cannot price
            # the full matrix; solve the full program directly instead.
            res = solve_equality_lp(np.hstack([D, -D]), b, np.ones(2 * k),
                                    tol=tol)
            return res.value, res.x[:k] - res.x[k:]
        y = np.linalg.solve(A[:, basis].T, c[basis])
        violation = np.abs(y @ D) - 1.0
        violation[active] = -np.inf
        candidates = np.flatnonzero(violation > 10.0 * tol)
        if candidates.size == 0:
            full = np.zeros(k)
            full[active] = x[:a] - x[a:]
            return value, full
        top = candidates[np.argsort(-violation[candidates],
                                    kind="stable")[:_CG_BATCH]]
        active = np.union1d(active, top)
    raise RuntimeError("column generation failed to converge")
