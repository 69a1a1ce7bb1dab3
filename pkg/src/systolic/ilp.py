"""0-1 program for filling sets and the solvers behind it.

Variable layout: ``x_0..x_{n-1}`` select systoles, ``y_0..y_{2n-1}`` mark
realised squares where two chosen systoles cross, ``t_0..t_{n-1}`` count
crossings per systole.  Base constraints::

    sum_i y_i >= M(m)
    t_j = sum_i N[i, j] y_i
    x_j <= t_j <= 4 x_j
    sum_j A[i, j] x_j >= 1        for every systole i

Extra rows (lazy filling cuts, symmetry fixings, cardinality, exclusion
cuts) touch only the ``x`` block.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from systolic.surface import SurfaceModel, incidence_matrices, min_intersections


@dataclass(frozen=True)
class Row:
    coef: tuple[tuple[int, float], ...]  # (x index, coefficient)
    lb: float
    ub: float

    @staticmethod
    def at_least_one(indices) -> "Row":
        return Row(tuple((int(j), 1.0) for j in sorted(set(indices))), 1.0, math.inf)

    @staticmethod
    def at_most(indices, rhs) -> "Row":
        return Row(tuple((int(j), 1.0) for j in sorted(set(indices))), -math.inf, float(rhs))


@dataclass
class IlpModel:
    model: SurfaceModel
    sense: str = "min"
    cuts: list[Row] = field(default_factory=list)
    fixed: dict[int, int] = field(default_factory=dict)
    cardinality: int | None = None
    min_crossings: int | None = None

    def __post_init__(self):
        if self.min_crossings is None:
            self.min_crossings = min_intersections(self.model.params)
        self._cut_keys = {c for c in self.cuts}

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def n_vars(self) -> int:
        return 4 * self.n

    def copy(self) -> "IlpModel":
        return replace(self, cuts=list(self.cuts), fixed=dict(self.fixed))

    def add_cut(self, row: Row) -> bool:
        if row in self._cut_keys:
            return False
        self._cut_keys.add(row)
        self.cuts.append(row)
        return True

    def objective(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        c[: self.n] = 1.0 if self.sense == "min" else -1.0
        return c

    def arrays(self):
        """``(c, A, lb, ub, var_lb, var_ub, integrality)`` in scipy form."""
        n = self.n
        A_int, N = incidence_matrices(self.model)
        nsq = N.shape[0]
        ny0, nt0 = n, 3 * n
        rows, cols, vals, lbs, ubs = [], [], [], [], []
        r = 0

        def emit(entries, lb, ub):
            nonlocal r
            for col, v in entries:
                rows.append(r)
                cols.append(col)
                vals.append(v)
            lbs.append(lb)
            ubs.append(ub)
            r += 1

        emit([(ny0 + i, 1.0) for i in range(nsq)], float(self.min_crossings), math.inf)
        for j in range(n):
            entries = [(nt0 + j, 1.0)] + [(ny0 + i, -1.0) for i in np.flatnonzero(N[:, j])]
            emit(entries, 0.0, 0.0)
            emit([(j, 1.0), (nt0 + j, -1.0)], -math.inf, 0.0)
            emit([(nt0 + j, 1.0), (j, -4.0)], -math.inf, 0.0)
        for i in range(n):
            emit([(int(j), 1.0) for j in np.flatnonzero(A_int[i])], 1.0, math.inf)
        if self.cardinality is not None:
            emit([(j, 1.0) for j in range(n)], float(self.cardinality), float(self.cardinality))
        for cut in self.cuts:
            emit(list(cut.coef), cut.lb, cut.ub)
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, self.n_vars))
        var_lb = np.zeros(self.n_vars)
        var_ub = np.ones(self.n_vars)
        var_ub[nt0:] = 4.0
        for j, v in self.fixed.items():
            var_lb[j] = var_ub[j] = v
        integrality = np.ones(self.n_vars)
        integrality[nt0:] = 0
        return self.objective(), A, np.array(lbs), np.array(ubs), var_lb, var_ub, integrality


def add_symmetry_breaking(ilp: IlpModel, class_members, zeros, N: int) -> IlpModel:
    """Fix the systoles of one axis class to the pattern given by ``zeros``
    (global indices of members set to 0, the rest set to 1) and require
    exactly ``N`` chosen systoles."""
    out = ilp.copy()
    zeros = set(zeros)
    for j in class_members:
        out.fixed[int(j)] = 0 if j in zeros else 1
    out.cardinality = N
    return out


@dataclass(frozen=True)
class SolveResult:
    status: str  # optimal | infeasible | time_limit
    chosen: tuple[int, ...] | None
    objective: float | None
    bound: float | None
    nodes: int = 0

    @property
    def cardinality(self) -> int | None:
        return None if self.chosen is None else len(self.chosen)


def _chosen(xvals, n) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(np.round(xvals[:n]) > 0.5))


class HighsSolver:
    """Bridge to the HiGHS mixed-integer solver shipped with scipy."""

    name = "bridge"

    def __init__(self, time_limit: float | None = None, threads: int = 1):
        self.time_limit = time_limit
        self.threads = threads

    def solve(self, ilp: IlpModel) -> SolveResult:
        c, A, lb, ub, vlb, vub, integrality = ilp.arrays()
        options = {"disp": False, "presolve": True}
        if self.time_limit is not None:
            options["time_limit"] = float(self.time_limit)
        res = milp(c, integrality=integrality, bounds=Bounds(vlb, vub),
                   constraints=LinearConstraint(A, lb, ub), options=options)
        sign = 1.0 if ilp.sense == "min" else -1.0
        bound = getattr(res, "mip_dual_bound", None)
        bound = None if bound is None or not np.isfinite(bound) else sign * bound
        if res.status == 0:
            chosen = _chosen(res.x, ilp.n)
            return SolveResult("optimal", chosen, float(len(chosen)), bound)
        if res.status == 2:
            return SolveResult("infeasible", None, None, None)
        if res.status == 1:
            chosen = None if res.x is None else _chosen(res.x, ilp.n)
            return SolveResult("time_limit", chosen, None if chosen is None else float(len(chosen)), bound)
        raise RuntimeError(f"HiGHS failed: {res.message}")


class BranchAndBound:
    """Depth-first branch and bound over the binaries with LP relaxation bounds.

    Branching takes the lowest-index fractional variable (``x`` block before
    ``y`` block) and explores the side nearer the LP value first.
    """

    name = "builtin"

    def __init__(self, time_limit: float | None = None, threads: int = 1, tol: float = 1e-6):
        self.time_limit = time_limit
        self.tol = tol

    def _lp(self, c, A_ub, b_ub, A_eq, b_eq, lo, hi):
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=np.column_stack([lo, hi]), method="highs")
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"LP relaxation failed: {res.message}")
        return res

    def solve(self, ilp: IlpModel) -> SolveResult:
        c, A, lb, ub, vlb, vub, integrality = ilp.arrays()
        A = A.tocsr()
        eq = np.isclose(lb, ub)
        ub_rows = (~eq) & np.isfinite(ub)
        lb_rows = (~eq) & np.isfinite(lb)
        A_ub = sparse.vstack([A[ub_rows], -A[lb_rows]]).tocsr()
        b_ub = np.concatenate([ub[ub_rows], -lb[lb_rows]])
        A_eq, b_eq = (A[eq], lb[eq]) if eq.any() else (None, None)
        binaries = np.flatnonzero(integrality > 0)
        start = time.monotonic()
        best_val, best_x = math.inf, None
        stack = [(vlb.copy(), vub.copy())]
        nodes = 0
        timed_out = False
        while stack:
            if self.time_limit is not None and time.monotonic() - start > self.time_limit:
                timed_out = True
                break
            lo, hi = stack.pop()
            nodes += 1
            res = self._lp(c, A_ub, b_ub, A_eq, b_eq, lo, hi)
            if res is None:
                continue
            # objective is an integer combination of the x block
            if math.ceil(res.fun - self.tol) >= best_val:
                continue
            frac = [j for j in binaries if abs(res.x[j] - round(res.x[j])) > self.tol]
            if not frac:
                best_val, best_x = round(res.fun), res.x.copy()
                continue
            j = frac[0]
            down_lo, down_hi = lo.copy(), hi.copy()
            down_hi[j] = 0.0
            up_lo, up_hi = lo.copy(), hi.copy()
            up_lo[j] = 1.0
            if res.x[j] >= 0.5:
                stack.extend([(down_lo, down_hi), (up_lo, up_hi)])
            else:
                stack.extend([(up_lo, up_hi), (down_lo, down_hi)])
        sign = 1.0 if ilp.sense == "min" else -1.0
        if timed_out:
            chosen = None if best_x is None else _chosen(best_x, ilp.n)
            return SolveResult("time_limit", chosen, None if chosen is None else float(len(chosen)), None, nodes)
        if best_x is None:
            return SolveResult("infeasible", None, None, None, nodes)
        chosen = _chosen(best_x, ilp.n)
        return SolveResult("optimal", chosen, float(len(chosen)), sign * best_val, nodes)


def make_solver(name: str = "builtin", time_limit: float | None = None, threads: int = 1):
    if name == "builtin":
        return BranchAndBound(time_limit=time_limit, threads=threads)
    if name == "bridge":
        return HighsSolver(time_limit=time_limit, threads=threads)
    raise ValueError(f"unknown solver {name!r}")
