"""Dense-tableau bounded-variable simplex.

Rows ``a_i x`` are paired with logical variables ``s_i = a_i x`` carrying the
row bounds, so the working system is ``[A, -I] z = 0`` with bounds on every
column.  Because every structural variable has finite bounds, the all-logical
starting basis is made dual feasible by parking each structural at the bound
favoured by its cost; the dual simplex then restores primal feasibility and
the primal simplex finishes (and repairs any drift).  Bound changes keep dual
feasibility, which is what branch-and-bound uses for warm starts.

Internally the objective is minimised.
"""

from __future__ import annotations

import numpy as np

from .program import Status


class IterationLimit(RuntimeError):
    pass


class TableauSimplex:
    ptol = 1e-9  # primal feasibility
    dtol = 1e-9  # dual feasibility
    pivtol = 1e-9
    stall_limit = 200  # consecutive degenerate pivots before Bland's rule
    refactor_every = 2000
    compact_every = 100

    def __init__(self, A, row_lo, row_hi, cost, lb, ub, mutable=None):
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        N = n + m
        self.M = np.hstack([A, -np.eye(m)])
        self.lo = np.concatenate([np.asarray(lb, float), np.asarray(row_lo, float)])
        self.hi = np.concatenate([np.asarray(ub, float), np.asarray(row_hi, float)])
        self.c = np.concatenate([np.asarray(cost, float), np.zeros(m)])
        keep = np.zeros(N, dtype=bool)
        if mutable is not None:
            keep[np.asarray(mutable, dtype=int)] = True
        self.mutable = keep

        self.basis = np.arange(n, N)
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[n:] = True
        self.act = np.arange(N)
        self.pos = np.arange(N)
        self.T = -self.M  # B = -I
        self.d = self.c.copy()
        self.at_ub = np.zeros(N, dtype=bool)
        self.x = np.zeros(N)
        for j in range(n):
            self._park(j)
        self.x[n:] = A @ self.x[:n] if n else 0.0
        self.pivots = 0
        self._since_refactor = 0

    @classmethod
    def from_program(cls, p, mutable=None) -> "TableauSimplex":
        from .program import EQ, GE, LE

        lb, ub = p.bounds()
        row_lo = np.full(p.m, -np.inf)
        row_hi = np.full(p.m, np.inf)
        for i, row in enumerate(p.constraints):
            if row.relation in (LE, EQ):
                row_hi[i] = row.rhs
            if row.relation in (GE, EQ):
                row_lo[i] = row.rhs
        return cls(p.matrix(), row_lo, row_hi, -p.cost_vector(), lb, ub, mutable)

    # -- state helpers -------------------------------------------------------

    def _park(self, j: int) -> None:
        """Place nonbasic ``j`` at the bound its reduced cost prefers."""
        lo, hi = self.lo[j], self.hi[j]
        dj = self.d[self.pos[j]] if self.pos[j] >= 0 else 0.0
        if dj > 0 or (dj == 0 and abs(lo) <= abs(hi)):
            use_ub = not np.isfinite(lo)
        else:
            use_ub = np.isfinite(hi)
        self.at_ub[j] = use_ub
        self.x[j] = hi if use_ub else lo

    def set_bounds(self, changes) -> None:
        """Change bounds of (mutable) variables, keeping dual feasibility."""
        for j, (lo, hi) in changes.items():
            self.lo[j], self.hi[j] = lo, hi
            if self.is_basic[j]:
                continue
            old = self.x[j]
            self._park(j)
            delta = self.x[j] - old
            if delta:
                self.x[self.basis] -= self.T[:, self.pos[j]] * delta

    def values(self) -> np.ndarray:
        return self.x[: self.n].copy()

    def objective(self) -> float:
        return float(self.c[: self.n] @ self.x[: self.n])

    # -- linear algebra ------------------------------------------------------

    def _pivot(self, r: int, q: int) -> None:
        T = self.T
        col = T[:, q].copy()
        prow = T[r] / col[r]
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if len(nz) > 0.5 * self.m:
            T -= np.outer(col, prow)
        elif len(nz):
            T[nz] -= np.outer(col[nz], prow)
        T[r] = prow
        self.d -= self.d[q] * prow
        self.d[q] = 0.0
        qvar = self.act[q]
        leaving = self.basis[r]
        self.basis[r] = qvar
        self.is_basic[qvar] = True
        self.is_basic[leaving] = False
        self.pivots += 1
        self._since_refactor += 1
        if self._since_refactor >= self.refactor_every:
            self.refactor()
        elif self.pivots % self.compact_every == 0:
            self._compact()

    def refactor(self, full: bool = True) -> None:
        """Recompute basic values and reduced costs (and the tableau) from the original data."""
        B = self.M[:, self.basis]
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = np.linalg.solve(B, -(self.M @ xn))
        y = np.linalg.solve(B.T, self.c[self.basis])
        cols = self.M[:, self.act]
        self.d = self.c[self.act] - cols.T @ y
        self.d[self.pos[self.basis]] = 0.0
        if full:
            self.T = np.linalg.solve(B, cols)
            self._since_refactor = 0
            self._compact()

    def _compact(self) -> None:
        """Drop nonbasic columns whose bounds are fixed for good."""
        act = self.act
        drop = (~self.is_basic[act]) & (self.lo[act] == self.hi[act]) & (~self.mutable[act])
        if drop.sum() < max(16, 0.1 * len(act)):
            return
        keep = ~drop
        self.T = np.ascontiguousarray(self.T[:, keep])
        self.d = self.d[keep]
        self.pos[act[drop]] = -1
        self.act = act[keep]
        self.pos[self.act] = np.arange(len(self.act))

    # -- iterations ----------------------------------------------------------

    def _movable(self) -> np.ndarray:
        act = self.act
        return (~self.is_basic[act]) & (self.hi[act] > self.lo[act])

    def _dual(self, max_iter: int) -> Status:
        bland = False
        stall = 0
        for _ in range(max_iter):
            basis = self.basis
            xb = self.x[basis]
            below = self.lo[basis] - xb
            above = xb - self.hi[basis]
            viol = np.maximum(below, above)
            cand = np.flatnonzero(viol > self.ptol)
            if len(cand) == 0:
                return Status.OPTIMAL
            if bland:
                r = cand[np.argmin(basis[cand])]
            else:
                r = cand[np.argmax(viol[cand])]
            up = below[r] > 0  # basic var must increase to reach its lower bound
            alpha = self.T[r]
            sa = alpha if up else -alpha
            act = self.act
            ub_side = self.at_ub[act]
            elig = self._movable() & np.where(ub_side, sa > self.pivtol, sa < -self.pivtol)
            cols = np.flatnonzero(elig)
            if len(cols) == 0:
                self.infeasible_row = int(basis[r])
                return Status.INFEASIBLE
            a = np.abs(alpha[cols])
            ratios = np.maximum(np.where(ub_side[cols], -self.d[cols], self.d[cols]), 0.0) / a
            rmin = ratios.min()
            ties = cols[ratios <= rmin + 1e-12]
            if bland:
                q = ties[np.argmin(act[ties])]
            else:
                q = ties[np.argmax(np.abs(alpha[ties]))]
            stall = stall + 1 if rmin <= 1e-12 else 0
            if stall > self.stall_limit:
                bland = True
            target = self.lo[basis[r]] if up else self.hi[basis[r]]
            delta = (xb[r] - target) / alpha[q]
            qvar = act[q]
            self.x[basis] = xb - self.T[:, q] * delta
            self.x[qvar] += delta
            leaving = basis[r]
            self._pivot(r, q)
            self.x[leaving] = target
            self.at_ub[leaving] = not up
        raise IterationLimit(f"dual simplex exceeded {max_iter} iterations")

    def _primal(self, max_iter: int) -> Status:
        bland = False
        stall = 0
        for _ in range(max_iter):
            act = self.act
            d = self.d
            ub_side = self.at_ub[act]
            elig = self._movable() & np.where(ub_side, d > self.dtol, d < -self.dtol)
            cols = np.flatnonzero(elig)
            if len(cols) == 0:
                return Status.OPTIMAL
            if bland:
                q = cols[np.argmin(act[cols])]
            else:
                q = cols[np.argmax(np.abs(d[cols]))]
            qvar = act[q]
            dirn = -1.0 if self.at_ub[qvar] else 1.0
            g = -self.T[:, q] * dirn  # change of basic values per unit step
            basis = self.basis
            xb = self.x[basis]
            lo_b, hi_b = self.lo[basis], self.hi[basis]
            lim = np.full(self.m, np.inf)
            dec = g < -self.pivtol
            inc = g > self.pivtol
            with np.errstate(invalid="ignore"):
                lim[dec] = (xb[dec] - lo_b[dec]) / -g[dec]
                lim[inc] = (hi_b[inc] - xb[inc]) / g[inc]
            lim = np.where(np.isnan(lim), np.inf, np.maximum(lim, 0.0))
            rmin = lim.min() if self.m else np.inf
            flip = self.hi[qvar] - self.lo[qvar]
            if not np.isfinite(rmin) and not np.isfinite(flip):
                return Status.UNBOUNDED
            if flip <= rmin:
                self.x[basis] = xb + g * flip
                self.at_ub[qvar] = not self.at_ub[qvar]
                self.x[qvar] = self.hi[qvar] if self.at_ub[qvar] else self.lo[qvar]
                stall = 0
                continue
            rows = np.flatnonzero(lim <= rmin + 1e-12)
            if bland:
                r = rows[np.argmin(basis[rows])]
            else:
                r = rows[np.argmax(np.abs(g[rows]))]
            step = lim[r]
            stall = stall + 1 if step <= 1e-12 else 0
            if stall > self.stall_limit:
                bland = True
            leaving = basis[r]
            to_ub = g[r] > 0
            self.x[basis] = xb + g * step
            self.x[qvar] += dirn * step
            self._pivot(r, q)
            self.x[leaving] = self.hi[leaving] if to_ub else self.lo[leaving]
            self.at_ub[leaving] = to_ub
        raise IterationLimit(f"primal simplex exceeded {max_iter} iterations")

    def solve(self, polish: bool = True, max_iter: int | None = None) -> Status:
        if max_iter is None:
            max_iter = 50 * (self.m + self.n) + 1000
        for _ in range(4):
            st = self._dual(max_iter)
            if st is Status.INFEASIBLE:
                if not polish:
                    return st
                self.refactor()
                if self._dual(max_iter) is Status.INFEASIBLE:
                    return Status.INFEASIBLE
            st = self._primal(max_iter)
            if st is Status.UNBOUNDED:
                return st
            if not polish:
                return Status.OPTIMAL
            self.refactor(full=False)
            if self._clean():
                return Status.OPTIMAL
            self.refactor()
        return Status.OPTIMAL

    def _clean(self) -> bool:
        basis = self.basis
        xb = self.x[basis]
        pviol = np.maximum(self.lo[basis] - xb, xb - self.hi[basis]).max() if self.m else 0.0
        act = self.act
        nb = self._movable()
        d = self.d
        dviol = np.where(self.at_ub[act], d, -d)[nb]
        return pviol <= self.ptol and (dviol.max() if len(dviol) else 0.0) <= self.dtol
