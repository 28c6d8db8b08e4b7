"""LP relaxation, branch-and-bound and exhaustive-enumeration entry points."""

from __future__ import annotations

import math
import os

from .program import FEAS_TOL, MixedIntegerProgram, Solution, Status, max_residual
from .simplex import TableauSimplex

INT_TOL = 1e-6
DEFAULT_NODE_LIMIT = 10**6
MAX_ENUM_BINARIES = 20


class SolverResourceError(RuntimeError):
    """A resource limit was hit; ``incumbent`` holds the best solution found (if any)."""

    def __init__(self, message: str, incumbent: Solution | None = None):
        super().__init__(message)
        self.incumbent = incumbent


def default_node_limit() -> int:
    env = os.environ.get("VPPFLEX_NODE_LIMIT")
    return int(env) if env else DEFAULT_NODE_LIMIT


def _finish(p: MixedIntegerProgram, eng: TableauSimplex, nodes: int = 0, binaries=()) -> Solution:
    x = eng.values() + 0.0
    for j in binaries:
        x[j] = float(round(x[j]))
    return Solution(Status.OPTIMAL, x, p.evaluate(x), nodes)


def solve_lp(p: MixedIntegerProgram) -> Solution:
    """Solve the LP relaxation of ``p`` (binaries relaxed to their bounds)."""
    p.check()
    eng = TableauSimplex.from_program(p)
    st = eng.solve()
    if st is not Status.OPTIMAL:
        return Solution(st)
    return _finish(p, eng)


class _Oracle:
    """Shared machinery: a warm-startable engine plus the original binary bounds."""

    def __init__(self, p: MixedIntegerProgram):
        p.check()
        self.p = p
        self.bins = p.binaries()
        self.eng = TableauSimplex.from_program(p, mutable=self.bins)
        lb, ub = p.bounds()
        self.base = {j: (lb[j], ub[j]) for j in self.bins}

    def solve_with(self, fixed: dict[int, float], polish: bool) -> Status:
        bounds = dict(self.base)
        for j, v in fixed.items():
            bounds[j] = (v, v)
        self.eng.set_bounds(bounds)
        return self.eng.solve(polish=polish)

    def certify(self, fixing: dict[int, float]) -> Solution | None:
        """Solve with every binary fixed to ``fixing`` and audit the result."""
        if self.solve_with(fixing, polish=True) is not Status.OPTIMAL:
            return None
        sol = _finish(self.p, self.eng, binaries=self.bins)
        if max_residual(self.p, sol.values) > FEAS_TOL:
            return None
        return sol


def solve_milp(p: MixedIntegerProgram, node_limit: int | None = None) -> Solution:
    """Depth-first branch-and-bound, most-fractional branching, floor branch first."""
    if node_limit is None:
        node_limit = default_node_limit()
    orc = _Oracle(p)
    bins = orc.bins
    if not bins:
        return solve_lp(p)
    best: Solution | None = None
    stack: list[dict[int, float]] = [{}]
    nodes = 0
    while stack:
        fixed = stack.pop()
        nodes += 1
        if nodes > node_limit:
            raise SolverResourceError(f"node limit {node_limit} exceeded", best)
        if orc.solve_with(fixed, polish=False) is not Status.OPTIMAL:
            continue
        x = orc.eng.values()
        bound = -orc.eng.objective() + p.objective_constant
        if best is not None and bound <= best.objective_value + 1e-9 * (1 + abs(best.objective_value)):
            continue
        frac = [(min(x[j] - math.floor(x[j]), math.ceil(x[j]) - x[j]), j)
                for j in bins if j not in fixed and abs(x[j] - round(x[j])) > INT_TOL]
        if not frac:
            fixing = {j: float(round(x[j])) for j in bins}
            sol = orc.certify(fixing)
            if sol is not None and (best is None or sol.objective_value > best.objective_value):
                best = sol
            continue
        top = max(f for f, _ in frac)
        j = min(j for f, j in frac if f >= top - 1e-12)
        ceil_child = dict(fixed)
        ceil_child[j] = float(math.ceil(x[j]))
        floor_child = dict(fixed)
        floor_child[j] = float(math.floor(x[j]))
        stack.append(ceil_child)
        stack.append(floor_child)
    if best is None:
        return Solution(Status.INFEASIBLE, nodes=nodes)
    best.nodes = nodes
    return best


def _gray_flip(i: int) -> int:
    return (i & -i).bit_length() - 1


def enumerate_binaries(p: MixedIntegerProgram) -> Solution:
    """Optimal solution by solving the LP at every 0/1 fixing of the free binaries.

    Fixings are visited in Gray-code order so consecutive LPs differ by one
    bound and the engine re-solves from the previous basis.
    """
    p.check()
    lb, ub = p.bounds()
    free = [j for j in p.binaries() if lb[j] < ub[j]]
    if len(free) > MAX_ENUM_BINARIES:
        raise SolverResourceError(f"{len(free)} binaries exceed the enumeration limit of {MAX_ENUM_BINARIES}")
    if not p.binaries():
        return solve_lp(p)
    orc = _Oracle(p)
    fixing = {j: float(round(lb[j])) for j in orc.bins}
    best: Solution | None = None
    count = 1 << len(free)
    for i in range(count):
        if i:
            j = free[_gray_flip(i)]
            fixing[j] = 1.0 - fixing[j]
        if orc.solve_with(fixing, polish=False) is not Status.OPTIMAL:
            continue
        value = -orc.eng.objective() + p.objective_constant
        if best is not None and value <= best.objective_value + 1e-9 * (1 + abs(best.objective_value)):
            continue
        sol = orc.certify(fixing)
        if sol is None:
            continue
        if best is None or sol.objective_value > best.objective_value:
            best = sol
    if best is None:
        return Solution(Status.INFEASIBLE, nodes=count)
    best.nodes = count
    return best
