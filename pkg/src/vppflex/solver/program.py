"""Sparse mixed-integer program container, solution record and feasibility audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

LE, EQ, GE = "<=", "=", ">="
RELATIONS = (LE, EQ, GE)
FEAS_TOL = 1e-6


class StructuralError(ValueError):
    """The program itself is malformed (dangling index, bad bounds, ...)."""


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    is_binary: bool = False


@dataclass(frozen=True)
class Constraint:
    name: str
    indices: tuple[int, ...]
    coefs: tuple[float, ...]
    relation: str
    rhs: float


@dataclass(frozen=True)
class MixedIntegerProgram:
    """``max c.x + constant`` subject to sparse rows and finite variable bounds."""

    variables: tuple[Variable, ...]
    objective: tuple[tuple[int, float], ...]
    constraints: tuple[Constraint, ...]
    objective_constant: float = 0.0
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def binaries(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.is_binary]

    def check(self) -> None:
        """Raise StructuralError if the program breaks its invariants."""
        n = self.n
        for j, v in enumerate(self.variables):
            if not (math.isfinite(v.lb) and math.isfinite(v.ub)):
                raise StructuralError(f"variable {j} ({v.name}) has a non-finite bound")
            if v.lb > v.ub:
                raise StructuralError(f"variable {j} ({v.name}) has lb > ub")
            if v.is_binary and (v.lb < 0 or v.ub > 1):
                raise StructuralError(f"binary variable {j} ({v.name}) bounds outside [0, 1]")
        for j, c in self.objective:
            if not 0 <= j < n:
                raise StructuralError(f"objective references missing variable {j}")
            if not math.isfinite(c):
                raise StructuralError(f"objective coefficient of {j} is not finite")
        for i, row in enumerate(self.constraints):
            if row.relation not in RELATIONS:
                raise StructuralError(f"constraint {i} ({row.name}) has relation {row.relation!r}")
            if len(row.indices) != len(row.coefs):
                raise StructuralError(f"constraint {i} ({row.name}) index/coef length mismatch")
            for j in row.indices:
                if not 0 <= j < n:
                    raise StructuralError(f"constraint {i} ({row.name}) references missing variable {j}")
            if not math.isfinite(row.rhs) or not all(math.isfinite(a) for a in row.coefs):
                raise StructuralError(f"constraint {i} ({row.name}) has non-finite data")

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.n)
        for j, coef in self.objective:
            c[j] += coef
        return c

    def matrix(self) -> np.ndarray:
        A = np.zeros((self.m, self.n))
        for i, row in enumerate(self.constraints):
            for j, a in zip(row.indices, row.coefs):
                A[i, j] += a
        return A

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def with_bounds(self, changes: dict[int, tuple[float, float]]) -> "MixedIntegerProgram":
        vars_ = list(self.variables)
        for j, (lo, hi) in changes.items():
            vars_[j] = replace(vars_[j], lb=float(lo), ub=float(hi))
        return replace(self, variables=tuple(vars_))

    def with_objective(self, changes: dict[int, float]) -> "MixedIntegerProgram":
        coefs = dict()
        for j, c in self.objective:
            coefs[j] = coefs.get(j, 0.0) + c
        coefs.update(changes)
        return replace(self, objective=tuple(sorted(coefs.items())))

    def relaxed(self) -> "MixedIntegerProgram":
        return replace(self, variables=tuple(replace(v, is_binary=False) for v in self.variables))

    def evaluate(self, values) -> float:
        return self.objective_constant + math.fsum(c * float(values[j]) for j, c in self.objective)


@dataclass
class Solution:
    status: Status
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = float("nan")
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class ProgramBuilder:
    """Incremental builder for MixedIntegerProgram."""

    def __init__(self, name: str = ""):
        self.name = name
        self._vars: list[Variable] = []
        self._obj: dict[int, float] = {}
        self._rows: list[Constraint] = []
        self.constant = 0.0

    @property
    def n(self) -> int:
        return len(self._vars)

    def var(self, name: str, lb: float, ub: float, binary: bool = False, obj: float = 0.0) -> int:
        self._vars.append(Variable(name, float(lb), float(ub), binary))
        j = len(self._vars) - 1
        if obj:
            self._obj[j] = float(obj)
        return j

    def add_objective(self, j: int, coef: float) -> None:
        if coef:
            self._obj[j] = self._obj.get(j, 0.0) + float(coef)

    def row(self, name: str, terms, relation: str, rhs: float) -> int:
        merged: dict[int, float] = {}
        for j, a in terms:
            merged[j] = merged.get(j, 0.0) + float(a)
        idx = tuple(merged)
        self._rows.append(Constraint(name, idx, tuple(merged[j] for j in idx), relation, float(rhs)))
        return len(self._rows) - 1

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        self._vars[j] = replace(self._vars[j], lb=float(lb), ub=float(ub))

    def bounds_of(self, j: int) -> tuple[float, float]:
        v = self._vars[j]
        return v.lb, v.ub

    def build(self) -> MixedIntegerProgram:
        return MixedIntegerProgram(
            variables=tuple(self._vars),
            objective=tuple(sorted((j, c) for j, c in self._obj.items() if c != 0.0)),
            constraints=tuple(self._rows),
            objective_constant=self.constant,
            name=self.name,
        )


def residuals(p: MixedIntegerProgram, values) -> list[tuple[str, float]]:
    """Per-constraint and per-bound violation amounts, computed row by row with fsum."""
    out = []
    for v, x in zip(p.variables, values):
        x = float(x)
        viol = max(v.lb - x, x - v.ub, 0.0)
        if v.is_binary:
            viol = max(viol, min(abs(x), abs(x - 1.0)))
        out.append((f"bound {v.name}", viol))
    for row in p.constraints:
        act = math.fsum(a * float(values[j]) for j, a in zip(row.indices, row.coefs))
        if row.relation == LE:
            viol = max(act - row.rhs, 0.0)
        elif row.relation == GE:
            viol = max(row.rhs - act, 0.0)
        else:
            viol = abs(act - row.rhs)
        out.append((row.name, viol))
    return out


def max_residual(p: MixedIntegerProgram, values) -> float:
    res = residuals(p, values)
    return max((r for _, r in res), default=0.0)


def to_lp_format(p: MixedIntegerProgram) -> str:
    """Render the program as CPLEX-LP-style text for cross-checking elsewhere."""

    def name(j: int) -> str:
        return f"x{j}"

    def terms(pairs) -> str:
        parts = []
        for j, a in pairs:
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {abs(a):.17g} {name(j)}")
        s = " ".join(parts) if parts else "0 x0"
        return s[2:] if s.startswith("+ ") else s

    lines = [f"\\ {p.name or 'program'}: {p.n} variables, {p.m} constraints"]
    if p.objective_constant:
        lines.append(f"\\ objective constant {p.objective_constant:.17g}")
    lines += ["Maximize", f" obj: {terms(p.objective)}", "Subject To"]
    for i, row in enumerate(p.constraints):
        lines.append(f" c{i}: {terms(zip(row.indices, row.coefs))} {row.relation} {row.rhs:.17g}")
    lines.append("Bounds")
    for j, v in enumerate(p.variables):
        lines.append(f" {v.lb:.17g} <= {name(j)} <= {v.ub:.17g}")
    bins = p.binaries()
    if bins:
        lines.append("Binaries")
        lines.append(" " + " ".join(name(j) for j in bins))
    lines.append("End")
    for j, v in enumerate(p.variables):
        lines.append(f"\\ {name(j)} = {v.name}")
    return "\n".join(lines) + "\n"
