"""CSV report emission for market days and sweeps.

Every file has a fixed header (``HEADERS``), '.' decimals, euros to 2
places, power and energy to 3 places, periods numbered from 1, no negative
zero and no timestamps, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .analysis import Cutoff, PerMwh, SweepReport
from .market import MarketDayState, settlement_report
from .scenario_io import atomic_write

HEADERS = {
    "settlement.csv": ["stage", "revenue", "cost", "profit"],
    "schedules.csv": ["entity", "period", "mw"],
    "traded_power.csv": ["period", "dam_mw", "final_mw"],
    "demand_output.csv": ["demand", "period", "scheduled_mw", "final_mw"],
    "profiles.csv": ["demand", "profile", "period", "mw", "chosen"],
    "profit_vs_tolerance.csv": ["tolerance_pct", "profit", "dam_profit", "uplift_pct", "profiles", "status"],
    "profit_vs_cost.csv": ["profile_cost", "profit", "profiles", "status"],
    "cutoffs.csv": ["demand", "profile", "cutoff_eur", "shifted_mwh", "eur_per_mwh", "certified"],
}

EUR = 2
MW = 3


def fmt(x: float | None, digits: int) -> str:
    if x is None:
        return ""
    text = f"{x:.{digits}f}"
    if float(text) == 0.0:
        text = f"{0.0:.{digits}f}"
    return text


def _csv_text(name: str, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADERS[name])
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _write(out: Path, name: str, rows) -> Path:
    path = out / name
    atomic_write(path, _csv_text(name, rows))
    return path


def _picks(profiles: dict[str, str]) -> str:
    return ";".join(f"{d}={p}" for d, p in profiles.items())


# -- market day ---------------------------------------------------------------

_SCHEDULE_LABELS = [
    ("p_c", "dres"),
    ("p_r", "ndres"),
    ("p_stu", "stu"),
    ("charge_stu", "stu_charge"),
    ("p_d", "demand"),
    ("flow", "line"),
    ("p_m", "pcc"),
]


def settlement_rows(state: MarketDayState):
    for r in settlement_report(state).rows:
        yield [r.stage, fmt(r.revenue, EUR), fmt(r.cost, EUR), fmt(r.profit, EUR)]


def schedule_rows(state: MarketDayState):
    sched = state.settled.schedule
    for fam, label in _SCHEDULE_LABELS:
        for entity, series in sched[fam].items():
            for t, v in enumerate(series):
                yield [f"{label}:{entity}", t + 1, fmt(v, MW)]


def traded_rows(state: MarketDayState):
    final = state.final_trade()
    for t, (dam, fin) in enumerate(zip(state.settled.p_da, final)):
        yield [t + 1, fmt(dam, MW), fmt(fin, MW)]


def demand_rows(state: MarketDayState):
    dam = state.stages[0]
    x = dam.solution.values
    for d in state.scenario.demands:
        scheduled = dam.catalog.series(x, "p_d", d.id)
        final = state.settled.schedule["p_d"][d.id]
        for t in range(state.scenario.horizon):
            yield [d.id, t + 1, fmt(scheduled[t], MW), fmt(final[t], MW)]


def profile_rows(state: MarketDayState):
    chosen = state.settled.profiles
    for d in state.scenario.demands:
        for p in d.profiles:
            flag = int(chosen.get(d.id) == p.id)
            for t, v in enumerate(p.power):
                yield [d.id, p.id, t + 1, fmt(v, MW), flag]


def emit_day_reports(state: MarketDayState, out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return [
        _write(out, "settlement.csv", settlement_rows(state)),
        _write(out, "schedules.csv", schedule_rows(state)),
        _write(out, "traded_power.csv", traded_rows(state)),
        _write(out, "demand_output.csv", demand_rows(state)),
        _write(out, "profiles.csv", profile_rows(state)),
    ]


# -- sweeps -------------------------------------------------------------------

def tolerance_rows(report: SweepReport):
    for r in report.rows:
        uplift = None if r.uplift is None else 100.0 * r.uplift
        yield [fmt(r.value, MW), fmt(r.profit, EUR), fmt(r.dam_profit, EUR), fmt(uplift, MW),
               _picks(r.profiles), r.status]


def cost_rows(report: SweepReport):
    for r in report.rows:
        yield [fmt(r.value, EUR), fmt(r.profit, EUR), _picks(r.profiles), r.status]


def cutoff_rows(cutoffs: list[tuple[Cutoff, PerMwh]]):
    for c, per in cutoffs:
        if c.value is None:
            yield [c.demand, c.profile, "not profitable", fmt(per.shifted_mwh, MW), "", int(c.certified)]
        else:
            yield [c.demand, c.profile, fmt(c.value, EUR), fmt(per.shifted_mwh, MW),
                   fmt(per.eur_per_mwh, EUR) if per.defined else "undefined", int(c.certified)]


def emit_sweep_report(report: SweepReport, out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if report.parameter == "tolerance_pct":
        return [_write(out, "profit_vs_tolerance.csv", tolerance_rows(report))]
    return [_write(out, "profit_vs_cost.csv", cost_rows(report))]


def emit_cutoffs(cutoffs: list[tuple[Cutoff, PerMwh]], out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return [_write(out, "cutoffs.csv", cutoff_rows(cutoffs))]


def emit_reports(result, out) -> list[Path]:
    """Write the report files for a finished market day or sweep; returns the paths."""
    if isinstance(result, MarketDayState):
        return emit_day_reports(result, out)
    if isinstance(result, SweepReport):
        return emit_sweep_report(result, out)
    raise TypeError(f"no reports for {type(result).__name__}")


def read_report(path) -> list[dict[str, str]]:
    """Parse a report CSV, checking its header against ``HEADERS``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = HEADERS[path.name]
        if header != expected:
            raise ValueError(f"{path.name}: header {header} != {expected}")
        rows = [dict(zip(header, r)) for r in reader]
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise ValueError(f"{path.name}: row {i + 1} has {len(r)} fields")
    return rows
