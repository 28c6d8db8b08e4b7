"""Scenario file format (version 1) and its canonical serialisation.

The file is JSON.  Unknown fields are rejected.  ``emit_scenario`` writes a
canonical form (fixed key order, one numeric array per line) so that
``emit(parse(emit(parse(f))))`` is byte-identical to ``emit(parse(f))``.
See ``docs/scenario_format.md`` for the field reference.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from jsonschema import Draft202012Validator

from .model import (
    Bus,
    Demand,
    DemandProfile,
    DispatchableUnit,
    IdmSession,
    Line,
    MarketStructure,
    Network,
    NonDispatchableUnit,
    PccLimit,
    Scenario,
    StorageThermalUnit,
    validate_scenario,
)

FORMAT_VERSION = 1

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_series = {"type": "array", "items": _num}
_nonneg_series = {"type": "array", "items": _nonneg}
_id = {"type": "string", "minLength": 1}


def _obj(props: dict, required=None) -> dict:
    return {
        "type": "object",
        "properties": props,
        "required": list(props) if required is None else required,
        "additionalProperties": False,
    }


SCHEMA = _obj({
    "version": {"const": FORMAT_VERSION},
    "name": {"type": "string"},
    "description": {"type": "string"},
    "network": _obj({
        "buses": {"type": "array", "items": _obj({"id": {"type": "integer"}, "name": {"type": "string"}}, ["id"])},
        "lines": {"type": "array", "items": _obj({
            "id": _id,
            "from": {"type": "integer"},
            "to": {"type": "integer"},
            "susceptance": {"type": "number", "exclusiveMinimum": 0},
            "limit": {"type": "number", "exclusiveMinimum": 0},
        })},
        "pcc": {"type": "array", "items": _obj({
            "bus": {"type": "integer"},
            "max_trade": _nonneg,
        })},
        "slack": {"type": "integer"},
    }),
    "assets": _obj({
        "dres": {"type": "array", "items": _obj({
            "id": _id, "bus": {"type": "integer"}, "p_min": _nonneg, "p_max": _nonneg,
            "variable_cost": _nonneg, "startup_cost": _nonneg, "shutdown_cost": _nonneg,
            "initial_on": {"type": "boolean"},
        })},
        "ndres": {"type": "array", "items": _obj({
            "id": _id, "bus": {"type": "integer"}, "p_min": _nonneg_series, "available": _nonneg_series,
        })},
        "stu": {"type": "array", "items": _obj({
            "id": _id, "bus": {"type": "integer"}, "p_max": _nonneg, "energy_capacity": _nonneg,
            "charge_limit": _nonneg, "efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "initial_energy": _nonneg, "thermal_input": _nonneg_series,
        })},
    }),
    "demands": {"type": "array", "items": _obj({
        "id": _id, "bus": {"type": "integer"}, "min_energy": _nonneg,
        "ramp_up": _nonneg, "ramp_down": _nonneg,
        "tolerance_down": _nonneg_series, "tolerance_up": _nonneg_series,
        "default_profile": _id,
        "profiles": {"type": "array", "items": _obj({"id": _id, "cost": _nonneg, "power": _nonneg_series})},
    })},
    "market": _obj({
        "horizon": {"type": "integer", "minimum": 1},
        "dt_hours": {"type": "number", "exclusiveMinimum": 0},
        "dam_prices": _series,
        "idm_sessions": {"type": "array", "items": _obj({
            "k": {"type": "integer", "minimum": 1},
            "tau": {"type": "integer", "minimum": 1},
            "prices": _series,
            "forecast_updates": {"type": "object", "additionalProperties": _nonneg_series},
        })},
    }),
}, ["version", "network", "assets", "demands", "market"])

_VALIDATOR = Draft202012Validator(SCHEMA)


class ScenarioFileError(ValueError):
    """Schema or semantic problems in a scenario document; ``errors`` lists them all."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


def _where(doc, path) -> str:
    parts = []
    node = doc
    for p in path:
        if isinstance(p, int):
            label = f"[{p}]"
            try:
                item = node[p]
                if isinstance(item, dict) and "id" in item:
                    label = f"[{p}] (id {item['id']!r})"
            except (IndexError, KeyError, TypeError):
                pass
            parts.append(label)
        else:
            parts.append(f".{p}" if parts else str(p))
        try:
            node = node[p]
        except (IndexError, KeyError, TypeError):
            node = None
    return "".join(parts) or "<document>"


def schema_errors(doc) -> list[str]:
    errs = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: [str(x) for x in e.absolute_path])
    return [f"{_where(doc, e.absolute_path)}: {e.message}" for e in errs]


def _floats(xs) -> tuple[float, ...]:
    return tuple(float(x) for x in xs)


def scenario_from_dict(doc: dict) -> Scenario:
    """Map a schema-valid document to a Scenario (no semantic validation)."""
    net = doc["network"]
    network = Network(
        buses=tuple(Bus(int(b["id"]), b.get("name", "")) for b in net["buses"]),
        lines=tuple(Line(ln["id"], int(ln["from"]), int(ln["to"]), float(ln["susceptance"]), float(ln["limit"]))
                    for ln in net["lines"]),
        pcc_buses=tuple(int(p["bus"]) for p in net["pcc"]),
        slack_bus=int(net["slack"]),
    )
    assets = doc["assets"]
    dres = tuple(DispatchableUnit(
        a["id"], int(a["bus"]), float(a["p_min"]), float(a["p_max"]), float(a["variable_cost"]),
        float(a["startup_cost"]), float(a["shutdown_cost"]), bool(a["initial_on"])) for a in assets["dres"])
    ndres = tuple(NonDispatchableUnit(a["id"], int(a["bus"]), _floats(a["p_min"]), _floats(a["available"]))
                  for a in assets["ndres"])
    stus = tuple(StorageThermalUnit(
        a["id"], int(a["bus"]), float(a["p_max"]), float(a["energy_capacity"]), float(a["charge_limit"]),
        float(a["efficiency"]), float(a["initial_energy"]), _floats(a["thermal_input"])) for a in assets["stu"])
    demands = tuple(Demand(
        id=d["id"], bus=int(d["bus"]),
        profiles=tuple(DemandProfile(p["id"], _floats(p["power"]), float(p["cost"])) for p in d["profiles"]),
        min_energy=float(d["min_energy"]), ramp_up=float(d["ramp_up"]), ramp_down=float(d["ramp_down"]),
        tolerance_down=_floats(d["tolerance_down"]), tolerance_up=_floats(d["tolerance_up"]),
        default_profile=d["default_profile"]) for d in doc["demands"])
    mk = doc["market"]
    sessions = tuple(IdmSession(
        k=int(sn["k"]), tau=int(sn["tau"]), prices=_floats(sn["prices"]),
        forecast_update=tuple((uid, _floats(v)) for uid, v in sn["forecast_updates"].items()))
        for sn in mk["idm_sessions"])
    market = MarketStructure(int(mk["horizon"]), float(mk["dt_hours"]), _floats(mk["dam_prices"]), sessions)
    limits = tuple(PccLimit(int(p["bus"]), float(p["max_trade"])) for p in net["pcc"])
    return Scenario(network, dres, ndres, stus, demands, market, limits,
                    name=doc.get("name", ""), description=doc.get("description", ""))


def scenario_to_dict(s: Scenario) -> dict:
    limits = {lim.bus: lim.p_max_trade for lim in s.pcc_limits}
    return {
        "version": FORMAT_VERSION,
        "name": s.name,
        "description": s.description,
        "network": {
            "buses": [{"id": b.id, "name": b.name} if b.name else {"id": b.id} for b in s.network.buses],
            "lines": [{"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "susceptance": ln.susceptance,
                       "limit": ln.flow_limit} for ln in s.network.lines],
            "pcc": [{"bus": b, "max_trade": limits[b]} for b in s.network.pcc_buses],
            "slack": s.network.slack_bus,
        },
        "assets": {
            "dres": [{"id": c.id, "bus": c.bus, "p_min": c.p_min, "p_max": c.p_max,
                      "variable_cost": c.variable_cost, "startup_cost": c.startup_cost,
                      "shutdown_cost": c.shutdown_cost, "initial_on": c.initial_on} for c in s.dispatchables],
            "ndres": [{"id": r.id, "bus": r.bus, "p_min": list(r.p_min_profile),
                       "available": list(r.available_profile)} for r in s.nondispatchables],
            "stu": [{"id": th.id, "bus": th.bus, "p_max": th.p_max, "energy_capacity": th.energy_capacity,
                     "charge_limit": th.charge_limit, "efficiency": th.efficiency,
                     "initial_energy": th.initial_energy, "thermal_input": list(th.thermal_input)}
                    for th in s.stus],
        },
        "demands": [{
            "id": d.id, "bus": d.bus, "min_energy": d.min_energy, "ramp_up": d.ramp_up,
            "ramp_down": d.ramp_down, "tolerance_down": list(d.tolerance_down),
            "tolerance_up": list(d.tolerance_up), "default_profile": d.default_profile,
            "profiles": [{"id": p.id, "cost": p.cost, "power": list(p.power)} for p in d.profiles],
        } for d in s.demands],
        "market": {
            "horizon": s.market.horizon,
            "dt_hours": s.market.dt,
            "dam_prices": list(s.market.dam_prices),
            "idm_sessions": [{"k": sn.k, "tau": sn.tau, "prices": list(sn.prices),
                              "forecast_updates": {uid: list(v) for uid, v in sn.forecast_update}}
                             for sn in s.market.idm_sessions],
        },
    }


def _dump(node, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(node, dict):
        if not node:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_dump(v, indent + 1)}" for k, v in node.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(node, list):
        if not node:
            return "[]"
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in node):
            return "[" + ", ".join(json.dumps(x) for x in node) + "]"
        return "[\n" + ",\n".join(inner + _dump(x, indent + 1) for x in node) + "\n" + pad + "]"
    return json.dumps(node)


def emit_scenario(s: Scenario) -> str:
    return _dump(scenario_to_dict(s), 0) + "\n"


def loads_scenario(text: str, validate: bool = True) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    errs = schema_errors(doc)
    if errs:
        raise ScenarioFileError(errs)
    s = scenario_from_dict(doc)
    if validate:
        violations = validate_scenario(s)
        if violations:
            raise ScenarioFileError([str(v) for v in violations])
    return s


def parse_scenario(path, validate: bool = True) -> Scenario:
    """Read, schema-check and (by default) semantically validate a scenario file."""
    text = Path(path).read_text(encoding="utf-8")
    return loads_scenario(text, validate)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_scenario(s: Scenario, path) -> None:
    atomic_write(path, emit_scenario(s))


def bundled_scenario_path() -> Path:
    return Path(__file__).parent / "data" / "twelve_node.json"


def load_bundled() -> Scenario:
    return parse_scenario(bundled_scenario_path())
