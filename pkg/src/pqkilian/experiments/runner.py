"""Config validation, seed fan-out and report files."""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidParameter
from .scenarios import REGISTRY, Scenario

CONFIG_KEYS = {"scenario", "params", "seeds", "out"}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: dict
    seeds: range
    out: Path | None = None

    def echo(self) -> dict:
        return {"scenario": self.scenario, "params": self.params,
                "seeds": f"{self.seeds.start}..{self.seeds.stop - 1}"}


def parse_seeds(text: str) -> range:
    """``"a..b"`` (inclusive) or a single integer."""
    a, sep, b = str(text).partition("..")
    try:
        lo = int(a)
        hi = int(b) if sep else lo
    except ValueError:
        raise InvalidParameter(f"bad seed range {text!r}") from None
    if lo < 0 or hi < lo:
        raise InvalidParameter(f"empty or negative seed range {text!r}")
    return range(lo, hi + 1)


def _coerce(name: str, key: str, value, default):
    kind = type(default)
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is list:
        ok = isinstance(value, list) and all(type(v) is type(default[0]) for v in value) \
            if default else isinstance(value, list)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise InvalidParameter(f"{name}.{key}: expected {kind.__name__}, got {value!r}")
    return value


def make_config(name: str, raw: dict | None = None, seeds: str | None = None,
                out: str | Path | None = None) -> ScenarioConfig:
    """Validate ``raw`` against the scenario's defaults; unknown keys are errors."""
    if name not in REGISTRY:
        raise InvalidParameter(f"unknown scenario {name!r}; try one of {sorted(REGISTRY)}")
    sc: Scenario = REGISTRY[name]
    raw = dict(raw or {})
    extra = set(raw) - CONFIG_KEYS
    if extra:
        raise InvalidParameter(f"unknown config keys: {sorted(extra)}")
    if raw.get("scenario", name) != name:
        raise InvalidParameter(f"config is for {raw['scenario']!r}, not {name!r}")
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise InvalidParameter("params must be an object")
    unknown = set(given) - set(sc.defaults)
    if unknown:
        raise InvalidParameter(f"unknown parameters for {name}: {sorted(unknown)}")
    params = dict(sc.defaults)
    for k, v in given.items():
        params[k] = _coerce(name, k, v, sc.defaults[k])
    seed_text = seeds or raw.get("seeds") or sc.seeds
    out = out or raw.get("out")
    return ScenarioConfig(name, params, parse_seeds(seed_text), Path(out) if out else None)


def _run_one(args):
    name, params, seed = args
    return REGISTRY[name].run(params, seed)


def to_json(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def evaluate(name: str, params: dict, raw: list) -> tuple[dict, list]:
    """Aggregate and checks from raw per-seed rows (each carries its ``seed``)."""
    records = [{k: v for k, v in r.items() if k != "seed"} for r in raw]
    agg, checks = REGISTRY[name].aggregate(params, records)
    return agg, [c.to_dict() for c in checks]


def run(cfg: ScenarioConfig, jobs: int = 1) -> dict:
    start = time.perf_counter()
    tasks = [(cfg.scenario, cfg.params, s) for s in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_run_one(t) for t in tasks]
    # round-trip so the embedded rows are exactly what a reader of the files sees
    raw = json.loads(json.dumps([{"seed": s, **r} for s, r in zip(cfg.seeds, rows)],
                                default=to_json))
    agg, checks = evaluate(cfg.scenario, cfg.params, raw)
    return {
        "scenario": cfg.scenario,
        "config": cfg.echo(),
        "raw": raw,
        "aggregate": agg,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "wall_clock_s": time.perf_counter() - start,
    }


def recheck(report: dict) -> list:
    """Recompute the checks of a saved report from its embedded raw rows."""
    cfg = report["config"]
    return evaluate(cfg["scenario"], cfg["params"], report["raw"])[1]


def write(report: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "raw.jsonl", "w") as f:
        for row in report["raw"]:
            f.write(json.dumps(row, sort_keys=True, default=to_json) + "\n")
    (out / "summary.json").write_text(json.dumps(report, indent=1, default=to_json))
