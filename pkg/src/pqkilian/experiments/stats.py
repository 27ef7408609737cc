"""Aggregates and one-sided 3-sigma checks used by every scenario."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

SIGMAS = 3.0


@dataclass
class Check:
    name: str
    value: float
    bound: float
    sigma: float
    relation: str  # "<=", ">=", "==" or "in"
    passed: bool
    # "bound": a stated guarantee; "derived": follows from one; "sanity": exact by construction
    tag: str = "derived"

    def to_dict(self) -> dict:
        return asdict(self)


def mean_se(xs: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(xs, dtype=float)
    if a.size == 0:
        return float("nan"), float("nan")
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return float(a.mean()), se


def describe(xs: Sequence[float]) -> dict:
    a = np.asarray(xs, dtype=float)
    m, se = mean_se(a)
    return {"n": int(a.size), "mean": m, "std": float(a.std(ddof=1)) if a.size > 1 else 0.0,
            "se": se, "ci3": [m - SIGMAS * se, m + SIGMAS * se]}


def at_most(name: str, xs, bound: float, tag: str = "derived") -> Check:
    m, se = mean_se(xs)
    return Check(name, m, bound, se, "<=", bool(m <= bound + SIGMAS * se), tag)


def at_least(name: str, xs, bound: float, tag: str = "derived") -> Check:
    m, se = mean_se(xs)
    return Check(name, m, bound, se, ">=", bool(m >= bound - SIGMAS * se), tag)


def frequency_at_most(name: str, events, bound: float, tag: str = "derived") -> Check:
    """Binomial version: the 3-sigma allowance uses the bound's own variance."""
    e = np.asarray(events, dtype=float)
    n = max(1, e.size)
    f = float(e.mean()) if e.size else 0.0
    b = min(max(bound, 0.0), 1.0)
    se = math.sqrt(b * (1 - b) / n)
    return Check(name, f, bound, se, "<=", bool(f <= bound + SIGMAS * se), tag)


def frequency_close_to(name: str, events, target: float, tag: str = "derived") -> Check:
    """Two-sided binomial check of an event frequency against an exact probability."""
    e = np.asarray(events, dtype=float)
    n = max(1, e.size)
    f = float(e.mean()) if e.size else 0.0
    se = math.sqrt(target * (1 - target) / n)
    return Check(name, f, target, se, "==", bool(abs(f - target) <= SIGMAS * se + 1e-12), tag)


def close_to(name: str, xs, target: float, tag: str = "derived") -> Check:
    m, se = mean_se(xs)
    return Check(name, m, target, se, "==", bool(abs(m - target) <= SIGMAS * se + 1e-12), tag)


def always(name: str, flags, tag: str = "sanity") -> Check:
    f = np.asarray(flags, dtype=bool)
    return Check(name, float(f.mean()) if f.size else 1.0, 1.0, 0.0, "==", bool(f.all()), tag)


def within(name: str, value: float, lo: float, hi: float, tag: str = "derived") -> Check:
    return Check(name, value, (lo + hi) / 2, (hi - lo) / 2, "in", bool(lo <= value <= hi), tag)
