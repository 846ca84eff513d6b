"""JSON and CSV encodings of policies, schedules, laws and reports."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction

import numpy as np

from .azema_yor import AySchedule, LevelSet
from .markovian import MarkovianPolicy
from .oracle import StoppedLaw


def _bound(v):
    return None if isinstance(v, float) and not math.isfinite(v) else int(v)


def _unbound(v, sign):
    return sign * math.inf if v is None else int(v)


def _num(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def policy_to_dict(p: MarkovianPolicy) -> dict:
    sites = [int(i) for i in p.sites]
    return {
        "r": [[i, float(v)] for i, v in zip(sites, p.r)],
        "g": [[i, float(v)] for i, v in zip(sites, p.g)],
        "p": [[i, float(v)] for i, v in zip(sites, p.p)],
        "hull": [_bound(p.hull[0]), _bound(p.hull[1])],
        "provenance": p.provenance,
        "tail_tol": p.tail_tol,
        "truncated_mass": p.truncated_mass,
        "notes": list(p.notes),
    }


def policy_from_dict(d: dict) -> MarkovianPolicy:
    r = sorted((int(i), float(v)) for i, v in d["r"])
    lo = r[0][0]
    if [i for i, _ in r] != list(range(lo, lo + len(r))):
        raise ValueError("policy sites must be consecutive integers")

    def column(key):
        vals = dict((int(i), float(v)) for i, v in d.get(key, []))
        return np.array([vals.get(i, math.nan) for i, _ in r])

    hull = d.get("hull", [None, None])
    return MarkovianPolicy(lo, np.array([v for _, v in r]), column("g"), column("p"),
                           (_unbound(hull[0], -1), _unbound(hull[1], 1)),
                           d.get("provenance", "direct_formula"),
                           float(d.get("tail_tol", 0.0)),
                           float(d.get("truncated_mass", 0.0)), None,
                           tuple(d.get("notes", ())))


def schedule_to_dict(s: AySchedule) -> dict:
    return {
        "xbar": _bound(s.xbar) if not isinstance(s.xbar, int) else s.xbar,
        "levels": {str(lv.n): [[int(x), float(r)] for x, r in zip(lv.x, lv.rho)]
                   for lv in s.levels},
        "diagnostics": {
            "Gamma": {str(lv.n): float(lv.gamma) for lv in s.levels},
            "f": {str(lv.n): [float(v) for v in lv.f] for lv in s.levels},
            "tail_error": {str(lv.n): lv.tail_error for lv in s.levels if lv.tail_error},
        },
        "horizon_mass": s.horizon_mass,
        "notes": list(s.notes),
    }


def schedule_from_dict(d: dict) -> AySchedule:
    diag = d.get("diagnostics", {})
    gammas, fs = diag.get("Gamma", {}), diag.get("f", {})
    errs = diag.get("tail_error", {})
    levels = []
    for key in sorted(d["levels"], key=int):
        pairs = d["levels"][key]
        levels.append(LevelSet(int(key), tuple(int(x) for x, _ in pairs),
                               tuple(float(r) for _, r in pairs),
                               float(gammas.get(key, math.nan)),
                               tuple(fs.get(key, ())), (), float(errs.get(key, 0.0))))
    if [lv.n for lv in levels] != list(range(len(levels))):
        raise ValueError("schedule levels must be 0, 1, 2, ...")
    xbar = d.get("xbar")
    return AySchedule(math.inf if xbar is None else int(xbar), tuple(levels), False,
                      float(d.get("horizon_mass", 0.0)), tuple(d.get("notes", ())))


def law_to_dict(law: StoppedLaw) -> dict:
    return law.to_dict()


def law_from_dict(d: dict) -> StoppedLaw:
    pairs = sorted((int(i), float(p)) for i, p in d["law"])
    lo, hi = pairs[0][0], pairs[-1][0]
    q = np.zeros(hi - lo + 1)
    for i, p in pairs:
        q[i - lo] = p
    return StoppedLaw(lo, q, np.array(d.get("max_law", [1.0]), dtype=float),
                      float(d.get("e_tau", math.nan)), float(d.get("error", 0.0)),
                      d.get("rule", ""))


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_num)


def write_text(text: str, path=None):
    if path is None or str(path) == "-":
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def policy_csv(p: MarkovianPolicy) -> str:
    return csv_text(["site", "r", "g", "p"],
                    [[int(i), repr(float(r)), repr(float(g)), repr(float(q))]
                     for i, r, g, q in zip(p.sites, p.r, p.g, p.p)])


def schedule_csv(s: AySchedule) -> str:
    return csv_text(["n", "k", "x", "rho"],
                    [[lv.n, k + 1, x, repr(float(r))]
                     for lv in s.levels for k, (x, r) in enumerate(zip(lv.x, lv.rho))])


def law_csv(law: StoppedLaw) -> str:
    return csv_text(["site", "prob"], [[i, repr(p)] for i, p in law.as_dict().items()])


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
