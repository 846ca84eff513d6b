"""Seeded simulation of the stopped walk and goodness-of-fit statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .azema_yor import AySchedule
from .errors import ExcessCensoring
from .kernels import STATUS_CENSORED, STATUS_HORIZON, STATUS_STOPPED, backend_name, get_backend
from .markovian import MarkovianPolicy
from .measure import LatticeMeasure
from .oracle import StoppedLaw

Rule = Union[MarkovianPolicy, AySchedule]

DEFAULT_MAX_STEPS = 10 ** 7
DEFAULT_ALPHA = 1e-3
DEFAULT_TV_CONSTANT = 5.0
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class SimConfig:
    paths: int
    seed: int
    rule: Rule = field(repr=False)
    max_steps: int = DEFAULT_MAX_STEPS
    censor_limit: float = 0.0
    backend: str | None = None

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def rule_name(self) -> str:
        return "azema_yor" if isinstance(self.rule, AySchedule) else "markovian"


@dataclass(frozen=True)
class PathBatch:
    final: np.ndarray
    tau: np.ndarray
    maxs: np.ndarray
    status: np.ndarray


def run_paths(cfg: SimConfig) -> PathBatch:
    kern = get_backend(cfg.backend)
    if isinstance(cfg.rule, AySchedule):
        offsets, xs, rhos = cfg.rule.csr()
        out = kern.ay_paths(np.uint64(cfg.seed), cfg.paths, offsets, xs, rhos,
                            cfg.rule.xbar_int, cfg.max_steps)
    else:
        r = np.ascontiguousarray(cfg.rule.r, dtype=np.float64)
        out = kern.markov_paths(np.uint64(cfg.seed), cfg.paths, int(cfg.rule.lo), r,
                                cfg.max_steps)
    return PathBatch(*out)


@dataclass(frozen=True)
class SimReport:
    rule: str
    paths: int
    seed: int
    max_steps: int
    counts: dict          # final site -> number of stopped paths
    max_counts: dict      # observed running maximum -> number of stopped paths
    mean_tau: float
    mean_S: float
    std_S: float
    tv_vs_target: float
    chi2_p: float
    censored: int
    horizon: int
    flags: tuple = ()

    @property
    def completed(self) -> int:
        return self.paths - self.censored - self.horizon

    @property
    def empirical_law(self) -> dict:
        total = self.completed
        return {i: c / total for i, c in sorted(self.counts.items())} if total else {}

    @property
    def empirical_max_law(self) -> dict:
        """``n -> fraction of stopped paths with max S >= n``."""
        total = self.completed
        if not total:
            return {}
        top = max(self.max_counts)
        tail, out = 0, {}
        for n in range(top, -1, -1):
            tail += self.max_counts.get(n, 0)
            out[n] = tail / total
        return dict(sorted(out.items()))

    def raise_for_censoring(self):
        if any(f.startswith("ExcessCensoring") for f in self.flags):
            raise ExcessCensoring(f"{self.censored} of {self.paths} paths censored")
        return self

    def to_dict(self) -> dict:
        return {
            "rule": self.rule, "paths": self.paths, "seed": self.seed,
            "max_steps": self.max_steps,
            "empirical_law": [[i, p] for i, p in self.empirical_law.items()],
            "empirical_max_law": [[n, p] for n, p in self.empirical_max_law.items()],
            "counts": [[i, c] for i, c in sorted(self.counts.items())],
            "mean_tau": self.mean_tau, "mean_S": self.mean_S, "std_S": self.std_S,
            "tv_vs_target": self.tv_vs_target, "chi2_p": self.chi2_p,
            "censored": self.censored, "horizon": self.horizon, "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _reference(target) -> dict:
    """Site -> probability for a measure or an exact stopped law."""
    if isinstance(target, StoppedLaw):
        return {i: p for i, p in target.as_dict().items()}
    lat = target.table()
    return {int(i): float(p) for i, p in zip(lat.sites, lat.p) if p != 0}


def _tv(counts: dict, total: int, ref: dict) -> float:
    if not total:
        return math.nan
    sites = set(counts) | set(ref)
    diff = [abs(counts.get(i, 0) / total - ref.get(i, 0.0)) for i in sorted(sites)]
    missing = max(0.0, 1.0 - math.fsum(ref.values()))
    return 0.5 * (math.fsum(diff) + missing)


def _chi2_p(counts: dict, total: int, ref: dict) -> float:
    """Goodness of fit with sparse bins (expected < 5) pooled into one."""
    from scipy.stats import chisquare

    if not total:
        return math.nan
    obs, exp = [], []
    pooled_obs, pooled_exp = 0, 0.0
    for i in sorted(set(counts) | set(ref)):
        e = total * ref.get(i, 0.0)
        o = counts.get(i, 0)
        if e < MIN_EXPECTED:
            pooled_obs += o
            pooled_exp += e
        else:
            obs.append(o)
            exp.append(e)
    pooled_exp += total * max(0.0, 1.0 - math.fsum(ref.values()))
    if pooled_obs or pooled_exp:
        if pooled_exp == 0.0:
            return 0.0
        obs.append(pooled_obs)
        exp.append(pooled_exp)
    if len(obs) < 2:
        return 1.0
    exp = np.array(exp) * (total / math.fsum(exp))
    return float(chisquare(np.array(obs, dtype=float), exp).pvalue)


def summarize(cfg: SimConfig, batch: PathBatch, target) -> SimReport:
    done = batch.status == STATUS_STOPPED
    censored = int(np.count_nonzero(batch.status == STATUS_CENSORED))
    horizon = int(np.count_nonzero(batch.status == STATUS_HORIZON))
    total = int(np.count_nonzero(done))
    sites, c = np.unique(batch.final[done], return_counts=True)
    counts = {int(i): int(k) for i, k in zip(sites, c)}
    tops, c = np.unique(batch.maxs[done], return_counts=True)
    max_counts = {int(i): int(k) for i, k in zip(tops, c)}
    if total:
        # integer sums are exact, hence independent of summation order
        s_sum = int(batch.final[done].sum())
        s2_sum = int((batch.final[done] ** 2).sum())
        mean_s = s_sum / total
        var = max(0.0, (s2_sum - s_sum * s_sum / total) / max(1, total - 1))
        mean_tau = int(batch.tau[done].sum()) / total
    else:
        mean_s = var = mean_tau = math.nan
    ref = _reference(target)
    flags = []
    if censored / cfg.paths > cfg.censor_limit:
        flags.append(f"ExcessCensoring: {censored} of {cfg.paths} paths hit max_steps")
    if horizon:
        flags.append(f"Horizon: {horizon} paths left the computed rule")
    return SimReport(cfg.rule_name, cfg.paths, cfg.seed, cfg.max_steps, counts, max_counts,
                     mean_tau, mean_s, math.sqrt(var), _tv(counts, total, ref),
                     _chi2_p(counts, total, ref), censored, horizon, tuple(flags))


def simulate(cfg: SimConfig, target: LatticeMeasure | StoppedLaw) -> SimReport:
    """Simulate ``cfg.paths`` walks under ``cfg.rule`` and compare with ``target``."""
    return summarize(cfg, run_paths(cfg), target)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    chi2_p: float
    tv: float
    tv_threshold: float
    alpha: float

    def to_dict(self):
        return {"ok": self.ok, "chi2_p": self.chi2_p, "tv": self.tv,
                "tv_threshold": self.tv_threshold, "alpha": self.alpha}


def compare(report: SimReport, exact: StoppedLaw, alpha: float = DEFAULT_ALPHA,
            c: float = DEFAULT_TV_CONSTANT) -> Verdict:
    """Pass iff the chi-square p-value exceeds ``alpha`` and TV < ``c / sqrt(paths)``."""
    ref = _reference(exact)
    total = report.completed
    tv = _tv(report.counts, total, ref)
    p = _chi2_p(report.counts, total, ref)
    threshold = c / math.sqrt(report.paths)
    ok = bool(p > alpha and tv < threshold and report.censored == 0)
    return Verdict(ok, p, tv, threshold, alpha)


# --------------------------------------------------------------------------
# Step-by-step rules (reference implementations for tests and traces)


class MarkovRule:
    """Decides from the current state only; there is no path memory."""

    def __init__(self, policy: MarkovianPolicy):
        self._policy = policy

    def stops(self, state: int, u: float) -> bool:
        return u < self._policy.rate(state)


class AyRule:
    """Azema-Yor stopping decisions along an explicit path.

    ``coins(n, k)`` returns True for heads (continue).  Levels with
    ``rho = 1`` stop whatever the coin says.  Each coin is drawn at most
    once; a new maximum discards the coins of the previous level set.
    """

    def __init__(self, schedule: AySchedule, coins: Callable[[int, int], bool]):
        self.schedule = schedule
        self.coins = coins

    def stopping_time(self, path) -> int | None:
        """First index at which the rule stops along ``path`` (None if never)."""
        s = self.schedule
        n, k = path[0], 0
        for t, x in enumerate(path):
            if t and abs(x - path[t - 1]) != 1:
                raise ValueError("path must move by +-1")
            if x > n:
                n, k = x, 0
            if math.isfinite(s.xbar) and x >= s.xbar:
                return t
            lv = s.level(n)
            if k < len(lv.x) and x <= lv.x[k]:
                if lv.rho[k] == 1 or not self.coins(n, k):
                    return t
                k += 1
        return None


def tree_nodes(rule: Rule, depth: int):
    """Binomial-tree nodes up to ``depth`` steps, with the rule's decision at each.

    Rows are ``(node, parent, t, x, running_max, decision, bias)`` where the
    decision is ``stop``, ``continue`` or ``coin`` (stop iff the coin shows
    tails, which has probability ``bias``).  Children are expanded below
    every node that is not a sure stop; below a coin node the walk has
    continued, so an Azema-Yor coin is not tossed again at that level.
    """
    rows = []
    counter = iter(range(1 << 30))

    def decide(x, n, k):
        if isinstance(rule, MarkovianPolicy):
            return rule.rate(x), k
        if math.isfinite(rule.xbar) and x >= rule.xbar:
            return 1.0, k
        lv = rule.level(n)
        if k < len(lv.x) and x <= lv.x[k]:
            return float(lv.rho[k]), k + 1
        return 0.0, k

    def visit(parent, t, x, n, k):
        node = next(counter)
        bias, k_next = decide(x, n, k)
        kind = "stop" if bias == 1.0 else "continue" if bias == 0.0 else "coin"
        rows.append((node, parent, t, x, n, kind, bias))
        if kind == "stop" or t == depth:
            return
        for step in (1, -1):
            y = x + step
            if y > n:
                visit(node, t + 1, y, y, 0)
            else:
                visit(node, t + 1, y, n, k_next)

    visit(-1, 0, 0, 0, 0)
    return rows


def backend_in_use(name: str | None = None) -> str:
    return backend_name(name)
