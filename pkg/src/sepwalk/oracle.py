"""Exact, sampling-free laws of the stopped walk under both rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .azema_yor import AySchedule
from .errors import SingularSystem
from .markovian import MarkovianPolicy
from .measure import LatticeMeasure


@dataclass(frozen=True, eq=False)
class StoppedLaw:
    """Law of ``S_tau`` (on ``lo..lo+len(q)-1``), running-maximum tails and ``E[tau]``.

    ``max_law[n] = P(max S >= n)`` for ``n = 0, 1, ...``.  ``error`` bounds the
    probability mass unaccounted for (walks leaving a truncated hull or
    reaching a maximum past the last computed level).
    """

    lo: int
    q: np.ndarray
    max_law: np.ndarray
    e_tau: float
    error: float = 0.0
    rule: str = ""
    arrivals: np.ndarray | None = field(default=None, repr=False)

    @property
    def hi(self) -> int:
        return self.lo + len(self.q) - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def prob(self, i: int) -> float:
        j = i - self.lo
        return float(self.q[j]) if 0 <= j < len(self.q) else 0.0

    def max_tail(self, n: int) -> float:
        if n <= 0:
            return 1.0
        return float(self.max_law[n]) if n < len(self.max_law) else 0.0

    def as_dict(self) -> dict:
        return {int(i): float(p) for i, p in zip(self.sites, self.q) if p != 0}

    @property
    def total(self) -> float:
        return math.fsum(self.q)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "law": [[int(i), float(p)] for i, p in zip(self.sites, self.q) if p != 0],
            "max_law": [float(v) for v in self.max_law],
            "e_tau": float(self.e_tau),
            "error": float(self.error),
        }


def tv_distance(law: StoppedLaw, m: LatticeMeasure, tail_tol=None) -> float:
    """Total variation between a stopped law and ``m``.

    Mass of ``m`` outside its materialized window counts in full.
    """
    lat = m.table(tail_tol)
    lo, hi = min(law.lo, lat.lo), max(law.hi, lat.hi)
    a = np.zeros(hi - lo + 1)
    b = np.zeros(hi - lo + 1)
    a[law.lo - lo:law.hi - lo + 1] = law.q
    b[lat.lo - lo:lat.hi - lo + 1] = lat.p.astype(float)
    return 0.5 * (math.fsum(np.abs(a - b)) + lat.truncated_mass)


def markovian_exact(p: MarkovianPolicy, hull=None) -> StoppedLaw:
    """Exact law of the walk stopped by the coin policy ``p``.

    Solves the expected-arrival balance ``a_i = [i = 0] + sum_{j = i +- 1}
    a_j (1 - r_j) / 2`` on ``hull`` (default: the support hull, or the
    policy window when the hull is infinite).  Stopping at ``i`` has
    probability ``r_i a_i``; walks stepping outside the hull are counted in
    ``error``.
    """
    if hull is None:
        lo = p.hull[0] if math.isfinite(p.hull[0]) else p.lo
        hi = p.hull[1] if math.isfinite(p.hull[1]) else p.hi
    else:
        lo, hi = hull
    lo, hi = int(lo), int(hi)
    if not lo <= 0 <= hi:
        raise ValueError("hull must contain the starting state 0")
    r = p.rates(lo, hi)
    cont = (1.0 - r) / 2.0
    n = hi - lo + 1
    ab = np.zeros((3, n))
    ab[0, 1:] = -cont[1:]   # a_{i+1} feeds i
    ab[1, :] = 1.0
    ab[2, :-1] = -cont[:-1]  # a_{i-1} feeds i
    rhs = np.zeros(n)
    rhs[-lo] = 1.0
    try:
        a = solve_banded((1, 1), ab, rhs)
    except (LinAlgError, ValueError) as exc:
        raise SingularSystem(f"arrival system is singular on [{lo}, {hi}]") from exc
    if not np.all(np.isfinite(a)) or np.any(a < -1e-9):
        raise SingularSystem(f"policy does not stop almost surely on [{lo}, {hi}]")
    q = r * a
    leak = cont[0] * a[0] + cont[-1] * a[-1]
    e_tau = math.fsum(a * (1.0 - r))
    return StoppedLaw(lo, q, _markovian_max_law(r, lo), e_tau, float(leak),
                      "markovian", a)


def _markovian_max_law(r: np.ndarray, lo: int) -> np.ndarray:
    """``P(max S >= n)`` by first-passage recursion.

    ``u_j`` is the chance of reaching ``j`` from a fresh visit to ``j - 1``:
    continue, then either step up, or step down, return to ``j - 1`` and try
    again, so ``u_j = c (1/2 + u_{j-1} u_j / 2)`` with ``c = 1 - r_{j-1}``.
    Below the hull the walk is absorbed.
    """
    hi = lo + len(r) - 1
    u = 0.0
    out = [1.0]
    reach = 1.0
    for j in range(lo + 1, hi + 2):
        c = 1.0 - r[j - 1 - lo]
        u = (c / 2.0) / (1.0 - c * u / 2.0)
        if j >= 1:
            reach *= u
            out.append(reach)
    return np.array(out)


def ay_exact(s: AySchedule) -> StoppedLaw:
    """Exact law under an Azema-Yor schedule, level by level.

    Given the maximum reaches ``n``, the walk stops at ``x_k`` with
    probability ``prod_{j<k} (1 - rho_j) rho_k / (n + 1 - x_k)`` (it must
    touch ``x_k`` before ``n + 1`` and pass all shallower coins).  The
    expected time spent at maximum ``n`` is ``sum_k surv_{k-1}
    (x_{k-1} - x_k)`` with ``x_0 = n``: each phase is a gambler's-ruin exit
    from ``(x_k, n + 1)`` started at ``x_{k-1}``.
    """
    one = 1.0
    masses: dict[int, float] = {}
    reach = [1.0]
    e_tau = 0.0
    for lv in s.levels:
        # float throughout, so a schedule read back from JSON gives the same law
        p_n = reach[-1]
        survive, prev, time, stopped = one, lv.n, 0.0, []
        for x, rho in zip(lv.x, map(float, lv.rho)):
            time += survive * (prev - x)
            sp = survive * rho / (lv.n + 1 - x)
            survive *= one - rho
            prev = x
            stopped.append(sp)
            masses[x] = masses.get(x, 0.0) + p_n * sp
        e_tau += p_n * time
        reach.append(p_n * (one - math.fsum(stopped)))
    error = float(s.horizon_mass) + sum(float(lv.tail_error) for lv in s.levels)
    if math.isfinite(s.xbar) and s.n_levels == int(s.xbar):
        masses[int(s.xbar)] = masses.get(int(s.xbar), 0.0) + reach[-1]
    elif s.n_levels:
        error = max(error, reach[-1])
    if not masses:  # point mass at 0
        masses[0] = 1.0
    lo, hi = min(masses), max(masses)
    q = np.zeros(hi - lo + 1)
    for x, v in masses.items():
        q[x - lo] += v
    return StoppedLaw(lo, q, np.array(reach), e_tau, error, "azema_yor")


def ui_profile(p: MarkovianPolicy, ks) -> np.ndarray:
    """Upper bounds on ``K P(sup |S| >= K)`` for the Markovian rule.

    Uniform integrability of the stopped walk means these go to 0.  The
    bound adds the maximum and minimum tails; both come from first-passage
    recursions on the policy window, the minimum one on the mirrored rates.
    """
    law = markovian_exact(p)
    r = p.rates(law.lo, law.hi)
    up = law.max_law
    down = _markovian_max_law(r[::-1].copy(), -law.hi)
    out = []
    for k in ks:
        hi_tail = float(up[k]) if k < len(up) else 0.0
        lo_tail = float(down[k]) if k < len(down) else 0.0
        out.append(k * (hi_tail + lo_tail))
    return np.array(out)


@dataclass(frozen=True)
class DominanceReport:
    ok: bool
    first_violation: int | None
    max_excess: float
    checked: int

    def to_dict(self):
        return {"ok": self.ok, "first_violation": self.first_violation,
                "max_excess": self.max_excess, "checked": self.checked}


def dominance_check(a: StoppedLaw, b: StoppedLaw, slack: float = 1e-12) -> DominanceReport:
    """Check ``P_a(max S >= n) <= P_b(max S >= n) + slack`` for every ``n``."""
    n = max(len(a.max_law), len(b.max_law))
    excess = np.array([a.max_tail(k) - b.max_tail(k) for k in range(n)])
    bad = np.flatnonzero(excess > slack)
    return DominanceReport(bad.size == 0, int(bad[0]) if bad.size else None,
                           float(excess.max(initial=0.0)), n)


def moments(m: LatticeMeasure, tail_tol=None):
    """``(sum |i| mu(i), sum i^2 mu(i))`` over the materialized window."""
    lat = m.table(tail_tol)
    y, p = lat.sites, lat.p
    return (sum(abs(y) * p), sum(y * y * p))
