"""Randomized Markovian stopping policies.

At every visit to state ``i`` a fresh coin is tossed and the walk stops with
probability ``r_i``.  The maximal policy embedding mu is
``r_i = p_i / (p_i + g_i)`` where ``g_i`` is the expected number of visits to
``i`` that end with the walk moving on, and ``r_i = 1`` when
``p_i + g_i = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateMeasure, NoConvergenceWithinBudget, TruncationHorizon
from .measure import (
    DEFAULT_MAX_SITES,
    LatticeMeasure,
    LatticeTable,
    MixedGeometric,
    require_valid,
    truncate,
)

PROVENANCES = ("direct_formula", "truncation_limit", "closed_form_geometric")


@dataclass(frozen=True, eq=False)
class MarkovianPolicy:
    """Stop probabilities ``r`` on the sites ``lo..lo+len(r)-1``.

    Outside ``hull`` the walk always stops.  Sites inside the hull but
    outside the window have no computed rate; simulators report reaching
    them as a horizon event.
    """

    lo: int
    r: np.ndarray
    g: np.ndarray
    p: np.ndarray
    hull: tuple
    provenance: str
    tail_tol: float
    truncated_mass: float = 0.0
    r_exact: np.ndarray | None = field(default=None, repr=False)
    notes: tuple = ()

    @property
    def hi(self) -> int:
        return self.lo + len(self.r) - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    @property
    def bounded(self) -> bool:
        return all(math.isfinite(h) for h in self.hull)

    def rate(self, i: int) -> float:
        if i < self.hull[0] or i > self.hull[1]:
            return 1.0
        j = i - self.lo
        if 0 <= j < len(self.r):
            return float(self.r[j])
        raise TruncationHorizon(f"state {i} lies outside the policy window")

    def rates(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.rate(i) for i in range(lo, hi + 1)])

    def exact_rate(self, i: int):
        if self.r_exact is None:
            raise ValueError("policy was built in floating point")
        if i < self.hull[0] or i > self.hull[1]:
            return Fraction(1)
        return self.r_exact[i - self.lo]

    def perturbed(self, site: int, delta: float) -> "MarkovianPolicy":
        """Copy with ``r[site]`` shifted by ``delta`` and clipped to [0, 1]."""
        r = self.r.copy()
        j = site - self.lo
        r[j] = min(1.0, max(0.0, r[j] + delta))
        return MarkovianPolicy(self.lo, r, self.g, self.p, self.hull, self.provenance,
                               self.tail_tol, self.truncated_mass, None,
                               self.notes + (f"r[{site}] perturbed by {delta}",))


def g_values(lat: LatticeTable) -> np.ndarray:
    """Expected continuation counts ``g_i`` on the window of ``lat``.

    ``2 E[(S - i)^+]`` for ``i >= 0`` and ``2 E[(i - S)^+]`` for ``i <= 0``;
    both agree at 0 for a centered law.
    """
    y = lat.sites
    n = len(y)
    j = np.arange(n)
    right = 2 * (lat.moment_from[j + 1] - y * lat.tail_from[j + 1])
    left = 2 * (y * lat.cdf_before[j] - lat.moment_before[j])
    return np.where(y >= 0, right, left)


def _rates(p: np.ndarray, g: np.ndarray, exact: bool) -> np.ndarray:
    if exact:
        return np.array([Fraction(1) if pi + gi == 0 else Fraction(pi) / (pi + gi)
                         for pi, gi in zip(p, g)], dtype=object)
    denom = p + g
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 0, p / np.where(denom > 0, denom, 1.0), 1.0)
    return np.clip(r, 0.0, 1.0)


def build_policy(m: LatticeMeasure, tail_tol=None, max_sites=DEFAULT_MAX_SITES,
                 validate_tol=None) -> MarkovianPolicy:
    """Maximal Markovian policy embedding ``m``."""
    require_valid(m, **({} if validate_tol is None else
                        {"mass_tol": validate_tol, "mean_tol": validate_tol}))
    lat = m.table(tail_tol, max_sites)
    g = g_values(lat)
    r = _rates(lat.p, g, lat.exact)
    notes = ()
    if m.lower == 0 and m.upper == 0:
        notes = (DegenerateMeasure.__name__ + ": point mass at 0, the walk stops at once",)
    policy = MarkovianPolicy(
        lat.lo, r.astype(float), g.astype(float), lat.p.astype(float),
        (m.lower, m.upper), "direct_formula",
        m.tail_tol if tail_tol is None else tail_tol,
        lat.truncated_mass, r if lat.exact else None, notes)
    return policy


def geometric_policy(m: MixedGeometric, window=None) -> MarkovianPolicy:
    """Closed-form policy of a mixed geometric law (constant on each side)."""
    require_valid(m)
    lo, hi = m.window() if window is None else window
    qp, qm, gp, gm = m.q_plus, m.q_minus, m.gamma_plus, m.gamma_minus
    exact = m.exact
    one = Fraction(1) if exact else 1.0
    atom0 = 1 - gp - gm

    def side(q, gamma):
        return q * q / ((1 - q) ** 2 + 1) if gamma > 0 else one

    right, left = side(qp, gp), side(qm, gm)
    middle = atom0 / (atom0 + 2 * gp / qp) if atom0 + 2 * gp / qp > 0 else one
    r = np.array([right if i >= 1 else left if i <= -1 else middle
                  for i in range(lo, hi + 1)], dtype=object)
    # E[(S - i)^+] = g+ (1 - q+)^i / q+ for i >= 0, mirrored below 0
    g = np.array([float(2 * gp * (1 - qp) ** i / qp) if i >= 0
                  else float(2 * gm * (1 - qm) ** (-i) / qm)
                  for i in range(lo, hi + 1)])
    p = m.masses(lo, hi).astype(float)
    return MarkovianPolicy(lo, r.astype(float), g, p, (m.lower, m.upper),
                           "closed_form_geometric", m.tail_tol, 0.0,
                           r if exact else None)


@dataclass(frozen=True, eq=False)
class TruncationRun:
    """Outcome of :func:`policy_by_truncation`."""

    policy: MarkovianPolicy
    ns: tuple
    history: np.ndarray  # rows: r^n over the window, one per n in ns
    residuals: tuple     # max |r^n - r^{n-1}| over the window
    monotone: bool
    window: tuple


def _policy_on_window(tm, lo, hi, exact):
    meas = tm.as_measure()
    lat = meas.table()
    g = g_values(lat)
    r = _rates(lat.p, g, exact)
    out = np.empty(hi - lo + 1, dtype=object if exact else float)
    out[:] = Fraction(1) if exact else 1.0
    start = max(lo, lat.lo)
    stop = min(hi, lat.hi)
    if start <= stop:
        out[start - lo:stop - lo + 1] = r[start - lat.lo:stop - lat.lo + 1]
    return out


def policy_by_truncation(m: LatticeMeasure, tol: float = 1e-10, window=(-50, 50),
                         n_start: int = 1, n_max: int = 2000) -> TruncationRun:
    """Limit of the policies of the bounded truncations ``mu_n``.

    ``n`` increases until successive policies differ by less than ``tol`` on
    ``window`` at a step where both truncation endpoints moved.  Each site's sequence ``r_i^n`` is recorded once the site is
    strictly inside the truncated support, for the monotonicity check.
    """
    require_valid(m)
    lo, hi = window
    exact = m.exact
    if m.bounded:
        tm = truncate(m, max(n_start, int(m.upper)))
        r = _policy_on_window(tm, lo, hi, exact)
        policy = MarkovianPolicy(lo, r.astype(float), np.full(len(r), math.nan),
                                 m.masses(lo, hi).astype(float), (m.lower, m.upper),
                                 "truncation_limit", m.tail_tol, 0.0,
                                 r if exact else None)
        return TruncationRun(policy, (tm.n,), r.astype(float)[None, :], (0.0,), True, window)

    ns, rows, residuals, supports = [], [], [], []
    prev = None
    for n in range(n_start, n_max + 1):
        tm = truncate(m, n)
        row = _policy_on_window(tm, lo, hi, exact)
        ns.append(n)
        rows.append(row)
        supports.append((tm.a_n, tm.n))
        if prev is not None:
            res = float(np.max(np.abs((row - prev).astype(float))))
            residuals.append(res)
            # the left endpoint moves only every few n; a step that leaves it
            # in place says nothing about convergence on the left side
            moved = supports[-1][0] != supports[-2][0]
            inside = lo >= tm.a_n and hi <= tm.n
            if res < tol and inside and moved:
                break
        prev = row
    else:
        raise NoConvergenceWithinBudget(
            f"truncation did not converge by n = {n_max}",
            residual=residuals[-1] if residuals else None)

    monotone = _is_monotone(rows, supports, lo, exact)
    r = rows[-1]
    policy = MarkovianPolicy(lo, r.astype(float), np.full(len(r), math.nan),
                             m.masses(lo, hi).astype(float), (m.lower, m.upper),
                             "truncation_limit", tol, 0.0, r if exact else None)
    history = np.array([row.astype(float) for row in rows])
    return TruncationRun(policy, tuple(ns), history, tuple(residuals), monotone, window)


def _is_monotone(rows, supports, lo, exact) -> bool:
    """Every site's ``r_i^n`` is nonincreasing once strictly inside ``(a_n, n)``."""
    slack = 0 if exact else 1e-12
    for j in range(len(rows[0])):
        site = lo + j
        seq = [row[j] for row, (a, b) in zip(rows, supports) if a < site < b]
        if any(later > earlier + slack for earlier, later in zip(seq, seq[1:])):
            return False
    return True
