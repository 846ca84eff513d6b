"""Randomized Azema-Yor drawdown schedules.

While the running maximum equals ``n`` the walk may stop at the levels
``x_1 > x_2 > ... > x_{m+1}`` (all at most ``n``).  On first touching ``x_k``
a coin with tails-probability ``rho_k`` decides whether to stop there; the
deepest level has ``rho = 1``.  A new maximum installs the next level set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateMeasure, TruncationHorizon
from .measure import (
    DEFAULT_MAX_SITES,
    NEG_INF,
    BarycenterTable,
    LatticeMeasure,
    barycenter,
    hl_bound,
    require_valid,
)

DEFAULT_MAX_LEVELS = 1024


@dataclass(frozen=True)
class LevelSet:
    """Stop levels and coin biases while the running maximum is ``n``."""

    n: int
    x: tuple      # descending
    rho: tuple
    gamma: object  # probability of ever reaching the maximum n
    f: tuple      # f_0 = 1, f_1, ..., f_{m+1}
    g: tuple      # g_2, ..., g_{m+1}
    tail_error: float = 0.0  # mass beyond the last listed level (n = 0 only)

    @property
    def m(self) -> int:
        return len(self.x) - 1


@dataclass(frozen=True, eq=False)
class AySchedule:
    xbar: object
    levels: tuple
    exact: bool
    horizon_mass: float = 0.0  # P(reaching a maximum beyond the last level)
    notes: tuple = ()
    barycenter: BarycenterTable | None = field(default=None, repr=False)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> LevelSet:
        return self.levels[n]

    @property
    def tail_error(self) -> float:
        return sum(float(lv.tail_error) for lv in self.levels) + float(self.horizon_mass)

    def csr(self):
        """Flat arrays for the simulation kernels.

        Returns ``(offsets, xs, rhos)``: level ``n`` owns
        ``xs[offsets[n]:offsets[n+1]]``.
        """
        counts = [len(lv.x) for lv in self.levels]
        offsets = np.zeros(len(counts) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(counts)
        xs = np.array([x for lv in self.levels for x in lv.x], dtype=np.int64)
        rhos = np.array([float(r) for lv in self.levels for r in lv.rho], dtype=np.float64)
        return offsets, xs, rhos

    @property
    def xbar_int(self) -> int:
        """``xbar`` for kernels; -1 sentinel when unbounded above."""
        return int(self.xbar) if math.isfinite(self.xbar) else -1


def _atom_range(t: BarycenterTable, n: int):
    """Indices (into the atom arrays) of the level set at maximum ``n``."""
    b = t.inverse(n)
    tol = t._tol(n + 1)
    # atoms a < xbar, a <= n, psi(a) <= n + 1 whose psi-interval meets [n, n+1]
    j_hi = int(np.searchsorted(t.psi_left, n + 1 + tol, side="right")) - 1
    j_hi = min(j_hi, int(np.searchsorted(t.breakpoints, n, side="right")) - 1)
    if t.psi_beyond is not None and j_hi == len(t.breakpoints) - 1 and t.psi_beyond <= n + 1 + tol:
        raise TruncationHorizon(f"level set {n} reaches beyond the window")
    if b == NEG_INF:
        j_lo = 0
    else:
        j_lo = t.atom_index(b)
    return j_lo, j_hi, b


def level_sets(t: BarycenterTable, max_levels: int = DEFAULT_MAX_LEVELS):
    """Descending level lists for ``n = 0, 1, ...`` below ``xbar``.

    For a law unbounded below the ``n = 0`` list is the whole (countable)
    set of atoms below ``x^0_1``; it is cut at the materialized window.
    """
    out = {}
    n = 0
    while n < t.xbar and n < max_levels:
        try:
            j_lo, j_hi, _ = _atom_range(t, n)
        except TruncationHorizon:
            break
        out[n] = [int(x) for x in t.breakpoints[j_lo:j_hi + 1][::-1]]
        n += 1
    return out


def level_sets_on_grid(t: BarycenterTable, n: int, points: int = 2000):
    """Level set at ``n`` from a dense rational grid of ``b`` over ``[n, n+1]``.

    Independent of :func:`level_sets`; used to cross-check it.  Grid points
    include every exact value of ``psi`` at an atom inside ``[n, n+1]`` so
    that jumps are not stepped over.
    """
    grid = {Fraction(n) + Fraction(i, points) for i in range(points + 1)}
    grid.update(Fraction(v) for v in t.psi_left if n <= v <= n + 1)
    values = set()
    for y in sorted(grid):
        b = t.inverse(y)
        if b != NEG_INF and b <= n:
            values.add(int(b))
    return sorted(values, reverse=True)


def _level(t: BarycenterTable, n: int, tail_tol: float) -> LevelSet:
    j_lo, j_hi, b = _atom_range(t, n)
    idx = list(range(j_hi, j_lo - 1, -1))
    xs = [t.breakpoints[j] for j in idx]
    mass = [t.mass[j] for j in idx]
    one = Fraction(1) if t.exact else 1.0
    zero = one - one
    if b == NEG_INF:
        return _level_countable(t, xs, mass, tail_tol, one, zero)
    jb = idx[-1]
    barmu, psi = t.barmu[jb], t.psi_left[jb]
    gamma = barmu * (psi - b) / (n - b)
    g = [(n + 1 - x) * w / gamma for x, w in zip(xs[1:-1], mass[1:-1])]
    if len(xs) > 1:
        g.append((n + 1 - b) / gamma * (mass[-1] - barmu * (n - psi) / (n - b)))
    m = len(xs) - 1
    f = [zero] * (m + 2)
    f[0] = one
    # f_{m+1} = 0, f_k = f_{k+1} + g_{k+1}; g[k-2] holds g_k
    for k in range(m, 0, -1):
        f[k] = f[k + 1] + g[k - 1]
    rho = [one - f[k] / f[k - 1] for k in range(1, m + 1)] + [one]
    return LevelSet(n, tuple(int(x) for x in xs), tuple(rho), gamma, tuple(f), tuple(g))


def _level_countable(t, xs, mass, tail_tol, one, zero):
    """``n = 0`` for a law unbounded below: ``f_k`` are tail sums of ``(1-x) mu(x)``."""
    lat = t.lattice
    # sum over atoms below the window of (1 - y) mu(y)
    remainder = lat.below[0] - lat.below[1]
    g = [(1 - x) * w for x, w in zip(xs[1:], mass[1:])]
    tails = [zero] * (len(g) + 1)
    acc = remainder
    for i in range(len(g) - 1, -1, -1):
        acc = acc + g[i]
        tails[i] = acc
    # tails[i] = f_{i+1}; f_k = sum_{i > k} g_i
    f = [one] + [tails[k] for k in range(len(g))] + [remainder]
    rho, cut = [], len(xs)
    for k in range(1, len(xs) + 1):
        if f[k] < tail_tol or k == len(xs):
            cut = k
            break
        rho.append(one - f[k] / f[k - 1])
    rho.append(one)
    xs_out = [int(x) for x in xs[:cut]]
    err = float(f[cut]) if cut < len(f) else 0.0
    return LevelSet(0, tuple(xs_out), tuple(rho), one, tuple(f[:cut] + [zero]),
                    tuple(g[:cut - 1]), tail_error=err)


def build_schedule(m: LatticeMeasure, tail_tol=None, max_sites=DEFAULT_MAX_SITES,
                   max_levels: int = DEFAULT_MAX_LEVELS) -> AySchedule:
    """Drawdown levels and coin biases for every running maximum below ``xbar``."""
    require_valid(m)
    tol = m.tail_tol if tail_tol is None else tail_tol
    t = barycenter(m, tail_tol, max_sites)
    if m.lower == 0 and m.upper == 0:
        return AySchedule(0, (), t.exact,
                          notes=(DegenerateMeasure.__name__ + ": point mass at 0",),
                          barycenter=t)
    levels = []
    n = 0
    horizon_mass = 0.0
    while n < t.xbar:
        if n >= max_levels:
            horizon_mass = float(hl_bound(t, n))
            break
        try:
            levels.append(_level(t, n, tol))
        except TruncationHorizon:
            horizon_mass = float(hl_bound(t, n)) if t.resolvable(n) else float(t.lattice.above[0])
            break
        n += 1
    return AySchedule(t.xbar, tuple(levels), t.exact, horizon_mass, barycenter=t)


def reach_probabilities(s: AySchedule):
    """``P(max S >= n)`` for ``n = 0..n_levels`` from the coin biases alone."""
    one = Fraction(1) if s.exact else 1.0
    out = [one]
    for lv in s.levels:
        stop = _stop_probabilities(lv, one)
        out.append(out[-1] * (one - sum(stop, one - one)))
    return out


def _stop_probabilities(lv: LevelSet, one):
    """``P(stop at x_k | the maximum reaches n)`` for each level."""
    survive = one
    probs = []
    for x, rho in zip(lv.x, lv.rho):
        probs.append(survive * rho / (lv.n + 1 - x))
        survive = survive * (one - rho)
    return probs


def ay_max_law(s: AySchedule, t: BarycenterTable, n: int):
    """``P(max S >= n)`` under the schedule, from the coin recursion."""
    if n <= 0:
        return 1 if s.exact else 1.0
    if n > s.n_levels:
        if n > t.xbar:
            return 0 if s.exact else 0.0
        raise TruncationHorizon(f"schedule has only {s.n_levels} levels")
    return reach_probabilities(s)[n]
