"""Centered probability measures on the integers.

Three families are supported: explicit atoms, the two-sided mixed geometric
law and the casino (CPT) law.  A measure is materialized on a finite window
of sites as a :class:`LatticeTable`.  Mass and first moment beyond the window
are carried analytically, so tail functionals such as ``mu([x, oo))`` or
``E[(S - x)^+]`` are exact inside the window rather than truncated sums.

Atom measures given with ``int``/``Fraction`` masses (and mixed geometric
measures with rational parameters) are handled in exact rational arithmetic;
everything else uses float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import ClassVar, Iterable, Union

import numpy as np

from .errors import (
    InfiniteFirstMoment,
    MassDeficit,
    MeasureError,
    NoConvergenceWithinBudget,
    NonCentered,
    TruncationHorizon,
)

Number = Union[int, float, Fraction]

NEG_INF = -math.inf
"""Value of ``b_mu(0)`` for measures unbounded below."""

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_MAX_SITES = 1 << 20
DEFAULT_VALIDATION_TOL = 2e-3


def _number(x) -> Number:
    if isinstance(x, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(x, (int, Fraction, float)):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    raise TypeError(f"cannot interpret {x!r} as a probability")


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _sum(values, exact: bool):
    if exact:
        return sum(values, Fraction(0))
    return math.fsum(float(v) for v in values)


class LatticeMeasure:
    """Interface shared by all measure families.

    Subclasses are frozen dataclasses, hence hashable and immutable.
    """

    kind: ClassVar[str] = "abstract"
    tail_tol: float

    @property
    def exact(self) -> bool:
        return False

    @property
    def lower(self):
        """Infimum of the support (an int, or ``-inf``)."""
        raise NotImplementedError

    @property
    def upper(self):
        """Supremum of the support (an int, or ``inf``)."""
        raise NotImplementedError

    def pmf(self, i: int) -> Number:
        raise NotImplementedError

    def masses(self, lo: int, hi: int) -> np.ndarray:
        """Masses of the sites ``lo..hi`` (inclusive)."""
        return np.array([self.pmf(i) for i in range(lo, hi + 1)],
                        dtype=object if self.exact else float)

    def upper_remainder(self, h: int):
        """``(mu([h, oo)), sum_{y >= h} y mu(y))`` for measures unbounded above."""
        raise NotImplementedError

    def lower_remainder(self, l: int):
        """``(mu((-oo, l]), sum_{y <= l} y mu(y))`` for measures unbounded below."""
        raise NotImplementedError

    def raw_moments(self):
        """Total mass, mean and first absolute moment of the pmf as given."""
        raise NotImplementedError

    def window(self, tail_tol=None, max_sites=DEFAULT_MAX_SITES):
        raise NotImplementedError

    def reflect(self) -> "LatticeMeasure":
        return Reflected(self)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def table(self, tail_tol=None, max_sites=DEFAULT_MAX_SITES) -> "LatticeTable":
        return _build_table(self, tail_tol, max_sites)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)


# --------------------------------------------------------------------------
# Families


@dataclass(frozen=True)
class AtomMeasure(LatticeMeasure):
    """Finitely supported measure given by ``(site, mass)`` pairs."""

    atoms: tuple
    tail_tol: float = DEFAULT_TAIL_TOL
    kind: ClassVar[str] = "atoms"

    def __post_init__(self):
        merged: dict[int, Number] = {}
        for site, mass in self.atoms:
            if int(site) != site:
                raise MeasureError(f"site {site!r} is not an integer")
            mass = _number(mass)
            if mass < 0:
                raise MeasureError(f"negative mass {mass} at site {site}")
            merged[int(site)] = merged.get(int(site), 0) + mass
        atoms = tuple(sorted((s, m) for s, m in merged.items() if m != 0))
        if not atoms:
            raise MassDeficit("measure has no positive atoms")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_mapping(cls, mapping, tail_tol=DEFAULT_TAIL_TOL) -> "AtomMeasure":
        return cls(tuple(mapping.items()), tail_tol)

    @cached_property
    def _lookup(self):
        return dict(self.atoms)

    @property
    def exact(self) -> bool:
        return all(_is_exact(m) for _, m in self.atoms)

    @property
    def lower(self):
        return self.atoms[0][0]

    @property
    def upper(self):
        return self.atoms[-1][0]

    def pmf(self, i):
        return self._lookup.get(i, 0)

    def raw_moments(self):
        ms = [m for _, m in self.atoms]
        total = _sum(ms, self.exact)
        mean = _sum((s * m for s, m in self.atoms), self.exact)
        absm = _sum((abs(s) * m for s, m in self.atoms), self.exact)
        return total, mean, absm

    def window(self, tail_tol=None, max_sites=DEFAULT_MAX_SITES):
        return self.lower, self.upper

    def reflect(self):
        return AtomMeasure(tuple((-s, m) for s, m in self.atoms), self.tail_tol)

    def to_dict(self):
        def enc(m):
            return str(m) if isinstance(m, Fraction) else m
        return {"type": "atoms", "atoms": [[s, enc(m)] for s, m in self.atoms],
                "tail_tol": self.tail_tol}


@dataclass(frozen=True)
class MixedGeometric(LatticeMeasure):
    """Geometric tails on both sides of an atom at 0.

    ``mu(n) = g+ q+ (1-q+)^(n-1)`` for ``n >= 1``, ``1 - g+ - g-`` at 0 and
    ``g- q- (1-q-)^(-n-1)`` for ``n <= -1``.  Centered iff ``g+/q+ == g-/q-``.
    """

    gamma_plus: Number
    q_plus: Number
    gamma_minus: Number
    q_minus: Number
    tail_tol: float = DEFAULT_TAIL_TOL
    kind: ClassVar[str] = "mixed_geometric"

    def __post_init__(self):
        for name in ("gamma_plus", "q_plus", "gamma_minus", "q_minus"):
            object.__setattr__(self, name, _number(getattr(self, name)))

    @property
    def exact(self):
        return all(_is_exact(v) for v in
                   (self.gamma_plus, self.q_plus, self.gamma_minus, self.q_minus))

    @property
    def lower(self):
        return NEG_INF if self.gamma_minus > 0 else 0

    @property
    def upper(self):
        return math.inf if self.gamma_plus > 0 else 0

    def pmf(self, i):
        if i >= 1:
            return self.gamma_plus * self.q_plus * (1 - self.q_plus) ** (i - 1)
        if i <= -1:
            return self.gamma_minus * self.q_minus * (1 - self.q_minus) ** (-i - 1)
        return 1 - self.gamma_plus - self.gamma_minus

    def masses(self, lo, hi):
        if self.exact:
            return super().masses(lo, hi)
        sites = np.arange(lo, hi + 1)
        out = np.zeros(sites.size)
        gp, qp, gm, qm = map(float, (self.gamma_plus, self.q_plus,
                                     self.gamma_minus, self.q_minus))
        pos, neg = sites >= 1, sites <= -1
        out[pos] = gp * qp * (1 - qp) ** (sites[pos] - 1)
        out[neg] = gm * qm * (1 - qm) ** (-sites[neg] - 1)
        out[sites == 0] = 1 - gp - gm
        return out

    def upper_remainder(self, h):
        if h < 1:
            raise ValueError("upper remainder is only defined past the atom at 0")
        q = self.q_plus
        mass = self.gamma_plus * (1 - q) ** (h - 1)
        return mass, mass * (h + (1 - q) / q)

    def lower_remainder(self, l):
        if l > -1:
            raise ValueError("lower remainder is only defined below the atom at 0")
        q = self.q_minus
        mass = self.gamma_minus * (1 - q) ** (-l - 1)
        return mass, -mass * (-l + (1 - q) / q)

    def raw_moments(self):
        gp, qp, gm, qm = self.gamma_plus, self.q_plus, self.gamma_minus, self.q_minus
        total = (1 - gp - gm) + gp + gm
        return total, gp / qp - gm / qm, gp / qp + gm / qm

    def window(self, tail_tol=None, max_sites=DEFAULT_MAX_SITES):
        tol = self.tail_tol if tail_tol is None else tail_tol
        half = max(1, (max_sites - 1) // 2)

        def reach(gamma, q):
            if gamma <= 0:
                return 0
            # smallest h whose remainder beyond h has first absolute moment below
            # tol: gamma (1-q)^h (h + 1/q) < tol
            gamma, q = float(gamma), float(q)
            h = max(1, math.ceil(math.log(tol / gamma) / math.log(1 - q)))
            while h < half and gamma * (1 - q) ** h * (h + 1 + 1 / q) >= tol:
                h += 1
            return min(h, half)

        return -reach(self.gamma_minus, self.q_minus), reach(self.gamma_plus, self.q_plus)

    def reflect(self):
        return MixedGeometric(self.gamma_minus, self.q_minus, self.gamma_plus,
                              self.q_plus, self.tail_tol)

    def to_dict(self):
        def enc(v):
            return str(v) if isinstance(v, Fraction) else v
        return {"type": "mixed_geometric", "gamma_plus": enc(self.gamma_plus),
                "q_plus": enc(self.q_plus), "gamma_minus": enc(self.gamma_minus),
                "q_minus": enc(self.q_minus), "tail_tol": self.tail_tol}


# Casino law constants, as printed (4 decimals).
CASINO_SCALE = 0.4465
CASINO_P1 = 0.3297
CASINO_PM1 = 0.6216
_CASINO_ALPHA = 0.6
_CASINO_POWER = 10.0 / 3.0
_EM_HEAD = 1 << 16


def _casino_d(k):
    """``(k^a - (k-1)^a)^(10/3)`` evaluated without cancellation."""
    k = np.asarray(k, dtype=float)
    inner = k ** _CASINO_ALPHA * -np.expm1(_CASINO_ALPHA * np.log1p(-1.0 / k))
    return inner ** _CASINO_POWER


def _casino_d_prime(k):
    k = float(k)
    h = k ** _CASINO_ALPHA * -math.expm1(_CASINO_ALPHA * math.log1p(-1.0 / k))
    hp = _CASINO_ALPHA * (k ** (_CASINO_ALPHA - 1) - (k - 1) ** (_CASINO_ALPHA - 1))
    return _CASINO_POWER * h ** (_CASINO_POWER - 1) * hp


@lru_cache(maxsize=64)
def casino_tail_sum(j: int) -> float:
    """``sum_{k >= j} d_k`` for the casino increments ``d_k``.

    The series decays like ``k^(-4/3)``; the head is summed directly and the
    remainder from ``M`` on is the Euler-Maclaurin integral plus the first
    two boundary corrections (next term is below 1e-20 for ``M = 2^16``).
    """
    from scipy.integrate import quad

    if j < 2:
        raise ValueError("casino increments start at k = 2")
    m = max(_EM_HEAD, j)
    head = float(np.sum(_casino_d(np.arange(j, m, dtype=float))[::-1]))
    # substitute x = u^-3 so the integrand is bounded on (0, M^-1/3]
    integral, _ = quad(lambda u: 3.0 * float(_casino_d(u ** -3.0)) * u ** -4.0,
                       0.0, m ** (-1.0 / 3.0), epsabs=1e-17, epsrel=1e-13, limit=200)
    return head + integral + float(_casino_d(m)) / 2 - _casino_d_prime(m) / 12


@dataclass(frozen=True)
class CasinoCPT(LatticeMeasure):
    """Exit law of the CPT casino gambler with typical parameters.

    The printed constants are rounded, so the printed pmf has total mass
    about 1.0004 and mean about -3e-4.  Two readings are offered:

    ``as_printed``
        pmf exactly as printed.  The law is treated as a centered
        probability measure whose unbounded upper tail is pinned by
        normalization and centering: tail functionals at ``h`` are
        ``1 - mu((-oo, h))`` and ``-sum_{y<h} y mu(y)``.  This only stays a
        valid measure up to a finite horizon (about site 52), which caps
        the window.
    ``recentered``
        the mass at -1 is replaced by the upper first moment and the whole
        pmf renormalized; an exactly centered probability measure.
    """

    mode: str = "as_printed"
    tail_tol: float = DEFAULT_TAIL_TOL
    kind: ClassVar[str] = "casino_cpt"
    MODES: ClassVar[tuple] = ("as_printed", "recentered")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ValueError(f"unknown casino mode {self.mode!r}")

    @cached_property
    def _constants(self):
        d2 = float(_casino_d(2))
        if self.mode == "as_printed":
            return CASINO_PM1, 1.0
        m1 = CASINO_P1 + CASINO_SCALE * (d2 + casino_tail_sum(2))
        total = m1 + CASINO_P1 + CASINO_SCALE * d2
        return m1 / total, 1.0 / total

    @property
    def lower(self):
        return -1

    @property
    def upper(self):
        return math.inf

    def pmf(self, i):
        m1, s = self._constants
        if i == -1:
            return m1
        if i == 1:
            return CASINO_P1 * s
        if i >= 2:
            return CASINO_SCALE * s * float(_casino_d(i) - _casino_d(i + 1))
        return 0.0

    def masses(self, lo, hi):
        m1, s = self._constants
        sites = np.arange(lo, hi + 1)
        out = np.zeros(sites.size)
        big = sites >= 2
        if big.any():
            d = _casino_d(np.arange(max(lo, 2), hi + 2, dtype=float))
            out[big] = CASINO_SCALE * s * (d[:-1] - d[1:])
        out[sites == 1] = CASINO_P1 * s
        out[sites == -1] = m1
        return out

    def _printed_below(self, h):
        """Mass and first moment of the pmf on ``[-1, h)``."""
        p = self.masses(-1, h - 1)
        y = np.arange(-1, h)
        return math.fsum(p), math.fsum(y * p)

    def upper_remainder(self, h):
        if h < 2:
            raise ValueError("upper remainder is only defined from site 2")
        if self.mode == "as_printed":
            mass, moment = self._printed_below(h)
            return 1.0 - mass, -moment
        _, s = self._constants
        dh = float(_casino_d(h))
        return CASINO_SCALE * s * dh, CASINO_SCALE * s * (h * dh + casino_tail_sum(h + 1))

    def raw_moments(self):
        m1, s = self._constants
        d2 = float(_casino_d(2))
        upper_mass = CASINO_P1 * s + CASINO_SCALE * s * d2
        upper_moment = CASINO_P1 * s + CASINO_SCALE * s * (d2 + casino_tail_sum(2))
        return m1 + upper_mass, upper_moment - m1, upper_moment + m1

    @cached_property
    def horizon(self):
        """Last site up to which the as-printed closure is a valid measure."""
        if self.mode != "as_printed":
            return None
        h_max = 512
        p = self.masses(-1, h_max)
        y = np.arange(-1, h_max + 1)
        # closure remainder for sites > h, h = -1..h_max
        rest_mass = 1.0 - np.cumsum(p)
        rest_moment = -np.cumsum(y * p)
        ok = (rest_mass > 0) & (rest_moment > (y + 1) * rest_mass)
        bad = np.flatnonzero(~ok[3:])  # h >= 2
        return int(y[3 + bad[0]] - 1) if bad.size else h_max

    def window(self, tail_tol=None, max_sites=DEFAULT_MAX_SITES):
        tol = self.tail_tol if tail_tol is None else tail_tol
        _, s = self._constants
        # d_k ~ a^(10/3) k^(-4/3): first guess, then walk to the exact cut
        lead = CASINO_SCALE * s * _CASINO_ALPHA ** _CASINO_POWER
        h = max(2, int((lead / tol) ** 0.75))
        cap = max_sites - 2
        h = min(h, cap)
        while h > 2 and CASINO_SCALE * s * float(_casino_d(h)) < tol:
            h -= 1
        while h < cap and CASINO_SCALE * s * float(_casino_d(h + 1)) >= tol:
            h += 1
        if self.horizon is not None:
            h = min(h, self.horizon)
        return -1, h

    def to_dict(self):
        return {"type": "casino_cpt", "mode": self.mode, "tail_tol": self.tail_tol}


@dataclass(frozen=True)
class Reflected(LatticeMeasure):
    """The law of ``-X`` for ``X ~ base``."""

    base: LatticeMeasure
    kind: ClassVar[str] = "reflected"

    @property
    def tail_tol(self):
        return self.base.tail_tol

    @property
    def exact(self):
        return self.base.exact

    @property
    def lower(self):
        return -self.base.upper

    @property
    def upper(self):
        return -self.base.lower

    def pmf(self, i):
        return self.base.pmf(-i)

    def masses(self, lo, hi):
        return self.base.masses(-hi, -lo)[::-1].copy()

    def upper_remainder(self, h):
        mass, moment = self.base.lower_remainder(-h)
        return mass, -moment

    def lower_remainder(self, l):
        mass, moment = self.base.upper_remainder(-l)
        return mass, -moment

    def raw_moments(self):
        total, mean, absm = self.base.raw_moments()
        return total, -mean, absm

    def window(self, tail_tol=None, max_sites=DEFAULT_MAX_SITES):
        lo, hi = self.base.window(tail_tol, max_sites)
        return -hi, -lo

    def reflect(self):
        return self.base

    def to_dict(self):
        return {"type": "reflected", "of": self.base.to_dict()}


# --------------------------------------------------------------------------
# Materialization


@dataclass(frozen=True, eq=False)
class LatticeTable:
    """A measure on the window ``lo..hi`` plus analytic remainders.

    ``below``/``above`` hold ``(mass, first moment)`` of the sites outside
    the window; they are zero on a bounded side.
    """

    lo: int
    p: np.ndarray
    below: tuple
    above: tuple
    lower: object
    upper: object
    exact: bool

    @property
    def hi(self) -> int:
        return self.lo + len(self.p) - 1

    @cached_property
    def sites(self) -> np.ndarray:
        s = np.arange(self.lo, self.hi + 1)
        return s.astype(object) if self.exact else s

    @cached_property
    def _cumulative(self):
        p, y = self.p, self.sites
        yp = y * p
        zero = Fraction(0) if self.exact else 0.0
        dtype = object if self.exact else float

        def prefix(v, start):
            out = np.empty(len(v) + 1, dtype=dtype)
            out[0] = zero
            out[1:] = np.cumsum(v)
            return out + start

        def suffix(v, end):
            out = np.empty(len(v) + 1, dtype=dtype)
            out[-1] = zero
            out[:-1] = np.cumsum(v[::-1])[::-1]
            return out + end

        return (prefix(p, self.below[0]), prefix(yp, self.below[1]),
                suffix(p, self.above[0]), suffix(yp, self.above[1]))

    @property
    def cdf_before(self) -> np.ndarray:
        """``mu((-oo, lo + j))`` for ``j = 0..N``."""
        return self._cumulative[0]

    @property
    def moment_before(self) -> np.ndarray:
        return self._cumulative[1]

    @property
    def tail_from(self) -> np.ndarray:
        """``mu([lo + j, oo))`` for ``j = 0..N`` (``j = N`` is the remainder)."""
        return self._cumulative[2]

    @property
    def moment_from(self) -> np.ndarray:
        return self._cumulative[3]

    def _index(self, x, bounded_side_ok=True):
        j = int(x) - self.lo
        n = len(self.p)
        if j < 0:
            if self.below[0] == 0 and bounded_side_ok:
                return 0
            raise TruncationHorizon(f"site {x} lies below the window [{self.lo}, {self.hi}]")
        if j > n:
            if self.above[0] == 0 and bounded_side_ok:
                return n
            raise TruncationHorizon(f"site {x} lies above the window [{self.lo}, {self.hi}]")
        return j

    def tail(self, x):
        """``mu([x, oo))`` for integer ``x``."""
        return self.tail_from[self._index(x)]

    def upper_moment(self, x):
        """``sum_{y >= x} y mu(y)``."""
        return self.moment_from[self._index(x)]

    def cdf(self, x):
        """``mu((-oo, x])``."""
        return self.cdf_before[self._index(x + 1)]

    def lower_moment(self, x):
        return self.moment_before[self._index(x + 1)]

    def mass(self, x):
        j = int(x) - self.lo
        if 0 <= j < len(self.p):
            return self.p[j]
        if (j < 0 and self.below[0] == 0) or (j >= len(self.p) and self.above[0] == 0):
            return 0
        raise TruncationHorizon(f"site {x} outside the window")

    @property
    def total(self):
        return self.tail_from[0] + self.below[0]

    @property
    def truncated_mass(self):
        return float(self.below[0]) + float(self.above[0])


@lru_cache(maxsize=128)
def _build_table(measure: LatticeMeasure, tail_tol, max_sites) -> LatticeTable:
    lo, hi = measure.window(tail_tol, max_sites)
    p = measure.masses(lo, hi)
    zero = Fraction(0) if measure.exact else 0.0
    below = (zero, zero) if lo <= measure.lower else measure.lower_remainder(lo - 1)
    above = (zero, zero) if hi >= measure.upper else measure.upper_remainder(hi + 1)
    return LatticeTable(lo, p, below, above, measure.lower, measure.upper, measure.exact)


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class ValidationReport:
    total_mass: float
    mean: float
    abs_moment: float
    lower: object
    upper: object
    problems: tuple = ()
    notes: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def raise_for_status(self):
        if self.problems:
            cls, message = self.problems[0]
            raise cls(message)
        return self

    def to_dict(self):
        def enc(v):
            return None if isinstance(v, float) and not math.isfinite(v) else v
        return {"ok": self.ok, "total_mass": self.total_mass, "mean": self.mean,
                "abs_moment": self.abs_moment, "lower": enc(self.lower),
                "upper": enc(self.upper),
                "problems": [f"{c.__name__}: {m}" for c, m in self.problems],
                "notes": list(self.notes)}


def validate(m: LatticeMeasure, mass_tol=DEFAULT_VALIDATION_TOL,
             mean_tol=DEFAULT_VALIDATION_TOL) -> ValidationReport:
    """Check that ``m`` is a centered probability measure with finite mean."""
    problems, notes = [], []
    if isinstance(m, MixedGeometric):
        for side in ("plus", "minus"):
            g, q = getattr(m, f"gamma_{side}"), getattr(m, f"q_{side}")
            if g < 0:
                problems.append((MassDeficit, f"gamma_{side} = {g} is negative"))
            elif g > 0 and q <= 0:
                problems.append((InfiniteFirstMoment, f"q_{side} = {q} gives a non-decaying tail"))
            elif g > 0 and q >= 1:
                problems.append((MeasureError, f"q_{side} = {q} must lie in (0, 1)"))
        if m.gamma_plus + m.gamma_minus > 1:
            problems.append((MassDeficit, "gamma_plus + gamma_minus exceeds 1"))
        if problems:
            return ValidationReport(math.nan, math.nan, math.inf, m.lower, m.upper,
                                    tuple(problems))
    total, mean, absm = m.raw_moments()
    exact = _is_exact(total) and _is_exact(mean)
    if not math.isfinite(float(absm)):
        problems.append((InfiniteFirstMoment, "first absolute moment diverges"))
    if abs(total - 1) > (0 if exact else mass_tol):
        problems.append((MassDeficit, f"total mass {float(total):.6g} differs from 1"))
    if abs(mean) > (0 if exact else mean_tol):
        problems.append((NonCentered, f"mean {float(mean):.6g} is not zero"))
    if isinstance(m, CasinoCPT) and m.horizon is not None:
        notes.append(f"as-printed closure valid up to site {m.horizon}")
    if m.lower == 0 and m.upper == 0:
        notes.append("degenerate measure (point mass at 0)")
    return ValidationReport(float(total), float(mean), float(absm), m.lower, m.upper,
                            tuple(problems), tuple(notes))


def require_valid(m: LatticeMeasure, **tols) -> ValidationReport:
    return validate(m, **tols).raise_for_status()


def pmf(m: LatticeMeasure, i: int) -> Number:
    return m.pmf(i)


# --------------------------------------------------------------------------
# Barycenter function and its inverse


@dataclass(frozen=True, eq=False)
class BarycenterTable:
    """Step representation of ``psi(x) = E[Y | Y >= x]`` over the atoms.

    ``psi`` is left-continuous and constant between atoms, so it is fully
    described by its value at each atom (``psi_left``) and just after it
    (``psi_right``).
    """

    breakpoints: np.ndarray
    psi_left: np.ndarray
    psi_right: np.ndarray
    barmu: np.ndarray
    mass: np.ndarray
    xlow: object
    xbar: object
    psi_beyond: object  # psi just past the window, None if bounded above
    exact: bool
    lattice: LatticeTable = field(repr=False)

    def _tol(self, y):
        return 0 if self.exact else 1e-9 * max(1.0, abs(float(y)))

    def psi(self, x):
        if x > self.xbar:
            return x
        j = int(np.searchsorted(self.breakpoints, x, side="left"))
        if j == len(self.breakpoints):
            if self.psi_beyond is None or x > self.lattice.hi + 1:
                raise TruncationHorizon(f"psi({x}) needs sites beyond the window")
            return self.psi_beyond
        if j == 0 and x < self.breakpoints[0] and not math.isfinite(self.xlow):
            raise TruncationHorizon(f"psi({x}) needs sites below the window")
        return self.psi_left[j]

    def atom_index(self, x) -> int:
        j = int(np.searchsorted(self.breakpoints, x, side="left"))
        if j == len(self.breakpoints) or self.breakpoints[j] != x:
            raise KeyError(f"{x} is not an atom")
        return j

    def inverse(self, y):
        """``b(y) = sup{x : psi(x) <= y}``; ``NEG_INF`` at 0 when unbounded below."""
        if y < 0:
            raise ValueError("b_mu is defined for y >= 0")
        if y >= self.xbar:
            return int(y) if float(y).is_integer() else y
        tol = self._tol(y)
        j = int(np.searchsorted(self.psi_left, y + tol, side="right")) - 1
        if j < 0:
            if not math.isfinite(self.xlow):
                if y == 0:
                    return NEG_INF
                raise TruncationHorizon(f"b({y}) lies below the window")
            return self.breakpoints[0]
        if j == len(self.breakpoints) - 1 and self.psi_beyond is not None:
            if self.psi_beyond <= y + tol:
                raise TruncationHorizon(f"b({y}) lies beyond the window")
        return int(self.breakpoints[j])

    def resolvable(self, y) -> bool:
        try:
            self.inverse(y)
        except TruncationHorizon:
            return False
        return True


def barycenter(m: LatticeMeasure, tail_tol=None, max_sites=DEFAULT_MAX_SITES) -> BarycenterTable:
    lat = m.table(tail_tol, max_sites)
    return _barycenter_from_lattice(lat)


def _barycenter_from_lattice(lat: LatticeTable) -> BarycenterTable:
    atom = np.array([v != 0 for v in lat.p], dtype=bool)
    j = np.flatnonzero(atom)
    sites = lat.sites[j]
    tail = lat.tail_from[j]
    moment = lat.moment_from[j]
    psi_left = moment / tail
    if lat.above[0] != 0:
        psi_beyond = lat.above[1] / lat.above[0]
    else:
        psi_beyond = None
    psi_right = np.empty_like(psi_left)
    psi_right[:-1] = psi_left[1:]
    psi_right[-1] = psi_beyond if psi_beyond is not None else sites[-1]
    breakpoints = np.array([int(s) for s in sites])
    if lat.exact:
        breakpoints = breakpoints.astype(object)
    return BarycenterTable(breakpoints, psi_left, psi_right, tail, lat.p[j],
                           lat.lower, lat.upper, psi_beyond, lat.exact, lat)


def inverse_barycenter(t: BarycenterTable, y):
    return t.inverse(y)


def hl_bound(t: BarycenterTable, n: int):
    """Largest possible ``P(max S >= n)`` over UI embeddings of mu.

    ``mubar(b) (psi(b) - b) / (n - b)`` with ``b = b_mu(n)`` and 0/0 = 1.
    """
    if n <= 0:
        return 1 if t.exact else 1.0
    b = t.inverse(n)
    if b == n:
        if n > t.xbar:
            return 0
        return t.lattice.tail(n)  # 0/0 = 1
    j = t.atom_index(b)
    return t.barmu[j] * (t.psi_left[j] - b) / (n - b)


# --------------------------------------------------------------------------
# Truncation to bounded support


def _tail_above(m: LatticeMeasure, h: int):
    """Mass and first moment of ``m`` on ``[h, oo)``."""
    if h > m.upper:
        return (Fraction(0),) * 2 if m.exact else (0.0, 0.0)
    if math.isfinite(m.upper):
        ws = [(i, m.pmf(i)) for i in range(h, int(m.upper) + 1)]
        return _sum((w for _, w in ws), m.exact), _sum((i * w for i, w in ws), m.exact)
    return m.upper_remainder(h)


def _tail_below(m: LatticeMeasure, l: int):
    """Mass and first moment of ``m`` on ``(-oo, l]``."""
    if l < m.lower:
        return (Fraction(0),) * 2 if m.exact else (0.0, 0.0)
    if math.isfinite(m.lower):
        ws = [(i, m.pmf(i)) for i in range(int(m.lower), l + 1)]
        return _sum((w for _, w in ws), m.exact), _sum((i * w for i, w in ws), m.exact)
    return m.lower_remainder(l)


@dataclass(frozen=True)
class TruncatedMeasure:
    """A centered measure on ``[a_n, n]`` agreeing with mu strictly inside."""

    n: int
    a_n: int
    masses: tuple
    identity: bool = False

    def as_measure(self, tail_tol=DEFAULT_TAIL_TOL) -> AtomMeasure:
        return AtomMeasure(self.masses, tail_tol)


def truncate(m: LatticeMeasure, n: int, k_cap: int = 10 ** 7) -> TruncatedMeasure:
    """Cut mu to ``[-A_n, n]``, moving the outside mass to the two endpoints.

    ``A_n`` is the least ``k`` with ``k (1 - mu((-k, n))) - sum i mu(i) > 0``
    (sum over ``(-k, n)``), which makes both endpoint masses positive.  When
    mu is bounded above by less than ``n`` but unbounded below, the cut is
    mirrored: the result lives on ``[-n, A_n]`` of the reflected problem.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if m.upper < n:
        if math.isfinite(m.lower):
            atoms = tuple((i, m.pmf(i)) for i in range(int(m.lower), int(m.upper) + 1)
                          if m.pmf(i) != 0)
            return TruncatedMeasure(int(m.upper), int(m.lower), atoms, identity=True)
        mirrored = truncate(m.reflect(), n, k_cap)
        return TruncatedMeasure(-mirrored.a_n, -mirrored.n,
                                tuple((-s, w) for s, w in reversed(mirrored.masses)))
    exact = m.exact
    # outside mass and moment come from the tails directly: subtracting the
    # inner mass from 1 loses every digit once the tails are tiny
    up_mass, up_moment = _tail_above(m, n)
    k = 0
    while True:
        k += 1
        if k > k_cap:
            raise NoConvergenceWithinBudget(f"no admissible left endpoint below {k_cap}")
        low_mass, low_moment = _tail_below(m, -k)
        out_mass, out_moment = up_mass + low_mass, up_moment + low_moment
        f = k * out_mass + out_moment
        if f > 0:
            break
    top = f / (n + k)
    bottom = (n * out_mass - out_moment) / (n + k)
    inner = [(i, m.pmf(i)) for i in range(-k + 1, n)]
    masses = [(-k, bottom)] + [(i, w) for i, w in inner if w != 0] + [(n, top)]
    if not exact:
        masses = [(i, float(w)) for i, w in masses]
    return TruncatedMeasure(n, -k, tuple(masses))


# --------------------------------------------------------------------------
# JSON


def measure_from_dict(d: dict) -> LatticeMeasure:
    kind = d.get("type")
    tail_tol = float(d.get("tail_tol", DEFAULT_TAIL_TOL))
    if kind == "atoms":
        return AtomMeasure(tuple((int(s), _number(w)) for s, w in d["atoms"]), tail_tol)
    if kind == "mixed_geometric":
        return MixedGeometric(_number(d["gamma_plus"]), _number(d["q_plus"]),
                              _number(d["gamma_minus"]), _number(d["q_minus"]), tail_tol)
    if kind == "casino_cpt":
        return CasinoCPT(d.get("mode", "as_printed"), tail_tol)
    if kind == "reflected":
        return Reflected(measure_from_dict(d["of"]))
    raise MeasureError(f"unknown measure type {kind!r}")


def load_measure(path) -> LatticeMeasure:
    with open(path) as fh:
        return measure_from_dict(json.load(fh))


def atoms(pairs: Iterable, tail_tol=DEFAULT_TAIL_TOL) -> AtomMeasure:
    """Shorthand: ``atoms({-1: Fraction(1, 2), 1: Fraction(1, 2)})``."""
    if isinstance(pairs, dict):
        pairs = pairs.items()
    return AtomMeasure(tuple(pairs), tail_tol)
