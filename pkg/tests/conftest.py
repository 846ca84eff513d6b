import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from sepwalk.measure import AtomMeasure, atoms

THREE_POINT = {-1: Fraction(1, 2), 0: Fraction(1, 4), 2: Fraction(1, 4)}

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def three_point():
    return atoms(THREE_POINT)


@pytest.fixture
def uniform_pm1():
    return atoms({-1: Fraction(1, 2), 1: Fraction(1, 2)})


def centered_from_parts(neg, pos, w0) -> AtomMeasure:
    """Scale two weight lists so the result is a centered probability measure.

    ``neg``/``pos`` are ``(site, weight)`` pairs with negative/positive
    sites; ``w0`` is the mass left at 0.
    """
    w_neg = sum(w for _, w in neg)
    w_pos = sum(w for _, w in pos)
    a = sum(-s * w for s, w in neg)
    b = sum(s * w for s, w in pos)
    c = (1 - w0) / (b * w_neg + a * w_pos)
    masses = {}
    for s, w in neg:
        masses[s] = masses.get(s, 0) + Fraction(b) * c * w
    for s, w in pos:
        masses[s] = masses.get(s, 0) + Fraction(a) * c * w
    if w0:
        masses[0] = w0
    return atoms(masses)


def random_centered(rng: random.Random, width: int = 10) -> AtomMeasure:
    neg = [(rng.randint(-width, -1), rng.randint(1, 20)) for _ in range(rng.randint(1, 6))]
    pos = [(rng.randint(1, width), rng.randint(1, 20)) for _ in range(rng.randint(1, 6))]
    w0 = Fraction(rng.randint(0, 10), 20) if rng.random() < 0.6 else Fraction(0)
    return centered_from_parts(neg, pos, w0)


def random_measures(count: int, seed: int = 20240601):
    rng = random.Random(seed)
    return [random_centered(rng) for _ in range(count)]


@st.composite
def centered_measures(draw, width: int = 10):
    site_w = st.integers(1, 20)
    neg = draw(st.lists(st.tuples(st.integers(-width, -1), site_w), min_size=1, max_size=6))
    pos = draw(st.lists(st.tuples(st.integers(1, width), site_w), min_size=1, max_size=6))
    w0 = draw(st.fractions(0, Fraction(1, 2), max_denominator=50))
    return centered_from_parts(neg, pos, w0)
