import math

import numpy as np
import pytest

from sepwalk.azema_yor import build_schedule
from sepwalk.errors import ExcessCensoring
from sepwalk.kernels import STATUS_STOPPED
from sepwalk.markovian import build_policy
from sepwalk.measure import CasinoCPT
from sepwalk.montecarlo import (
    AyRule,
    MarkovRule,
    SimConfig,
    compare,
    run_paths,
    simulate,
    tree_nodes,
)
from sepwalk.oracle import ay_exact, markovian_exact


def test_uniform_first_exit(uniform_pm1):
    cfg = SimConfig(100_000, 11, build_policy(uniform_pm1))
    rep = simulate(cfg, uniform_pm1)
    assert set(rep.counts) == {-1, 1}
    assert rep.mean_tau == 1.0 and rep.censored == 0
    assert rep.tv_vs_target < 5 / math.sqrt(cfg.paths)
    assert abs(rep.mean_S) < 4 / math.sqrt(cfg.paths)


@pytest.mark.parametrize("rule", ["markovian", "azema_yor"])
def test_three_point_concordance(three_point, rule):
    r = build_policy(three_point) if rule == "markovian" else build_schedule(three_point)
    exact = markovian_exact(r) if rule == "markovian" else ay_exact(r)
    rep = simulate(SimConfig(200_000, 3, r), three_point)
    v = compare(rep, exact)
    assert v.ok, v
    assert rep.mean_tau == pytest.approx(1.5, rel=0.02)
    # optional stopping: the stopped walk is still centered
    assert abs(rep.mean_S) < 4 * rep.std_S / math.sqrt(rep.paths)
    for n, p in rep.empirical_max_law.items():
        assert p == pytest.approx(exact.max_tail(n), abs=5e-3)


def test_perturbed_policy_fails_verdict(three_point):
    p = build_policy(three_point)
    exact = markovian_exact(p)
    rep = simulate(SimConfig(200_000, 3, p.perturbed(0, 0.1)), three_point)
    assert not compare(rep, exact).ok


def test_same_seed_same_report(three_point):
    cfg = SimConfig(20_000, 42, build_schedule(three_point))
    assert simulate(cfg, three_point).to_json() == simulate(cfg, three_point).to_json()
    other = SimConfig(20_000, 43, build_schedule(three_point))
    assert simulate(other, three_point).to_json() != simulate(cfg, three_point).to_json()


def test_backends_give_same_report(three_point):
    p = build_policy(three_point)
    a = simulate(SimConfig(5000, 8, p, backend="numpy"), three_point)
    b = simulate(SimConfig(5000, 8, p), three_point)
    assert a.to_json() == b.to_json()


def test_censoring_is_flagged():
    m = CasinoCPT("recentered")
    cfg = SimConfig(2000, 1, build_policy(m), max_steps=5)
    rep = simulate(cfg, m)
    assert rep.censored > 0
    with pytest.raises(ExcessCensoring):
        rep.raise_for_censoring()
    assert not compare(rep, markovian_exact(build_policy(m))).ok


def test_censor_limit_tolerates_small_fraction():
    m = CasinoCPT("recentered")
    cfg = SimConfig(2000, 1, build_policy(m), max_steps=5, censor_limit=1.0)
    assert simulate(cfg, m).raise_for_censoring().censored > 0


def test_casino_ay_first_level():
    # whatever the heavy right tail does later, max S >= 1 has probability 1/2
    s = build_schedule(CasinoCPT(), max_levels=64)
    batch = run_paths(SimConfig(100_000, 17, s, max_steps=1000))
    p = np.mean(batch.maxs >= 1)
    assert abs(p - 0.5) < 3 * math.sqrt(0.25 / 100_000)
    done = batch.status == STATUS_STOPPED
    assert np.all(batch.final[done & (batch.maxs == 0)] == -1)


def test_config_validation(three_point):
    p = build_policy(three_point)
    with pytest.raises(ValueError):
        SimConfig(0, 1, p)
    with pytest.raises(ValueError):
        SimConfig(10, -1, p)


def test_markov_rule_is_memoryless(three_point):
    rule = MarkovRule(build_policy(three_point))
    assert rule.stops(0, 0.1) and not rule.stops(0, 0.3)
    assert not rule.stops(1, 0.0) and rule.stops(-1, 0.999)


def test_casino_ay_paths_depend_on_history():
    s = build_schedule(CasinoCPT(), max_levels=16)
    rule = AyRule(s, coins=lambda n, k: True)  # every coin shows heads
    assert rule.stopping_time([0, 1, 2, 1]) == 3
    assert rule.stopping_time([0, 1, 0, 1]) is None
    assert rule.stopping_time([0, -1]) == 1
    with pytest.raises(ValueError):
        rule.stopping_time([0, 2])


def test_ay_coin_tossed_once_per_level():
    s = build_schedule(CasinoCPT(), max_levels=16)
    calls = []
    rule = AyRule(s, coins=lambda n, k: calls.append((n, k)) or True)
    rule.stopping_time([0, 1, 0, 1, 0, 1, 0])
    assert calls == [(1, 0)]


def test_tree_nodes_casino():
    policy = build_policy(CasinoCPT())
    rows = tree_nodes(policy, 3)
    root = rows[0]
    assert root[3] == 0 and root[5] == "continue"
    assert any(r[3] == -1 and r[5] == "stop" for r in rows)
    assert any(r[3] == 1 and r[5] == "coin" and r[6] == pytest.approx(0.4040, abs=5e-5)
               for r in rows)
    ay_rows = tree_nodes(build_schedule(CasinoCPT(), max_levels=16), 3)
    # (3, 1) is a sure stop after 0, 1, 2 but a plain continue after 0, 1, 0
    by_id = {r[0]: r for r in ay_rows}
    at_31 = [r for r in ay_rows if r[2] == 3 and r[3] == 1]

    def history(r):
        xs = []
        while r[1] != -1:
            xs.append(r[3])
            r = by_id[r[1]]
        return [0] + xs[::-1]

    kinds = {tuple(history(r)): r[5] for r in at_31}
    assert kinds[(0, 1, 2, 1)] == "stop" and kinds[(0, 1, 0, 1)] == "continue"
