import json
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from sepwalk import io as sio
from sepwalk.azema_yor import build_schedule
from sepwalk.cli import main, verify_checks
from sepwalk.markovian import build_policy
from sepwalk.measure import CasinoCPT, MixedGeometric, atoms
from sepwalk.oracle import ay_exact, markovian_exact

CASINO_R = [0.4040, 0.0600, 0.0253, 0.0140, 0.0089, 0.0061, 0.0045, 0.0034, 0.0027, 0.0021]


@pytest.fixture
def dist_file(tmp_path, three_point):
    path = tmp_path / "mu.json"
    path.write_text(json.dumps(three_point.to_dict()))
    return path


def test_policy_round_trip(three_point):
    p = build_policy(three_point)
    q = sio.policy_from_dict(json.loads(sio.dumps(sio.policy_to_dict(p))))
    assert q.lo == p.lo and q.hull == p.hull and np.array_equal(q.r, p.r)
    assert markovian_exact(q).to_dict() == markovian_exact(p).to_dict()


def test_unbounded_policy_round_trip():
    p = build_policy(CasinoCPT())
    q = sio.policy_from_dict(json.loads(sio.dumps(sio.policy_to_dict(p))))
    assert q.hull == p.hull and np.array_equal(q.r, p.r)


def test_schedule_round_trip():
    for m in (atoms({-2: Fraction(1, 4), 0: Fraction(1, 4), 1: Fraction(1, 2)}), CasinoCPT()):
        s = build_schedule(m, max_levels=40)
        back = sio.schedule_from_dict(json.loads(sio.dumps(sio.schedule_to_dict(s))))
        assert back.n_levels == s.n_levels
        assert ay_exact(back).to_dict() == ay_exact(s).to_dict()


def test_law_round_trip(three_point):
    law = ay_exact(build_schedule(three_point))
    back = sio.law_from_dict(json.loads(sio.dumps(sio.law_to_dict(law))))
    assert back.to_dict() == law.to_dict()


def test_csv_outputs(three_point):
    text = sio.policy_csv(build_policy(three_point))
    assert text.splitlines()[0].startswith("site")
    assert len(text.splitlines()) == 1 + 4


def test_cli_build_markovian(dist_file, tmp_path, capsys):
    out = tmp_path / "policy.json"
    assert main(["build-markovian", "--dist", str(dist_file), "--out", str(out)]) == 0
    p = sio.policy_from_dict(json.loads(out.read_text()))
    assert p.rate(0) == pytest.approx(0.2)
    assert "r[0]=0.2000" in capsys.readouterr().out


def test_cli_exact_from_saved_rules(dist_file, tmp_path, capsys):
    pol, sch = tmp_path / "p.json", tmp_path / "s.json"
    assert main(["build-markovian", "--dist", str(dist_file), "--out", str(pol)]) == 0
    assert main(["build-ay", "--dist", str(dist_file), "--out", str(sch)]) == 0
    capsys.readouterr()
    assert main(["exact", "--dist", str(dist_file), "--policy", str(pol),
                 "--schedule", str(sch)]) == 0
    payload = json.loads(capsys.readouterr().out)
    for rule in ("markovian", "azema_yor"):
        assert payload[rule]["tv_vs_target"] < 1e-12
        assert payload[rule]["e_tau"] == pytest.approx(1.5)


def test_cli_simulate_is_reproducible(dist_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["simulate", "--dist", str(dist_file), "--rule", "ay", "--paths", "5000",
                     "--seed", "9", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_simulate_censoring_fails(tmp_path, capsys):
    d = tmp_path / "casino.json"
    d.write_text(json.dumps(CasinoCPT("recentered").to_dict()))
    code = main(["simulate", "--dist", str(d), "--paths", "500", "--max-steps", "3"])
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "CheckFailed"


def test_cli_verify(dist_file, capsys):
    assert main(["verify", "--dist", str(dist_file)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["ok"] and all(c["pass"] for c in payload["checks"])


def test_cli_verify_csv(dist_file, capsys):
    assert main(["verify", "--dist", str(dist_file), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("check,result,value,bound")


def test_cli_rejects_non_centered(tmp_path, capsys):
    d = tmp_path / "bad.json"
    d.write_text(json.dumps({"type": "atoms", "atoms": [[-1, "1/2"], [3, "1/2"]]}))
    assert main(["build-markovian", "--dist", str(d)]) == 2
    err = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "NonCentered"
    assert main(["verify", "--dist", str(d)]) == 1


def test_cli_missing_file(capsys):
    assert main(["exact", "--dist", "/nonexistent/mu.json"]) == 2
    assert "error" in json.loads(capsys.readouterr().out)


def test_verify_checks_geometric():
    m = MixedGeometric(Fraction(5, 12), Fraction(5, 12), Fraction(13, 24), Fraction(13, 24))
    checks = verify_checks(m, tail_tol=1e-16)
    assert all(ok for _, ok, _, _ in checks), checks


def test_cli_example_geometric(capsys):
    assert main(["example", "geometric"]) == 0
    payload = json.loads(capsys.readouterr().out)
    r = dict((i, v) for i, v in payload["markovian"]["r"])
    assert r[1] == pytest.approx(25 / 193) and r[-1] == pytest.approx(169 / 697)
    assert r[0] == pytest.approx(1 / 49)


def test_cli_example_casino_figure(tmp_path, capsys):
    fig = tmp_path / "tree.csv"
    assert main(["example", "casino", "--figure", str(fig), "--depth", "3"]) == 0
    rows = fig.read_text().splitlines()
    assert rows[0] == "rule,node,parent,t,x,running_max,decision,bias"
    assert any(r.startswith("azema_yor,") for r in rows)


def test_example_casino_subprocess_under_one_second():
    start = time.perf_counter()
    done = subprocess.run([sys.executable, "-m", "sepwalk", "example", "casino"],
                          capture_output=True, text=True, check=True)
    elapsed = time.perf_counter() - start
    payload = json.loads(done.stdout)
    r = dict((i, v) for i, v in payload["markovian"]["r"])
    for i, want in enumerate(CASINO_R, start=1):
        assert abs(r[i] - want) <= 5e-5
    assert elapsed < 1.0, elapsed
