"""Command-line interface.

Every subcommand writes a JSON (or CSV) result to ``--out`` (stdout by
default) and a short human-readable summary to stderr, or to stdout when
``--out`` names a file.  Exit status is 0 iff all requested checks pass;
failures print a structured error object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from . import io as sio
from .errors import SepWalkError
from .measure import (
    DEFAULT_TAIL_TOL,
    CasinoCPT,
    MixedGeometric,
    load_measure,
    measure_from_dict,
    validate,
)

EXIT_OK, EXIT_FAILED_CHECK, EXIT_ERROR = 0, 1, 2


class CheckFailed(Exception):
    def __init__(self, payload):
        super().__init__("one or more checks failed")
        self.payload = payload


def _fraction(text: str):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _load(args):
    m = load_measure(args.dist)
    if args.tail_tol is not None:
        d = m.to_dict()
        d["tail_tol"] = args.tail_tol
        m = measure_from_dict(d)
    return m


def _emit(args, payload: dict, csv_text: str | None, summary: str):
    if getattr(args, "format", "json") == "csv" and csv_text is not None:
        sio.write_text(csv_text, args.out)
    else:
        sio.write_text(sio.dumps(payload), args.out)
    stream = sys.stdout if args.out not in (None, "-") else sys.stderr
    if summary:
        print(summary, file=stream)


# --------------------------------------------------------------------------
# Subcommands


def cmd_build_markovian(args):
    from .markovian import build_policy

    m = _load(args)
    p = build_policy(m, args.tail_tol)
    shown = ", ".join(f"r[{i}]={p.rate(i):.4f}" for i in range(max(p.lo, -5), min(p.hi, 5) + 1))
    notes = "; ".join(p.notes)
    _emit(args, sio.policy_to_dict(p), sio.policy_csv(p),
          f"policy on [{p.lo}, {p.hi}] ({p.provenance}): {shown}" + (f"\n{notes}" if notes else ""))


def cmd_build_ay(args):
    from .azema_yor import build_schedule

    m = _load(args)
    s = build_schedule(m, args.tail_tol, max_levels=args.max_levels)
    lines = [f"n={lv.n}: " + ", ".join(f"x={x} rho={float(r):.4f}" for x, r in zip(lv.x, lv.rho))
             for lv in s.levels[:8]]
    _emit(args, sio.schedule_to_dict(s), sio.schedule_csv(s),
          f"{s.n_levels} levels, xbar={s.xbar}\n" + "\n".join(lines))


def _rule_laws(args, m):
    from .azema_yor import build_schedule
    from .markovian import build_policy
    from .oracle import ay_exact, markovian_exact

    laws = {}
    if args.rule in ("markovian", "both"):
        policy = (sio.policy_from_dict(sio.load_json(args.policy)) if args.policy
                  else build_policy(m, args.tail_tol))
        laws["markovian"] = markovian_exact(policy)
    if args.rule in ("ay", "both"):
        sched = (sio.schedule_from_dict(sio.load_json(args.schedule)) if args.schedule
                 else build_schedule(m, args.tail_tol))
        laws["azema_yor"] = ay_exact(sched)
    return laws


def cmd_exact(args):
    from .oracle import tv_distance

    m = _load(args)
    laws = _rule_laws(args, m)
    payload = {k: v.to_dict() for k, v in laws.items()}
    for k, v in laws.items():
        payload[k]["tv_vs_target"] = tv_distance(v, m)
    csv_rows = [[rule, i, repr(p)] for rule, law in laws.items() for i, p in law.as_dict().items()]
    summary = "\n".join(f"{k}: TV={payload[k]['tv_vs_target']:.3e} E[tau]={v.e_tau:.6g} "
                        f"error<={v.error:.2e}" for k, v in laws.items())
    _emit(args, payload, sio.csv_text(["rule", "site", "prob"], csv_rows), summary)


def cmd_simulate(args):
    from .azema_yor import build_schedule
    from .markovian import build_policy
    from .montecarlo import SimConfig, simulate

    m = _load(args)
    if args.rule == "ay":
        rule = (sio.schedule_from_dict(sio.load_json(args.schedule)) if args.schedule
                else build_schedule(m, args.tail_tol))
    else:
        rule = (sio.policy_from_dict(sio.load_json(args.policy)) if args.policy
                else build_policy(m, args.tail_tol))
    cfg = SimConfig(args.paths, args.seed, rule, args.max_steps, backend=args.backend)
    rep = simulate(cfg, m)
    rows = [[i, c, repr(c / rep.completed)] for i, c in sorted(rep.counts.items())]
    summary = (f"{rep.rule}: {rep.paths} paths, TV={rep.tv_vs_target:.3e}, "
               f"chi2 p={rep.chi2_p:.3g}, mean tau={rep.mean_tau:.4f}, "
               f"censored={rep.censored}, horizon={rep.horizon}")
    _emit(args, rep.to_dict(), sio.csv_text(["site", "count", "freq"], rows), summary)
    if rep.flags:
        raise CheckFailed({"flags": list(rep.flags)})


def verify_checks(m, tol=1e-9, tail_tol=None):
    """Oracle round trip, dominance and identities; list of (name, ok, value, bound)."""
    from .azema_yor import build_schedule
    from .markovian import build_policy
    from .measure import barycenter, hl_bound
    from .oracle import ay_exact, dominance_check, markovian_exact, moments, tv_distance

    checks = []
    rep = validate(m)
    checks.append(("valid measure", rep.ok,
                   "; ".join(f"{c.__name__}: {msg}" for c, msg in rep.problems) or "ok", None))
    if not rep.ok:
        return checks
    policy = build_policy(m, tail_tol)
    sched = build_schedule(m, tail_tol)
    mk, ay = markovian_exact(policy), ay_exact(sched)
    truncation = m.table(tail_tol).truncated_mass
    for name, law in (("markovian", mk), ("azema_yor", ay)):
        tv = tv_distance(law, m, tail_tol)
        bound = tol + law.error + truncation
        checks.append((f"{name} TV", tv < bound, tv, bound))
    dom = dominance_check(mk, ay)
    checks.append(("dominance of maximum", dom.ok, dom.max_excess, 1e-12))
    t = barycenter(m, tail_tol)
    n_max = min(len(ay.max_law) - 1, sched.n_levels)
    gap = max((abs(ay.max_tail(n) - float(hl_bound(t, n))) for n in range(n_max + 1)),
              default=0.0)
    checks.append(("max law equals bound", gap <= 1e-12, gap, 1e-12))
    abs_mom, second = moments(m, tail_tol)
    j0 = -policy.lo
    g0_gap = abs(float(policy.g[j0]) - float(abs_mom))
    checks.append(("g_0 equals E|X|", g0_gap <= 1e-12 + 2 * truncation, g0_gap, 1e-12))
    if m.bounded:
        e_gap = abs(mk.e_tau - float(second))
        checks.append(("E[tau] equals E[X^2]", e_gap <= 1e-9, e_gap, 1e-9))
        # bounded: the policy window is the support hull, as is the solve
        a, r = mk.arrivals, policy.r
        dec = max(abs(a * (1 - r) - policy.g).max(), abs(a * r - policy.p).max())
        checks.append(("arrival decomposition", dec <= 1e-10, float(dec), 1e-10))
    return checks


def cmd_verify(args):
    m = _load(args)
    checks = verify_checks(m, args.tol, args.tail_tol)
    ok = all(c[1] for c in checks)
    payload = {"ok": ok, "checks": [{"name": n, "pass": bool(p), "value": v, "bound": b}
                                    for n, p, v, b in checks]}
    lines = [f"{'PASS' if p else 'FAIL'}  {n}: {v}" + ("" if b is None else f" (bound {b:.1e})")
             for n, p, v, b in checks]
    rows = [[n, "PASS" if p else "FAIL", v, b] for n, p, v, b in checks]
    _emit(args, payload, sio.csv_text(["check", "result", "value", "bound"], rows),
          "\n".join(lines))
    if not ok:
        raise CheckFailed(payload)


def _example_payload(m, sites, n_levels, policy_fn):
    from .azema_yor import build_schedule

    policy = policy_fn(m)
    sched = build_schedule(m, max_levels=max(n_levels, 1))
    r_table = [[i, policy.rate(i)] for i in sites]
    levels = [{"n": lv.n, "m": lv.m, "x": list(lv.x), "rho": [float(v) for v in lv.rho]}
              for lv in sched.levels[:n_levels]]
    return policy, sched, {"measure": m.to_dict(), "validation": validate(m).to_dict(),
                           "markovian": {"provenance": policy.provenance, "r": r_table},
                           "azema_yor": {"xbar": None if math.isinf(sched.xbar) else sched.xbar,
                                         "levels": levels}}


def _example_summary(payload):
    lines = ["Markovian stop probabilities:"]
    lines += [f"  r[{i}] = {r:.4f}" for i, r in payload["markovian"]["r"]]
    lines.append("Azema-Yor schedule:")
    for lv in payload["azema_yor"]["levels"]:
        pairs = ", ".join(f"x{k + 1}={x} rho{k + 1}={r:.4f}"
                          for k, (x, r) in enumerate(zip(lv["x"], lv["rho"])))
        lines.append(f"  n={lv['n']} m={lv['m']}: {pairs}")
    return "\n".join(lines)


def _example_csv(payload):
    rows = [["markovian", "", i, "", repr(r)] for i, r in payload["markovian"]["r"]]
    rows += [["azema_yor", lv["n"], x, k + 1, repr(r)]
             for lv in payload["azema_yor"]["levels"]
             for k, (x, r) in enumerate(zip(lv["x"], lv["rho"]))]
    return sio.csv_text(["rule", "n", "site", "k", "prob"], rows)


def _write_figure(path, depth, rules):
    from .montecarlo import tree_nodes

    rows = [[name, *row] for name, rule in rules for row in tree_nodes(rule, depth)]
    sio.write_text(sio.csv_text(["rule", "node", "parent", "t", "x", "running_max",
                                 "decision", "bias"], rows), path)


def cmd_example(args):
    from .markovian import build_policy, geometric_policy

    if args.which == "casino":
        m = CasinoCPT(args.mode)
        sites = range(-1, args.sites + 1)
        fn = build_policy
    else:
        gp = args.q_plus if args.gamma_plus is None else args.gamma_plus
        gm = args.q_minus if args.gamma_minus is None else args.gamma_minus
        m = MixedGeometric(gp, args.q_plus, gm, args.q_minus)
        sites = range(-args.sites, args.sites + 1)
        fn = geometric_policy
    policy, sched, payload = _example_payload(m, sites, args.levels, fn)
    if args.figure:
        _write_figure(args.figure, args.depth, [("markovian", policy), ("azema_yor", sched)])
    _emit(args, payload, _example_csv(payload), _example_summary(payload))


# --------------------------------------------------------------------------
# Parser


def _common(p, dist=True):
    if dist:
        p.add_argument("--dist", required=True, help="measure JSON file")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tail-tol", type=float, default=None,
                   help=f"tail mass cut for unbounded laws (default {DEFAULT_TAIL_TOL:g})")


def _rule_inputs(p):
    p.add_argument("--policy", default=None, help="policy JSON (default: build from --dist)")
    p.add_argument("--schedule", default=None, help="schedule JSON (default: build from --dist)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepwalk",
        description="Embed centered integer laws in the simple random walk.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-markovian", help="maximal coin-toss policy r_i")
    _common(p)
    p.set_defaults(func=cmd_build_markovian)

    p = sub.add_parser("build-ay", help="drawdown levels and coin biases")
    _common(p)
    p.add_argument("--max-levels", type=int, default=1024)
    p.set_defaults(func=cmd_build_ay)

    p = sub.add_parser("exact", help="exact stopped law under one or both rules")
    _common(p)
    p.add_argument("--rule", choices=("markovian", "ay", "both"), default="both")
    _rule_inputs(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("simulate", help="seeded Monte Carlo run")
    _common(p)
    p.add_argument("--rule", choices=("markovian", "ay"), default="markovian")
    _rule_inputs(p)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10 ** 7)
    p.add_argument("--backend", choices=("numba", "numpy"), default=None,
                   help="kernel backend (default: $SEP_WALK_BACKEND, else numba)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="oracle round trip, dominance and identities")
    _common(p)
    p.add_argument("--tol", type=float, default=1e-9, help="TV tolerance (default 1e-9)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("example", help="the two worked examples")
    ex = p.add_subparsers(dest="which", required=True)
    for name in ("casino", "geometric"):
        q = ex.add_parser(name)
        _common(q, dist=False)
        q.add_argument("--levels", type=int, default=7, help="AY levels to show (default 7)")
        q.add_argument("--figure", default=None, help="write binomial-tree node CSV here")
        q.add_argument("--depth", type=int, default=6, help="tree depth for --figure")
        if name == "casino":
            q.add_argument("--mode", choices=CasinoCPT.MODES, default="as_printed")
            q.add_argument("--sites", type=int, default=10)
        else:
            q.add_argument("--q-plus", type=_fraction, default=Fraction(5, 12))
            q.add_argument("--q-minus", type=_fraction, default=Fraction(13, 24))
            q.add_argument("--gamma-plus", type=_fraction, default=None,
                           help="defaults to q-plus")
            q.add_argument("--gamma-minus", type=_fraction, default=None,
                           help="defaults to q-minus")
            q.add_argument("--sites", type=int, default=5)
        q.set_defaults(func=cmd_example)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CheckFailed as exc:
        print(json.dumps({"error": "CheckFailed", "details": exc.payload}, sort_keys=True,
                         default=str), file=sys.stderr)
        return EXIT_FAILED_CHECK
    except (SepWalkError, ValueError, KeyError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True))
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
