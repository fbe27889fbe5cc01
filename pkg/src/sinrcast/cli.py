"""Command line: ``sinrcast {gen,run,batch,params,replay}``."""
from __future__ import annotations

import argparse
import csv
import json
import sys

from . import experiments as ex
from .engine import load_trace, replay_check, run, save_trace
from .grid import Grid
from .network import (GenerationError, NetworkFormatError, eccentricity, gen_social, gen_uniform,
                      load_network, save_network)
from .params import DilutionSpec, P_KNOWN, P_UNKNOWN, dilution_d, s_alpha, trial_count
from .params import unknown_density_dilutions
from .sinr import SinrParams


def _sinr_args(p):
    p.add_argument("--alpha", type=float, default=2.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.2)


def _protocol_args(p, d_default):
    p.add_argument("--protocol", choices=ex.PROTOCOLS)
    p.add_argument("--d", type=int, default=d_default)
    p.add_argument("--dbar", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--delta-fail", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sinrcast",
                                     description="Broadcast simulations under the SINR model.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a connected network and save it as JSON")
    g.add_argument("--kind", choices=ex.GENERATORS, default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--side", type=float, default=6.0)
    g.add_argument("--p-pref", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    _sinr_args(g)

    r = sub.add_parser("run", help="run one protocol on a saved network")
    r.add_argument("--net", required=True)
    _protocol_args(r, None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-rounds", type=int)
    r.add_argument("--stop-when-informed", action="store_true")
    r.add_argument("--trace", help="write the round-by-round trace here (JSON lines)")

    b = sub.add_parser("batch", help="run a seeded multi-trial experiment")
    b.add_argument("--config", help="JSON config; flags below override its fields")
    b.add_argument("--n", type=int, nargs="+", dest="n_values")
    b.add_argument("--trials", type=int)
    b.add_argument("--generator", choices=ex.GENERATORS)
    b.add_argument("--p-pref", type=float)
    b.add_argument("--side", type=float)
    b.add_argument("--seed", type=int, dest="base_seed")
    b.add_argument("--workers", type=int)
    b.add_argument("--stop-when-informed", action="store_true", default=None)
    b.add_argument("--trials-csv")
    b.add_argument("--aggregate-csv")
    b.add_argument("--json", dest="json_out")
    for name in ("alpha", "beta", "noise", "eps"):
        b.add_argument(f"--{name}", type=float)
    _protocol_args(b, None)

    p = sub.add_parser("params", help="tabulate grid sizes, dilutions and budgets")
    p.add_argument("--alpha", type=float, nargs="+", default=[2.5])
    p.add_argument("--eps", type=float, nargs="+", default=[0.2])
    p.add_argument("--n", type=int, nargs="+", default=[1000])
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--D", type=int, default=10, help="eccentricity used for the budgets")
    p.add_argument("--delta-fail", type=float, default=0.05)
    p.add_argument("--out", help="CSV path (default: stdout)")

    y = sub.add_parser("replay", help="recheck every delivery of a saved trace")
    y.add_argument("--net", required=True)
    y.add_argument("--trace", required=True)
    return parser


def cmd_gen(args) -> int:
    prm = SinrParams(args.alpha, args.beta, args.noise, args.eps)
    if args.kind == "social":
        net = gen_social(args.n, args.side, prm, args.p_pref, args.seed)
    else:
        net = gen_uniform(args.n, args.side, prm, args.seed)
    save_network(net, args.out)
    st = net.stats()
    print(json.dumps({"out": args.out, "n": st.n, "D": st.D, "granularity": st.g,
                      "retries": st.retries}))
    return 0


def cmd_run(args) -> int:
    net = load_network(args.net)
    cfg = ex.ExperimentConfig(protocol=args.protocol or "rand", d=args.d, dbar=args.dbar, T=args.T,
                              delta_fail=args.delta_fail or 0.05, alpha=net.params.alpha,
                              beta=net.params.beta, noise=net.params.noise, eps=net.params.eps)
    D = eccentricity(net)
    proto, predicted = ex.build_protocol(cfg, net, D)
    budget = args.max_rounds or max(1, int(cfg.max_rounds_factor * max(predicted, 1)))
    res = run(net, proto, args.seed, budget, trace=bool(args.trace),
              stop_when_informed=args.stop_when_informed)
    if args.trace:
        save_trace(res.trace, args.trace)
    print(json.dumps({"n": net.n, "D": D, "complete": res.complete,
                      "completion_round": res.completion_round, "done_round": res.done_round,
                      "rounds": res.rounds, "informed": res.informed, **res.metadata}))
    return 0 if res.complete else 2


def cmd_batch(args) -> int:
    doc = ex.ExperimentConfig.load(args.config).to_json() if args.config else {}
    flags = {k: v for k, v in vars(args).items()
             if k in ex.ExperimentConfig.__dataclass_fields__ and v is not None}
    doc.update(flags)
    cfg = ex.ExperimentConfig.from_json(doc)
    records = ex.run_batch(cfg)
    ex.export(records, cfg, trials_path=cfg.trials_csv, aggregate_path=cfg.aggregate_csv,
              json_path=cfg.json_out)
    if not cfg.trials_csv:
        sys.stdout.write(ex.trials_csv(records))
    failed = [r for r in records if r.error is not None]
    for r in failed:
        print(f"n={r.n} trial={r.trial}: {r.error}", file=sys.stderr)
    return 1 if failed else 0


def params_rows(alphas, epss, ns, noise=1.0, beta=1.0, D=10, delta_fail=0.05):
    per_box = delta_fail / (4 * (D + 1) ** 3)
    for alpha in alphas:
        for eps in epss:
            prm = SinrParams(alpha, beta, noise, eps)
            known = Grid.known_density(eps).cell
            unknown = Grid.unknown_density(eps).cell
            for n in ns:
                d = dilution_d(DilutionSpec(alpha, prm.power, known, noise * alpha * eps / 4, n))
                du, dbar = unknown_density_dilutions(alpha, noise, eps, prm.power, unknown, n)
                yield {"alpha": alpha, "eps": eps, "n": n, "gamma_known": known,
                       "gamma_unknown": unknown, "s_alpha": s_alpha(alpha, n), "d": d,
                       "d_unknown": du, "dbar": dbar,
                       "T_known": trial_count(D, per_box, P_KNOWN),
                       "T_unknown": trial_count(D, per_box, P_UNKNOWN)}


def cmd_params(args) -> int:
    rows = list(params_rows(args.alpha, args.eps, args.n, args.noise, args.beta, args.D,
                            args.delta_fail))
    fh = open(args.out, "w", newline="\n") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_replay(args) -> int:
    net = load_network(args.net)
    trace = load_trace(args.trace)
    ok = replay_check(trace, net)
    print(f"{len(trace)} rounds: {'consistent' if ok else 'MISMATCH'}")
    return 0 if ok else 1


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "batch": cmd_batch, "params": cmd_params,
            "replay": cmd_replay}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, GenerationError, NetworkFormatError, OSError) as exc:
        print(f"sinrcast {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
