"""Command-line entry point.

Subcommands::

    rate               finite-key min-entropy bound and key length (JSON)
    simulate           Monte Carlo protocol runs and event probabilities (JSON)
    validate-sampling  exhaustive check of the classical sampling bound
    optimize           parameter search and rate-vs-n curves (CSV)

Settings come from an optional ``--config`` INI file, then the environment
variable ``SRCKEY_SEED`` (seed only), then command-line flags.

Exit codes: 0 success, 1 usage/parse error or guard exceeded, 2 failed
precondition or infeasible search.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import bounds, config, optimizer, protocol, sampling

SCHEMA_VERSION = 1

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag dest -> (section, key)
_FLAG_KEYS = {
    "seed": ("run", "seed"), "threads": ("run", "threads"),
    "n": ("params", "n"), "m": ("params", "m"), "mu": ("params", "mu"), "e": ("params", "e"),
    "eps": ("params", "eps_src"), "delta": ("params", "delta"), "eps_prime": ("params", "eps_prime"),
    "eps_m": ("params", "eps_m"), "xi": ("params", "xi"), "key_rate": ("params", "key_rate"),
    "p_omega": ("probs", "p_omega"), "p_joint": ("probs", "p_omega_and_upsilon2"), "qber": ("probs", "qber"),
    "log_t": ("bounds", "log_t"), "eps_sec": ("bounds", "eps_sec"), "hoeffding_base": ("bounds", "hoeffding_base"),
    "imperfect_measurements": ("bounds", "imperfect_measurements"),
    "source": ("simulate", "source"), "channel": ("simulate", "channel"),
    "measurement": ("simulate", "measurement"), "trials": ("simulate", "trials"),
    "max_total": ("sampling", "max_total"), "sample_sizes": ("sampling", "sample_sizes"),
    "deltas": ("sampling", "deltas"),
    "mu_range": ("optimize", "mu_range"), "delta_range": ("optimize", "delta_range"),
    "e_range": ("optimize", "e_range"), "m_ratio_range": ("optimize", "m_ratio_range"),
    "resolution": ("optimize", "resolution"), "n_sweep": ("optimize", "n_sweep"),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with [run] [params] [probs] [bounds] [simulate] [sampling] "
                                    "[optimize] sections")
    p.add_argument("--seed", help="64-bit master seed (overrides SRCKEY_SEED and the config)")
    p.add_argument("--threads", help="worker threads for simulation")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")


def _params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("protocol parameters")
    g.add_argument("--n", help="rounds passed to BB84 (1e6 notation accepted)")
    g.add_argument("--m", help="source-test sample size")
    g.add_argument("--mu", help="X-basis probability")
    g.add_argument("--e", help="X-basis error threshold for parameter estimation")
    g.add_argument("--eps", help="source-test abort threshold")
    g.add_argument("--delta", help="sampling deviation")
    g.add_argument("--eps-prime", dest="eps_prime", help="total smoothing budget")
    g.add_argument("--key-rate", dest="key_rate", help="fraction of n kept as key in simulation")


def _bound_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("bound inputs")
    g.add_argument("--p-omega", dest="p_omega", help="Pr(source test passes)")
    g.add_argument("--p-joint", dest="p_joint", help="Pr(test passes and true X error <= e)")
    g.add_argument("--probs", help="JSON file written by 'simulate --export-probs'")
    g.add_argument("--qber", help="QBER for the leakage model (default: e)")
    g.add_argument("--log-t", dest="log_t", help="EC transcript bits, overrides the leakage model")
    g.add_argument("--eps-sec", dest="eps_sec", help="secrecy target for the key length")
    g.add_argument("--hoeffding-base", dest="hoeffding_base", choices=("2", "e"))
    g.add_argument("--imperfect-measurements", dest="imperfect_measurements", action="store_const", const="true",
                   help="also evaluate the bound for noisy source-test measurements")
    g.add_argument("--eps-m", dest="eps_m", help="source-test measurement error rate")
    g.add_argument("--xi", help="failure probability of the measurement-error estimate")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srckey", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", help="evaluate the min-entropy bound")
    _common(p)
    _params(p)
    _bound_flags(p)
    p.add_argument("--csv", help="also write the bound terms as CSV to this path")

    p = sub.add_parser("simulate", help="simulate source test + BB84")
    _common(p)
    _params(p)
    g = p.add_argument_group("simulation")
    g.add_argument("--trials")
    g.add_argument("--source", help="perfect | depolarized:p | tilt:kappa | coinflip:eps")
    g.add_argument("--channel", help="identity | bitflip:p | depolarizing:p | intercept:fraction")
    g.add_argument("--measurement", help="perfect | indep:err[:dprime]")
    g.add_argument("--export-probs", dest="export_probs", help="write EventProbs JSON here")
    g.add_argument("--records", help="write one JSON line per trial here")

    p = sub.add_parser("validate-sampling", help="exact vs Hoeffding sampling error")
    _common(p)
    p.add_argument("--max-total", dest="max_total", help="largest n+m")
    p.add_argument("--sample-sizes", dest="sample_sizes", help="comma-separated m values")
    p.add_argument("--delta", dest="deltas", help="comma-separated deviations")
    p.add_argument("--json", action="store_true", help="one JSON row per config")

    p = sub.add_parser("optimize", help="search parameters for the best rate")
    _common(p)
    _params(p)
    _bound_flags(p)
    g = p.add_argument_group("search space")
    for name in ("mu", "delta", "e", "m_ratio"):
        g.add_argument(f"--{name.replace('_', '-')}-range", dest=f"{name}_range", help="lo,hi")
    g.add_argument("--resolution", help="grid points per free axis")
    g.add_argument("--n-sweep", dest="n_sweep", help="comma-separated block lengths")
    g.add_argument("--json", action="store_true", help="JSON instead of CSV")
    g.add_argument("--trace", help="write every evaluated point as CSV here")
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> config.RunConfig:
    """File, then environment, then flags."""
    cfg = config.load(args.config) if getattr(args, "config", None) else config.RunConfig()
    cfg.command = args.command
    cfg.apply_env(os.environ if environ is None else environ)
    for dest, (section, key) in _FLAG_KEYS.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg.set(section, key, val)
    seed = cfg["run"]["seed"]
    if not 0 <= seed < 2**64:
        raise config.ConfigError("seed must be a 64-bit unsigned integer")
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dump_json(payload: dict) -> str:
    payload = dict(payload, schema_version=SCHEMA_VERSION)
    return json.dumps(_clean(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def dump_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        fields = ["schema_version"] + list(rows[0])
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({"schema_version": SCHEMA_VERSION,
                             **{k: repr(v) if isinstance(v, float) else v for k, v in row.items()}})
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands


def _protocol_params(cfg: config.RunConfig) -> bounds.ProtocolParams:
    return bounds.ProtocolParams(**cfg["params"])


def _event_probs(cfg: config.RunConfig, probs_path=None) -> tuple[bounds.EventProbs, float]:
    pr = dict(cfg["probs"])
    if probs_path:
        try:
            with open(probs_path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read probabilities from {probs_path}: {exc}") from None
        for key in ("p_omega", "p_omega_and_upsilon2", "p_omega_im", "qber"):
            if pr.get(key) is None and data.get(key) is not None:
                pr[key] = float(data[key])
    if pr["p_omega_and_upsilon2"] is None:
        raise UsageError("need Pr(Omega and Upsilon'') via --p-joint, --probs or [probs]")
    if pr["p_omega"] is None:
        pr["p_omega"] = pr["p_omega_and_upsilon2"]
    qber = pr.pop("qber")
    return bounds.EventProbs(**pr), (cfg["params"]["e"] if qber is None else qber)


def cmd_rate(cfg: config.RunConfig, args, out) -> int:
    params = _protocol_params(cfg)
    probs, qber = _event_probs(cfg, getattr(args, "probs", None))
    b = cfg["bounds"]
    log_t = b["log_t"] if b["log_t"] is not None else bounds.leakage_bits(params.n, qber, b["f_ec"])
    report = bounds.hmin_lower_bound(params, probs, log_t=log_t, eps_sec=b["eps_sec"],
                                     hoeffding_base=b["hoeffding_base"], imperfect=b["imperfect_measurements"])
    payload = {"command": "rate", "params": params.to_dict(), "probs": probs.to_dict(), "qber": qber,
               "report": report.to_dict()}
    out.write(dump_json(payload))
    if getattr(args, "csv", None):
        _write(args.csv, dump_csv([{"term": k, "bits": v} for k, v in report.terms.items()]))
    if not report.valid:
        print(f"precondition failed: {report.reason}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


def cmd_simulate(cfg: config.RunConfig, args, out) -> int:
    params = _protocol_params(cfg)
    sim = cfg["simulate"]
    source = protocol.parse_source(sim["source"])
    channel = protocol.parse_channel(sim["channel"])
    meas = protocol.parse_measurement(sim["measurement"])
    seed = cfg["run"]["seed"]
    est = protocol.estimate_event_probs(source, channel, params, sim["trials"], seed, meas,
                                        workers=cfg["run"]["threads"])
    summary = est.summary()
    payload = {"command": "simulate", "params": params.to_dict(), "source": source.spec(),
               "channel": channel.spec(), "measurement": meas.spec(), "summary": summary}
    out.write(dump_json(payload))
    if getattr(args, "export_probs", None):
        probs = dict(est.probs.to_dict(), qber=est.mean_qber, trials=sim["trials"], master_seed=seed)
        _write(args.export_probs, dump_json(probs))
    if getattr(args, "records", None):
        lines = [protocol.run_protocol(source, channel, params, protocol.trial_rng(seed, t), meas).to_bytes()
                 for t in range(sim["trials"])]
        _write(args.records, "".join(line.decode() + "\n" for line in lines))
    return EXIT_OK


def cmd_validate_sampling(cfg: config.RunConfig, args, out) -> int:
    s = cfg["sampling"]
    if s["max_total"] > sampling.MAX_TOTAL:
        raise UsageError(f"max_total={s['max_total']} exceeds the guard {sampling.MAX_TOTAL}")
    configs = sampling.default_suite(s["max_total"], s["sample_sizes"], s["deltas"])
    try:
        checks = sampling.run_suite(configs)
    except sampling.SamplingError as exc:
        raise UsageError(str(exc)) from None
    failures = sum(not c.passed for c in checks)
    if getattr(args, "json", False):
        out.write(dump_json({"command": "validate-sampling", "rows": [c.to_row() for c in checks],
                             "violations": failures, "all_pass": failures == 0}))
    else:
        for c in checks:
            out.write(f"n={c.n:2d} m={c.m} delta={c.delta:<5g} exact={c.exact:.6g} "
                      f"bound2={c.bound_base2:.6g} boundE={c.bound_basee:.6g} {'PASS' if c.passed else 'FAIL'}\n")
        out.write(f"{len(checks)} configs, {failures} violations\n")
    return EXIT_OK if failures == 0 else EXIT_PRECONDITION


def _search_space(cfg: config.RunConfig, probs: bounds.EventProbs, qber: float) -> optimizer.SearchSpace:
    p, o, b = cfg["params"], cfg["optimize"], cfg["bounds"]
    return optimizer.SearchSpace(
        n=p["n"], eps_src=p["eps_src"], qber=qber, probs=probs, mu=o["mu_range"], delta=o["delta_range"],
        e=o["e_range"], m_ratio=o["m_ratio_range"], resolution=o["resolution"], eps_prime=p["eps_prime"],
        eps_sec=b["eps_sec"], f_ec=b["f_ec"], alphabet_size=p["alphabet_size"], hoeffding_base=b["hoeffding_base"])


def cmd_optimize(cfg: config.RunConfig, args, out) -> int:
    probs, qber = _event_probs(cfg, getattr(args, "probs", None))
    try:
        space = _search_space(cfg, probs, qber)
    except optimizer.OptimizerError as exc:
        raise UsageError(str(exc)) from None
    n_values = cfg["optimize"]["n_sweep"] or (space.n,)
    try:
        rows = optimizer.rate_curve(space, n_values)
    except optimizer.OptimizerError as exc:
        raise UsageError(str(exc)) from None
    if getattr(args, "trace", None):
        res = optimizer.optimize_rate(space.with_n(n_values[-1]))
        trace_rows = [{"stage": ev.stage, **ev.point, "objective": ev.objective, "valid": ev.valid}
                      for ev in res.trace]
        _write(args.trace, dump_csv(trace_rows))
    table = [r.to_row() for r in rows]
    if getattr(args, "json", False):
        out.write(dump_json({"command": "optimize", "rows": table,
                             "infeasible_n": [n for n in n_values if n not in {r.n for r in rows}]}))
    else:
        out.write(dump_csv(table))
    if len(rows) < len(n_values):
        missing = [n for n in n_values if n not in {r.n for r in rows}]
        print(f"no feasible parameters for n in {missing}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


COMMANDS = {"rate": cmd_rate, "simulate": cmd_simulate, "validate-sampling": cmd_validate_sampling,
            "optimize": cmd_optimize}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            out.write(cfg.dumps())
            return EXIT_OK
        return COMMANDS[args.command](cfg, args, out)
    except (config.ConfigError, UsageError, bounds.BoundsError, protocol.ProtocolError,
            sampling.SamplingError, optimizer.OptimizerError) as exc:
        print(f"srckey {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
