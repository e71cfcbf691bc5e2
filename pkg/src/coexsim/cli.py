"""Command line: ``run``, ``sweep`` and ``report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config, parse_config, write_echo
from .experiments import (RunSpec, eval1_specs, eval2_specs, format_summary, read_outputs,
                          run_specs, summarize, summarize_results, write_results)

log = logging.getLogger("coexsim")


def _load(args) -> ScenarioConfig:
    cfg = parse_config(args.config) if args.config else load_config({})
    updates = {}
    if args.profile:
        updates["sim__profile"] = args.profile
    if args.duration is not None:
        updates["sim__duration_s"] = args.duration
    return cfg.with_updates(**updates) if updates else cfg


def _parse_assignment(text: str, allowed: tuple[str, ...]) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or name not in allowed or not value:
        raise argparse.ArgumentTypeError(f"expected one of {'|'.join(allowed)}=<value>, got {text!r}")
    return name, value


def cmd_run(args) -> int:
    cfg = _load(args)
    spec = RunSpec(cfg, args.seed)
    results = run_specs([spec])
    write_results([spec], results, args.out)
    write_echo(cfg, args.out)
    print(format_summary(summarize_results(results, cfg.metrics.a_req, cfg.metrics.gamma)))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    fixed_name, fixed_value = _parse_assignment(args.fixed, ("N", "n"))
    vary_name, vary_value = _parse_assignment(args.vary, ("eta", "N"))
    seeds = args.seeds if args.seeds is not None else cfg.sim.seeds
    if args.mode == "eval1":
        if (fixed_name, vary_name) != ("N", "eta"):
            raise ConfigError("eval1 takes --fixed N=<int> --vary eta=<list>")
        specs = eval1_specs(cfg, int(fixed_value), [float(v) for v in vary_value.split(",")], seeds)
    else:
        if (fixed_name, vary_name) != ("n", "N"):
            raise ConfigError("eval2 takes --fixed n=<int> --vary N=<list>")
        specs = eval2_specs(cfg, int(fixed_value), [int(v) for v in vary_value.split(",")], seeds)
    log.info("running %d simulations with %d worker(s)", len(specs), args.workers)
    results = run_specs(specs, args.workers)
    write_results(specs, results, args.out)
    write_echo(cfg, args.out)
    print(format_summary(summarize_results(results, cfg.metrics.a_req, cfg.metrics.gamma)))
    return 0


def cmd_report(args) -> int:
    urllc, ai = read_outputs(args.input)
    print(format_summary(summarize(urllc, ai, args.a_req, args.gamma)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coexsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--config", type=Path, help="YAML scenario file; omitted keys take defaults")
        sp.add_argument("--profile", choices=("paper", "desk"), help="override sim.profile")
        sp.add_argument("--duration", type=float, help="override sim.duration_s (seconds)")
        sp.add_argument("--out", type=Path, required=True, help="output directory")

    r = sub.add_parser("run", help="simulate one (config, seed) pair")
    scenario_args(r)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="fixed-N (eval1) or fixed-n (eval2) sweep")
    scenario_args(s)
    s.add_argument("--mode", choices=("eval1", "eval2"), required=True)
    s.add_argument("--fixed", required=True, help="N=<int> for eval1, n=<int> for eval2")
    s.add_argument("--vary", required=True, help="eta=<list> for eval1, N=<list> for eval2")
    s.add_argument("--seeds", type=int, help="seed count (default: sim.seeds)")
    s.add_argument("--workers", type=int, default=1, help="parallel runs")
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="summarize CSV outputs of run or sweep")
    rep.add_argument("--in", dest="input", type=Path, required=True)
    rep.add_argument("--a-req", type=float, default=0.95)
    rep.add_argument("--gamma", type=float, default=0.01)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, argparse.ArgumentTypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
