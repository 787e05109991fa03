"""Command-line front end: ``rig simulate``, ``rig verify-bounds`` and ``rig plan``.

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error,
3 bound violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, bounds, oracle, plots
from .config import RunConfig, load_config, parse_seeds
from .errors import ConfigError, RigError
from .objectives import as_set_function
from .resilient import algorithm1
from .sim import MetricsTimeline, Mode, grid_placement, run_trials, streams, summarize

log = logging.getLogger("rig")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2, 3
CSV_SCHEMA_VERSION = 1
TIMELINE_COLUMNS = ("step", "rmse_mean", "rmse_peak", "entropy_mean", "logdet_raw", "attacked_ids")
SUMMARY_COLUMNS = ("mode", "seed", "mean_rmse", "peak_rmse", "mean_entropy", "attack_method")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _num(x: float) -> str:
    # shortest round-trip representation: stable across runs and platforms
    return repr(float(x))


def timeline_csv(tl: MetricsTimeline) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMELINE_COLUMNS)
    rm, rp, em = tl.rmse_mean, tl.rmse_peak, tl.entropy_mean
    for t in range(tl.steps):
        ids = ";".join(str(i) for i in sorted(tl.attacked[t]))
        w.writerow([t + 1, _num(rm[t]), _num(rp[t]), _num(em[t]), _num(tl.logdet_raw[t]), ids])
    return buf.getvalue()


def summary_csv(timelines: dict[tuple[str, int], MetricsTimeline]) -> str:
    summ = summarize(timelines)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for (mode, seed), st in summ.trials.items():
        method = timelines[(mode, seed)].attack_method
        w.writerow([mode, seed, _num(st.mean_rmse), _num(st.peak_rmse), _num(st.mean_entropy), method])
    for mode, st in summ.per_mode.items():
        w.writerow([mode, "all", _num(st.mean_rmse), _num(st.peak_rmse), _num(st.mean_entropy), ""])
    return buf.getvalue()


def threads_from(flag: int | None) -> int:
    env = os.environ.get("RIG_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"RIG_THREADS must be an integer, got {env!r}") from exc
    else:
        n = flag if flag is not None else 1
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def _override(cfg: RunConfig, args) -> RunConfig:
    run = dict(cfg.run)
    if args.seeds is not None:
        run["seeds"] = parse_seeds(args.seeds)
    if args.modes is not None:
        run["modes"] = [m.strip() for m in args.modes.split(",") if m.strip()]
        valid = [m.value for m in Mode]
        if not run["modes"] or any(m not in valid for m in run["modes"]):
            raise ConfigError(f"--modes must be a comma list drawn from {valid}")
    if args.out is not None:
        run["out"] = args.out
    return replace(cfg, run=run)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_simulate(args) -> int:
    cfg = _override(load_config(args.config), args)
    threads = threads_from(args.threads)
    out = Path(cfg.run["out"])
    seeds, modes = cfg.seeds(), cfg.modes()
    files = [f"timeline_{m.value}_{s}.csv" for m in modes for s in seeds] + ["summary.csv"]
    if cfg.run["plots"]:
        files += ["plots/rmse.svg", "plots/entropy.svg"]
    manifest = {
        "tool": "rig",
        "version": __version__,
        "config_hash": cfg.digest(),
        "config": cfg.semantic(),
        "csv_schema": {"version": CSV_SCHEMA_VERSION, "timeline": list(TIMELINE_COLUMNS),
                       "summary": list(SUMMARY_COLUMNS)},
        "seeds": seeds,
        "modes": [m.value for m in modes],
        "outputs": files,
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    if args.dry_run:
        print(f"dry run: manifest written to {out / 'manifest.json'}")
        return EXIT_OK
    timelines = run_trials(cfg.scenario(), seeds, modes, placement=cfg.placement,
                           spacing=cfg.team["spacing"], threads=threads)
    # single writer: every file is written here, in a fixed order
    for m in modes:
        for s in seeds:
            _write(out / f"timeline_{m.value}_{s}.csv", timeline_csv(timelines[(m.value, s)]))
    _write(out / "summary.csv", summary_csv(timelines))
    if cfg.run["plots"]:
        _write(out / "plots/rmse.svg", plots.band_plot(timelines, "rmse_mean", "RMSE per target [m]"))
        _write(out / "plots/entropy.svg", plots.band_plot(timelines, "entropy_mean", "entropy [nats]"))
    summ = summarize(timelines)
    for mode, st in summ.per_mode.items():
        print(f"{mode:>13}: mean RMSE {st.mean_rmse:.4f}  peak RMSE {st.peak_rmse:.4f}  "
              f"mean entropy {st.mean_entropy:.4f}")
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    suites = [s.strip() for s in args.suites.split(",") if s.strip()]
    unknown = set(suites) - set(bounds.SUITES)
    if not suites or unknown:
        raise ConfigError(f"--suites must be a comma list drawn from {list(bounds.SUITES)}")
    if args.instances < 1:
        raise ConfigError("--instances must be positive")
    records = bounds.run_suites(
        suites, n_instances=args.instances, seed=args.seed, scale=args.scale_guarantee,
        n_monotone=args.monotone_instances,
    )
    violations = [r for r in records if not r["ok"]]
    report = {
        "version": __version__,
        "suites": suites,
        "seed": args.seed,
        "instances": args.instances,
        "scale_guarantee": args.scale_guarantee,
        "checked": len(records),
        "violations": len(violations),
        "records": records,
    }
    out = Path(args.out)
    _write(out / "bounds_report.json", json.dumps(report, indent=2, default=_jsonable) + "\n")
    by_suite: dict[str, list[dict]] = {}
    for r in records:
        by_suite.setdefault(r["suite"], []).append(r)
    for suite, rows in by_suite.items():
        bad = sum(not r["ok"] for r in rows)
        print(f"{suite:>9}: {len(rows)} checked, {bad} violations")
    if violations:
        print("first counterexample:", file=sys.stderr)
        print(json.dumps(violations[0], indent=2, default=_jsonable), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, (np.integer, np.floating)):
        return x.item()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def cmd_plan(args) -> int:
    cfg = load_config(args.config)
    scenario = cfg.scenario()
    if cfg.placement == "grid":
        scenario = grid_placement(scenario, streams(args.seed)["placement"], cfg.team["spacing"])
    res = algorithm1(scenario)
    view = as_set_function(scenario, res.plans)
    attack = oracle.worst_case_attack(view, scenario.alpha) if view.n <= oracle.MAX_GROUND else None
    doc = {
        "robots": [list(r) for r in scenario.robots],
        "target_means": scenario.prior_mean.reshape(-1, 4)[:, :2].tolist(),
        "alpha": res.alpha,
        "bait": sorted(res.bait.members),
        "solo_values": {str(i): v for i, v in sorted(res.bait.marginals.items())},
        "plans": {str(i): [list(u) for u in seq] for i, seq in res.plans.items()},
        "rounds": res.rounds,
        "value": view(scenario.robot_ids),
        "worst_case_attack": None if attack is None else
        {"removed": sorted(attack.A_star), "value": attack.value},
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rig", description="Resilient multi-robot information gathering.")
    p.add_argument("--version", action="version", version=f"rig {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run closed-loop tracking trials")
    s.add_argument("--config", required=True)
    s.add_argument("--seeds", help="count (10), range (3-7) or list (1,4,9)")
    s.add_argument("--modes", help="comma list: resilient,nonresilient")
    s.add_argument("--out")
    s.add_argument("--dry-run", action="store_true")
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("verify-bounds", help="check the approximation guarantees on random instances")
    b.add_argument("--suites", default=",".join(bounds.SUITES))
    b.add_argument("--instances", type=int, default=100)
    b.add_argument("--monotone-instances", type=int)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=".")
    b.add_argument("--scale-guarantee", type=float, default=1.0, help=argparse.SUPPRESS)
    b.set_defaults(func=cmd_verify_bounds)

    q = sub.add_parser("plan", help="print one resilient plan as JSON")
    q.add_argument("--config", required=True)
    q.add_argument("--seed", type=int, default=0, help="placement seed for grid placement")
    q.add_argument("--out")
    q.set_defaults(func=cmd_plan)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"rig: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"rig: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RigError, ValueError, ArithmeticError, OSError) as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"rig: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
