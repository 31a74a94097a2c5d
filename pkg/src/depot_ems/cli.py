"""Command-line workflow driver.

Subcommands follow the pipeline stages:

    gen-data    emit a synthetic station bundle (config + CSV inputs)
    solve-day   solve one day's schedule and write its CSV/JSON
    run-year    solve every day, write training pairs and the year report
    fit         fit the sparse polynomial-chaos cost surrogate
    infer       fit the solar kernel-density model
    evaluate    sample scenarios and evaluate the surrogate
    benchmark   surrogate vs exact-solver comparison on shared scenarios

Exit codes: 0 success, 2 configuration/input error, 3 solve failure,
4 missing upstream artifact.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, pipeline, synth
from . import scen as _scen
from .domain import station_config_from_dict, validate_config
from .errors import DepotEmsError, ValidationError
from .ems import schedule_summary_json, schedule_to_csv, solve_day as _solve_day, build_day_model
from .ingest import assemble_scenarios, load_prices, load_schedule, load_soc_records, load_solar, pair_soc_records
from .milp import SolveOptions
from .pce import OmpOptions, model_from_json, model_to_json
from .util import sha256_file, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVE = 3
EXIT_MISSING = 4


def _load_station(path: str):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file {p} does not exist")
    config = station_config_from_dict(json.loads(p.read_text()))
    return validate_config(config)


def _load_inputs(args):
    config = _load_station(args.config)
    tg = config.time_grid
    prices, _ = load_prices(args.prices, tg)
    solar, _ = load_solar(
        args.solar, config.pv.panel_area_m2, config.pv.panel_efficiency, tg
    )
    schedule = load_schedule(args.schedule, tg)
    if args.soc_records:
        records = load_soc_records(args.soc_records)
        schedule, _count = pair_soc_records(records, schedule, default=(40.0, 90.0))
    scenarios = assemble_scenarios(prices, solar)
    hashes = {
        "config": sha256_file(args.config),
        "prices": sha256_file(args.prices),
        "solar": sha256_file(args.solar),
        "schedule": sha256_file(args.schedule),
    }
    if args.soc_records:
        hashes["soc_records"] = sha256_file(args.soc_records)
    return config, schedule, scenarios, hashes


def _solver_options(args) -> SolveOptions:
    return SolveOptions(mode=getattr(args, "mode", "exact"))


def _cmd_gen_data(args) -> int:
    config = (
        _load_station(args.config)
        if args.config
        else (synth.desk_station_config() if args.scale == "desk" else synth.reference_station_config())
    )
    files = synth.write_bundle(args.out, config, args.days, args.seed)
    print(f"wrote {len(files)} files to {args.out}")
    return EXIT_OK


def _cmd_solve_day(args) -> int:
    config, schedule, scenarios, hashes = _load_inputs(args)
    wanted = [s for s in scenarios if s.label == args.day] if args.day else scenarios[:1]
    if not wanted:
        print(f"day {args.day!r} not present in the inputs", file=sys.stderr)
        return EXIT_CONFIG
    scenario = wanted[0]
    handle = build_day_model(scenario, config, schedule)
    day = _solve_day(handle, _solver_options(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"schedule_{scenario.label}.csv").write_text(schedule_to_csv(day))
    (out / f"schedule_{scenario.label}.json").write_text(schedule_summary_json(day))
    pipeline.build_manifest(out, hashes, config, None, [f"schedule_{scenario.label}.csv", f"schedule_{scenario.label}.json"])
    print(
        f"{scenario.label}: status {day.status}, cost {day.objective_cents:.2f} cents "
        f"({day.objective_dollars:.2f} dollars)"
    )
    return EXIT_OK


def _cmd_run_year(args) -> int:
    config, schedule, scenarios, hashes = _load_inputs(args)
    histories = pipeline.histories_from_scenarios(scenarios)
    if args.enrich > 0:
        scenarios = scenarios + pipeline.enrich_scenarios(
            scenarios, args.enrich, args.delta, args.seed
        )
    report, training = pipeline.run_year(
        scenarios, config, schedule, workers=args.workers, options=_solver_options(args)
    )
    report.provenance = {"input_sha256": dict(sorted(hashes.items())), "seed": args.seed}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emitted = pipeline.emit_year_report(out, report, training, histories)
    pipeline.save_run_context(out, config, schedule)
    pipeline.build_manifest(out, hashes, config, args.seed, emitted + ["run_context.json"])
    print(
        f"{len(scenarios)} scenarios solved; mean cost {report.stats['mean']:.2f} cents, "
        f"p5 {report.stats['p5']:.2f}, p95 {report.stats['p95']:.2f}"
    )
    return EXIT_OK


def _cmd_fit(args) -> int:
    training = pipeline.load_training(args.run)
    options = OmpOptions(max_terms=args.max_terms)
    model = pipeline.fit_surrogate(training, order=args.order, q=args.q, options=options)
    out = Path(args.out or args.run)
    out.mkdir(parents=True, exist_ok=True)
    (out / "pce_model.json").write_text(model_to_json(model))
    write_json(out / "fit_summary.json", {"order": args.order, "q": args.q, **model.diagnostics})
    print(
        f"fitted {model.diagnostics['active_terms']} active terms; "
        f"training rmse {model.diagnostics['training_rmse']:.4g} cents"
    )
    return EXIT_OK


def _cmd_infer(args) -> int:
    histories = pipeline.load_histories(args.run)
    kde = _scen.fit_kde(histories.solar)
    out = Path(args.out or args.run)
    out.mkdir(parents=True, exist_ok=True)
    (out / "kde_model.json").write_text(_scen.kde_to_json(kde))
    n_active = int((~kde.frozen).sum())
    print(f"kernel model over {kde.n_days} days; {n_active} active dimensions")
    return EXIT_OK


def _load_model(args):
    path = Path(args.model) if args.model else Path(args.run) / "pce_model.json"
    if not path.exists():
        raise FileNotFoundError(f"missing upstream artifact {path}")
    return model_from_json(path.read_text())


def _load_kde(args):
    path = Path(args.kde) if args.kde else Path(args.run) / "kde_model.json"
    if not path.exists():
        return None
    return _scen.kde_from_json(path.read_text())


def _cmd_evaluate(args) -> int:
    histories = pipeline.load_histories(args.run)
    model = _load_model(args)
    lam_val, stats, _zeta = pipeline.evaluate_surrogate(
        model, histories, args.samples, delta=args.delta, seed=args.seed, kde=_load_kde(args)
    )
    out = Path(args.out or args.run)
    pipeline.emit_eval_report(out, lam_val, stats, args.seed, args.delta)
    print(
        f"{args.samples} surrogate evaluations; mean {stats['mean']:.2f} cents, "
        f"p5 {stats['p5']:.2f}, p95 {stats['p95']:.2f}"
    )
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    training = pipeline.load_training(args.run)
    histories = pipeline.load_histories(args.run)
    config, schedule = pipeline.load_run_context(args.run)
    model = _load_model(args)
    report, _lam_val, _lam_mc = pipeline.run_benchmark(
        model,
        training,
        histories,
        config,
        schedule,
        m_val=args.samples,
        m_mc=args.mc_count,
        delta=args.delta,
        seed=args.seed,
        workers=args.workers,
        options=_solver_options(args),
        kde=_load_kde(args),
    )
    out = Path(args.out or args.run)
    pipeline.emit_benchmark_report(out, report)
    print(
        f"normalized mean error {report.normalized_mean_error_pct:+.3f}% "
        f"(surrogate {report.surrogate_subset_stats['mean']:.2f} vs "
        f"exact {report.mc_stats['mean']:.2f} cents on {report.m_mc} shared scenarios); "
        f"speedup {report.speedup_factor:.0f}x"
    )
    return EXIT_OK


def _add_input_flags(sp, with_soc=True):
    sp.add_argument("--config", required=True, help="station JSON config file")
    sp.add_argument("--prices", required=True, help="price CSV (date,hour,price_dollars_per_mwh)")
    sp.add_argument("--solar", required=True, help="solar CSV (date,step,ghi_w_per_m2)")
    sp.add_argument("--schedule", required=True, help="parking schedule CSV")
    if with_soc:
        sp.add_argument("--soc-records", help="SoC record CSV (bus,window,arrival,departure)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="depot-ems",
        description="Day-ahead charging-depot scheduling with a polynomial-chaos cost surrogate",
    )
    ap.add_argument("--version", action="version", version=f"depot-ems {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen-data", help="write a synthetic data bundle")
    sp.add_argument("--out", required=True)
    sp.add_argument("--days", type=int, default=365)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale", choices=["desk", "full"], default="desk")
    sp.add_argument("--config", help="use this station config instead of a built-in one")
    sp.set_defaults(func=_cmd_gen_data)

    sp = sub.add_parser("solve-day", help="solve a single day")
    _add_input_flags(sp)
    sp.add_argument("--day", help="date label to solve (default: first day)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--mode", choices=["exact", "relax-repair"], default="exact")
    sp.set_defaults(func=_cmd_solve_day)

    sp = sub.add_parser("run-year", help="solve all days and write training pairs")
    _add_input_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--mode", choices=["exact", "relax-repair"], default="exact")
    sp.add_argument("--enrich", type=int, default=0, help="extra synthetic training days")
    sp.add_argument("--delta", type=float, default=0.10, help="price perturbation band")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_run_year)

    sp = sub.add_parser("fit", help="fit the polynomial-chaos surrogate")
    sp.add_argument("--run", required=True, help="run-year output directory")
    sp.add_argument("--out", help="output directory (default: the run directory)")
    sp.add_argument("--order", type=int, default=3)
    sp.add_argument("--q", type=float, default=1.0)
    sp.add_argument("--max-terms", type=int, default=None)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("infer", help="fit the solar kernel-density model")
    sp.add_argument("--run", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_infer)

    sp = sub.add_parser("evaluate", help="evaluate the surrogate on sampled scenarios")
    sp.add_argument("--run", required=True)
    sp.add_argument("--model", help="surrogate JSON (default: run dir's pce_model.json)")
    sp.add_argument("--kde", help="KDE JSON (default: run dir's kde_model.json if present)")
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--delta", type=float, default=0.10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("benchmark", help="surrogate vs exact solver on shared scenarios")
    sp.add_argument("--run", required=True)
    sp.add_argument("--model")
    sp.add_argument("--kde")
    sp.add_argument("--samples", type=int, default=5000)
    sp.add_argument("--mc-count", type=int, default=1000)
    sp.add_argument("--delta", type=float, default=0.10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--mode", choices=["exact", "relax-repair"], default="exact")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_benchmark)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING if "artifact" in str(exc) else EXIT_CONFIG
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DepotEmsError as exc:
        code = EXIT_SOLVE if exc.code in {
            "INFEASIBLE", "UNBOUNDED", "ITER_LIMIT", "NODE_LIMIT", "TOO_MANY_BINARIES",
        } else EXIT_CONFIG
        print(f"error: {exc}", file=sys.stderr)
        return code
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_SOLVE


if __name__ == "__main__":
    sys.exit(main())
