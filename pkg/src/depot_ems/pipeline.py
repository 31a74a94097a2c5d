"""Workflow orchestration: yearly scheduling runs, surrogate training,
scenario evaluation, the Monte-Carlo benchmark, and report files.

Scenario solves run on a thread pool; the simplex kernels release the GIL,
so threads scale across cores while results stay ordered by scenario index.
All report files are deterministic for a fixed (inputs, config, seed); wall
times live in a separate timings file so reports can be compared
byte-for-byte.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pce as _pce
from . import scen as _scen
from .domain import (
    ParkingSchedule,
    ParkingWindow,
    ScenarioInput,
    StationConfig,
    station_config_from_dict,
    station_config_to_dict,
)
from .ems import build_day_model, check_feasibility, solve_day
from .errors import PceError, SolverError
from .milp import SolveOptions
from .pce import OmpOptions, PceModel, fit_pce, surrogate_eval, surrogate_stats
from .util import canonical_json, fmt, sha256_text, write_csv, write_json

_PRICE_SEED_OFFSET = 1_000_003  # decorrelates price streams from solar streams


@dataclass
class TrainingSet:
    """Input-response pairs: rows are [solar steps | import price points]."""

    zeta: np.ndarray
    lam_cents: np.ndarray
    labels: list[str]
    solar_dims: int
    price_dims: int

    def solar_history(self) -> np.ndarray:
        return self.zeta[:, : self.solar_dims]

    def price_history(self) -> np.ndarray:
        return self.zeta[:, self.solar_dims :]


@dataclass
class Histories:
    """The measured day matrices that scenario generators resample from.

    Kept separate from the training set: training rows may include enriched
    (already resampled) days, but inference always starts from the measured
    history."""

    solar: np.ndarray  # days x steps
    price: np.ndarray  # days x price points

    @property
    def solar_dims(self) -> int:
        return self.solar.shape[1]


def histories_from_scenarios(scenarios: list[ScenarioInput]) -> Histories:
    return Histories(
        solar=np.vstack([s.solar_kw for s in scenarios]),
        price=np.vstack([s.import_price_cents_per_kwh for s in scenarios]),
    )


@dataclass
class YearlyRunReport:
    labels: list[str]
    lam_cents: np.ndarray
    statuses: list[str]
    wall_seconds: list[float]
    stats: dict
    max_check_violation: float
    total_slack_pct: float
    provenance: dict = field(default_factory=dict)


@dataclass
class BenchmarkReport:
    surrogate_stats: dict
    surrogate_subset_stats: dict
    mc_stats: dict
    normalized_mean_error_pct: float
    m_train: int
    m_val: int
    m_mc: int
    speedup_factor: float
    surrogate_seconds_per_scenario: float
    mc_seconds_per_scenario: float


def scenario_to_features(scenario: ScenarioInput) -> np.ndarray:
    return np.concatenate(
        [scenario.solar_kw, scenario.import_price_cents_per_kwh]
    )


def features_to_scenario(
    row: np.ndarray, solar_dims: int, label: str = ""
) -> ScenarioInput:
    solar = row[:solar_dims]
    price = row[solar_dims:]
    return ScenarioInput(
        solar_kw=np.maximum(solar, 0.0),
        import_price_cents_per_kwh=price,
        export_price_cents_per_kwh=price,
        label=label,
    )


def _solve_one(args):
    idx, scenario, config, schedule, options, check_tol = args
    t0 = time.perf_counter()
    try:
        handle = build_day_model(scenario, config, schedule)
        day = solve_day(handle, options)
    except SolverError as exc:
        # recorded in the report; the rest of the run continues
        return idx, None, time.perf_counter() - t0, 0.0, exc.code
    wall = time.perf_counter() - t0
    report = check_feasibility(day, scenario, config, schedule, tol=check_tol)
    return idx, day, wall, report.max_violation, day.status


def run_year(
    scenarios: list[ScenarioInput],
    config: StationConfig,
    schedule: ParkingSchedule,
    workers: int = 1,
    options: SolveOptions | None = None,
    check_tol: float = 1e-6,
) -> tuple[YearlyRunReport, TrainingSet]:
    """One exact solve per scenario; aggregates are independent of worker
    count because results are keyed by scenario index. Failed days keep their
    report slot (status + NaN cost) but contribute no training pair."""
    if not scenarios:
        raise SolverError("VALIDATION", "no scenarios to run")
    options = options or SolveOptions()
    tasks = [
        (i, s, config, schedule, options, check_tol) for i, s in enumerate(scenarios)
    ]
    results: dict[int, tuple] = {}
    if workers <= 1:
        for task in tasks:
            idx, day, wall, viol, status = _solve_one(task)
            results[idx] = (day, wall, viol, status)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for idx, day, wall, viol, status in pool.map(_solve_one, tasks):
                results[idx] = (day, wall, viol, status)

    lam = np.full(len(scenarios), np.nan)
    labels, statuses, walls = [], [], []
    max_viol = 0.0
    slack_total = 0.0
    rows = []
    ok_lams = []
    for i, scenario in enumerate(scenarios):
        day, wall, viol, status = results[i]
        labels.append(scenario.label or f"scenario{i:04d}")
        statuses.append(status)
        walls.append(wall)
        if day is None:
            continue
        lam[i] = day.objective_cents
        ok_lams.append(day.objective_cents)
        max_viol = max(max_viol, viol)
        slack_total += sum(day.window_slack_pct.values())
        rows.append(scenario_to_features(scenario))

    if not ok_lams:
        raise SolverError("INFEASIBLE", "every scenario failed to solve")
    report = YearlyRunReport(
        labels=labels,
        lam_cents=lam,
        statuses=statuses,
        wall_seconds=walls,
        stats=surrogate_stats(np.asarray(ok_lams)),
        max_check_violation=max_viol,
        total_slack_pct=slack_total,
    )
    tg = config.time_grid
    training = TrainingSet(
        zeta=np.vstack(rows),
        lam_cents=np.asarray(ok_lams),
        labels=[labels[i] for i in range(len(scenarios)) if results[i][0] is not None],
        solar_dims=tg.steps_per_day,
        price_dims=tg.price_points_per_day,
    )
    return report, training


def enrich_scenarios(
    scenarios: list[ScenarioInput],
    count: int,
    delta: float,
    seed: int,
) -> list[ScenarioInput]:
    """Additional synthetic days from the historical ones: smoothed-bootstrap
    solar plus banded price perturbation (their own label namespace)."""
    if count <= 0:
        return []
    hist = histories_from_scenarios(scenarios)
    solar = _scen.sample_solar_scenarios(hist.solar, count, seed)
    price = _scen.perturb_prices(hist.price, count, delta, seed + _PRICE_SEED_OFFSET)
    return [
        ScenarioInput(
            solar_kw=solar[i],
            import_price_cents_per_kwh=price[i],
            export_price_cents_per_kwh=price[i],
            label=f"enriched{i:05d}",
        )
        for i in range(count)
    ]


def fit_surrogate(
    training: TrainingSet,
    order: int = 3,
    q: float = 1.0,
    options: OmpOptions | None = None,
    index_cap: int = 1_000_000,
) -> PceModel:
    """Fit the cost surrogate on the training pairs."""
    options = options or OmpOptions()
    m_tr = training.zeta.shape[0]
    cap = options.max_terms
    if cap is None:
        cap = max(1, min(m_tr // 3, 10**9))
    if m_tr < 2 * cap:
        raise PceError(
            "DEGENERATE",
            f"need at least 2x the active-term cap in training rows: {m_tr} < {2 * cap}",
        )
    model = fit_pce(training.zeta, training.lam_cents, order, q, options, index_cap)
    model.diagnostics["m_train"] = int(m_tr)
    model.diagnostics["solar_dims"] = training.solar_dims
    model.diagnostics["price_dims"] = training.price_dims
    model.diagnostics["order"] = int(order)
    model.diagnostics["q"] = float(q)
    model.diagnostics["max_terms"] = int(cap)
    return model


def generate_validation_inputs(
    histories: Histories,
    count: int,
    delta: float,
    seed: int,
    kde: _scen.KdeModel | None = None,
) -> np.ndarray:
    """Validation feature rows [solar | price], reproducible in (seed, index)."""
    if kde is None:
        kde = _scen.fit_kde(histories.solar)
    solar = _scen.sample_solar_scenarios(histories.solar, count, seed, model=kde)
    price = _scen.perturb_prices(histories.price, count, delta, seed + _PRICE_SEED_OFFSET)
    return np.hstack([solar, price])


def evaluate_surrogate(
    model: PceModel,
    histories: Histories,
    count: int,
    delta: float = 0.10,
    seed: int = 0,
    kde: _scen.KdeModel | None = None,
) -> tuple[np.ndarray, dict, np.ndarray]:
    """Sample validation scenarios, evaluate the surrogate, return
    (lambda values, stats, feature rows)."""
    zeta_val = generate_validation_inputs(histories, count, delta, seed, kde)
    lam_val = surrogate_eval(model, zeta_val)
    return lam_val, surrogate_stats(lam_val), zeta_val


def mc_benchmark(
    zeta_rows: np.ndarray,
    solar_dims: int,
    config: StationConfig,
    schedule: ParkingSchedule,
    workers: int = 1,
    options: SolveOptions | None = None,
) -> tuple[np.ndarray, dict]:
    """Exact solves over the given feature rows (the shared scenario subset)."""
    scenarios = [
        features_to_scenario(zeta_rows[i], solar_dims, label=f"mc{i:05d}")
        for i in range(zeta_rows.shape[0])
    ]
    report, _training = run_year(scenarios, config, schedule, workers, options)
    return report.lam_cents, report.stats


def run_benchmark(
    model: PceModel,
    training: TrainingSet,
    histories: Histories,
    config: StationConfig,
    schedule: ParkingSchedule,
    m_val: int,
    m_mc: int,
    delta: float = 0.10,
    seed: int = 0,
    workers: int = 1,
    options: SolveOptions | None = None,
    kde: _scen.KdeModel | None = None,
) -> tuple[BenchmarkReport, np.ndarray, np.ndarray]:
    """Surrogate vs exact-solver comparison on a shared scenario set.

    The surrogate is evaluated on all m_val rows; the exact solver runs on
    the first m_mc of them; the normalized mean error compares the two
    estimators on that shared subset.
    """
    t0 = time.perf_counter()
    lam_val, stats_val, zeta_val = evaluate_surrogate(
        model, histories, m_val, delta, seed, kde
    )
    sur_time = time.perf_counter() - t0
    m_mc = min(m_mc, m_val)
    shared = zeta_val[:m_mc]

    t0 = time.perf_counter()
    lam_mc, stats_mc = mc_benchmark(
        shared, histories.solar_dims, config, schedule, workers, options
    )
    mc_time = time.perf_counter() - t0

    stats_shared = surrogate_stats(lam_val[:m_mc])
    mean_mc = stats_mc["mean"]
    err_pct = (stats_shared["mean"] - mean_mc) / abs(mean_mc) * 100.0 if mean_mc else np.inf
    sur_per = sur_time / max(m_val, 1)
    mc_per = mc_time / max(m_mc, 1)
    report = BenchmarkReport(
        surrogate_stats=stats_val,
        surrogate_subset_stats=stats_shared,
        mc_stats=stats_mc,
        normalized_mean_error_pct=float(err_pct),
        m_train=int(training.zeta.shape[0]),
        m_val=int(m_val),
        m_mc=int(m_mc),
        speedup_factor=float(mc_per / sur_per) if sur_per > 0 else np.inf,
        surrogate_seconds_per_scenario=float(sur_per),
        mc_seconds_per_scenario=float(mc_per),
    )
    return report, lam_val, lam_mc


# --- report emission -----------------------------------------------------------


def _hist_rows(stats: dict):
    edges = stats["histogram"]["edges"]
    counts = stats["histogram"]["counts"]
    return [
        [fmt(edges[i]), fmt(edges[i + 1]), counts[i]] for i in range(len(counts))
    ]


def emit_year_report(
    out_dir: str | Path,
    report: YearlyRunReport,
    training: TrainingSet,
    histories: Histories | None = None,
) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(
        out / "year_summary.json",
        {
            "scenario_count": len(report.labels),
            "stats_cents": report.stats,
            "statuses": sorted(set(report.statuses)),
            "max_feasibility_violation": report.max_check_violation,
            "total_departure_slack_pct": round(report.total_slack_pct, 9),
            "provenance": report.provenance,
        },
    )
    write_csv(
        out / "lambda_per_day.csv",
        ["index", "label", "lambda_cents", "status"],
        (
            [i, report.labels[i], fmt(report.lam_cents[i]), report.statuses[i]]
            for i in range(len(report.labels))
        ),
    )
    write_csv(out / "lambda_hist.csv", ["bin_left", "bin_right", "count"], _hist_rows(report.stats))
    np.save(out / "training_zeta.npy", training.zeta)
    np.save(out / "training_lambda.npy", training.lam_cents)
    write_json(
        out / "training_meta.json",
        {
            "solar_dims": training.solar_dims,
            "price_dims": training.price_dims,
            "labels": training.labels,
        },
    )
    write_json(out / "timings.json", {"wall_seconds": report.wall_seconds})
    emitted = [
        "year_summary.json",
        "lambda_per_day.csv",
        "lambda_hist.csv",
        "training_zeta.npy",
        "training_lambda.npy",
        "training_meta.json",
        "timings.json",
    ]
    if histories is not None:
        np.save(out / "history_solar.npy", histories.solar)
        np.save(out / "history_price.npy", histories.price)
        emitted += ["history_solar.npy", "history_price.npy"]
    return emitted


def load_training(run_dir: str | Path) -> TrainingSet:
    run = Path(run_dir)
    for name in ("training_zeta.npy", "training_lambda.npy", "training_meta.json"):
        if not (run / name).exists():
            raise FileNotFoundError(f"missing upstream artifact {run / name}")
    import json as _json

    meta = _json.loads((run / "training_meta.json").read_text())
    return TrainingSet(
        zeta=np.load(run / "training_zeta.npy"),
        lam_cents=np.load(run / "training_lambda.npy"),
        labels=list(meta["labels"]),
        solar_dims=int(meta["solar_dims"]),
        price_dims=int(meta["price_dims"]),
    )


def load_histories(run_dir: str | Path) -> Histories:
    run = Path(run_dir)
    for name in ("history_solar.npy", "history_price.npy"):
        if not (run / name).exists():
            raise FileNotFoundError(f"missing upstream artifact {run / name}")
    return Histories(
        solar=np.load(run / "history_solar.npy"),
        price=np.load(run / "history_price.npy"),
    )


def emit_eval_report(
    out_dir: str | Path, lam_val: np.ndarray, stats: dict, seed: int, delta: float
) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(
        out / "eval_summary.json",
        {"count": int(lam_val.size), "seed": seed, "delta": delta, "stats_cents": stats},
    )
    write_csv(
        out / "lambda_val.csv",
        ["index", "lambda_cents"],
        ([i, fmt(v)] for i, v in enumerate(lam_val)),
    )
    write_csv(out / "eval_hist.csv", ["bin_left", "bin_right", "count"], _hist_rows(stats))
    return ["eval_summary.json", "lambda_val.csv", "eval_hist.csv"]


def emit_benchmark_report(out_dir: str | Path, report: BenchmarkReport) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(
        out / "benchmark.json",
        {
            "normalized_mean_error_pct": round(report.normalized_mean_error_pct, 9),
            "surrogate_stats_cents": report.surrogate_stats,
            "surrogate_shared_subset_stats_cents": report.surrogate_subset_stats,
            "mc_stats_cents": report.mc_stats,
            "m_train": report.m_train,
            "m_val": report.m_val,
            "m_mc": report.m_mc,
        },
    )
    write_json(
        out / "timings.json",
        {
            "speedup_factor": report.speedup_factor,
            "surrogate_seconds_per_scenario": report.surrogate_seconds_per_scenario,
            "mc_seconds_per_scenario": report.mc_seconds_per_scenario,
        },
    )
    write_csv(
        out / "benchmark_surrogate_hist.csv",
        ["bin_left", "bin_right", "count"],
        _hist_rows(report.surrogate_stats),
    )
    write_csv(
        out / "benchmark_mc_hist.csv",
        ["bin_left", "bin_right", "count"],
        _hist_rows(report.mc_stats),
    )
    return [
        "benchmark.json",
        "timings.json",
        "benchmark_surrogate_hist.csv",
        "benchmark_mc_hist.csv",
    ]


def emit_reports(
    out_dir: str | Path,
    config: StationConfig,
    *,
    year_report: YearlyRunReport | None = None,
    training: TrainingSet | None = None,
    histories: Histories | None = None,
    eval_lambda: np.ndarray | None = None,
    eval_stats: dict | None = None,
    eval_seed: int = 0,
    eval_delta: float = 0.10,
    benchmark: BenchmarkReport | None = None,
    file_hashes: dict[str, str] | None = None,
    seed: int | None = None,
) -> list[str]:
    """Write whichever reports are present plus the provenance manifest.

    With nothing to report, only the manifest is emitted."""
    emitted: list[str] = []
    if year_report is not None and training is not None:
        emitted += emit_year_report(out_dir, year_report, training, histories)
    if eval_lambda is not None and eval_stats is not None:
        emitted += emit_eval_report(out_dir, eval_lambda, eval_stats, eval_seed, eval_delta)
    if benchmark is not None:
        emitted += emit_benchmark_report(out_dir, benchmark)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    build_manifest(out_dir, file_hashes or {}, config, seed, emitted)
    return emitted


def export_scenario_csvs(
    out_dir: str | Path,
    zeta_rows: np.ndarray,
    solar_dims: int,
    config: StationConfig,
    label_prefix: str = "scen",
) -> tuple[Path, Path]:
    """Write generated feature rows back out in the ingestion CSV layout so
    they can be fed into the scheduler like measured days."""
    from .ingest import DaySeries, write_prices_csv, write_solar_csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    solar_days = [
        DaySeries(f"{label_prefix}{i:05d}", zeta_rows[i, :solar_dims])
        for i in range(zeta_rows.shape[0])
    ]
    price_days = [
        DaySeries(f"{label_prefix}{i:05d}", zeta_rows[i, solar_dims:])
        for i in range(zeta_rows.shape[0])
    ]
    solar_path = out / "scenario_solar.csv"
    price_path = out / "scenario_prices.csv"
    write_solar_csv(solar_path, solar_days, config.pv.panel_area_m2, config.pv.panel_efficiency)
    write_prices_csv(price_path, price_days)
    return solar_path, price_path


def build_manifest(
    out_dir: str | Path,
    file_hashes: dict[str, str],
    config: StationConfig,
    seed: int | None,
    emitted: list[str],
) -> None:
    from . import __version__

    write_json(
        Path(out_dir) / "manifest.json",
        {
            "package_version": __version__,
            "config_sha256": sha256_text(canonical_json(station_config_to_dict(config))),
            "input_sha256": dict(sorted(file_hashes.items())),
            "seed": seed,
            "files": sorted(emitted),
        },
    )


# --- schedule (de)serialization for run artifacts -------------------------------


def schedule_to_dict(schedule: ParkingSchedule) -> dict:
    return {
        bus: [
            [w.arrival_step, w.departure_step, w.arrival_soc_pct, w.departure_target_soc_pct]
            for w in schedule.windows[bus]
        ]
        for bus in schedule.bus_names
    }


def schedule_from_dict(doc: dict) -> ParkingSchedule:
    return ParkingSchedule(
        windows={
            bus: tuple(
                ParkingWindow(int(a), int(d), float(asoc), float(dsoc))
                for a, d, asoc, dsoc in rows
            )
            for bus, rows in doc.items()
        }
    )


def save_run_context(out_dir: str | Path, config: StationConfig, schedule: ParkingSchedule) -> None:
    write_json(
        Path(out_dir) / "run_context.json",
        {
            "station": station_config_to_dict(config),
            "schedule": schedule_to_dict(schedule),
        },
    )


def load_run_context(run_dir: str | Path) -> tuple[StationConfig, ParkingSchedule]:
    import json as _json

    path = Path(run_dir) / "run_context.json"
    if not path.exists():
        raise FileNotFoundError(f"missing upstream artifact {path}")
    doc = _json.loads(path.read_text())
    return station_config_from_dict(doc["station"]), schedule_from_dict(doc["schedule"])
