"""File ingestion: prices, solar, parking schedules, SoC records.

All files are UTF-8 CSV with a header row, comma separators and `.` decimal
points. Formats:

    prices:   date,hour,price_dollars_per_mwh      (hour 0-23)
    solar:    date,step,ghi_w_per_m2               (step 0..steps_per_day-1)
    schedule: bus,start,end,arrival_soc_pct,departure_soc_pct  (HH:MM clock)
    soc:      bus,window,arrival_soc_pct,departure_soc_pct

Days that are not exactly complete (missing or duplicate hours/steps, e.g.
daylight-saving anomalies) are rejected, never repaired. Prices convert as
cents/kWh = dollars/MWh / 10; irradiance converts through the panel area and
efficiency, with negative readings clamped to zero and counted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .domain import ParkingSchedule, ParkingWindow, ScenarioInput, TimeGrid, validate_schedule
from .errors import IngestError, ValidationError


@dataclass(frozen=True)
class DaySeries:
    date: str
    values: np.ndarray


@dataclass
class LoadReport:
    rejected_days: list[tuple[str, str]] = field(default_factory=list)
    clamped_values: int = 0
    fallback_records: int = 0


def _read_rows(path: str | Path, expected_header: list[str]) -> list[dict[str, str]]:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestError("EMPTY", f"{path} has no header row")
            header = [h.strip() for h in header]
            if header != expected_header:
                raise IngestError(
                    "PARSE", f"{path}: header {header} != expected {expected_header}"
                )
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(expected_header):
                    raise IngestError(
                        "PARSE", f"{path}:{lineno}: expected {len(expected_header)} fields"
                    )
                rows.append({h: c.strip() for h, c in zip(expected_header, row)})
    except OSError as exc:
        raise IngestError("PARSE", f"cannot read {path}: {exc}")
    if not rows:
        raise IngestError("EMPTY", f"{path} contains no data rows")
    return rows


def _parse_float(path, lineno_hint: str, name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise IngestError("PARSE", f"{path}:{lineno_hint}: bad {name} value {raw!r}")


def _parse_int(path, lineno_hint: str, name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise IngestError("PARSE", f"{path}:{lineno_hint}: bad {name} value {raw!r}")


def load_prices(
    path: str | Path, grid: TimeGrid, *, strict: bool = True
) -> tuple[list[DaySeries], LoadReport]:
    """Per-day price vectors in cents/kWh at the grid's price resolution."""
    rows = _read_rows(path, ["date", "hour", "price_dollars_per_mwh"])
    npp = grid.price_points_per_day
    per_day: dict[str, dict[int, float]] = {}
    order: list[str] = []
    for row in rows:
        date = row["date"]
        hour = _parse_int(path, date, "hour", row["hour"])
        dollars = _parse_float(path, date, "price", row["price_dollars_per_mwh"])
        if not (0 <= hour < 24):
            raise IngestError("PARSE", f"{path}: hour {hour} outside 0-23 on {date}")
        day = per_day.setdefault(date, {})
        if date not in order:
            order.append(date)
        if hour in day:
            day[hour] = None  # poisoned: duplicate hour
        else:
            day[hour] = dollars

    report = LoadReport()
    days: list[DaySeries] = []
    for date in order:
        hours = per_day[date]
        if any(v is None for v in hours.values()):
            reason = "duplicate hour"
        elif len(hours) != 24:
            missing = sorted(set(range(24)) - set(hours))
            reason = f"missing hours {missing}"
        else:
            reason = None
        if reason is not None:
            if strict:
                raise IngestError("INCOMPLETE_DAY", f"{date}: {reason}")
            report.rejected_days.append((date, reason))
            continue
        hourly_cents = np.array([hours[h] / 10.0 for h in range(24)])
        if grid.hours_per_price_point > 1:
            values = hourly_cents.reshape(npp, grid.hours_per_price_point).mean(axis=1)
        else:
            values = hourly_cents
        days.append(DaySeries(date=date, values=values))
    if not days:
        raise IngestError("EMPTY", f"{path}: no complete days")
    return days, report


def load_solar(
    path: str | Path,
    area_m2: float,
    efficiency: float,
    grid: TimeGrid,
    *,
    strict: bool = True,
) -> tuple[list[DaySeries], LoadReport]:
    """Per-day solar power vectors (kW) from irradiance readings."""
    rows = _read_rows(path, ["date", "step", "ghi_w_per_m2"])
    T = grid.steps_per_day
    per_day: dict[str, dict[int, float]] = {}
    order: list[str] = []
    for row in rows:
        date = row["date"]
        step = _parse_int(path, date, "step", row["step"])
        ghi = _parse_float(path, date, "ghi", row["ghi_w_per_m2"])
        if not (0 <= step < T):
            raise IngestError("PARSE", f"{path}: step {step} outside 0-{T - 1} on {date}")
        day = per_day.setdefault(date, {})
        if date not in order:
            order.append(date)
        if step in day:
            day[step] = None
        else:
            day[step] = ghi

    report = LoadReport()
    days: list[DaySeries] = []
    factor = area_m2 * efficiency / 1000.0  # W/m2 -> kW
    for date in order:
        steps = per_day[date]
        if any(v is None for v in steps.values()):
            reason = "duplicate step"
        elif len(steps) != T:
            reason = f"{T - len(steps)} steps missing"
        else:
            reason = None
        if reason is not None:
            if strict:
                raise IngestError("INCOMPLETE_DAY", f"{date}: {reason}")
            report.rejected_days.append((date, reason))
            continue
        ghi = np.array([steps[s] for s in range(T)])
        neg = ghi < 0.0
        report.clamped_values += int(neg.sum())
        values = np.where(neg, 0.0, ghi) * factor
        days.append(DaySeries(date=date, values=values))
    if not days:
        raise IngestError("EMPTY", f"{path}: no complete days")
    return days, report


def _parse_clock(path, bus: str, raw: str, grid: TimeGrid) -> int:
    parts = raw.split(":")
    if len(parts) != 2:
        raise IngestError("BAD_TIME", f"{path}: bus {bus}: bad clock time {raw!r}")
    try:
        hh, mm = int(parts[0]), int(parts[1])
    except ValueError:
        raise IngestError("BAD_TIME", f"{path}: bus {bus}: bad clock time {raw!r}")
    if not (0 <= hh <= 24 and 0 <= mm < 60) or (hh == 24 and mm != 0):
        raise IngestError("BAD_TIME", f"{path}: bus {bus}: clock {raw!r} out of range")
    try:
        return grid.step_of_clock(hh, mm)
    except ValidationError:
        raise IngestError(
            "BAD_TIME", f"{path}: bus {bus}: {raw!r} not aligned to the step grid"
        )


def load_schedule(path: str | Path, grid: TimeGrid) -> ParkingSchedule:
    """Parking windows from clock times. A window whose end is at or before
    its start crosses midnight and is split into a tail plus a head segment
    of the same operational day, one SoC chain across the split."""
    rows = _read_rows(
        path, ["bus", "start", "end", "arrival_soc_pct", "departure_soc_pct"]
    )
    T = grid.steps_per_day
    windows: dict[str, list[ParkingWindow]] = {}
    for row in rows:
        bus = row["bus"]
        start = _parse_clock(path, bus, row["start"], grid)
        end = _parse_clock(path, bus, row["end"], grid)
        if start >= T:
            raise IngestError(
                "BAD_TIME", f"{path}: bus {bus}: start {row['start']} is not a valid step"
            )
        arr = _parse_float(path, bus, "arrival_soc_pct", row["arrival_soc_pct"])
        dep = _parse_float(path, bus, "departure_soc_pct", row["departure_soc_pct"])
        if end == start:
            raise IngestError(
                "BAD_TIME", f"{path}: bus {bus}: empty window {row['start']}-{row['end']}"
            )
        if end == 0 or end == T:
            end = T  # "…-24:00" / "…-00:00" runs to end of day, not a wrap
        windows.setdefault(bus, []).append(
            ParkingWindow(
                arrival_step=start,
                departure_step=end,
                arrival_soc_pct=arr,
                departure_target_soc_pct=dep,
            )
        )

    schedule = ParkingSchedule(
        windows={bus: tuple(sorted(ws, key=lambda w: w.arrival_step)) for bus, ws in windows.items()}
    )
    # overlap gets its own error code before full validation runs
    for bus in schedule.bus_names:
        seen: set[int] = set()
        for w in schedule.windows[bus]:
            steps = set(w.steps(T))
            if seen & steps:
                raise IngestError("OVERLAP", f"{path}: bus {bus}: windows intersect")
            seen |= steps
    validate_schedule(schedule, grid)
    return schedule


@dataclass(frozen=True)
class SocRecordSet:
    """Measured (arrival, departure) SoC per bus and parking window index."""

    records: dict[tuple[str, int], tuple[float, float]]


def load_soc_records(path: str | Path) -> SocRecordSet:
    rows = _read_rows(path, ["bus", "window", "arrival_soc_pct", "departure_soc_pct"])
    records: dict[tuple[str, int], tuple[float, float]] = {}
    for row in rows:
        bus = row["bus"]
        k = _parse_int(path, bus, "window", row["window"])
        arr = _parse_float(path, bus, "arrival_soc_pct", row["arrival_soc_pct"])
        dep = _parse_float(path, bus, "departure_soc_pct", row["departure_soc_pct"])
        if not (0.0 <= arr <= 100.0 and 0.0 <= dep <= 100.0):
            raise ValidationError([(f"{bus}.window[{k}]", "SoC must lie in [0, 100]")])
        records[(bus, k)] = (arr, dep)
    return SocRecordSet(records=records)


def pair_soc_records(
    records: SocRecordSet,
    schedule: ParkingSchedule,
    default: tuple[float, float] | None = None,
) -> tuple[ParkingSchedule, int]:
    """Attach measured SoC pairs to their parking windows.

    Missing records fall back to `default` (counted); without a default they
    raise MISSING_RECORD. Returns (annotated schedule, fallback count).
    """
    fallback = 0
    violations = []
    new_windows: dict[str, tuple[ParkingWindow, ...]] = {}
    for bus in schedule.bus_names:
        out = []
        for k, w in enumerate(schedule.windows[bus]):
            rec = records.records.get((bus, k))
            if rec is None:
                if default is None:
                    raise IngestError(
                        "MISSING_RECORD", f"no SoC record for bus {bus} window {k}"
                    )
                rec = default
                fallback += 1
            arr, dep = rec
            if not (0.0 <= arr <= dep <= 100.0):
                violations.append(
                    (f"{bus}.window[{k}]", f"need 0 <= arrival {arr} <= departure {dep} <= 100")
                )
                continue
            out.append(replace(w, arrival_soc_pct=arr, departure_target_soc_pct=dep))
        new_windows[bus] = tuple(out)
    if violations:
        raise ValidationError(violations)
    return ParkingSchedule(windows=new_windows), fallback


# --- writers (round-trip support and synthetic data emission) -----------------


def _exact_preimage(target: float, forward, guess: float) -> float:
    """Value g near `guess` with forward(g) == target (searched a few ulps
    both ways). Falls back to the guess when no exact preimage exists; the
    reload is then off by at most one rounding."""
    import math

    if not math.isfinite(guess) or forward(guess) == target:
        return guess
    lo = hi = guess
    for _ in range(4):
        lo = math.nextafter(lo, -math.inf)
        if forward(lo) == target:
            return lo
        hi = math.nextafter(hi, math.inf)
        if forward(hi) == target:
            return hi
    return guess


def write_prices_csv(path: str | Path, days: list[DaySeries]) -> None:
    """Inverse of load_prices for hourly grids (cents/kWh -> dollars/MWh)."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "hour", "price_dollars_per_mwh"])
        for day in days:
            for h, cents in enumerate(day.values):
                dollars = _exact_preimage(float(cents), lambda d: d / 10.0, float(cents) * 10.0)
                writer.writerow([day.date, h, f"{dollars:.17g}"])


def write_solar_csv(
    path: str | Path, days: list[DaySeries], area_m2: float, efficiency: float
) -> None:
    """Inverse of load_solar (kW -> W/m2 through the same panel factor)."""
    factor = area_m2 * efficiency / 1000.0
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "step", "ghi_w_per_m2"])
        for day in days:
            for s, kw in enumerate(day.values):
                ghi = _exact_preimage(float(kw), lambda g: g * factor, float(kw) / factor)
                writer.writerow([day.date, s, f"{ghi:.17g}"])


def write_schedule_csv(path: str | Path, schedule: ParkingSchedule, grid: TimeGrid) -> None:
    def clock(step: int) -> str:
        minutes = round(step * grid.step_hours * 60)
        return f"{minutes // 60:02d}:{minutes % 60:02d}"

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bus", "start", "end", "arrival_soc_pct", "departure_soc_pct"])
        for bus in schedule.bus_names:
            for w in schedule.windows[bus]:
                writer.writerow(
                    [
                        bus,
                        clock(w.arrival_step),
                        clock(w.departure_step),
                        f"{w.arrival_soc_pct:.17g}",
                        f"{w.departure_target_soc_pct:.17g}",
                    ]
                )


def assemble_scenarios(
    price_days: list[DaySeries],
    solar_days: list[DaySeries],
    export_price_days: list[DaySeries] | None = None,
) -> list[ScenarioInput]:
    """Join price and solar days on their date labels (inner join, ordered by
    first appearance in the price file). Export prices default to the import
    series."""
    solar_by_date = {d.date: d for d in solar_days}
    export_by_date = {d.date: d for d in export_price_days} if export_price_days else None
    out: list[ScenarioInput] = []
    for pd in price_days:
        sd = solar_by_date.get(pd.date)
        if sd is None:
            continue
        ex = export_by_date.get(pd.date).values if export_by_date else pd.values
        out.append(
            ScenarioInput(
                solar_kw=sd.values,
                import_price_cents_per_kwh=pd.values,
                export_price_cents_per_kwh=ex,
                label=pd.date,
            )
        )
    return out
