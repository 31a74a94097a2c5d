"""Nonparametric input inference and scenario generation.

Solar days are modeled with per-dimension Gaussian-kernel density estimates
(Silverman bandwidth) and sampled by smoothed bootstrap: draw a historical
day, add kernel-scaled noise per dimension, clamp at zero. The day index is
shared across dimensions so intra-day temporal correlation survives;
independent per-step sampling would produce physically impossible solar
profiles. Price scenarios multiply a historical day by independent uniform
factors within a +-delta band.

Every scenario gets its own RNG stream derived from (seed, scenario index),
so generation is reproducible regardless of worker count or ordering.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ScenError

_FROZEN_STD = 1e-12


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Rule-of-thumb kernel bandwidth 1.06 * std * M^(-1/5) (sample std)."""
    samples = np.asarray(samples, dtype=float)
    m = samples.size
    if m < 2:
        raise ScenError("DEGENERATE", "need at least 2 samples for a bandwidth")
    sigma = float(samples.std(ddof=1))
    if sigma < _FROZEN_STD:
        raise ScenError("DEGENERATE", "constant samples; freeze this dimension instead")
    return 1.06 * sigma * m ** (-0.2)


@dataclass(frozen=True)
class KdeModel:
    """Retained history (days x dims) with per-dimension bandwidths.

    Frozen dimensions carry bandwidth 0 and reproduce their constant value.
    """

    samples: np.ndarray
    bandwidths: np.ndarray
    frozen: np.ndarray  # bool mask

    @property
    def n_days(self) -> int:
        return self.samples.shape[0]

    @property
    def n_dims(self) -> int:
        return self.samples.shape[1]


def fit_kde(history: np.ndarray) -> KdeModel:
    """Per-dimension Gaussian KDE over historical days."""
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[0] == 0:
        raise ScenError("EMPTY_HISTORY", "need a nonempty (days x dims) history matrix")
    if history.shape[0] < 2:
        raise ScenError("DEGENERATE", "need at least 2 historical days")
    dims = history.shape[1]
    bw = np.zeros(dims)
    frozen = np.zeros(dims, dtype=bool)
    for j in range(dims):
        sigma = float(history[:, j].std(ddof=1))
        if sigma < _FROZEN_STD:
            frozen[j] = True
        else:
            bw[j] = silverman_bandwidth(history[:, j])
    out = history.copy()
    out.flags.writeable = False
    bw.flags.writeable = False
    frozen.flags.writeable = False
    return KdeModel(samples=out, bandwidths=bw, frozen=frozen)


def kde_pdf(model: KdeModel, dim: int, x: float | np.ndarray) -> float | np.ndarray:
    """Kernel density value(s) of one dimension's estimate at x."""
    if model.frozen[dim]:
        raise ScenError("FROZEN_DIMENSION", f"dimension {dim} is constant")
    w = model.bandwidths[dim]
    pts = model.samples[:, dim]
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    u = (x_arr[:, None] - pts[None, :]) / w
    dens = np.exp(-0.5 * u * u).sum(axis=1) / (model.n_days * w * math.sqrt(2.0 * math.pi))
    return float(dens[0]) if np.isscalar(x) or np.ndim(x) == 0 else dens


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_solar_scenarios(
    history: np.ndarray, count: int, seed: int, model: KdeModel | None = None
) -> np.ndarray:
    """Smoothed bootstrap over historical days, clamped at zero."""
    if model is None:
        model = fit_kde(history)
    if count < 0:
        raise ScenError("DEGENERATE", "count must be >= 0")
    dims = model.n_dims
    out = np.empty((count, dims))
    for i in range(count):
        rng = _stream(seed, i)
        day = int(rng.integers(model.n_days))
        noise = rng.standard_normal(dims) * model.bandwidths
        row = model.samples[day] + noise
        out[i] = np.maximum(row, 0.0)
        if np.any(model.frozen):
            out[i, model.frozen] = model.samples[day, model.frozen]
    return out


def perturb_prices(history: np.ndarray, count: int, delta: float, seed: int) -> np.ndarray:
    """Each output row is a uniformly chosen historical day scaled per entry
    by independent uniform factors in [1-delta, 1+delta]."""
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[0] == 0:
        raise ScenError("EMPTY_HISTORY", "need a nonempty (days x dims) history matrix")
    if not (0.0 <= delta < 1.0):
        raise ScenError("DEGENERATE", f"delta must lie in [0, 1), got {delta}")
    dims = history.shape[1]
    out = np.empty((count, dims))
    for i in range(count):
        rng = _stream(seed, i)
        day = int(rng.integers(history.shape[0]))
        factors = rng.uniform(1.0 - delta, 1.0 + delta, dims)
        out[i] = history[day] * factors
    return out


# --- JSON (de)serialization ---------------------------------------------------

_FORMAT_VERSION = 1


def kde_to_json(model: KdeModel) -> str:
    doc = {
        "format_version": _FORMAT_VERSION,
        "samples": model.samples.tolist(),
        "bandwidths": model.bandwidths.tolist(),
        "frozen": model.frozen.astype(int).tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def kde_from_json(text: str) -> KdeModel:
    doc = json.loads(text)
    if doc.get("format_version") != _FORMAT_VERSION:
        raise ScenError("EMPTY_HISTORY", f"unsupported KDE format {doc.get('format_version')}")
    samples = np.asarray(doc["samples"], dtype=float)
    bw = np.asarray(doc["bandwidths"], dtype=float)
    frozen = np.asarray(doc["frozen"], dtype=bool)
    samples.flags.writeable = False
    bw.flags.writeable = False
    frozen.flags.writeable = False
    return KdeModel(samples=samples, bandwidths=bw, frozen=frozen)
