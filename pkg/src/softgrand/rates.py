"""Achievable-rate numerics for BPSK over AWGN.

All rates are in bits per channel use. Expectations over the continuous
channel output are taken with composite Simpson on a fixed grid covering
``[-(1 + 8 sigma), 1 + 8 sigma]``, split at zero so that metrics with a jump
at the origin are integrated exactly on each side. Discrete (quantized)
metrics are summed over their atoms with exact Gaussian cell probabilities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, special
from scipy.integrate import simpson

from .errors import NumericalError

LN2 = math.log(2.0)
DEFAULT_POINTS = 10001


# ---------------------------------------------------------------------------
# Metric descriptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReliabilityMetric:
    """Odd decoder metric M(y) = sign(y) * g(|tau(y)|), described by g.

    ``g`` maps LLR magnitudes (array) to nonnegative metric magnitudes.
    """

    g: Callable[[np.ndarray], np.ndarray]
    label: str = "metric"


@dataclass(frozen=True)
class QuantizedMetric:
    """Piecewise-constant odd metric: |tau| in [b_{i-1}, b_i) maps to values[i]."""

    boundaries: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.boundaries) + 1:
            raise ValueError("need exactly one more value than boundaries")


LLR = ReliabilityMetric(lambda ell: ell, label="llr")


def as_metric(metric):
    """Normalise the accepted metric spellings to a metric object."""
    if metric is None or (isinstance(metric, str) and metric == "llr"):
        return LLR
    if isinstance(metric, (ReliabilityMetric, QuantizedMetric)):
        return metric
    if hasattr(metric, "boundaries") and hasattr(metric, "weights"):
        return QuantizedMetric(tuple(metric.boundaries), tuple(float(w) for w in metric.weights))
    if callable(metric):
        return ReliabilityMetric(metric)
    raise TypeError(f"unsupported metric {metric!r}")


# ---------------------------------------------------------------------------
# Gaussian cell probabilities
# ---------------------------------------------------------------------------

def _log_interval(lo, hi):
    """log(Phi(hi) - Phi(lo)) for standard normal Phi, elementwise, stable in both tails."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    out = np.empty(np.broadcast(lo, hi).shape)
    lo, hi = np.broadcast_arrays(lo, hi)
    upper = lo > 0
    # upper tail: Q(lo) - Q(hi)
    a = special.log_ndtr(-lo[upper])
    b = special.log_ndtr(-hi[upper])
    with np.errstate(divide="ignore"):
        out[upper] = a + np.log1p(-np.exp(b - a))
    lower = ~upper
    a = special.log_ndtr(hi[lower])
    b = special.log_ndtr(lo[lower])
    with np.errstate(divide="ignore"):
        out[lower] = a + np.log1p(-np.exp(b - a))
    return out


def cell_log_probabilities(sigma: float, boundaries) -> tuple[np.ndarray, np.ndarray]:
    """Log-probabilities of the reliability cells given a transmitted zero.

    Returns ``(log_p, log_m)`` where ``p_i = P(tau in [b_{i-1}, b_i))`` (correct
    hard decision) and ``m_i = P(tau in (-b_i, -b_{i-1}])`` (wrong decision),
    with tau ~ N(2/sigma^2, 4/sigma^2).
    """
    b = np.concatenate(([0.0], np.asarray(boundaries, dtype=np.float64), [np.inf]))
    mu = 2.0 / sigma**2
    sd = 2.0 / sigma
    lo, hi = b[:-1], b[1:]
    log_p = _log_interval((lo - mu) / sd, (hi - mu) / sd)
    log_m = _log_interval((-hi - mu) / sd, (-lo - mu) / sd)
    return log_p, log_m


# ---------------------------------------------------------------------------
# Atom representation of the output distribution given C = 0
# ---------------------------------------------------------------------------

def _simpson_weights(count: int, step: float) -> np.ndarray:
    if count < 3 or count % 2 == 0:
        raise ValueError("Simpson grid needs an odd number of points >= 3")
    w = np.ones(count)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * step / 3.0


def _atoms(sigma: float, metric, points: int = DEFAULT_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Metric values and their probability weights under C = 0."""
    metric = as_metric(metric)
    if isinstance(metric, QuantizedMetric):
        log_p, log_m = cell_log_probabilities(sigma, metric.boundaries)
        v = np.asarray(metric.values, dtype=np.float64)
        return np.concatenate((v, -v)), np.exp(np.concatenate((log_p, log_m)))
    if points < 2001:
        raise ValueError("integration grid needs at least 2001 points")
    half = 1.0 + 8.0 * sigma
    y = np.linspace(0.0, half, points)
    w = _simpson_weights(points, y[1] - y[0])
    ell = 2.0 * y / sigma**2
    g = np.asarray(metric.g(ell), dtype=np.float64)
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    f_pos = norm * np.exp(-((y - 1.0) ** 2) / (2.0 * sigma**2))
    f_neg = norm * np.exp(-((y + 1.0) ** 2) / (2.0 * sigma**2))
    return np.concatenate((g, -g)), np.concatenate((w * f_pos, w * f_neg))


def _rate(values: np.ndarray, probs: np.ndarray, s: float, rho: float) -> float:
    # R = 1 - 1/2 E0[log2(1 + e^{-2sM + rho})] - 1/2 E0[log2(1 + e^{-2sM - rho})]
    # (C = 1 mirrored onto C = 0 through the odd symmetry of M)
    a = np.logaddexp(0.0, -2.0 * s * values + rho)
    b = np.logaddexp(0.0, -2.0 * s * values - rho)
    return 1.0 - 0.5 * float(probs @ (a + b)) / LN2


# ---------------------------------------------------------------------------
# Public rates
# ---------------------------------------------------------------------------

def bpsk_capacity(sigma: float, points: int = DEFAULT_POINTS) -> float:
    """I(C;Y) for uniform BPSK input on the AWGN channel with noise std sigma."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    values, probs = _atoms(sigma, LLR, points)
    rate = 1.0 - float(probs @ np.logaddexp(0.0, -values)) / LN2
    return min(max(rate, 0.0), 1.0)


def quantized_mi(sigma: float, quantizer) -> float:
    """Mutual information of the 2Q-ary (hard decision, level) output channel."""
    boundaries = getattr(quantizer, "boundaries", quantizer)
    log_p, log_m = cell_log_probabilities(sigma, boundaries)
    p, m = np.exp(log_p), np.exp(log_m)
    log_avg = np.logaddexp(log_p, log_m) - LN2
    with np.errstate(invalid="ignore"):
        terms = np.where(p > 0, p * (log_p - log_avg), 0.0) + np.where(m > 0, m * (log_m - log_avg), 0.0)
    return float(terms.sum() / LN2)


def lm_rate(sigma: float, metric="llr", points: int = DEFAULT_POINTS, *, return_params: bool = False):
    """LM-rate of the mismatched decoder using the given odd metric.

    Maximises over the metric scaling ``s >= 0`` and the ratio ``r(1)/r(0)``
    (searched as ``rho = log r(1)/r(0)``): a 41x41 grid over
    ``s in [0.05, 5]`` (log spaced, after normalising the metric scale) and
    ``rho in [-2, 2]``, refined by Nelder-Mead.
    """
    values, probs = _atoms(sigma, metric, points)
    mean_abs = float(probs @ np.abs(values))
    if mean_abs <= 0:
        return (0.0, (0.0, 0.0)) if return_params else 0.0
    # put the metric on the LLR scale so s ~ 1 near the optimum
    llr_mean_abs = 2.0 / sigma**2
    scale = llr_mean_abs / mean_abs
    scaled = values * scale

    s_grid = np.geomspace(0.05, 5.0, 41)
    rho_grid = np.linspace(-2.0, 2.0, 41)
    best = (-np.inf, 1.0, 0.0)
    for s in s_grid:
        for rho in rho_grid:
            r = _rate(scaled, probs, s, rho)
            if r > best[0]:
                best = (r, s, rho)

    def neg(x):
        return -_rate(scaled, probs, math.exp(x[0]), x[1])

    x0 = np.array([math.log(best[1]), best[2]])
    result = None
    for attempt in range(3):
        result = optimize.minimize(neg, x0, method="Nelder-Mead",
                                   options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
        if result.success:
            break
        x0 = result.x
    value = -float(result.fun)
    if not result.success or value < best[0] - 1e-9:
        raise NumericalError("LM-rate maximisation did not converge", best=max(value, best[0]))
    s_opt = math.exp(result.x[0]) * scale
    if return_params:
        return value, (s_opt, float(result.x[1]))
    return value


def capacity_inverse(rate: float, points: int = DEFAULT_POINTS) -> float:
    """Es/N0 in dB at which the BPSK capacity equals ``rate``."""
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate {rate} outside (0, 1)")

    def f(es_db):
        return bpsk_capacity(10.0 ** (-es_db / 20.0), points) - rate

    lo, hi = -40.0, 40.0
    if f(lo) > 0 or f(hi) < 0:
        raise NumericalError("capacity inverse outside the bracketed SNR range")
    return float(optimize.brentq(f, lo, hi, xtol=1e-7, rtol=1e-12))


def orbgrand_loss(sigma: float, n: int, segments: int | None = None,
                  outside: str = "clamp", points: int = DEFAULT_POINTS) -> float:
    """SNR gap in dB between capacity and the LM-rate of rank-based weights.

    ``segments`` defaults to ``n - 1`` (piecewise-linear interpolation of the
    expected order statistics); see :func:`softgrand.analysis.nu_metric` for
    ``outside``.
    """
    from . import analysis

    if n < 2:
        raise ValueError("n must be >= 2")
    curve = analysis.order_stat_moments(sigma, n, variance=False)
    fit = analysis.fit_lambda(curve, segments or n - 1)
    metric = analysis.nu_metric(fit, outside=outside)
    rate = lm_rate(sigma, metric, points)
    es_db = -20.0 * math.log10(sigma)
    return es_db - capacity_inverse(rate, points)
