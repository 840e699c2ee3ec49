"""Order statistics of reliabilities, rank-curve fits and score distributions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special
from scipy.integrate import simpson
from scipy.signal import fftconvolve

from .errors import ConfigurationError, NumericalError
from .rates import ReliabilityMetric, _log_interval, cell_log_probabilities


# ---------------------------------------------------------------------------
# Folded Gaussian reliabilities and their order statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldedGaussianSpec:
    """Law of |LLR|: the underlying Gaussian has mean mu = 2/sigma^2, variance 2 mu."""

    mu: float
    var: float

    @classmethod
    def from_sigma(cls, sigma: float) -> "FoldedGaussianSpec":
        return cls(2.0 / sigma**2, 4.0 / sigma**2)

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    @property
    def sigma(self) -> float:
        return 2.0 / self.sd

    def upper(self) -> float:
        return self.mu + 10.0 * self.sd

    def log_pdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        z1 = (a - self.mu) / self.sd
        z2 = (a + self.mu) / self.sd
        return np.logaddexp(-0.5 * z1**2, -0.5 * z2**2) - math.log(self.sd * math.sqrt(2 * math.pi))

    def log_cdf(self, a):
        a = np.asarray(a, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return _log_interval((-a - self.mu) / self.sd, (a - self.mu) / self.sd)

    def log_sf(self, a):
        a = np.asarray(a, dtype=np.float64)
        return np.logaddexp(special.log_ndtr(-(a - self.mu) / self.sd),
                            special.log_ndtr((-a - self.mu) / self.sd))

    def mean(self) -> float:
        m, s = self.mu, self.sd
        return m * (1.0 - 2.0 * special.ndtr(-m / s)) + 2.0 * s * math.exp(-0.5 * (m / s) ** 2) / math.sqrt(2 * math.pi)


def _as_spec(spec) -> FoldedGaussianSpec:
    if isinstance(spec, FoldedGaussianSpec):
        return spec
    return FoldedGaussianSpec.from_sigma(float(spec))


def order_stat_log_pdf(spec, n: int, r, a):
    spec = _as_spec(spec)
    r = np.asarray(r, dtype=np.float64)
    log_comb = special.gammaln(n + 1) - special.gammaln(r) - special.gammaln(n - r + 1)
    lf, lF, lS = spec.log_pdf(a), spec.log_cdf(a), spec.log_sf(a)
    with np.errstate(invalid="ignore"):
        # 0 * log(0) terms are exactly zero here
        t1 = np.where(r - 1 == 0, 0.0, (r - 1) * lF)
        t2 = np.where(n - r == 0, 0.0, (n - r) * lS)
    return log_comb + lf + t1 + t2


def order_stat_pdf(spec, n: int, r: int, a):
    """Density of the r-th smallest of n i.i.d. reliabilities, evaluated in log domain."""
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")
    return np.exp(order_stat_log_pdf(spec, n, r, a))


@dataclass(frozen=True)
class OrderStatCurve:
    n: int
    sigma: float
    e_l: np.ndarray
    var_l: np.ndarray | None = None


def order_stat_moments(spec, n: int, variance: bool = True, points: int = 40001) -> OrderStatCurve:
    """E[L_(r)] (and Var[L_(r)]) for r = 1..n by Simpson integration of the densities."""
    spec = _as_spec(spec)
    if n < 1:
        raise ValueError("n must be >= 1")
    a = np.linspace(0.0, spec.upper(), points)
    r = np.arange(1, n + 1, dtype=np.float64)[:, None]
    pdf = np.exp(order_stat_log_pdf(spec, n, r, a[None, :]))
    mass = simpson(pdf, x=a, axis=1)
    if np.any(np.abs(mass - 1.0) > 1e-6):
        raise NumericalError("order-statistic densities do not integrate to one", best=mass)
    e1 = simpson(pdf * a, x=a, axis=1)
    var = None
    if variance:
        e2 = simpson(pdf * a**2, x=a, axis=1)
        var = e2 - e1**2
    if np.any(np.diff(e1) <= 0):
        raise NumericalError("expected order statistics are not increasing", best=e1)
    return OrderStatCurve(n, spec.sigma, e1, var)


def sample_order_stats(sigma: float, n: int, blocks: int, rng: np.random.Generator,
                       chunk: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean and standard error of the sorted reliabilities."""
    total = np.zeros(n)
    total2 = np.zeros(n)
    done = 0
    while done < blocks:
        m = min(chunk, blocks - done)
        y = 1.0 + sigma * rng.standard_normal((m, n))
        rel = np.sort(np.abs(2.0 * y / sigma**2), axis=1)
        total += rel.sum(axis=0)
        total2 += (rel**2).sum(axis=0)
        done += m
    mean = total / blocks
    var = total2 / blocks - mean**2
    return mean, np.sqrt(var / blocks)


# ---------------------------------------------------------------------------
# Piecewise-linear fit of the rank curve and the induced metric
# ---------------------------------------------------------------------------

def _isotonic(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators projection onto non-decreasing sequences."""
    blocks: list[list[float]] = []
    for v in y:
        blocks.append([float(v), 1.0])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            v2, w2 = blocks.pop()
            v1, w1 = blocks.pop()
            blocks.append([(v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2])
    out = []
    for v, w in blocks:
        out.extend([v] * int(w))
    return np.array(out)


@dataclass(frozen=True)
class PiecewiseLinearFit:
    knots_r: np.ndarray
    knots_v: np.ndarray
    residual: float

    @property
    def segments(self) -> int:
        return len(self.knots_r) - 1

    def __call__(self, r):
        return np.interp(r, self.knots_r, self.knots_v)

    def inverse(self, x, outside: str = "extrapolate"):
        """Rank at which the fitted curve reaches ``x``.

        ``outside="extrapolate"`` continues the first/last segment beyond the
        fitted range; ``"clamp"`` pins the result to [r_first, r_last].
        """
        x = np.asarray(x, dtype=np.float64)
        kr, kv = self.knots_r, self.knots_v
        out = np.interp(x, kv, kr)
        if outside == "clamp":
            return out
        if outside != "extrapolate":
            raise ValueError(f"unknown outside rule {outside!r}")
        lo_slope = (kr[1] - kr[0]) / (kv[1] - kv[0])
        hi_slope = (kr[-1] - kr[-2]) / (kv[-1] - kv[-2])
        out = np.where(x < kv[0], kr[0] + (x - kv[0]) * lo_slope, out)
        out = np.where(x > kv[-1], kr[-1] + (x - kv[-1]) * hi_slope, out)
        return out


def fit_lambda(curve: OrderStatCurve, m: int) -> PiecewiseLinearFit:
    """Least-squares continuous piecewise-linear fit with m evenly spaced segments."""
    if m < 1:
        raise ValueError("need at least one segment")
    n = curve.n
    if n < 2:
        raise ValueError("need at least two ranks to fit")
    r = np.arange(1, n + 1, dtype=np.float64)
    knots = np.linspace(1.0, float(n), m + 1)
    # hat-function design matrix
    A = np.zeros((n, m + 1))
    idx = np.clip(np.searchsorted(knots, r, side="right") - 1, 0, m - 1)
    t = (r - knots[idx]) / (knots[idx + 1] - knots[idx])
    A[np.arange(n), idx] = 1.0 - t
    A[np.arange(n), idx + 1] += t
    values, *_ = np.linalg.lstsq(A, curve.e_l, rcond=None)
    if np.any(np.diff(values) <= 0):
        values = _isotonic(values)
        eps = 1e-9 * max(1.0, float(np.abs(values).max()))
        values = values + eps * np.arange(m + 1)
    resid = float(np.sum((A @ values - curve.e_l) ** 2))
    return PiecewiseLinearFit(knots, values, resid)


@dataclass(frozen=True)
class NuMetric(ReliabilityMetric):
    """sign(y) * lambda^{-1}(2|y|/sigma^2) as a metric on LLR magnitudes."""

    fit: PiecewiseLinearFit | None = None
    outside: str = "extrapolate"

    def at(self, y, sigma: float):
        y = np.asarray(y, dtype=np.float64)
        # np.sign keeps the metric odd at y = 0 even where lambda^-1(0) != 0
        return np.sign(y) * self.g(2.0 * np.abs(y) / sigma**2)


def nu_metric(fit: PiecewiseLinearFit, outside: str = "extrapolate") -> NuMetric:
    if np.any(np.diff(fit.knots_v) <= 0):
        raise ValueError("fit is not strictly increasing; inverse undefined")
    return NuMetric(lambda ell: fit.inverse(ell, outside), label="nu", fit=fit, outside=outside)


def fitted_weights(fit: PiecewiseLinearFit, n: int, resolution: int | None = None) -> np.ndarray:
    """Positive integer weights for ranks 1..n from the fitted curve.

    The curve is scaled so rank n maps to ``resolution`` (default n) before
    rounding; weights are floored at 1.
    """
    res = n if resolution is None else resolution
    lam = fit(np.arange(1, n + 1, dtype=np.float64))
    w = np.floor(lam * (res / lam[-1]) + 0.5).astype(np.int64)
    return np.maximum(w, 1)


# ---------------------------------------------------------------------------
# Score of the true noise effect
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreDistribution:
    """Distribution of S(Z^n) on the grid ``step * (0, 1, ..., cap)``.

    ``overflow`` is the mass beyond the cap.
    """

    pmf: np.ndarray
    step: float
    overflow: float
    kind: str

    @property
    def cap(self) -> int:
        return len(self.pmf) - 1

    @property
    def support(self) -> np.ndarray:
        return self.step * np.arange(len(self.pmf))

    def tail(self) -> np.ndarray:
        """P(S > support[i]) for each grid point."""
        rev = np.cumsum(self.pmf[::-1])[::-1]
        return np.concatenate((rev[1:], [0.0])) + self.overflow

    def mean(self) -> float:
        return float(self.support @ self.pmf)


def _power_truncated(base: np.ndarray, n: int, cap: int, use_fft: bool) -> np.ndarray:
    conv = fftconvolve if use_fft else np.convolve

    def mul(a, b):
        out = conv(a, b)[: cap + 1]
        if use_fft:
            out = np.clip(out, 0.0, None)
        return out

    result = np.zeros(1)
    result[0] = 1.0
    power = base[: cap + 1].copy()
    while n:
        if n & 1:
            result = mul(result, power)
        n >>= 1
        if n:
            power = mul(power, power)
    out = np.zeros(cap + 1)
    out[: len(result)] = result
    return out


def per_bit_score_pmf(sigma: float, quantizer) -> np.ndarray:
    """PMF of one bit's contribution: 0 if received correctly, else its integer weight."""
    log_p, log_m = cell_log_probabilities(sigma, quantizer.boundaries)
    w = np.asarray(quantizer.weights, dtype=np.int64)
    pmf = np.zeros(int(w.max()) + 1)
    pmf[0] = special.ndtr(1.0 / sigma)
    np.add.at(pmf, w, np.exp(log_m))
    return pmf


def true_score_distribution(sigma: float, n: int, quantizer=None, cap: int | None = None,
                            delta: float | None = None, tolerance: float = 1e-6) -> ScoreDistribution:
    """Distribution of the score of the true noise effect (all-zero codeword).

    With a quantizer the per-bit score is the integer weight of an erroneous
    bit and 0 for a correct one, and the n-fold convolution is exact up to
    ``cap``. Without one the per-bit score is |LLR| of an erroneous bit,
    discretised on a grid of step ``delta`` (rounded up to the grid).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if quantizer is not None:
        base = per_bit_score_pmf(sigma, quantizer)
        step = 1.0
        kind = "quantized"
    else:
        mu = 2.0 / sigma**2
        sd = 2.0 / sigma
        step = delta or mu / 200.0
        top = mu + 12.0 * sd
        edges = np.arange(0.0, top + step, step)
        # wrong decision: tau < 0, score |tau| falls in ((k-1) step, k step]
        z_hi = (-edges[:-1] - mu) / sd
        z_lo = (-edges[1:] - mu) / sd
        masses = np.exp(_log_interval(z_lo, z_hi))
        base = np.concatenate(([special.ndtr(1.0 / sigma)], masses))
        kind = "continuous"
    per_mean = float(np.arange(len(base)) @ base)
    per_var = float(np.arange(len(base)) ** 2 @ base) - per_mean**2
    if cap is None:
        # Gaussian-approximation 1 - 1e-12 quantile, doubled
        cap = int(math.ceil(2.0 * (n * per_mean + 7.035 * math.sqrt(n * per_var)))) + len(base)
    pmf = _power_truncated(base, n, cap, use_fft=(kind == "continuous" or cap > 2000))
    overflow = max(0.0, 1.0 - float(pmf.sum()))
    if overflow > tolerance:
        raise ConfigurationError(f"score cap {cap} loses {overflow:.3g} mass; increase the cap")
    return ScoreDistribution(pmf, step, overflow, kind)


def select_smax(dist: ScoreDistribution, target_tail: float) -> float:
    """Smallest s on the grid with P(S > s) <= target_tail."""
    if not 0.0 < target_tail <= 1.0:
        raise ValueError("target tail must lie in (0, 1]")
    tail = dist.tail()
    hits = np.flatnonzero(tail <= target_tail)
    if hits.size == 0:
        raise ConfigurationError(f"tail {target_tail:g} not reached within cap {dist.cap}")
    s = dist.support[hits[0]]
    return int(round(s)) if dist.kind == "quantized" else float(s)


# ---------------------------------------------------------------------------
# CSV emitters
# ---------------------------------------------------------------------------

def write_order_stats_csv(curve: OrderStatCurve, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "e_l", "var_l"])
        for r in range(curve.n):
            var = "" if curve.var_l is None else f"{curve.var_l[r]:.9g}"
            w.writerow([r + 1, f"{curve.e_l[r]:.9g}", var])


def write_score_csv(dist: ScoreDistribution, path) -> None:
    tail = dist.tail()
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "pmf", "tail"])
        for s, p, t in zip(dist.support, dist.pmf, tail):
            w.writerow([f"{s:.9g}", f"{p:.9g}", f"{t:.9g}"])
