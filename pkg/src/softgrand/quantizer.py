"""Reliability quantizers for DSGRAND.

A q-bit quantizer splits LLR magnitudes into Q = 2**q cells
``[0, b_1), [b_1, b_2), ..., [b_{Q-1}, inf)``. Each cell gets the real output
value that makes the quantized LLR a true LLR of the quantized channel, and an
integer weight obtained by normalising those outputs to ``v_1 = 1`` and
rounding.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DesignError, NumericalError
from .rates import cell_log_probabilities, quantized_mi

FLAVORS = ("heuristic", "uniform", "nonuniform")
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ReliabilityQuantizer:
    q: int
    boundaries: tuple[float, ...]
    values: tuple[float, ...]
    weights: tuple[int, ...]
    sigma: float
    flavor: str = "custom"

    def __post_init__(self):
        Q = 1 << self.q
        if len(self.boundaries) != Q - 1 or len(self.values) != Q or len(self.weights) != Q:
            raise DesignError(f"a {self.q}-bit quantizer needs {Q - 1} boundaries and {Q} outputs")
        b = np.asarray(self.boundaries)
        if Q > 1 and (b[0] <= 0 or np.any(np.diff(b) <= 0)):
            raise DesignError("boundaries must be positive and strictly increasing")
        if np.any(np.diff(self.weights) < 0) or self.weights[0] < 1:
            raise DesignError("weights must be positive and non-decreasing")

    @property
    def Q(self) -> int:
        return 1 << self.q

    def levels(self, rel) -> np.ndarray:
        """Zero-based cell index of each reliability (cells are closed on the left)."""
        return np.searchsorted(np.asarray(self.boundaries), rel, side="right")

    def weigh(self, rel) -> np.ndarray:
        """Integer weight of each reliability."""
        return np.asarray(self.weights, dtype=np.int64)[self.levels(rel)]

    def export(self) -> str:
        fmt = lambda xs: " ".join(f"{x:.6g}" for x in xs)  # noqa: E731
        return "\n".join([
            f"{self.q} {self.sigma:.6g}",
            fmt(self.boundaries),
            fmt(self.values),
            " ".join(str(w) for w in self.weights),
        ]) + "\n"

    @classmethod
    def parse(cls, text: str, flavor: str = "custom") -> "ReliabilityQuantizer":
        lines = text.strip("\n").split("\n")
        if len(lines) != 4:
            raise DesignError("quantizer file needs exactly 4 lines")
        q_str, sigma_str = lines[0].split()
        return cls(int(q_str), tuple(float(x) for x in lines[1].split()),
                   tuple(float(x) for x in lines[2].split()),
                   tuple(int(x) for x in lines[3].split()), float(sigma_str), flavor)


def quantize_reliability(quant: ReliabilityQuantizer, rel: float) -> tuple[int, int]:
    """(1-based level, integer weight) for a single reliability."""
    if rel < 0:
        raise ValueError("reliability must be nonnegative")
    i = int(quant.levels(rel))
    return i + 1, quant.weights[i]


def optimal_outputs(sigma: float, boundaries) -> np.ndarray:
    """Per-cell LLR of the quantized channel: log P(cell | 0) / P(cell | 1)."""
    b = np.asarray(boundaries, dtype=np.float64)
    if b.size and (b[0] <= 0 or np.any(np.diff(b) <= 0)):
        raise DesignError("boundaries must be positive and strictly increasing")
    log_p, log_m = cell_log_probabilities(sigma, b)
    v = log_p - log_m
    if not np.all(np.isfinite(v)):
        raise DesignError("a quantizer cell has underflowing probability; use smaller boundaries")
    return v


def integer_weights(values) -> tuple[int, ...]:
    """Normalise to v_1 = 1 and round half up."""
    v = np.asarray(values, dtype=np.float64)
    if v[0] <= 0 or np.any(np.diff(v) <= 0):
        raise DesignError("output values must be positive and strictly increasing")
    w = np.floor(v / v[0] + 0.5).astype(np.int64)
    if np.any(np.diff(w) == 0):
        warnings.warn(f"integer weights collapse adjacent levels: {tuple(w)}", stacklevel=2)
    return tuple(int(x) for x in w)


def quantizer_from_boundaries(sigma: float, boundaries, flavor: str = "custom") -> ReliabilityQuantizer:
    b = tuple(float(x) for x in boundaries)
    q = int(round(math.log2(len(b) + 1)))
    v = optimal_outputs(sigma, b)
    return ReliabilityQuantizer(q, b, tuple(float(x) for x in v), integer_weights(v), float(sigma), flavor)


def heuristic_quantizer(sigma: float, q: int) -> ReliabilityQuantizer:
    """Uniform cells of width (2/sigma^2)(1 - sigma/2)/Q."""
    if q < 1:
        raise DesignError("q must be >= 1")
    if sigma >= 2.0:
        raise DesignError(f"heuristic step is nonpositive for sigma={sigma} >= 2")
    Q = 1 << q
    beta = (2.0 / sigma**2) * (1.0 - sigma / 2.0) / Q
    return quantizer_from_boundaries(sigma, [i * beta for i in range(1, Q)], "heuristic")


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def optimize_uniform(sigma: float, q: int, tol: float = 1e-5) -> ReliabilityQuantizer:
    """Step size maximising the quantized mutual information (golden section)."""
    if q < 1:
        raise DesignError("q must be >= 1")
    Q = 1 << q
    steps = np.arange(1, Q)

    def mi(beta):
        return quantized_mi(sigma, steps * beta)

    beta, best = _golden_max(mi, 1e-9, 6.0 / sigma**2, tol)
    if not math.isfinite(best):
        raise NumericalError("uniform quantizer search failed", best=beta)
    return quantizer_from_boundaries(sigma, steps * beta, "uniform")


def optimize_nonuniform(sigma: float, q: int, tol: float = 1e-9,
                        max_sweeps: int = 2000) -> ReliabilityQuantizer:
    """Coordinate ascent on the boundaries, starting from the uniform optimum."""
    start = optimize_uniform(sigma, q)
    b = np.array(start.boundaries)
    Q = 1 << q
    top = 2.0 / sigma**2 + 12.0 * 2.0 / sigma
    current = quantized_mi(sigma, b)
    for _ in range(max_sweeps):
        before = current
        for i in range(Q - 1):
            lo = b[i - 1] if i > 0 else 0.0
            hi = b[i + 1] if i < Q - 2 else max(top, 2.0 * b[i])

            def mi(x, i=i):
                trial = b.copy()
                trial[i] = x
                return quantized_mi(sigma, trial)

            x, val = _golden_max(mi, lo, hi, 1e-10 * max(1.0, hi))
            if val > current:
                b[i] = x
                current = val
        if current - before < tol:
            break
    else:
        raise NumericalError("non-uniform quantizer search did not settle", best=tuple(b))
    if current < quantized_mi(sigma, start.boundaries) - 1e-12:
        raise NumericalError("non-uniform design worse than its uniform start", best=tuple(b))
    return quantizer_from_boundaries(sigma, b, "nonuniform")


_DESIGNERS = {
    "heuristic": heuristic_quantizer,
    "uniform": optimize_uniform,
    "nonuniform": optimize_nonuniform,
}


def _cache_dir() -> Path | None:
    if os.environ.get("SOFTGRAND_NO_CACHE"):
        return None
    root = os.environ.get("SOFTGRAND_CACHE_DIR")
    if root:
        return Path(root)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "softgrand"


def design_quantizer(sigma: float, q: int, flavor: str, cache: bool = True) -> ReliabilityQuantizer:
    """Design (or fetch from the sidecar cache) a q-bit quantizer of the given flavor.

    The cache is keyed by (flavor, q, sigma rounded to 1e-6) and stores the
    export text format, so reloaded designs carry 6 significant digits.
    """
    if flavor not in _DESIGNERS:
        raise DesignError(f"unknown quantizer flavor {flavor!r}; choose from {FLAVORS}")
    key = f"{flavor}-q{q}-s{round(sigma, 6):.6f}.txt"
    directory = _cache_dir() if cache else None
    if directory is not None:
        path = directory / key
        if path.exists():
            try:
                return ReliabilityQuantizer.parse(path.read_text(), flavor)
            except (DesignError, ValueError):
                pass
    quant = _DESIGNERS[flavor](sigma, q)
    if directory is not None:
        try:
            directory.mkdir(parents=True, exist_ok=True)
            (directory / key).write_text(quant.export())
        except OSError:
            pass
    return quant
