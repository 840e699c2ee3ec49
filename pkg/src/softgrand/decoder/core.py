"""The GRAND loop and ready-made decoders for each pattern ordering."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..codebook import LinearCode
from ..errors import ConfigurationError
from ..channel import Observation
from . import _pykernels
from ._backend import get_kernels
from .sources import PatternSource, orbgrand_weights, reliability_order

DECODER_KINDS = ("hard", "srgrand", "orbgrand", "sgrand", "dsgrand", "dsgrand-fitted")
MAX_DEFAULT_BUDGET_LOG2 = 40


@dataclass
class DecodeResult:
    codeword: np.ndarray | None
    n_p: int
    state: str
    score: float | None
    ops: dict = field(default_factory=dict)
    pattern: np.ndarray | None = None

    @property
    def found(self) -> bool:
        return self.state == "found"


def default_budget(code: LinearCode) -> int:
    """2^(n-k+4) membership queries."""
    return 1 << min(code.redundancy + 4, MAX_DEFAULT_BUDGET_LOG2)


def _ops(n_p, bitops, comparisons, copies, max_stack, dp_cells) -> dict:
    return {"queries": int(n_p), "syndrome_bitops": int(bitops), "comparisons": int(comparisons),
            "copies": int(copies), "max_stack": int(max_stack), "dp_cells": int(dp_cells)}


def grand_decode(code: LinearCode, hard, source: PatternSource, budget: int | None = None,
                 smax=None) -> DecodeResult:
    """Query ``hard`` then ``hard ^ e`` for each pattern of ``source`` until one is a codeword.

    Stops as abandoned when the source runs dry, a pattern scores above
    ``smax`` or ``budget`` queries (the first one included) have been spent.
    """
    hard = np.asarray(hard, dtype=np.uint8)
    if hard.shape != (code.n,):
        raise ValueError(f"hard decision must have length {code.n}")
    budget = default_budget(code) if budget is None else int(budget)
    if budget < 1:
        raise ValueError("budget must be >= 1")
    cols = code.column_masks
    s0 = 0
    for j in np.flatnonzero(hard):
        s0 ^= cols[j]
    source.bind(cols)
    found, n_p, score, mask, bitops = _pykernels.drive(source, s0, budget, smax, code.row_weight_cumsum)
    ops = _ops(n_p, bitops, source.ops["comparisons"], source.ops["copies"],
               source.ops["max_stack"], source.ops["dp_cells"])
    if not found:
        return DecodeResult(None, n_p, "abandoned", None, ops)
    e = np.array([(mask >> j) & 1 for j in range(code.n)], dtype=np.uint8)
    return DecodeResult(hard ^ e, n_p, "found", score, ops, e)


class Decoder:
    """A GRAND decoder bound to a code; call it on an :class:`Observation`.

    ``smax`` caps the pattern score (for ``hard``/``srgrand`` it is the
    maximum number of flips). ``delta`` is the SRGRAND reliability threshold,
    default ``2/sigma^2`` of each observation. ``segments`` and
    ``resolution`` shape the fitted rank curve of ``dsgrand-fitted``.
    """

    def __init__(self, kind: str, code: LinearCode, quantizer=None, *, sigma: float | None = None,
                 budget: int | None = None, smax=None, delta: float | None = None,
                 segments: int | None = None, resolution: int | None = None, backend: str | None = None):
        if kind not in DECODER_KINDS:
            raise ConfigurationError(f"unknown decoder {kind!r}; choose from {DECODER_KINDS}")
        self.kind = kind
        self.code = code
        self.kernels = get_kernels(backend)
        self.budget = default_budget(code) if budget is None else int(budget)
        if self.budget < 1:
            raise ConfigurationError("budget must be >= 1")
        self.delta = delta
        if delta is not None and not delta > 0:
            raise ConfigurationError("delta must be positive")
        n = code.n
        self._cols = np.ascontiguousarray(code.column_words)
        self._rwc = np.ascontiguousarray(code.row_weight_cumsum, dtype=np.int64)
        self._table = None
        self.quantizer = None
        self.weights = None
        if kind == "dsgrand":
            self.quantizer = _resolve_quantizer(quantizer, sigma)
            top = max(self.quantizer.weights)
            self.smax = n * top if smax is None else int(smax)
        elif kind in ("orbgrand", "dsgrand-fitted"):
            if kind == "orbgrand":
                w = orbgrand_weights(n)
            else:
                if sigma is None:
                    raise ConfigurationError("dsgrand-fitted needs the channel sigma")
                from .. import analysis

                curve = analysis.order_stat_moments(sigma, n, variance=False)
                fit = analysis.fit_lambda(curve, segments or max(1, n - 1))
                w = [int(x) for x in analysis.fitted_weights(fit, n, resolution)]
            self.weights = np.asarray(w, dtype=np.int64)
            self.smax = int(self.weights.sum()) if smax is None else int(smax)
            if self.smax < 0:
                raise ConfigurationError("smax must be >= 0")
            self._table = self.kernels.new_table(self.weights, self.smax)
        elif kind == "sgrand":
            self.smax = math.inf if smax is None else float(smax)
        else:
            self.smax = n if smax is None else int(smax)
        if self.smax is not None and self.smax < 0:
            raise ConfigurationError("smax must be >= 0")

    def _syndrome(self, hard: np.ndarray) -> np.ndarray:
        return np.bitwise_xor.reduce(self._cols[hard.astype(bool)], axis=0)

    def __call__(self, obs: Observation) -> DecodeResult:
        code = self.code
        hard = np.asarray(obs.hard, dtype=np.uint8)
        rel = np.asarray(obs.rel, dtype=np.float64)
        if hard.shape != (code.n,):
            raise ValueError(f"observation must have length {code.n}")
        s0 = np.ascontiguousarray(self._syndrome(hard), dtype=np.uint64)
        k = self.kernels
        kind = self.kind
        if kind == "hard":
            perm = np.arange(code.n)
            out = k.combos(self._cols, s0, self.smax, self.budget, self._rwc)
        elif kind == "srgrand":
            delta = self.delta if self.delta is not None else 2.0 / obs.sigma**2
            perm = np.flatnonzero(rel < delta)
            cols = np.ascontiguousarray(self._cols[perm])
            out = k.combos(cols, s0, self.smax, self.budget, self._rwc)
        elif kind == "dsgrand":
            # per-position weights need no sorting; equal-score patterns come in channel order
            perm = np.arange(code.n)
            w = np.ascontiguousarray(self.quantizer.weigh(rel), dtype=np.int64)
            out = k.dsgrand(self._cols, s0, w, self.smax, self.budget, self._rwc, None)
        else:
            perm = reliability_order(rel)
            cols = np.ascontiguousarray(self._cols[perm])
            if kind == "sgrand":
                out = k.sgrand(cols, s0, np.ascontiguousarray(rel[perm]), self.smax, self.budget, self._rwc)
            else:
                out = k.dsgrand(cols, s0, self.weights, self.smax, self.budget, self._rwc, self._table)
        found, n_p, score, pattern, bitops, comparisons, copies, max_stack, dp_cells = out
        ops = _ops(n_p, bitops, comparisons, copies, max_stack, dp_cells)
        if not found:
            return DecodeResult(None, n_p, "abandoned", None, ops)
        e = np.zeros(code.n, dtype=np.uint8)
        e[perm] = pattern
        return DecodeResult(hard ^ e, n_p, "found", score, ops, e)

    def decode_batch(self, y, sigma: float) -> list[DecodeResult]:
        """Decode each row of a (blocks, n) array of channel outputs."""
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        obs = Observation.from_output(y, sigma)
        return [self(Observation(obs.y[b], obs.llr[b], obs.hard[b], obs.rel[b], sigma))
                for b in range(y.shape[0])]


def _resolve_quantizer(quantizer, sigma):
    from ..quantizer import ReliabilityQuantizer, design_quantizer

    if quantizer is None:
        raise ConfigurationError("dsgrand needs a quantizer")
    if isinstance(quantizer, ReliabilityQuantizer):
        return quantizer
    if isinstance(quantizer, (tuple, list)) and len(quantizer) == 2:
        if sigma is None:
            raise ConfigurationError("designing a quantizer needs the channel sigma")
        q, flavor = quantizer
        return design_quantizer(sigma, int(q), str(flavor))
    raise ConfigurationError(f"unsupported quantizer specification {quantizer!r}")


def make_decoder(kind: str, code: LinearCode, quantizer=None, **params) -> Decoder:
    """Decoder of the given kind; see :class:`Decoder` for the parameters."""
    return Decoder(kind, code, quantizer, **params)
