"""BPSK over AWGN: modulation, noise, LLRs, hard decisions and reliabilities.

Gaussian samples come from numpy's ``Generator.standard_normal`` (ziggurat
method) driven by a Philox counter-based bit generator. Substreams are keyed
by integer tuples through ``numpy.random.SeedSequence`` so that a given trial
always sees the same noise regardless of which worker runs it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    sigma: float
    es_n0_db: float
    eb_n0_db: float | None = None
    rate: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def from_esn0(cls, es_n0_db: float, rate: float | None = None) -> "ChannelParams":
        sigma = 10.0 ** (-es_n0_db / 20.0)
        eb = None if rate is None else es_n0_db - 10.0 * math.log10(2.0 * rate)
        return cls(sigma, float(es_n0_db), eb, rate)

    @classmethod
    def from_sigma(cls, sigma: float, rate: float | None = None) -> "ChannelParams":
        es = -20.0 * math.log10(sigma)
        eb = None if rate is None else es - 10.0 * math.log10(2.0 * rate)
        return cls(float(sigma), es, eb, rate)

    @property
    def es_n0(self) -> float:
        return 1.0 / self.sigma**2

    @property
    def llr_mean(self) -> float:
        """Mean LLR 2/sigma^2 given a transmitted zero."""
        return 2.0 / self.sigma**2


def snr_convert(eb_n0_db: float, n: int, k: int) -> ChannelParams:
    """Eb/N0 in dB for an (n, k) code -> channel parameters (Es/N0 = Eb/N0 * 2k/n)."""
    if not n >= k >= 1:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    rate = k / n
    es = eb_n0_db + 10.0 * math.log10(2.0 * rate)
    return ChannelParams(10.0 ** (-es / 20.0), es, float(eb_n0_db), rate)


@dataclass(frozen=True)
class Observation:
    """Channel output for one block (1-D fields) or a batch (2-D fields)."""

    y: np.ndarray
    llr: np.ndarray
    hard: np.ndarray
    rel: np.ndarray
    sigma: float

    @classmethod
    def from_output(cls, y, sigma: float) -> "Observation":
        y = np.asarray(y, dtype=np.float64)
        llr = 2.0 * y / sigma**2
        # sign(0) = +1, so an exact zero decides 0
        hard = (y < 0).astype(np.uint8)
        return cls(y, llr, hard, np.abs(llr), float(sigma))


def bpsk(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def transmit(codeword, params: ChannelParams, rng: np.random.Generator) -> Observation:
    x = bpsk(codeword)
    y = x + params.sigma * rng.standard_normal(x.shape)
    return Observation.from_output(y, params.sigma)
