"""Monte Carlo BLER simulation.

Trials run in chunks of ``chunk`` blocks. Chunk ``c`` of the point with key
``p`` draws all of its randomness from the substream ``(seed, p, c)``, and the
stop rule is checked at chunk boundaries in chunk order, so a point's result
depends only on the seed and configuration, never on the worker count.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .channel import ChannelParams, Observation, snr_convert, substream
from .codebook import LinearCode, builtin_code, builtin_names, load_code
from .decoder import DECODER_KINDS, make_decoder
from .errors import ConfigurationError

log = logging.getLogger(__name__)

CSV_COLUMNS = ("ebn0_db", "trials", "errors", "undetected", "abandoned", "bler", "ubler",
               "mean_np", "mean_score", "max_stack", "seconds")


@dataclass(frozen=True)
class SimConfig:
    code: str = "bch-31-16"
    code_file: str | None = None
    decoder: str = "orbgrand"
    q: int | None = None
    flavor: str = "nonuniform"
    ebn0_db: tuple[float, ...] = (4.0,)
    seed: int = 0
    min_errors: int = 300
    max_trials: int = 10_000_000
    smax: float | None = None
    smax_tail: float | None = None
    budget: int | None = None
    delta: float | None = None
    segments: int | None = None
    workers: int = 1
    all_zero: bool = False
    chunk: int = 1000

    def __post_init__(self):
        if self.decoder not in DECODER_KINDS:
            raise ConfigurationError(f"unknown decoder {self.decoder!r}; choose from {DECODER_KINDS}")
        if self.min_errors < 1:
            raise ConfigurationError("min_errors must be >= 1")
        if self.max_trials < 10:
            raise ConfigurationError("max_trials must be >= 10")
        if self.workers < 1 or self.chunk < 1:
            raise ConfigurationError("workers and chunk must be >= 1")
        if self.decoder == "dsgrand" and self.q is None:
            raise ConfigurationError("dsgrand needs a quantizer resolution q")
        if self.smax is not None and self.smax_tail is not None:
            raise ConfigurationError("give either smax or smax_tail, not both")
        if self.smax_tail is not None:
            if self.decoder not in ("dsgrand", "sgrand"):
                raise ConfigurationError("smax_tail is only defined for dsgrand and sgrand")
            if not 0 < self.smax_tail <= 1:
                raise ConfigurationError("smax_tail must lie in (0, 1]")
        if not self.ebn0_db:
            raise ConfigurationError("need at least one Eb/N0 point")


@dataclass
class SimRecord:
    ebn0_db: float
    trials: int = 0
    errors: int = 0
    undetected: int = 0
    abandoned: int = 0
    np_sum: int = 0
    score_sum: float = 0.0
    found: int = 0
    max_stack: int = 0
    seconds: float = 0.0
    smax: float | None = None
    ops: dict = field(default_factory=dict)

    @property
    def bler(self) -> float:
        return self.errors / self.trials if self.trials else math.nan

    @property
    def ubler(self) -> float:
        return self.undetected / self.trials if self.trials else math.nan

    @property
    def mean_np(self) -> float:
        return self.np_sum / self.trials if self.trials else math.nan

    @property
    def mean_score(self) -> float:
        return self.score_sum / self.found if self.found else math.nan

    def merge(self, other: "SimRecord") -> None:
        self.trials += other.trials
        self.errors += other.errors
        self.undetected += other.undetected
        self.abandoned += other.abandoned
        self.np_sum += other.np_sum
        self.score_sum += other.score_sum
        self.found += other.found
        self.max_stack = max(self.max_stack, other.max_stack)
        for key, value in other.ops.items():
            if key == "max_stack":
                self.ops[key] = max(self.ops.get(key, 0), value)
            else:
                self.ops[key] = self.ops.get(key, 0) + value

    def row(self) -> dict:
        return {
            "ebn0_db": f"{self.ebn0_db:.9g}", "trials": self.trials, "errors": self.errors,
            "undetected": self.undetected, "abandoned": self.abandoned,
            "bler": f"{self.bler:.9g}", "ubler": f"{self.ubler:.9g}",
            "mean_np": f"{self.mean_np:.9g}", "mean_score": f"{self.mean_score:.9g}",
            "max_stack": self.max_stack, "seconds": f"{self.seconds:.3f}",
        }


def resolve_code(config: SimConfig) -> LinearCode:
    if config.code_file:
        return load_code(config.code_file)
    if config.code in builtin_names():
        return builtin_code(config.code)
    if Path(config.code).exists():
        return load_code(config.code)
    raise ConfigurationError(f"unknown code {config.code!r}; builtins are {builtin_names()}")


def channel_for(code: LinearCode, ebn0_db: float) -> ChannelParams:
    return snr_convert(ebn0_db, code.n, code.k)


def build_decoder(config: SimConfig, code: LinearCode, sigma: float):
    """Decoder for one operating point, plus the s_max it uses."""
    from . import analysis
    from .quantizer import design_quantizer

    quant = None
    smax = config.smax
    if config.decoder == "dsgrand":
        quant = design_quantizer(sigma, config.q, config.flavor)
    if config.smax_tail is not None:
        dist = analysis.true_score_distribution(sigma, code.n, quant)
        smax = analysis.select_smax(dist, config.smax_tail)
    if smax is not None and config.decoder != "sgrand":
        smax = int(smax)
    dec = make_decoder(config.decoder, code, quant, sigma=sigma, budget=config.budget, smax=smax,
                       delta=config.delta, segments=config.segments)
    return dec, dec.smax


@lru_cache(maxsize=16)
def _point_state(config: SimConfig, sigma: float):
    code = resolve_code(config)
    if not config.all_zero and code.G is None:
        raise ConfigurationError(f"code {code.name} has no generator matrix; use all-zero mode")
    dec, smax = build_decoder(config, code, sigma)
    return code, dec, smax


def run_chunk(config: SimConfig, ebn0_db: float, sigma: float, point_key: int, index: int,
              size: int) -> SimRecord:
    code, dec, smax = _point_state(config, sigma)
    rng = substream(config.seed, point_key, index)
    n, k = code.n, code.k
    if config.all_zero:
        words = np.zeros((size, n), dtype=np.uint8)
    else:
        msgs = rng.integers(0, 2, size=(size, k), dtype=np.uint8)
        words = code.encode(msgs)
    y = (1.0 - 2.0 * words) + sigma * rng.standard_normal((size, n))
    obs = Observation.from_output(y, sigma)
    rec = SimRecord(ebn0_db, smax=smax)
    for b in range(size):
        res = dec(Observation(obs.y[b], obs.llr[b], obs.hard[b], obs.rel[b], sigma))
        rec.trials += 1
        rec.np_sum += res.n_p
        rec.max_stack = max(rec.max_stack, res.ops["max_stack"])
        for key, value in res.ops.items():
            if key == "max_stack":
                rec.ops[key] = max(rec.ops.get(key, 0), value)
            else:
                rec.ops[key] = rec.ops.get(key, 0) + value
        if res.codeword is None:
            rec.errors += 1
            rec.abandoned += 1
        else:
            rec.found += 1
            rec.score_sum += float(res.score)
            if not np.array_equal(res.codeword, words[b]):
                rec.errors += 1
                rec.undetected += 1
    return rec


def _run_chunk_args(args):
    return run_chunk(*args)


def run_point(config: SimConfig, ebn0_db: float, point_key: int = 0, *, sigma: float | None = None,
              executor: ProcessPoolExecutor | None = None) -> SimRecord:
    """Simulate one operating point until the stop rule fires.

    ``sigma`` overrides the noise level implied by ``ebn0_db``.
    """
    code = resolve_code(config)
    if not config.all_zero and code.G is None:
        raise ConfigurationError(f"code {code.name} has no generator matrix; use all-zero mode")
    if sigma is None:
        sigma = channel_for(code, ebn0_db).sigma
    start = time.perf_counter()
    total = SimRecord(float(ebn0_db))
    _, _, total.smax = _point_state(config, sigma)
    index = 0
    wave = config.workers if executor is not None else 1
    while total.errors < config.min_errors and total.trials < config.max_trials:
        jobs = []
        planned = total.trials
        for _ in range(wave):
            size = min(config.chunk, config.max_trials - planned)
            if size <= 0:
                break
            jobs.append((config, float(ebn0_db), sigma, point_key, index + len(jobs), size))
            planned += size
        if executor is None:
            results = [run_chunk(*job) for job in jobs]
        else:
            results = list(executor.map(_run_chunk_args, jobs))
        for rec in results:
            total.merge(rec)
            index += 1
            if total.errors >= config.min_errors or total.trials >= config.max_trials:
                break
    total.seconds = time.perf_counter() - start
    log.info("Eb/N0 %.2f dB: %d trials, %d errors, BLER %.3g", ebn0_db, total.trials, total.errors, total.bler)
    return total


def run_sweep(config: SimConfig, out: str | Path | None = None) -> list[SimRecord]:
    records = []
    executor = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for key, eb in enumerate(config.ebn0_db):
            records.append(run_point(config, eb, key, executor=executor))
    finally:
        if executor is not None:
            executor.shutdown()
    if out is not None:
        write_csv(records, out)
    return records


def write_csv(records, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.row())


def read_csv(path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = {"trials", "errors", "undetected", "abandoned", "max_stack"}
    return [{k: (int(v) if k in ints else float(v)) for k, v in row.items()} for row in rows]


def config_dict(config: SimConfig) -> dict:
    return asdict(config)


def with_points(config: SimConfig, ebn0_db) -> SimConfig:
    return replace(config, ebn0_db=tuple(float(x) for x in ebn0_db))
