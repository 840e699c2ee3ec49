"""Time the compiled and pure-Python decoding kernels on the same blocks.

    python benchmarks/bench_kernels.py [--blocks 200] [--code bch-31-16] [--ebn0 4.0]

Both backends decode identical observations; the script checks that they
agree on every result before reporting blocks per second and the speed-up.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from softgrand.channel import Observation, snr_convert, substream
from softgrand.codebook import builtin_code
from softgrand.decoder import DECODER_KINDS, make_decoder
from softgrand.decoder._backend import available


def blocks(code, ebn0_db, count, seed):
    sigma = snr_convert(ebn0_db, code.n, code.k).sigma
    rng = substream(seed)
    y = 1.0 + sigma * rng.standard_normal((count, code.n))
    obs = Observation.from_output(y, sigma)
    return sigma, [Observation(obs.y[b], obs.llr[b], obs.hard[b], obs.rel[b], sigma) for b in range(count)]


def run(dec, observations):
    start = time.perf_counter()
    results = [dec(o) for o in observations]
    return time.perf_counter() - start, results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--code", default="bch-31-16")
    ap.add_argument("--ebn0", type=float, default=4.0)
    ap.add_argument("--blocks", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--kinds", default=",".join(DECODER_KINDS))
    args = ap.parse_args(argv)

    backends = available()
    code = builtin_code(args.code)
    sigma, obs = blocks(code, args.ebn0, args.blocks, args.seed)
    print(f"code={code.name} Eb/N0={args.ebn0} dB blocks={args.blocks} backends={backends}")
    print(f"{'decoder':<16}" + "".join(f"{b + ' blk/s':>16}" for b in backends) + f"{'speed-up':>10}{'mean_np':>10}")
    for kind in args.kinds.split(","):
        quant = (2, "nonuniform") if kind == "dsgrand" else None
        timings, outputs = {}, {}
        for name in backends:
            dec = make_decoder(kind, code, quant, sigma=sigma, backend=name)
            dec(obs[0])  # warm up lazily built tables
            timings[name], outputs[name] = run(dec, obs)
        ref = outputs[backends[0]]
        for name in backends[1:]:
            for a, b in zip(ref, outputs[name]):
                if a.n_p != b.n_p or a.state != b.state:
                    raise SystemExit(f"{kind}: backends disagree")
        rates = [args.blocks / timings[b] for b in backends]
        speedup = timings["python"] / timings["cython"] if len(backends) > 1 else float("nan")
        mean_np = np.mean([r.n_p for r in ref])
        print(f"{kind:<16}" + "".join(f"{r:>16.1f}" for r in rates) + f"{speedup:>10.1f}{mean_np:>10.1f}")


if __name__ == "__main__":
    main()
