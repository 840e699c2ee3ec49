"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every criterion is evaluated in full before its test asserts, so the summary
lists each sub-check. Monte Carlo criteria use seeds fixed in advance.
"""
import math
import time

import numpy as np
import pytest
from scipy import stats

from softgrand.analysis import order_stat_moments, sample_order_stats, select_smax, true_score_distribution
from softgrand.channel import ChannelParams, Observation, snr_convert, substream, transmit
from softgrand.codebook import builtin_code
from softgrand.decoder import DSGrandSource, get_kernels, make_decoder, reliability_order
from softgrand.harness import SimConfig, run_point
from softgrand.quantizer import design_quantizer, heuristic_quantizer, optimize_nonuniform, optimize_uniform
from softgrand.rates import QuantizedMetric, bpsk_capacity, lm_rate, orbgrand_loss

pytestmark = pytest.mark.acceptance

SEED = 2024
MIN_ERRORS = 1000


def sig(es_db):
    return 10 ** (-es_db / 20)


class Checks:
    def __init__(self, criterion, log):
        self.criterion = criterion
        self.log = log
        self.items = []

    def add(self, name, ok, detail):
        self.items.append((name, bool(ok), detail))

    def close(self):
        ok = all(item[1] for item in self.items)
        failed = [f"{n} ({d})" for n, good, d in self.items if not good]
        passed = [f"{n} ({d})" for n, good, d in self.items if good]
        head = f"criterion {self.criterion}: {'PASS' if ok else 'FAIL'}"
        line = head + (" | failed: " + "; ".join(failed) if failed else "") + " | passed: " + "; ".join(passed)
        print(line)
        self.log.append(line)
        assert ok, line


def close(actual, expected, tol):
    return abs(actual - expected) <= tol


# ---------------------------------------------------------------------------

PRINTED = {
    # (Es/N0, flavor): (boundaries, outputs, integer weights, R_LM real, R_LM integer)
    (4, "nonuniform"): ((1.1352, 2.4582, 4.3560), (1, 3.1534, 5.8914, 10.5689), (1, 3, 6, 11), 0.7884, 0.7883),
    (4, "uniform"): ((1.3641, 2.7281, 4.0922), (1, 3.0001, 5.0003, 8.5196), (1, 3, 5, 8), 0.7879, 0.7878),
    (4, "heuristic"): ((0.8597, 1.7194, 2.5792), (1, 3.0, 5.0, 10.6525), (1, 3, 5, 11), 0.7821, 0.7820),
    (7, "nonuniform"): ((1.3878, 3.0636, 5.6249), (1, 3.1960, 6.1455, 11.8671), (1, 3, 6, 12), 0.9486, 0.9485),
    (7, "uniform"): ((1.7278, 3.4557, 5.1835), (1, 3.0, 5.0001, 9.1775), (1, 3, 5, 9), 0.9483, 0.9483),
    (7, "heuristic"): ((1.9463, 3.8925, 5.8388), (1, 3.0001, 5.0003, 8.6992), (1, 3, 5, 9), 0.9481, 0.9481),
}
DESIGNERS = {"heuristic": heuristic_quantizer, "uniform": optimize_uniform, "nonuniform": optimize_nonuniform}
BOUNDARY_TOL = {"heuristic": 1e-3, "uniform": 5e-3, "nonuniform": 2e-2}


def test_criterion_1_quantizer_tables(acceptance_log):
    c = Checks(1, acceptance_log)
    for (es, flavor), (b, v, w, r_real, r_int) in PRINTED.items():
        s = sig(es)
        start = time.perf_counter()
        quant = DESIGNERS[flavor](s, 2)
        took = time.perf_counter() - start
        tag = f"{flavor} {es}dB"
        if flavor == "uniform":
            err = abs(quant.boundaries[0] - b[0])
            c.add(f"{tag} beta", err <= 5e-3, f"{quant.boundaries[0]:.4f} vs {b[0]}")
        else:
            err = max(abs(x - y) for x, y in zip(quant.boundaries, b))
            c.add(f"{tag} boundaries", err <= BOUNDARY_TOL[flavor], f"max err {err:.2e}")
        c.add(f"{tag} weights", tuple(quant.weights) == w, f"{quant.weights} vs printed {w}")
        got_real = lm_rate(s, QuantizedMetric(b, v))
        got_int = lm_rate(s, QuantizedMetric(b, w))
        c.add(f"{tag} R_LM", close(got_real, r_real, 5e-4), f"{got_real:.4f} vs {r_real}")
        c.add(f"{tag} R_LM int", close(got_int, r_int, 5e-4), f"{got_int:.4f} vs {r_int}")
        c.add(f"{tag} time", took < 60, f"{took:.1f}s")
    c.close()


def test_criterion_2_capacity(acceptance_log):
    c = Checks(2, acceptance_log)
    for es, ref in ((4, 0.7944), (7, 0.9507)):
        got = bpsk_capacity(sig(es))
        c.add(f"{es}dB", close(got, ref, 5e-4), f"{got:.5f} vs {ref}")
    c.close()


def test_criterion_3_orbgrand_loss(acceptance_log):
    c = Checks(3, acceptance_log)
    grid = np.arange(2.0, 8.01, 0.5)
    loss = [orbgrand_loss(sig(es), 128) for es in grid]
    c.add("2dB", close(loss[0], 0.0027, 0.005), f"{loss[0]:.4f} dB vs 0.0027")
    c.add("8dB", close(loss[-1], 0.0758, 0.01), f"{loss[-1]:.4f} dB vs 0.0758")
    c.add("monotone", np.all(np.diff(loss) >= 0), " ".join(f"{x:.4f}" for x in loss))
    c.close()


def test_criterion_4_order_statistics(acceptance_log):
    c = Checks(4, acceptance_log)
    rng = substream(SEED, 4)
    blocks = 10**5

    e3 = order_stat_moments(sig(3), 128, variance=False)
    mc, se = sample_order_stats(sig(3), 128, blocks, rng)
    c.add("E[L(1)] 3dB", close(e3.e_l[0], 0.0739, 1e-3), f"{e3.e_l[0]:.5f} vs 0.0739")
    c.add("E[L(1)] 3dB MC", abs(e3.e_l[0] - mc[0]) < 3 * se[0], f"MC {mc[0]:.5f} +- {se[0]:.1e}")

    e8 = order_stat_moments(sig(8), 128, variance=False)
    mc, se = sample_order_stats(sig(8), 128, blocks, rng)
    c.add("E[L(128)] 8dB", close(e8.e_l[-1], 25.65, 0.05), f"{e8.e_l[-1]:.4f} vs 25.65")
    c.add("E[L(128)] 8dB MC", abs(e8.e_l[-1] - mc[-1]) < 3 * se[-1], f"MC {mc[-1]:.4f} +- {se[-1]:.1e}")

    s6 = sig(6)
    v6 = order_stat_moments(s6, 40).var_l[0]
    y = 1.0 + s6 * rng.standard_normal((blocks, 40))
    first = np.abs(2.0 * y / s6**2).min(axis=1)
    dev = first - first.mean()
    mc_var = float(np.mean(dev**2))
    mc_se = math.sqrt((np.mean(dev**4) - mc_var**2) / blocks)
    c.add("Var[L(1)] n=40 6dB", close(v6, 0.527, 5e-3), f"{v6:.5f} vs 0.527")
    c.add("Var[L(1)] MC", abs(v6 - mc_var) < 3 * mc_se, f"MC {mc_var:.5f} +- {mc_se:.1e}")
    c.close()


def _bler(config, eb):
    rec = run_point(config, eb)
    return rec


def _rel(got, ref):
    return abs(got - ref) / ref


def test_criterion_5_bch_31_16(acceptance_log):
    c = Checks(5, acceptance_log)
    base = dict(code="bch-31-16", seed=SEED, min_errors=MIN_ERRORS)
    orb4 = _bler(SimConfig(decoder="orbgrand", **base), 4.0)
    orb45 = _bler(SimConfig(decoder="orbgrand", **base), 4.5)
    ds = _bler(SimConfig(decoder="dsgrand", q=3, flavor="nonuniform", **base), 4.0)
    sg = _bler(SimConfig(decoder="sgrand", **base), 4.0)
    for name, rec, ref in (("ORBGRAND 4dB", orb4, 2.61e-3), ("ORBGRAND 4.5dB", orb45, 8.44e-4),
                           ("DSGRAND nonuni q=3 4dB", ds, 2.46e-3), ("SGRAND 4dB", sg, 1.97e-3)):
        c.add(name, _rel(rec.bler, ref) <= 0.2, f"{rec.bler:.3e} vs {ref:.3e}, {rec.errors} errors")
    c.add("ORBGRAND mean n_p 4dB", _rel(orb4.mean_np, 153) <= 0.2, f"{orb4.mean_np:.1f} vs 153")
    c.close()


def test_criterion_6_bch_63_45(acceptance_log):
    c = Checks(6, acceptance_log)
    base = dict(code="bch-63-45", seed=SEED, min_errors=MIN_ERRORS)
    ds = _bler(SimConfig(decoder="dsgrand", q=2, flavor="nonuniform", **base), 4.0)
    orb = _bler(SimConfig(decoder="orbgrand", **base), 4.0)
    c.add("DSGRAND nonuni q=2 4dB", _rel(ds.bler, 2.80e-3) <= 0.2, f"{ds.bler:.3e} vs 2.80e-3, {ds.errors} errors")
    c.add("ORBGRAND 4dB", _rel(orb.bler, 2.86e-3) <= 0.2, f"{orb.bler:.3e} vs 2.86e-3, {orb.errors} errors")
    c.close()


def _blocks(code, ebn0, count, seed):
    p = snr_convert(ebn0, code.n, code.k)
    rng = substream(seed, 7)
    words = code.encode(rng.integers(0, 2, (count, code.k), dtype=np.uint8))
    obs = transmit(words, p, rng)
    return [Observation(obs.y[b], obs.llr[b], obs.hard[b], obs.rel[b], p.sigma) for b in range(count)]


def test_criterion_7_exact_oracles(acceptance_log):
    import itertools

    c = Checks(7, acceptance_log)

    # (a) SGRAND against exhaustive ML
    code = builtin_code("hamming-15-11")
    book = code.encode(np.array(list(itertools.product([0, 1], repeat=code.k)), dtype=np.uint8))
    dec = make_decoder("sgrand", code)
    mismatches = 0
    blocks = _blocks(code, 5.0, 10**4, SEED)
    for obs in blocks:
        res = dec(obs)
        best = ((book ^ obs.hard) * obs.rel).sum(axis=1).min()
        got = ((res.codeword ^ obs.hard) * obs.rel).sum() if res.found else math.inf
        mismatches += not abs(got - best) <= 1e-9 * max(1.0, best)
    c.add("a SGRAND=ML", mismatches == 0, f"{mismatches} mismatches in {len(blocks)}")

    # (b) DSGRAND enumeration against brute force
    rng = np.random.default_rng(SEED)
    bad = 0
    cases = 300
    for _ in range(cases):
        n = int(rng.integers(1, 13))
        w = [int(x) for x in rng.integers(1, 8, n)]
        smax = int(rng.integers(0, 31))
        got = list(DSGrandSource(w, smax))
        ref = sorted((m, sum(w[j] for j in range(n) if m >> j & 1)) for m in range(1, 1 << n))
        ref = [(m, s) for m, s in ref if s <= smax]
        scores = [s for _, s in got]
        bad += not (sorted(got) == ref and len({m for m, _ in got}) == len(got) and scores == sorted(scores))
    c.add("b enumeration", bad == 0, f"{bad} of {cases} random cases differ")

    # (c) weight-scaling invariance
    code = builtin_code("bch-31-16")
    kern = get_kernels()
    blocks = _blocks(code, 3.5, 300, SEED + 1)
    quant = design_quantizer(blocks[0].sigma, 3, "nonuniform")
    cols = np.ascontiguousarray(code.column_words)
    rwc = np.ascontiguousarray(code.row_weight_cumsum, dtype=np.int64)
    differ = 0
    for obs in blocks:
        perm = reliability_order(obs.rel)
        pc = np.ascontiguousarray(cols[perm])
        s0 = np.bitwise_xor.reduce(cols[obs.hard.astype(bool)], axis=0).astype(np.uint64)
        w = np.ascontiguousarray(quant.weigh(obs.rel[perm]), dtype=np.int64)
        smax = code.n * int(w.max())
        a = kern.dsgrand(pc, s0, w, smax, 2**19, rwc, None)
        for alpha in (2, 3, 5):
            b = kern.dsgrand(pc, s0, alpha * w, alpha * smax, 2**19, rwc, None)
            differ += not (a[:2] == b[:2] and np.array_equal(a[3], b[3]) and (not a[0] or b[2] == alpha * a[2]))
    c.add("c scaling", differ == 0, f"{differ} differing decodes over {len(blocks)} blocks x 3")

    # (d) score distribution against Monte Carlo; (e) s_max selection
    n, k = 128, 106
    p = snr_convert(5.5, n, k)
    quant = heuristic_quantizer(p.sigma, 3)
    dist = true_score_distribution(p.sigma, n, quant)
    counts = np.zeros(dist.cap + 1)
    mc_rng = substream(SEED, 8)
    total = 10**6
    for _ in range(total // 50000):
        y = 1.0 + p.sigma * mc_rng.standard_normal((50000, n))
        score = (quant.weigh(np.abs(2 * y / p.sigma**2)) * (y < 0)).sum(axis=1)
        counts += np.bincount(np.minimum(score, dist.cap), minlength=dist.cap + 1)
    tv = 0.5 * np.abs(counts / total - dist.pmf).sum()
    c.add("d score TV", tv < 0.01, f"TV {tv:.4f}")
    smax = select_smax(dist, 1e-5)
    c.add("e s_max", abs(smax - 38) <= 4, f"{smax} vs 38")
    c.close()


def test_criterion_8_trends(acceptance_log):
    c = Checks(8, acceptance_log)
    points = (3.0, 4.0, 5.0, 6.0)
    cfg = SimConfig(code="bch-31-16", decoder="orbgrand", seed=SEED, min_errors=300, max_trials=2 * 10**6,
                    ebn0_db=points)
    blers = [run_point(cfg, eb, key).bler for key, eb in enumerate(points)]
    c.add("BLER decreasing", all(a > b for a, b in zip(blers, blers[1:])),
          " ".join(f"{x:.2e}" for x in blers))

    # same seed and chunking, so every decoder sees the same noise
    trials = 200_000
    common = dict(code="bch-31-16", seed=SEED, min_errors=10**9, max_trials=trials)
    ladder = [("SGRAND", SimConfig(decoder="sgrand", **common))]
    ladder += [(f"q={q}", SimConfig(decoder="dsgrand", q=q, flavor="nonuniform", **common)) for q in (3, 2, 1)]
    recs = [(name, run_point(cfg, 4.5)) for name, cfg in ladder]
    z = stats.norm.ppf(0.995)
    for (na, a), (nb, b) in zip(recs, recs[1:]):
        slack = z * math.sqrt(a.errors + b.errors)
        c.add(f"{na}<={nb}", a.errors <= b.errors + slack, f"{a.errors} vs {b.errors} errors")
    c.add("mean n_p", True, ", ".join(f"{name} {r.mean_np:.1f}" for name, r in recs))
    c.close()
