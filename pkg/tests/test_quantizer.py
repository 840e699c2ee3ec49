import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from softgrand.errors import DesignError
from softgrand.quantizer import (
    ReliabilityQuantizer,
    design_quantizer,
    heuristic_quantizer,
    integer_weights,
    optimal_outputs,
    optimize_nonuniform,
    optimize_uniform,
    quantize_reliability,
    quantizer_from_boundaries,
)
from softgrand.rates import lm_rate, quantized_mi


def sig(es_db):
    return 10 ** (-es_db / 20)


TABLE_NONUNIFORM_4DB = ReliabilityQuantizer(2, (1.1352, 2.4582, 4.3560), (1.0, 3.1534, 5.8914, 10.5689),
                                            (1, 3, 6, 11), sig(4))


class TestApply:
    def test_examples(self):
        q = TABLE_NONUNIFORM_4DB
        assert quantize_reliability(q, 2.0) == (2, 3)
        assert quantize_reliability(q, 1.1352) == (2, 3)
        assert quantize_reliability(q, 0.0) == (1, 1)
        assert quantize_reliability(q, 1e9) == (4, 11)

    def test_negative(self):
        with pytest.raises(ValueError):
            quantize_reliability(TABLE_NONUNIFORM_4DB, -0.1)

    @given(st.floats(0, 50), st.floats(0, 50))
    def test_monotone(self, a, b):
        q = TABLE_NONUNIFORM_4DB
        lo, hi = sorted((a, b))
        assert quantize_reliability(q, lo)[1] <= quantize_reliability(q, hi)[1]

    def test_vectorised_weigh(self):
        rel = np.array([0.0, 1.2, 3.0, 9.0])
        assert TABLE_NONUNIFORM_4DB.weigh(rel).tolist() == [1, 3, 6, 11]


class TestHeuristic:
    def test_tables(self):
        assert heuristic_quantizer(sig(4), 2).boundaries == pytest.approx((0.8597, 1.7194, 2.5792), abs=1e-3)
        assert heuristic_quantizer(sig(7), 2).boundaries == pytest.approx((1.9463, 3.8925, 5.8388), abs=1e-3)

    def test_q1(self):
        s = 0.8
        q = heuristic_quantizer(s, 1)
        assert q.Q == 2
        assert q.boundaries == pytest.approx(((2 / s**2) * (1 - s / 2) / 2,))

    def test_large_sigma(self):
        with pytest.raises(DesignError):
            heuristic_quantizer(2.0, 2)


class TestOutputs:
    def test_table_nonuniform(self):
        v = optimal_outputs(sig(4), (1.1352, 2.4582, 4.3560))
        assert v / v[0] == pytest.approx((1.0, 3.1534, 5.8914, 10.5689), abs=2e-3)

    def test_table_uniform(self):
        v = optimal_outputs(sig(7), (1.7278, 3.4557, 5.1835))
        assert v / v[0] == pytest.approx((1.0, 3.0, 5.0001, 9.1775), abs=2e-3)

    def test_top_cell_grows_as_noise_vanishes(self):
        tops = [optimal_outputs(s, (1.0, 2.0))[-1] for s in (1.0, 0.8, 0.6, 0.5)]
        assert np.all(np.diff(tops) > 0)

    def test_inner_cells_are_llr_midpoints(self):
        # on a symmetric Gaussian LLR channel the per-cell LLR of a thin cell is its centre
        v = optimal_outputs(0.9, (1.0, 1.001, 3.0))
        assert v[1] == pytest.approx(1.0005, abs=1e-4)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_underflow(self):
        # log-domain tails stay finite far out; only an absurd top cell empties
        with pytest.raises(DesignError):
            optimal_outputs(0.05, (1.0, 2.0, 1e300))


class TestIntegerWeights:
    def test_examples(self):
        assert integer_weights((1.0, 3.1534, 5.8914, 10.5689)) == (1, 3, 6, 11)
        assert integer_weights((1.0, 3.0001, 5.0003, 8.6992)) == (1, 3, 5, 9)

    def test_collapse_warns(self):
        with pytest.warns(UserWarning):
            assert integer_weights((1.0, 1.4)) == (1, 1)

    def test_scale(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert integer_weights((2.0, 6.2, 11.0)) == (1, 3, 6)


class TestDesign:
    def test_uniform_tables(self):
        q4 = optimize_uniform(sig(4), 2)
        assert q4.boundaries[0] == pytest.approx(1.3641, abs=5e-3)
        q7 = optimize_uniform(sig(7), 2)
        assert q7.boundaries[0] == pytest.approx(1.7278, abs=5e-3)
        assert q7.weights == (1, 3, 5, 9)
        # the 4 dB top output is 8.52 and rounds up; see the acceptance suite
        assert q4.weights[:3] == (1, 3, 5)
        assert q4.values[3] / q4.values[0] == pytest.approx(8.5196, abs=2e-3)

    def test_uniform_beats_heuristic_q1(self):
        s = sig(4)
        assert quantized_mi(s, optimize_uniform(s, 1)) >= quantized_mi(s, heuristic_quantizer(s, 1))

    def test_nonuniform_tables(self):
        q4 = optimize_nonuniform(sig(4), 2)
        assert q4.boundaries == pytest.approx((1.1352, 2.4582, 4.3560), abs=2e-2)
        assert q4.weights == (1, 3, 6, 11)
        real = quantizer_from_boundaries(sig(4), q4.boundaries)
        assert quantized_mi(sig(4), real) == pytest.approx(0.7884, abs=5e-4)
        q7 = optimize_nonuniform(sig(7), 2)
        assert q7.boundaries == pytest.approx((1.3878, 3.0636, 5.6249), abs=2e-2)

    def test_q1_nonuniform_is_uniform(self):
        s = sig(3)
        assert optimize_nonuniform(s, 1).boundaries == pytest.approx(optimize_uniform(s, 1).boundaries, abs=1e-4)

    @pytest.mark.parametrize("es", [3.0, 5.0, 7.0])
    def test_mi_ordering(self, es):
        s = sig(es)
        h, u, nu = (quantized_mi(s, design_quantizer(s, 2, f, cache=False))
                    for f in ("heuristic", "uniform", "nonuniform"))
        assert nu >= u - 1e-9 and u >= h - 1e-9

    def test_rounding_costs_little(self):
        for es in (4.0, 7.0):
            s = sig(es)
            q = design_quantizer(s, 2, "nonuniform", cache=False)
            assert 0 <= quantized_mi(s, q) - lm_rate(s, q) < 2e-4

    def test_unknown_flavor(self):
        with pytest.raises(DesignError):
            design_quantizer(0.5, 2, "optimal")


class TestFormatAndCache:
    def test_export_round_trip(self):
        q = heuristic_quantizer(sig(4), 2)
        back = ReliabilityQuantizer.parse(q.export(), q.flavor)
        assert back.weights == q.weights and back.q == 2
        assert back.boundaries == pytest.approx(q.boundaries, rel=1e-5)
        assert len(q.export().strip().split("\n")) == 4

    def test_cache_hit(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SOFTGRAND_CACHE_DIR", str(tmp_path))
        first = design_quantizer(sig(5), 2, "uniform")
        assert len(list(tmp_path.iterdir())) == 1
        second = design_quantizer(sig(5), 2, "uniform")
        assert second.weights == first.weights
        assert second.boundaries == pytest.approx(first.boundaries, rel=1e-5)

    def test_invalid(self):
        with pytest.raises(DesignError):
            ReliabilityQuantizer(2, (1.0, 0.5, 2.0), (1, 2, 3, 4), (1, 2, 3, 4), 1.0)
        with pytest.raises(DesignError):
            ReliabilityQuantizer(2, (1.0,), (1, 2), (1, 2), 1.0)
