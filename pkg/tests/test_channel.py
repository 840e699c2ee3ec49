import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from softgrand.channel import ChannelParams, Observation, bpsk, snr_convert, substream, transmit


def test_bpsk():
    assert np.array_equal(bpsk([0, 1, 0]), [1.0, -1.0, 1.0])
    assert np.all(bpsk(np.zeros(5)) == 1.0)
    assert np.all(bpsk(np.ones(5)) == -1.0)


def test_esn0_definitions():
    assert ChannelParams.from_esn0(4.0).sigma ** 2 == pytest.approx(0.398107, abs=1e-6)
    assert ChannelParams.from_esn0(7.0).sigma == pytest.approx(0.446684, abs=1e-6)


def test_ebn0_conversion():
    p = snr_convert(4.0, 31, 16)
    assert p.es_n0_db == pytest.approx(4.0 + 10 * math.log10(32 / 31), abs=1e-12)
    assert p.rate == 16 / 31


@given(st.floats(-5, 15), st.integers(1, 200), st.data())
def test_snr_representations_agree(eb, n, data):
    k = data.draw(st.integers(1, n))
    p = snr_convert(eb, n, k)
    es_lin = 10 ** (p.es_n0_db / 10)
    assert 1 / p.sigma**2 == pytest.approx(es_lin, rel=1e-12)
    assert es_lin == pytest.approx(10 ** (eb / 10) * 2 * k / n, rel=1e-12)
    back = ChannelParams.from_sigma(p.sigma, p.rate)
    assert back.eb_n0_db == pytest.approx(eb, abs=1e-9)


def test_snr_convert_rejects():
    with pytest.raises(ValueError):
        snr_convert(4.0, 10, 11)


def test_noiseless():
    rng = np.random.default_rng(0)
    c = rng.integers(0, 2, 64, dtype=np.uint8)
    obs = transmit(c, ChannelParams.from_sigma(1e-9), rng)
    assert np.array_equal(obs.hard, c)


def test_deterministic_stream():
    c = np.zeros(40, dtype=np.uint8)
    p = ChannelParams.from_esn0(3.0)
    a = transmit(c, p, substream(5, 1, 2))
    b = transmit(c, p, substream(5, 1, 2))
    assert np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, transmit(c, p, substream(5, 1, 3)).y)


def test_mean_clt():
    p = ChannelParams.from_esn0(2.0)
    obs = transmit(np.zeros(10**6, dtype=np.uint8), p, substream(3))
    assert abs(obs.y.mean() - 1.0) < 3 * p.sigma / 1e3


@given(st.lists(st.floats(-5, 5, allow_subnormal=False), min_size=1, max_size=30),
       st.floats(0.1, 2.0))
def test_observation_invariants(ys, sigma):
    obs = Observation.from_output(np.array(ys), sigma)
    assert np.allclose(obs.llr, 2 * np.array(ys) / sigma**2)
    assert np.array_equal(obs.rel, np.abs(obs.llr))
    assert np.array_equal(obs.hard == 1, obs.llr < 0)


def test_zero_decides_zero():
    assert Observation.from_output(np.array([0.0, -0.0]), 1.0).hard.tolist() == [0, 0]


def test_reliability_symmetric_under_flip():
    p = ChannelParams.from_esn0(3.0)
    a = transmit(np.zeros(10**5, dtype=np.uint8), p, substream(1)).rel
    b = transmit(np.ones(10**5, dtype=np.uint8), p, substream(2)).rel
    edges = np.quantile(np.concatenate([a, b]), np.linspace(0, 1, 21))
    edges[-1] += 1.0
    ha, _ = np.histogram(a, edges)
    hb, _ = np.histogram(b, edges)
    _, pvalue, _, _ = stats.chi2_contingency(np.vstack([ha, hb]))
    assert pvalue > 1e-3
