import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fading_ilms import channels as ch
from fading_ilms.errors import ParameterError


def test_moments_ideal_and_deterministic():
    assert ch.moments(ch.ideal()) == (1.0, 1.0)
    assert ch.moments(ch.deterministic(0.5)) == (0.5, 0.25)


def test_rayleigh_moments_closed_form_and_sampled():
    model = ch.rayleigh(0.56419)
    m, s = ch.moments(model)
    assert m == pytest.approx(0.70711, abs=1e-5)
    assert s == pytest.approx(0.63662, abs=1e-5)
    rng = np.random.default_rng(0)
    total, total2, n = 0.0, 0.0, 0
    for _ in range(10):
        h = ch.sample_gains(model, rng, 1_000_000)
        total += h.sum()
        total2 += (h * h).sum()
        n += h.size
    assert total / n == pytest.approx(m, abs=4 * math.sqrt(s - m * m) / math.sqrt(n))
    assert total2 / n == pytest.approx(s, rel=2e-3)


def test_rician_moments_match_scipy():
    model = ch.rician(0.8, 0.4)
    m, s = ch.moments(model)
    ref = stats.rice(0.8 / 0.4, scale=0.4)
    assert m == pytest.approx(ref.mean(), rel=1e-12)
    assert s == pytest.approx(ref.moment(2), rel=1e-12)


def test_rician_without_line_of_sight_is_rayleigh():
    assert ch.moments(ch.rician(0.0, 0.7)) == pytest.approx(ch.moments(ch.rayleigh(0.7)), rel=1e-14)


@pytest.mark.parametrize(
    "mean, sigma",
    [(math.sqrt(2) / 2, 0.5641895835477564), (math.sqrt(math.pi / 2), 1.0), (1.2533, 0.9999887200542313)],
)
def test_rayleigh_from_mean(mean, sigma):
    model = ch.rayleigh_from_mean(mean)
    assert model.sigma == pytest.approx(sigma, rel=1e-12)
    assert ch.moments(model)[0] == pytest.approx(mean, rel=1e-15)


def test_rayleigh_from_mean_second_moment_is_two_over_pi():
    assert ch.moments(ch.rayleigh_from_mean(math.sqrt(2) / 2))[1] == pytest.approx(2 / math.pi, rel=1e-14)


@pytest.mark.parametrize("bad", [0.0, -0.3])
def test_rayleigh_from_mean_rejects_nonpositive(bad):
    with pytest.raises(ParameterError):
        ch.rayleigh_from_mean(bad)


@pytest.mark.parametrize(
    "factory",
    [lambda: ch.deterministic(-1.0), lambda: ch.rayleigh(0.0), lambda: ch.rician(-0.1, 1.0),
     lambda: ch.ChannelModel("ideal", sigma_c2=1e-3), lambda: ch.ChannelModel("nakagami")],
)
def test_invalid_models_raise(factory):
    with pytest.raises(ParameterError):
        factory()


def test_constant_gains():
    rng = np.random.default_rng(1)
    assert ch.sample_gain(ch.ideal(), rng) == 1.0
    assert ch.sample_gain(ch.deterministic(0.7), rng) == 0.7


def test_rayleigh_sample_mean_within_clt_bound():
    h = ch.sample_gains(ch.rayleigh(0.56419), np.random.default_rng(2), 1_000_000)
    assert abs(h.mean() - 0.70711) < 0.003


@pytest.mark.parametrize(
    "model", [ch.ideal(), ch.deterministic(1.3), ch.rayleigh(0.4), ch.rician(1.0, 0.5), ch.rician(0.2, 0.9)]
)
def test_sample_moments_within_four_standard_errors(model):
    h = ch.sample_gains(model, np.random.default_rng(5), 1_000_000)
    m, s = ch.moments(model)
    n = h.size
    assert np.all(h >= 0)
    se1 = math.sqrt(max(s - m * m, 0) / n)
    se2 = np.std(h * h) / math.sqrt(n)
    assert abs(h.mean() - m) <= 4 * se1 + 1e-12
    assert abs((h * h).mean() - s) <= 4 * se2 + 1e-12


def test_sampling_is_reproducible():
    model = ch.rician(0.5, 0.5)
    a = ch.sample_gains(model, np.random.default_rng(9), 100)
    b = ch.sample_gains(model, np.random.default_rng(9), 100)
    assert np.array_equal(a, b)
    g1, g2 = np.random.default_rng(4), np.random.default_rng(4)
    assert [ch.sample_gain(model, g1) for _ in range(5)] == [ch.sample_gain(model, g2) for _ in range(5)]


positive = st.floats(min_value=1e-3, max_value=50, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    kind=st.sampled_from(["ideal", "deterministic", "rayleigh", "rician"]),
    a=positive,
    b=positive,
)
def test_jensen_gap_nonnegative(kind, a, b):
    model = {
        "ideal": ch.ideal,
        "deterministic": lambda: ch.deterministic(a),
        "rayleigh": lambda: ch.rayleigh(a),
        "rician": lambda: ch.rician(a, b),
    }[kind]()
    m, s = ch.moments(model)
    if kind in ("ideal", "deterministic"):
        assert s == m * m
    else:
        assert s - m * m > 0


def test_dict_round_trip():
    for model in (ch.ideal(), ch.deterministic(0.4, 1e-3), ch.rayleigh(0.3, 2e-4), ch.rician(0.9, 0.2, 0.0)):
        assert ch.from_dict(ch.to_dict(model)) == model


def test_from_dict_rayleigh_mean_form():
    model = ch.from_dict({"type": "rayleigh", "mean": 0.7071, "sigma_c2": 0.001})
    assert ch.moments(model)[0] == pytest.approx(0.7071)
    assert model.sigma_c2 == 0.001


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ParameterError):
        ch.from_dict({"type": "rayleigh", "mean": 0.7, "phase": 1.0})
    with pytest.raises(ParameterError):
        ch.from_dict({"type": "rayleigh", "mean": 0.7, "sigma": 0.5})
