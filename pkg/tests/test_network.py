import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fading_ilms import channels as ch
from fading_ilms import network as nw
from fading_ilms.errors import ParameterError, ValidationError


def test_build_covariance_scalar():
    assert np.array_equal(nw.build_covariance(1, 1.0, 1.0), [[1.0]])


def test_build_covariance_unit_spread_is_identity():
    R = nw.build_covariance(4, 4.0, 1.0, np.random.default_rng(0))
    assert np.allclose(R, np.eye(4), atol=1e-14)


def test_build_covariance_geometric_eigenvalues():
    # a * (1 + r + r^2 + r^3) = 4 with r = 5 ** (1/3)
    expected = [0.3761521887758712, 0.6432111950965319, 1.0998756722482417, 1.8807609438793553]
    lam = np.linalg.eigvalsh(nw.build_covariance(4, 4.0, 5.0, np.random.default_rng(1)))
    assert lam == pytest.approx(expected, rel=1e-12)
    assert lam[-1] / lam[0] == pytest.approx(5.0, rel=1e-12)
    assert lam.sum() == pytest.approx(4.0, rel=1e-13)


def test_build_covariance_rejects_spread_below_one():
    with pytest.raises(ParameterError):
        nw.build_covariance(3, 1.0, 0.9)


@settings(max_examples=60, deadline=None)
@given(
    M=st.integers(1, 6),
    trace=st.floats(0.1, 50),
    spread=st.floats(1.0, 100),
    seed=st.integers(0, 2**32 - 1),
    cplx=st.booleans(),
)
def test_build_covariance_properties(M, trace, spread, seed, cplx):
    R = nw.build_covariance(M, trace, spread, np.random.default_rng(seed), cplx)
    e = nw.eigendecompose(R)
    assert np.real(np.trace(R)) == pytest.approx(trace, rel=1e-12)
    if M > 1:
        assert e.lam[-1] / e.lam[0] == pytest.approx(spread, rel=1e-10)
    assert np.allclose(e.U @ e.U.conj().T, np.eye(M), atol=1e-10)
    recon = (e.U * e.lam) @ e.U.conj().T
    assert np.linalg.norm(recon - R) <= 1e-10 * np.linalg.norm(R)


def test_eigendecompose_identity():
    e = nw.eigendecompose(np.eye(4))
    assert np.array_equal(e.lam, np.ones(4))
    assert np.allclose(np.abs(e.U), np.eye(4))


def test_eigendecompose_diagonal_sorted():
    e = nw.eigendecompose(np.diag([5.0, 1.0]))
    assert np.allclose(e.lam, [1.0, 5.0])
    assert np.allclose(np.abs(e.U), [[0, 1], [1, 0]])


@pytest.mark.parametrize("bad", [np.array([[1.0, 2.0], [0.0, 1.0]]), np.diag([1.0, -1.0]), np.ones((2, 3))])
def test_eigendecompose_rejects(bad):
    with pytest.raises(ValidationError):
        nw.eigendecompose(bad)


def test_default_profile_is_valid():
    p = nw.default_profile(seed=0)
    assert (p.N, p.M) == (20, 4)
    assert nw.validate_profile(p) == []
    assert np.all((p.sigma_v2 >= 1e-3) & (p.sigma_v2 <= 1e-2))
    assert np.all((np.diagonal(p.Q, axis1=1, axis2=2) >= 1e-4) & (np.diagonal(p.Q, axis1=1, axis2=2) <= 1e-3))
    assert np.allclose(p.m, np.sqrt(2) / 2)
    assert nw.shares_eigenbasis(p)


def test_random_bases_are_detected():
    assert not nw.shares_eigenbasis(nw.default_profile(seed=0, basis="random"))
    assert nw.shares_eigenbasis(nw.default_profile(seed=0, basis="identity"))


def test_negative_q_eigenvalue_names_node():
    p = nw.default_profile(seed=0, N=3)
    Q = np.array(p.Q)
    Q[1] = np.diag([1e-3, -1e-3, 0.0, 0.0])
    problems = nw.validate_profile(nw.make_profile(p.w_o, p.mu, p.R, p.sigma_v2, p.channels, Q=Q))
    assert len(problems) == 1
    assert "node 2" in problems[0] and "Q" in problems[0]


def test_wrong_w_o_length_is_dimension_violation():
    p = nw.default_profile(seed=0, N=2)
    bad = nw.NetworkProfile(np.full(3, 0.5), p.mu, p.R, p.sigma_v2, p.channels, p.Q)
    problems = nw.validate_profile(bad)
    assert problems and all("shape" in s for s in problems)


def test_validation_is_pure():
    p = nw.default_profile(seed=4, N=3)
    before = nw.profile_hash(p)
    assert nw.validate_profile(p) == nw.validate_profile(p) == []
    assert nw.profile_hash(p) == before


def test_negative_noise_variance_is_reported():
    p = nw.make_profile([1.0], 0.1, [[1.0]], [0.01, -0.01], ch.ideal())
    assert nw.validate_profile(p) == ["node 2: noise variance -0.01 must be >= 0"]
    with pytest.raises(ValidationError):
        nw.check_profile(p)


def test_profile_arrays_are_read_only():
    p = nw.default_profile(seed=0, N=2)
    with pytest.raises(ValueError):
        p.R[0, 0, 0] = 3.0
