import math

import numpy as np
import pytest

from fading_ilms import channels as ch
from fading_ilms import harness as hs
from fading_ilms import network as nw
from fading_ilms import simulation as sm
from fading_ilms import theory as th
from fading_ilms.errors import StabilityError, ValidationError


def _ss(values):
    v = np.asarray(values, dtype=float)
    return th.SteadyState(v, v * 2, v * 3)


def test_compare_identical_passes():
    rep = hs.compare(_ss([1e-3, 2e-4]), _ss([1e-3, 2e-4]))
    assert rep.passed is True
    assert all(np.all(d == 0) for d in rep.deltas.values())


def test_compare_factor_two_is_3db():
    rep = hs.compare(_ss([1e-3]), _ss([2e-3]), tol_db=1.0)
    for d in rep.deltas.values():
        assert d[0] == pytest.approx(3.0103, abs=1e-4)
    assert rep.passed is False
    assert hs.compare(_ss([1e-3]), _ss([2e-3]), tol_db=3.02).passed is True


def test_compare_mismatched_nodes():
    with pytest.raises(ValidationError):
        hs.compare(_ss([1.0, 2.0]), _ss([1.0]))


def test_one_sided_report_has_no_verdict():
    rep = hs.compare(_ss([1.0]), None)
    assert rep.deltas is None and rep.passed is None
    d = rep.to_dict()
    assert d["sim"] is None and d["delta_db"] is None
    assert d["theory"]["msd"]["db"] == [0.0]


def test_db_consistency():
    rep = hs.compare(_ss([1e-2, 5e-4]), _ss([1.1e-2, 4e-4]))
    for side in ("theory", "sim"):
        for m in hs.METRICS:
            assert np.allclose(rep.db(side, m), 10 * np.log10(getattr(getattr(rep, side), m)))


def test_stability_summary_keys():
    summary = hs.stability_summary(nw.default_profile(seed=0, N=3))
    assert summary["mean_stable"] and summary["node_factor_stable"] and summary["cycle_stable"]
    assert summary["shared_eigenbasis"]
    assert len(summary["cycle_rho"]) == 3


def test_scalar_oracle_ideal_reproduces_closed_form():
    p = nw.make_profile([1.0], 0.02, [[1.0]], 0.01, ch.ideal(), gamma=1.0)
    # Real data has gamma = 2 in truth; compare against the matching theory.
    p_real = p.replace(gamma=2.0)
    res = hs.scalar_oracle(p_real, iterations=200_000, seed=3)
    theory = th.theoretical_metrics(p_real)
    assert abs(res.msd[0] - theory.msd[0]) < 4 * res.stderr["msd"][0]
    assert res.iterations == 200_000 and res.burn_in >= 100


def test_scalar_oracle_silent_profile_is_zero():
    p = nw.make_profile([0.0], 0.05, [[1.0]], 0.0, ch.rayleigh(0.5))
    res = hs.scalar_oracle(p, iterations=10_000)
    assert res.msd[0] < 1e-20 and res.emse[0] < 1e-20 and res.mse[0] < 1e-20


def test_scalar_oracle_rejects_vectors_and_divergence():
    with pytest.raises(ValidationError):
        hs.scalar_oracle(nw.default_profile(seed=0, N=1))
    p = nw.make_profile([1.0], 0.02, [[1.0]], 0.01, ch.deterministic(1.3))
    with pytest.raises(StabilityError):
        hs.scalar_oracle(p, iterations=1000)


def test_burn_in_floor():
    p = nw.make_profile([1.0], 0.5, [[1.0]], 0.01, ch.deterministic(0.1))
    assert hs.burn_in_cycles(p) == 100
    slow = nw.make_profile([1.0], 1e-3, [[1.0]], 0.01, ch.ideal())
    assert hs.burn_in_cycles(slow) > 1000


def test_transient_match_first_iteration_exact():
    p = nw.make_profile([0.6, 0.8], 0.05, np.diag([1.0, 2.0]), 0.01, ch.ideal())
    res = sm.run_ensemble(p, sm.SimConfig(iterations=5, runs=10, tail=1, master_seed=0))
    tc = th.transient_recursion(p, 5)
    assert res.msd_curve[0, 0] == tc.msd[0, 0] == pytest.approx(1.0)
    assert hs.transient_match(res.msd_curve, tc.msd, window=[0])[0] == pytest.approx(0.0, abs=1e-12)


def test_transient_match_diverging_profile_stays_bounded():
    p = nw.make_profile([1.0], 0.02, [[1.0]], 0.01, ch.deterministic(1.2), gamma=2.0)
    res = sm.run_ensemble(p, sm.SimConfig(iterations=50, runs=400, tail=1, master_seed=4))
    tc = th.transient_recursion(p, 50)
    assert res.msd_curve[0, -1] > 10 * res.msd_curve[0, 0]
    assert tc.msd[0, -1] > 10 * tc.msd[0, 0]
    assert hs.transient_match(res.msd_curve, tc.msd)[0] < 1.0


def test_transient_match_shape_check():
    with pytest.raises(ValidationError):
        hs.transient_match(np.ones((1, 3)), np.ones((1, 4)))


def test_to_db():
    assert hs.to_db([1.0, 10.0, 0.01]) == pytest.approx([0.0, 10.0, -20.0])
    assert math.isinf(hs.to_db(0.0))
