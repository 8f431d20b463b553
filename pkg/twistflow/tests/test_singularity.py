import numpy as np
import pytest

from twistflow.errors import InsufficientDataError
from twistflow.flow import FlowConfig, FlowState, run
from twistflow.geometry import frenet
from twistflow.reaction_ode import ReactionState, integrate
from twistflow.scenarios import make
from twistflow.singularity import (BlowupSeries, Classification, ProfileModel, classify,
                                   collect, estimate_omega, max_point_bound, rescaled_profile,
                                   rescaled_profile_distance)


@pytest.fixture(scope="module")
def circle_series():
    result = run(make("circle", n=256), FlowConfig(t_end=0.45, snapshot_every=0.01))
    return collect(result.snapshots)


def test_collect_circle(circle_series):
    s = circle_series
    np.testing.assert_allclose(s.m_t, 1 / (1 - 2 * s.t), rtol=5e-3)
    np.testing.assert_array_equal(s.sup_tau_over_kappa, 0.0)
    assert np.all(s.essential)
    assert not np.any(s.twisted)


def test_q_on_circle():
    s = collect([FlowState.start(make("circle", {"R": 2.0}, n=256))])
    np.testing.assert_allclose(s.q_at_tau_max, 2 * 0.25, rtol=1e-8)


def test_helix_torsion_ratio():
    result = run(make("helix_unit", n=64), FlowConfig(t_end=0.3, snapshot_every=0.1))
    s = collect(result.snapshots)
    traj = integrate(ReactionState(0.5, 0.5), t_end=0.3, dt=1e-4)
    ratio = np.interp(s.t, traj.t, traj.tau / traj.kappa)
    np.testing.assert_allclose(s.sup_tau_over_kappa, ratio, rtol=1e-3)


def test_estimate_omega_circle(circle_series):
    est = estimate_omega(circle_series)
    np.testing.assert_allclose(est.omega_hat, 0.5, atol=1e-4)
    assert not est.inconclusive
    assert est.uncertainty < 1e-4


def test_estimate_omega_larger_circle():
    result = run(make("circle", {"R": 2.0}, n=64), FlowConfig(t_end=0.5, snapshot_every=0.05))
    est = estimate_omega(collect(result.snapshots))
    np.testing.assert_allclose(est.omega_hat, 2.0, atol=1e-3)


def test_estimate_omega_needs_growth():
    t = np.linspace(0, 1, 10)
    with pytest.raises(InsufficientDataError):
        estimate_omega(BlowupSeries(t=t, m_t=np.ones(10)))
    with pytest.raises(InsufficientDataError):
        estimate_omega(BlowupSeries(t=t[:5], m_t=1 / (1 - t[:5] / 2)))


def test_classify_circle(circle_series):
    verdict = classify(circle_series, estimate_omega(circle_series).omega_hat)
    assert verdict.classification is Classification.TYPE_I
    np.testing.assert_allclose(verdict.type_indicator, 0.5, rtol=0.05)
    assert verdict.indicator_band[0] <= verdict.type_indicator <= verdict.indicator_band[1]
    assert verdict.heuristic
    assert set(verdict.alpha_series) == {0.5, 0.9}
    profile = frenet(verdict.rescaled_profile)
    np.testing.assert_allclose(np.max(profile.kappa), 1.0, rtol=1e-12)
    d = verdict.to_dict()
    assert d["classification"] == "TypeI"


def test_classify_type_two():
    omega = 1.0
    t = omega * (1 - np.logspace(0, -3, 40))
    verdict = classify(BlowupSeries(t=t, m_t=(omega - t) ** -1.5), omega)
    assert verdict.classification is Classification.TYPE_II
    assert verdict.growth > 10


def test_classify_inconclusive():
    gap = np.logspace(0, -2, 30)
    indicator = 1 + np.log10(1 / gap) / 2
    verdict = classify(BlowupSeries(t=1 - gap, m_t=indicator / gap), 1.0)
    assert verdict.classification is Classification.INCONCLUSIVE
    np.testing.assert_allclose(verdict.growth, 2.0)
    assert 0.2 < verdict.spread < 0.4


def test_classify_needs_future_omega(circle_series):
    with pytest.raises(ValueError):
        classify(circle_series, 0.4)


def test_rescaled_profile():
    profile = rescaled_profile(make("ellipse_2to1", n=128))
    fr = frenet(profile)
    j = np.argmax(fr.kappa)
    np.testing.assert_allclose(fr.kappa[j], 1.0, rtol=1e-10)
    np.testing.assert_allclose(profile.points[j], 0.0, atol=1e-14)


def test_profile_distances():
    circle = make("circle", n=256)
    assert rescaled_profile_distance(circle, ProfileModel.CIRCLE) < 1e-4
    assert rescaled_profile_distance(rescaled_profile(make("circle", {"R": 3.0}, n=256)),
                                     "Circle") < 1e-4

    x = np.linspace(-1.47, 1.47, 301)
    reaper = np.column_stack([x, -np.log(np.cos(x)), np.zeros_like(x)])
    assert rescaled_profile_distance(reaper, ProfileModel.GRIM_REAPER) < 1e-3

    assert rescaled_profile_distance(circle, ProfileModel.GRIM_REAPER) > 0.05


def test_max_point_bound_on_coil():
    result = run(make("coil_twisted", n=128), FlowConfig(t_end=0.05))
    checks = max_point_bound(collect(result.snapshots))
    assert len(checks) == 4
    for c in checks:
        assert c.satisfied, c


def test_short_arc_is_not_a_circle():
    # circle and Grim Reaper agree to third order at the apex
    x = np.linspace(-0.3, 0.3, 61)
    arc = np.column_stack([x, -np.log(np.cos(x)), np.zeros_like(x)])
    assert rescaled_profile_distance(arc, ProfileModel.CIRCLE) > 0.1
