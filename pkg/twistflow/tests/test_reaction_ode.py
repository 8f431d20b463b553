import numpy as np
import pytest

from twistflow.errors import BlowUpError, TwistFlowWarning, UndefinedForZeroTauError
from twistflow.reaction_ode import ReactionState, conserved, integrate, rhs


def test_rhs_and_conserved():
    assert rhs(ReactionState(2.0, 1.0)) == (6.0, 8.0)
    assert conserved(ReactionState(1.0, 1.0)) == 2.0
    assert conserved(ReactionState(1.0, -1.0)) == -2.0
    with pytest.raises(UndefinedForZeroTauError):
        conserved(ReactionState(1.0, 0.0))


def test_conservation_and_limit():
    traj = integrate(ReactionState(1.0, 1.0), t_end=5.0, dt=1e-4)
    assert traj.stop_reason == "EndTime"
    np.testing.assert_allclose(traj.t[-1], 5.0)
    assert traj.conserved_drift() < 1e-8
    np.testing.assert_allclose(traj.tau_limit, 2.0, atol=1e-4)
    # orbits are the arcs κ² = Cτ - τ²
    np.testing.assert_allclose(traj.kappa ** 2, 2 * traj.tau - traj.tau ** 2, atol=1e-8)


def test_drift_order():
    drifts = [integrate(ReactionState(1.0, 1.0), t_end=5.0, dt=dt, stiffness=1.0)
              .conserved_drift() for dt in (0.04, 0.02, 0.01, 0.005)]
    for coarse, fine in zip(drifts[:-1], drifts[1:]):
        assert coarse / fine >= 8


def test_large_conserved_value():
    traj = integrate(ReactionState(3.0, 0.1), dt=1e-4)
    assert traj.stop_reason == "KappaVanished"
    np.testing.assert_allclose(traj.tau_limit, (9 + 0.01) / 0.1, rtol=1e-3)


def test_kappa_vanishes():
    traj = integrate(ReactionState(1.0, 1.0), t_end=20.0, dt=1e-3)
    assert traj.stop_reason == "KappaVanished"
    assert traj.t[-1] < 20.0


def test_planar_blow_up():
    with pytest.raises(BlowUpError) as err:
        integrate(ReactionState(1.0, 0.0), dt=1e-4)
    traj = err.value.trajectory
    assert traj.stop_reason == "BlowUp"
    np.testing.assert_array_equal(traj.tau, 0.0)
    resolved = traj.kappa < 100
    np.testing.assert_allclose(traj.kappa[resolved], 1 / np.sqrt(1 - 2 * traj.t[resolved]),
                               rtol=1e-6)
    assert traj.t[-1] < 0.5


def test_mirror_trajectory():
    a = integrate(ReactionState(1.0, 0.5), t_end=1.0, dt=1e-3)
    b = integrate(ReactionState(1.0, -0.5), t_end=1.0, dt=1e-3)
    np.testing.assert_allclose(b.kappa, a.kappa)
    np.testing.assert_allclose(b.tau, -a.tau)


def test_step_limit():
    with pytest.warns(TwistFlowWarning):
        traj = integrate(ReactionState(1.0, 1.0), t_end=1.0, dt=1e-3, max_steps=10)
    assert traj.stop_reason == "MaxSteps"
    assert traj.t.size == 11
    with pytest.raises(ValueError):
        integrate(ReactionState(1.0, 1.0), dt=0.0)
