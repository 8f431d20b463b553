from dataclasses import replace

import numpy as np

from twistflow.flow import FlowConfig, FlowState, run
from twistflow.functionals import FunctionalTracker, sample, track_monotonicity
from twistflow.scenarios import make


def _tracked(id, n, t_end, **params):
    tracker = FunctionalTracker()
    run(make(id, params or None, n=n), FlowConfig(t_end=t_end), observers=[tracker])
    return tracker.samples


def test_planar_and_spherical_total_curvature():
    for id, n in (("circle", 32), ("ellipse_2to1", 64), ("sphere_wave", 128)):
        report = track_monotonicity(_tracked(id, n, 0.05))
        assert report.total_curvature_nonincreasing, id
        assert report.twisted_intervals == []


def test_twisted_coil():
    series = _tracked("coil_twisted", 128, 0.05)
    report = track_monotonicity(series)
    assert report.ok
    assert len(report.twisted_intervals) == 1
    interval = report.twisted_intervals[0]
    assert interval.t_start == 0
    np.testing.assert_allclose(interval.t_end, 0.05)
    assert interval.torsion_nondecreasing
    assert interval.entropy_nondecreasing
    assert interval.entropy_steps_checked == len(series) - 1
    # |total torsion| grows although the torsion is negative
    assert series[-1].total_torsion < series[0].total_torsion < 0


def _synthetic():
    base = sample(FlowState.start(make("coil_twisted", n=64)))
    values = [(0.0, 10.0, -5.0, 1.0), (0.1, 9.0, -5.5, 1.2), (0.2, 8.0, -6.0, 1.3)]
    return [replace(base, t=t, total_curvature=tc, total_torsion=tt, ct_entropy=e,
                    sup_tau_over_kappa2=1.0)
            for t, tc, tt, e in values]


def test_synthetic_series_pass():
    assert track_monotonicity(_synthetic()).ok


def test_violations_are_reported():
    series = _synthetic()
    series[2] = replace(series[2], total_curvature=11.0, total_torsion=-5.2)
    report = track_monotonicity(series)
    assert not report.ok
    assert not report.total_curvature_nonincreasing
    assert not report.twisted_intervals[0].torsion_nondecreasing
    kinds = [v[0] for v in report.violations]
    assert kinds == ["total_curvature", "total_torsion"]


def test_entropy_only_checked_below_bound():
    series = _synthetic()
    series[2] = replace(series[2], ct_entropy=0.5)
    report = track_monotonicity(series)
    assert report.twisted_intervals[0].entropy_nondecreasing is False

    # above e² the entropy law has no sign
    series = [replace(s, sup_tau_over_kappa2=10.0) for s in series]
    report = track_monotonicity(series)
    assert report.twisted_intervals[0].entropy_nondecreasing is None
    assert report.ok


def test_twisted_intervals_split():
    series = _synthetic() + _synthetic()
    series = [replace(s, t=0.1 * i) for i, s in enumerate(series)]
    series[3] = replace(series[3], twisted=False)
    report = track_monotonicity(series)
    assert [(i.t_start, i.t_end) for i in report.twisted_intervals] == [
        (0.0, series[2].t), (series[4].t, series[5].t)]
