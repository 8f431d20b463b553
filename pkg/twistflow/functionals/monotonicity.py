"""
twistflow.functionals.monotonicity

Measured monotonicity of functionals along a run: total curvature
never increases; on twisted stretches the total torsion grows in
magnitude, and the curvature-torsion entropy grows wherever
sup log(τ/κ²) < 2.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["TwistedInterval", "MonotonicityReport", "track_monotonicity"]

# sup log(τ/κ²) below this makes the entropy law nonnegative
ENTROPY_LOG_RATIO_BOUND = 2.0


@dataclass(frozen=True)
class TwistedInterval:
    t_start: float
    t_end: float
    torsion_nondecreasing: bool
    entropy_nondecreasing: Optional[bool]
    entropy_steps_checked: int


@dataclass
class MonotonicityReport:
    twisted_intervals: list
    total_curvature_nonincreasing: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return (self.total_curvature_nonincreasing
                and all(i.torsion_nondecreasing for i in self.twisted_intervals)
                and all(i.entropy_nondecreasing is not False for i in self.twisted_intervals))


def _decreases(a, b, tolerance):
    """True if going from a to b is a decrease beyond tolerance·scale."""
    scale = max(abs(a), abs(b), 1e-12)
    return b - a < -tolerance * scale


def _twisted_runs(series):
    runs, start = [], None
    for i, s in enumerate(series):
        if s.twisted and start is None:
            start = i
        elif not s.twisted and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(series) - 1))
    return runs


def track_monotonicity(series, tolerance=1e-8):
    """Check the monotonicity laws over a `FunctionalSample` series.

    Arguments:
    ----------
      series: samples from one run, ordered in time.

      tolerance (optional, default: 1e-8): allowed decrease per step,
        relative to the larger magnitude of the two values.

    Returns:
    --------

    A `MonotonicityReport` with one `TwistedInterval` per maximal run of
    twisted samples.  On each interval the total torsion is oriented by
    its sign at the interval start; entropy_nondecreasing is None when
    no step satisfied the sup log(τ/κ²) < 2 criterion.
    """
    violations = []
    tc_ok = True
    for a, b in zip(series[:-1], series[1:]):
        if _decreases(-a.total_curvature, -b.total_curvature, tolerance):
            tc_ok = False
            violations.append(("total_curvature", a.t, b.t, b.total_curvature - a.total_curvature))

    bound = np.exp(ENTROPY_LOG_RATIO_BOUND)
    intervals = []
    for i0, i1 in _twisted_runs(series):
        sigma = -1.0 if series[i0].total_torsion < 0 else 1.0
        torsion_ok = True
        entropy_ok, checked = True, 0
        for a, b in zip(series[i0:i1], series[i0 + 1:i1 + 1]):
            if _decreases(sigma * a.total_torsion, sigma * b.total_torsion, tolerance):
                torsion_ok = False
                violations.append(("total_torsion", a.t, b.t, b.total_torsion - a.total_torsion))
            if (a.sup_tau_over_kappa2 is not None and b.sup_tau_over_kappa2 is not None
                    and a.sup_tau_over_kappa2 < bound and b.sup_tau_over_kappa2 < bound):
                checked += 1
                if _decreases(a.ct_entropy, b.ct_entropy, tolerance):
                    entropy_ok = False
                    violations.append(("ct_entropy", a.t, b.t, b.ct_entropy - a.ct_entropy))
        intervals.append(TwistedInterval(series[i0].t, series[i1].t, torsion_ok,
                                         entropy_ok if checked else None, checked))

    return MonotonicityReport(intervals, tc_ok, violations)
