"""twistflow.flow

Time integration of curve shortening flow, ∂_t γ = κN.

Positions are advanced with classical RK4 under a parabolic step
clamp dt ≤ σ h_min², the curve is redistributed at uniform arclength
every few steps, and the run stops at t_end, when max κ reaches
kappa_stop, or when the step would fall below dt_floor.  Observers
(see `Observer`) are called at every snapshot.
"""

import abc
import enum
import math
from dataclasses import dataclass, replace
from warnings import warn

import numpy as np
from astropy import log

from twistflow.errors import DegenerateCurveError, InvalidParamsError, TwistFlowWarning
from twistflow.geometry import (DerivativeScheme, DiscreteCurve, curve_derivatives, frenet,
                                parametric_speed, resample_uniform_arclength)

__all__ = ["StopReason", "FlowConfig", "FlowState", "Observer", "RunResult",
           "velocity_field", "step", "choose_dt", "next_snapshot_time", "run"]


class StopReason(enum.Enum):
    END_TIME = "EndTime"
    SINGULARITY = "SingularityReached"
    DT_FLOOR = "DtFloor"
    DEGENERATE = "DegenerateCurve"


@dataclass(frozen=True)
class FlowConfig:
    """Time stepping controls.

    t_end: maximal simulation time.
    sigma_cfl: parabolic stability factor, in (0, 0.5].
    kappa_stop: curvature at which the run is stopped as singular.
    dt_floor: smallest step accepted before stopping.
    resample_every: uniform-arclength resampling cadence, in steps.
    snapshot_every: time between snapshots.
    scheme: derivative scheme for the velocity and Frenet data.
    """

    t_end: float = 1.0
    sigma_cfl: float = 0.2
    kappa_stop: float = 100.0
    dt_floor: float = 1e-12
    resample_every: int = 10
    snapshot_every: float = 0.01
    scheme: DerivativeScheme = DerivativeScheme.SPECTRAL

    def __post_init__(self):
        if not 0 < self.sigma_cfl <= 0.5:
            raise InvalidParamsError(f"sigma_cfl must be in (0, 0.5], got {self.sigma_cfl}")
        if not self.kappa_stop > 0:
            raise InvalidParamsError("kappa_stop must be positive")
        if int(self.resample_every) != self.resample_every or self.resample_every < 1:
            raise InvalidParamsError("resample_every must be an integer >= 1")
        if not (self.t_end > 0 and self.snapshot_every > 0 and self.dt_floor > 0):
            raise InvalidParamsError("t_end, snapshot_every and dt_floor must be positive")
        if not isinstance(self.scheme, DerivativeScheme):
            object.__setattr__(self, "scheme", DerivativeScheme(self.scheme))


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    curve: DiscreteCurve
    frenet: object
    step_count: int = 0

    @classmethod
    def start(cls, curve, scheme=DerivativeScheme.SPECTRAL, t=0.0):
        return cls(t=t, curve=curve, frenet=frenet(curve, scheme))

    @property
    def kappa_max(self):
        return float(np.max(self.frenet.kappa))


class Observer(abc.ABC):
    """Read-only consumer of snapshots, called synchronously by `run`."""

    @abc.abstractmethod
    def observe(self, state, dt):
        """Receive a snapshot; `dt` is the step that led to it (NaN at t = 0)."""

    def close(self, result):
        """Called once with the finished `RunResult`."""


@dataclass
class RunResult:
    snapshots: list
    dts: list
    stop_reason: StopReason
    config: FlowConfig

    @property
    def final(self):
        return self.snapshots[-1]

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])


def velocity_field(curve, scheme=DerivativeScheme.SPECTRAL):
    """Curvature vector κN = (γ_uu - <γ_uu, T>T)/v² at every node.

    Well defined where κ = 0, where it vanishes.
    """
    d1, d2 = curve_derivatives(curve, scheme, orders=(1, 2))
    v, _ = parametric_speed(d1, curve.n)
    tangent = d1 / v[:, None]
    normal_part = d2 - np.einsum("ij,ij->i", d2, tangent)[:, None] * tangent
    return normal_part / (v ** 2)[:, None]


def step(state, dt):
    """Advance `state` by one classical RK4 step of size dt."""
    if not dt > 0:
        raise ValueError(f"Step size must be positive, got {dt}")
    scheme = state.frenet.scheme
    x0 = state.curve.points
    shift = state.curve.shift

    def rate(points):
        return velocity_field(DiscreteCurve(points, shift=shift), scheme)

    k1 = velocity_field(state.curve, scheme)
    k2 = rate(x0 + 0.5 * dt * k1)
    k3 = rate(x0 + 0.5 * dt * k2)
    k4 = rate(x0 + dt * k3)
    curve = DiscreteCurve(x0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), shift=shift)
    return FlowState(t=state.t + dt, curve=curve, frenet=frenet(curve, scheme),
                     step_count=state.step_count + 1)


def next_snapshot_time(t, config):
    k = math.floor(t / config.snapshot_every + 1e-9) + 1
    return min(k * config.snapshot_every, config.t_end)


def choose_dt(state, config):
    """min(σ h_min², 0.1/M_t, time to the next snapshot).

    A clamped step within a relative 1e-9 of the snapshot is stretched
    to land on it exactly.
    """
    h_min = float(np.min(state.frenet.ds))
    m_t = state.kappa_max ** 2
    dt = config.sigma_cfl * h_min ** 2
    if m_t > 0:
        dt = min(dt, 0.1 / m_t)
    remaining = next_snapshot_time(state.t, config) - state.t
    if dt >= remaining * (1 - 1e-9):
        dt = remaining
    return dt


def run(initial, config, observers=()):
    """Evolve `initial` by curve shortening flow.

    Parameters
    ----------
    initial : DiscreteCurve

    config : FlowConfig

    observers : sequence of Observer
        Called at t = 0, at every multiple of ``snapshot_every`` and at
        the final state.

    Returns
    -------
    RunResult
        Snapshots, the step that led to each, and the stop reason.

    Raises
    ------
    DegenerateCurveError
        On node collision; the partial `RunResult` is attached as
        ``result``.
    """
    state = FlowState.start(initial, config.scheme)
    snapshots, dts = [state], [np.nan]
    for obs in observers:
        obs.observe(state, np.nan)
    log.info(f"Flow run: n={initial.n}, t_end={config.t_end}, kappa_stop={config.kappa_stop}")

    reason = None
    dt = np.nan
    try:
        while True:
            if state.t >= config.t_end * (1 - 1e-12):
                reason = StopReason.END_TIME
                break
            if state.kappa_max >= config.kappa_stop:
                reason = StopReason.SINGULARITY
                break
            dt = choose_dt(state, config)
            if dt < config.dt_floor:
                reason = StopReason.DT_FLOOR
                warn(f"Step {dt:.3g} below dt_floor at t={state.t:.6g}", TwistFlowWarning)
                break
            target = next_snapshot_time(state.t, config)
            landing = dt == target - state.t
            state = step(state, dt)
            if landing:
                state = replace(state, t=target)
            if state.step_count % config.resample_every == 0:
                curve = resample_uniform_arclength(state.curve)
                state = replace(state, curve=curve, frenet=frenet(curve, config.scheme))
            if landing:
                snapshots.append(state)
                dts.append(dt)
                for obs in observers:
                    obs.observe(state, dt)
                log.debug(f"t={state.t:.6g} steps={state.step_count} "
                          f"kappa_max={state.kappa_max:.6g}")
    except DegenerateCurveError as err:
        err.result = RunResult(snapshots, dts, StopReason.DEGENERATE, config)
        raise

    if snapshots[-1] is not state:
        snapshots.append(state)
        dts.append(dt)
        for obs in observers:
            obs.observe(state, dt)

    result = RunResult(snapshots, dts, reason, config)
    for obs in observers:
        obs.close(result)
    log.info(f"Flow stopped ({reason.value}) at t={state.t:.6g} after "
             f"{state.step_count} steps")
    return result
