"""twistflow.reaction_ode

The spatially uniform reduction of the curvature/torsion evolution:

    dκ/dt = κ³ - κτ²,   dτ/dt = 2κ²τ

Its orbits are the arcs κ = √(Cτ - τ²) with first integral
C = (κ² + τ²)/τ.  A helix evolving by curve shortening flow follows
this system exactly, so it doubles as an oracle for flow runs.
"""

import math
from dataclasses import dataclass
from warnings import warn

import numpy as np

from twistflow.errors import BlowUpError, TwistFlowWarning, UndefinedForZeroTauError

__all__ = ["ReactionState", "Trajectory", "rhs", "conserved", "integrate", "KAPPA_VANISHED"]

KAPPA_VANISHED = 1e-12


@dataclass(frozen=True)
class ReactionState:
    kappa: float
    tau: float
    t: float = 0.0


@dataclass
class Trajectory:
    t: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    stop_reason: str

    @property
    def final(self):
        return ReactionState(float(self.kappa[-1]), float(self.tau[-1]), float(self.t[-1]))

    @property
    def tau_limit(self):
        """Torsion at the last step; the limit once κ has vanished."""
        return float(self.tau[-1])

    def conserved(self):
        return (self.kappa ** 2 + self.tau ** 2) / self.tau

    def conserved_drift(self):
        """max |C(t) - C(0)| along the trajectory."""
        c = self.conserved()
        return float(np.max(np.abs(c - c[0])))


def rhs(state):
    """(dκ/dt, dτ/dt) at `state`."""
    k, t = state.kappa, state.tau
    return (k ** 3 - k * t ** 2, 2 * k ** 2 * t)


def conserved(state):
    """First integral C = (κ² + τ²)/τ.

    Negative τ (the mirror image) gives C < 0.

    Raises
    ------
    UndefinedForZeroTauError
        If τ = 0.
    """
    if state.tau == 0:
        raise UndefinedForZeroTauError("C = (κ² + τ²)/τ is undefined for τ = 0")
    return (state.kappa ** 2 + state.tau ** 2) / state.tau


def _rk4(k, t, h):
    def f(k, t):
        return k ** 3 - k * t ** 2, 2 * k * k * t

    a1, b1 = f(k, t)
    a2, b2 = f(k + 0.5 * h * a1, t + 0.5 * h * b1)
    a3, b3 = f(k + 0.5 * h * a2, t + 0.5 * h * b2)
    a4, b4 = f(k + h * a3, t + h * b3)
    return (k + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4),
            t + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4))


def integrate(initial, t_end=10.0, dt=1e-4, stiffness=0.01, max_steps=10_000_000):
    """Integrate the reaction ODE with RK4.

    Parameters
    ----------
    initial : ReactionState

    t_end : float
        Final time.

    dt : float
        Maximal step; also sets the blow-up guard κ > 1/dt.

    stiffness : float
        The step is limited to stiffness/max(κ², τ²) so fast phases
        (large κ or τ) stay resolved.  Values >= 1 leave the fixed step
        dt in force for moderate κ, τ.

    max_steps : int
        Safety limit; reaching it stops the integration with a warning.

    Returns
    -------
    Trajectory
        stop_reason is "EndTime", "KappaVanished" (κ < 1e-12; κ = 0 is
        absorbing, τ has reached its limit) or "MaxSteps".

    Raises
    ------
    BlowUpError
        When κ exceeds 1/dt (finite-time divergence, e.g. τ₀ = 0); the
        trajectory so far is attached as ``trajectory``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k, tau, t = float(initial.kappa), float(initial.tau), float(initial.t)
    ts, ks, taus = [t], [k], [tau]
    guard = 1.0 / dt

    def trajectory(reason):
        return Trajectory(np.array(ts), np.array(ks), np.array(taus), reason)

    reason = "EndTime"
    for _ in range(max_steps):
        if k < KAPPA_VANISHED:
            reason = "KappaVanished"
            break
        if t >= t_end:
            break
        h = min(dt, t_end - t)
        fastest = max(k * k, tau * tau)
        if fastest > 0:
            h = min(h, stiffness / fastest)
        k, tau = _rk4(k, tau, h)
        t += h
        ts.append(t)
        ks.append(k)
        taus.append(tau)
        if not math.isfinite(k) or k > guard:
            raise BlowUpError(f"Reaction ODE blew up at t={t:.6g} (kappa={k:.3g})",
                              trajectory=trajectory("BlowUp"))
    else:
        reason = "MaxSteps"
        warn(f"Reaction ODE stopped after {max_steps} steps at t={t:.6g}", TwistFlowWarning)
    return trajectory(reason)
