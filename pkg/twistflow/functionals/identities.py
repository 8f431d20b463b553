"""
twistflow.functionals.identities

Evolution laws d/dt F(γ_t) = R(γ_t) of integral functionals under curve
shortening flow, and their numerical check from stored snapshots.

Each right-hand side is the integrated-by-parts form obtained from

  ∂_t ds = -κ² ds
  ∂_t κ  = ∂_s²κ + κ³ - κτ²
  ∂_t τ  = 2κ²τ + ∂_s(2τ ∂_s κ/κ) + ∂_s²τ

The laws are unchanged under reflection, so logarithms of torsion are
taken of the oriented torsion τ̃.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from twistflow.errors import IdentityUnavailableError
from twistflow.geometry import arclength_derivative, integrate_scalar, oriented_tau
from twistflow.scenarios import is_twisted

__all__ = ["Identity", "IdentityReport", "IDENTITIES", "check_identity"]


@dataclass(frozen=True)
class Identity:
    """An evolution law.

    ``functional`` and ``rhs`` map a FlowState to a scalar.
    ``needs_twist``: the law takes log τ, so every snapshot must be
    twisted.  ``needs_curvature``: κ must exceed its floor everywhere.
    """

    id: str
    functional: Callable
    rhs: Callable
    needs_twist: bool = False
    needs_curvature: bool = False
    description: str = ""


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    t_mid: float
    lhs: float
    rhs: float
    residual: float
    scale: float

    @property
    def relative(self):
        return self.residual / self.scale


class _Local:
    """Per-node fields of one snapshot used by the right-hand sides."""

    def __init__(self, state):
        fr = state.frenet
        self.fr = fr
        self.kappa = fr.kappa
        self.tau = np.where(fr.tau_valid, fr.tau, 0.0)
        self.tau_o = np.where(fr.tau_valid, oriented_tau(fr), 0.0)

    def ds(self, values, order=1):
        return arclength_derivative(values, self.fr, order)

    def integral(self, values):
        return integrate_scalar(values, self.fr)


def _length(st):
    return st.frenet.length


def _length_rhs(st):
    f = _Local(st)
    return -f.integral(f.kappa ** 2)


def _total_curvature(st):
    return integrate_scalar(st.frenet.kappa, st.frenet)


def _total_curvature_rhs(st):
    f = _Local(st)
    return -f.integral(f.kappa * f.tau ** 2)


def _kappa_log_kappa(st):
    k = st.frenet.kappa
    return integrate_scalar(k * np.log(k), st.frenet)


def _kappa_log_kappa_rhs(st):
    f = _Local(st)
    k, t2 = f.kappa, f.tau ** 2
    ks = f.ds(k)
    return f.integral(-ks ** 2 / k - k * t2 * np.log(k) + k ** 3 - k * t2)


def _kappa_log_tau(st):
    f = _Local(st)
    return f.integral(f.kappa * np.log(f.tau_o))


def _kappa_log_tau_rhs(st):
    f = _Local(st)
    k, t = f.kappa, f.tau_o
    ks = f.ds(k)
    log_t_s = f.ds(np.log(t))
    return f.integral(-k * t ** 2 * np.log(t) + 2 * k ** 3 - 2 * ks ** 2 / k
                      + k * log_t_s ** 2)


def _entropy(st):
    f = _Local(st)
    return f.integral(f.kappa * (np.log(f.tau_o) - 2 * np.log(f.kappa)))


def _entropy_rhs(st):
    f = _Local(st)
    k, t = f.kappa, f.tau_o
    log_ratio = np.log(t) - 2 * np.log(k)
    log_t_s = f.ds(np.log(t))
    return f.integral(-k * t ** 2 * log_ratio + k * log_t_s ** 2 + 2 * k * t ** 2)


def _tau_log_quantity(st):
    f = _Local(st)
    t, k = f.tau, f.kappa
    return f.integral(t * (2 * np.log(np.abs(t)) - 4 * np.log(k)))


def _tau_log_quantity_rhs(st):
    f = _Local(st)
    t, k = f.tau, f.kappa
    ell = 2 * np.log(np.abs(t)) - 4 * np.log(k)
    ks, ts = f.ds(k), f.ds(t)
    return f.integral(k ** 2 * t * ell + 4 * t * (ks / k) ** 2 - 2 * ts ** 2 / t
                      + 4 * ts * ks / k + 4 * t ** 3)


def _total_torsion(st):
    f = _Local(st)
    return f.integral(f.tau)


def _total_torsion_rhs(st):
    f = _Local(st)
    return f.integral(f.kappa ** 2 * f.tau)


IDENTITIES = {
    i.id: i for i in (
        Identity("length", _length, _length_rhs,
                 description="d/dt L = -∫κ² ds"),
        Identity("total_curvature", _total_curvature, _total_curvature_rhs,
                 description="d/dt ∫κ ds = -∫κτ² ds"),
        Identity("kappa_log_kappa", _kappa_log_kappa, _kappa_log_kappa_rhs,
                 needs_curvature=True,
                 description="d/dt ∫κ log κ ds"),
        Identity("kappa_log_tau", _kappa_log_tau, _kappa_log_tau_rhs,
                 needs_twist=True, needs_curvature=True,
                 description="d/dt ∫κ log τ ds"),
        Identity("entropy", _entropy, _entropy_rhs,
                 needs_twist=True, needs_curvature=True,
                 description="d/dt ∫κ log(τ/κ²) ds"),
        Identity("tau_log_quantity", _tau_log_quantity, _tau_log_quantity_rhs,
                 needs_twist=True, needs_curvature=True,
                 description="d/dt ∫τ log(τ²/κ⁴) ds"),
        Identity("total_torsion", _total_torsion, _total_torsion_rhs,
                 needs_curvature=True,
                 description="d/dt ∫τ ds = ∫κ²τ ds"),
    )
}


def _check_available(identity, state):
    fr = state.frenet
    if identity.needs_curvature and not np.all(fr.tau_valid):
        raise IdentityUnavailableError(
            f"{identity.id}: curvature below floor at t={state.t:.6g}")
    if identity.needs_twist and not is_twisted(state.curve, fr).twisted:
        raise IdentityUnavailableError(f"{identity.id}: curve not twisted at t={state.t:.6g}")


def check_identity(history, identity_id):
    """Compare a centered time difference of a functional with its law.

    Parameters
    ----------
    history : sequence of three FlowState
        Consecutive snapshots, equally spaced in time.

    identity_id : str
        Key of `IDENTITIES`.

    Returns
    -------
    IdentityReport
        lhs = (F(t+Δ) - F(t-Δ))/2Δ, rhs = R(t) at the middle snapshot.

    Raises
    ------
    IdentityUnavailableError
        If a snapshot lacks the twistedness or curvature the law needs.
    """
    if len(history) != 3:
        raise ValueError("check_identity needs exactly three snapshots")
    try:
        identity = IDENTITIES[identity_id]
    except KeyError:
        raise ValueError(f"Unknown identity {identity_id!r}; known: {', '.join(IDENTITIES)}")
    s0, s1, s2 = history
    d0, d1 = s1.t - s0.t, s2.t - s1.t
    if not (d0 > 0 and d1 > 0) or abs(d0 - d1) > 1e-9 * (s2.t - s0.t):
        raise ValueError(f"Snapshots not equally spaced: {s0.t}, {s1.t}, {s2.t}")
    for s in history:
        _check_available(identity, s)

    lhs = (identity.functional(s2) - identity.functional(s0)) / (s2.t - s0.t)
    rhs = identity.rhs(s1)
    residual = abs(lhs - rhs)
    return IdentityReport(identity_id, float(s1.t), float(lhs), float(rhs), float(residual),
                          max(abs(lhs), abs(rhs), 1e-12))
