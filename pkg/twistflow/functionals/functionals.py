"""
twistflow.functionals

Scalar functionals of a curve and their time series along a flow run:
length, total curvature and torsion, the curvature-torsion entropy
∫κ log(τ/κ²) ds, ∫τ log(τ²/κ⁴) ds, sup κ·L, the torsion ratios, and
the Gaussian entropy λ.

Torsion enters through its oriented value τ̃ = στ (σ the handedness,
see `twistflow.geometry.handedness`) wherever a logarithm or a sign
condition is involved, so left-handed twisted curves are treated like
right-handed ones.
"""

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
from scipy import optimize

from twistflow.errors import InvalidParamsError
from twistflow.flow import Observer
from twistflow.geometry import TWO_PI, frenet, integrate_scalar, oriented_tau
from twistflow.scenarios import count_flat_points, is_twisted

__all__ = ["FunctionalSample", "sample", "gaussian_entropy", "FunctionalTracker",
           "SERIES_COLUMNS", "ROUND_POINT_THRESHOLD"]

# λ at or below this guarantees convergence to a round point
ROUND_POINT_THRESHOLD = 2.0


@dataclass(frozen=True)
class FunctionalSample:
    """All tracked scalars of one snapshot.

    Field order is the column order of ``series.csv``.  Optional values
    are None when undefined: ct_entropy unless twisted, torsion extrema
    and ratios when no node has defined torsion, gaussian_entropy
    unless requested, dt at t = 0.
    """

    t: float
    dt: Optional[float]
    length: float
    kappa_max: float
    kappa_min: float
    tau_max: Optional[float]
    tau_min: Optional[float]
    total_curvature: float
    total_torsion: float
    ct_entropy: Optional[float]
    tau_log_quantity: float
    d_quantity: float
    sup_tau_over_kappa: Optional[float]
    sup_tau_over_kappa2: Optional[float]
    gaussian_entropy: Optional[float]
    min_tau_margin: float
    flat_point_count: int
    twisted: bool

    @property
    def min_kappa(self):
        return self.kappa_min

    @property
    def min_tau(self):
        return self.tau_min

    @property
    def round_point_certificate(self):
        if self.gaussian_entropy is None:
            return None
        return self.gaussian_entropy <= ROUND_POINT_THRESHOLD


SERIES_COLUMNS = tuple(f.name for f in fields(FunctionalSample))


def _tau_log_density(kappa, tau):
    """τ log(τ²/κ⁴), taken as 0 where τ = 0."""
    out = np.zeros_like(tau)
    nz = tau != 0
    out[nz] = tau[nz] * (2 * np.log(np.abs(tau[nz])) - 4 * np.log(kappa[nz]))
    return out


def sample(state, compute_lambda=False, dt=None):
    """Evaluate every functional on a flow snapshot.

    Parameters
    ----------
    state : FlowState
        Snapshot with current Frenet data.

    compute_lambda : bool
        Also compute the (expensive) Gaussian entropy; skipped for
        curves that are not closed.

    dt : float, optional
        The step that led to this snapshot, recorded as is.

    Returns
    -------
    FunctionalSample
        Loss of twistedness is reported by the ``twisted`` flag, never
        raised.
    """
    fr = state.frenet
    kappa = fr.kappa
    valid = fr.tau_valid
    invalid = ~valid
    tau = np.where(valid, fr.tau, 0.0)
    tau_o = np.where(valid, oriented_tau(fr), 0.0)
    twist = is_twisted(state.curve, fr)
    length = fr.length

    ct_entropy = None
    if twist.twisted:
        ct_entropy = integrate_scalar(kappa * (np.log(tau_o) - 2 * np.log(kappa)), fr)

    tau_stats = dict(tau_max=None, tau_min=None, sup_tau_over_kappa=None,
                     sup_tau_over_kappa2=None)
    if np.any(valid):
        tv, kv = tau_o[valid], kappa[valid]
        tau_stats = dict(tau_max=float(np.max(tv)), tau_min=float(np.min(tv)),
                         sup_tau_over_kappa=float(np.max(tv / kv)),
                         sup_tau_over_kappa2=float(np.max(tv / kv ** 2)))

    lam = None
    if compute_lambda and state.curve.closed:
        lam = gaussian_entropy(state.curve)

    return FunctionalSample(
        t=float(state.t),
        dt=None if dt is None or np.isnan(dt) else float(dt),
        length=length,
        kappa_max=float(np.max(kappa)),
        kappa_min=float(np.min(kappa)),
        total_curvature=integrate_scalar(kappa, fr),
        total_torsion=integrate_scalar(tau, fr, mask=invalid),
        ct_entropy=ct_entropy,
        tau_log_quantity=integrate_scalar(
            np.where(valid, _tau_log_density(np.where(valid, kappa, 1.0), tau), 0.0),
            fr, mask=invalid),
        d_quantity=float(np.max(kappa)) * length,
        gaussian_entropy=lam,
        min_tau_margin=twist.tau_margin,
        flat_point_count=count_flat_points(fr),
        twisted=twist.twisted,
        **tau_stats,
    )


def gaussian_entropy(curve, n_centers=32, n_scales=61):
    """Gaussian entropy λ(γ) = sup (4πt₀)^{-1/2} ∫ exp(-|x - x₀|²/4t₀) ds.

    Centers x₀ are the arclength centroid and every (n/n_centers)-th
    node; scales t₀ are log-spaced over [1e-3, 1e3]·(L/2π)².  The best
    grid point is refined by golden-section search in log t₀.

    Raises
    ------
    InvalidParamsError
        If the curve is not closed.
    """
    if not curve.closed:
        raise InvalidParamsError("Gaussian entropy is defined for closed curves only")
    fr = frenet(curve)
    w = fr.ds
    pts = curve.points
    scale2 = (fr.length / TWO_PI) ** 2
    centroid = np.sum(pts * w[:, None], axis=0) / fr.length
    stride = max(1, curve.n // n_centers)
    centers = np.vstack([centroid, pts[::stride]])
    dist2 = np.sum((centers[:, None, :] - pts[None, :, :]) ** 2, axis=-1) / scale2

    log_t = np.linspace(np.log(1e-3), np.log(1e3), n_scales)

    def density(d2, lt):
        t0 = np.exp(lt)
        return np.sum(w * np.exp(-d2 / (4 * t0))) / np.sqrt(4 * np.pi * t0 * scale2)

    t0 = np.exp(log_t)
    grid = (np.exp(-dist2[:, None, :] / (4 * t0[None, :, None])) @ w
            / np.sqrt(4 * np.pi * t0 * scale2))
    ci, si = np.unravel_index(np.argmax(grid), grid.shape)
    best = float(grid[ci, si])
    if 0 < si < n_scales - 1:
        try:
            res = optimize.minimize_scalar(lambda lt: -density(dist2[ci], lt),
                                           bracket=(log_t[si - 1], log_t[si], log_t[si + 1]),
                                           method="golden", options={"xtol": 1e-10})
            best = max(best, -float(res.fun))
        except ValueError:  # flat bracket
            pass
    return best


class FunctionalTracker(Observer):
    """Collects a `FunctionalSample` at every snapshot.

    Parameters
    ----------
    compute_lambda : bool
        Compute the Gaussian entropy.

    lambda_every : int
        Compute it only at every lambda_every-th snapshot (and always at
        the final one).
    """

    def __init__(self, compute_lambda=False, lambda_every=1):
        self.compute_lambda = compute_lambda
        self.lambda_every = max(1, int(lambda_every))
        self.samples = []

    def observe(self, state, dt):
        with_lambda = self.compute_lambda and len(self.samples) % self.lambda_every == 0
        self.samples.append(sample(state, with_lambda, dt))

    def close(self, result):
        last = self.samples[-1] if self.samples else None
        if self.compute_lambda and last is not None and last.gaussian_entropy is None \
                and result.final.curve.closed:
            self.samples[-1] = sample(result.final, True, last.dt)
