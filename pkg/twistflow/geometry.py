"""twistflow.geometry

Discrete space curves sampled on the uniform parameter grid
u_j = 2πj/n, their Frenet data, and arclength quadrature.

A curve is either closed, or translation-periodic (a "lift", used
for helices): γ(u + 2π) = γ(u) + shift.  Derivatives in u always act
on the periodic part γ(u) - shift·u/2π, so the same machinery serves
both.
"""

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy import optimize

from twistflow.errors import DegenerateCurveError, InvalidParamsError

__all__ = [
    "DerivativeScheme",
    "DiscreteCurve",
    "FrenetField",
    "curve_derivatives",
    "periodic_derivative",
    "frenet",
    "parametric_speed",
    "arclength_derivative",
    "integrate_scalar",
    "resample_uniform_arclength",
    "trig_eval",
    "handedness",
    "oriented_tau",
]

TWO_PI = 2 * np.pi

# Scale-aware floors: kappa_floor = tau_floor = FLOOR_FACTOR * 2π/L,
# v_floor = V_FLOOR_FACTOR * L/n
FLOOR_FACTOR = 1e-7
V_FLOOR_FACTOR = 1e-12

MIN_NODES = 16


class DerivativeScheme(enum.Enum):
    SPECTRAL = "spectral"
    FD4 = "fd4"


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """A space curve sampled at n uniform parameter values.

    Parameters
    ----------
    points : array_like, shape (n, 3)
        Node positions, γ(u_j) with u_j = 2πj/n.

    shift : array_like, shape (3,), optional
        Period translation, γ(u + 2π) = γ(u) + shift.  Zero (the
        default) for closed curves.

    Raises
    ------
    InvalidParamsError
        If n is odd, smaller than 16, or the points are not (n, 3).

    DegenerateCurveError
        If two adjacent nodes coincide.
    """

    points: np.ndarray
    shift: np.ndarray = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidParamsError(f"Curve points must have shape (n, 3), got {pts.shape}")
        n = pts.shape[0]
        if n < MIN_NODES or n % 2:
            raise InvalidParamsError(f"Node count must be even and >= {MIN_NODES}, got {n}")
        shift = np.zeros(3) if self.shift is None else np.array(self.shift, dtype=float)
        if shift.shape != (3,):
            raise InvalidParamsError("Curve shift must be a 3-vector")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(shift))):
            raise DegenerateCurveError("Curve contains non-finite coordinates")
        pts.setflags(write=False)
        shift.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "shift", shift)
        if np.min(self.segment_lengths()) <= 0:
            raise DegenerateCurveError("Adjacent curve nodes coincide")

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def param_step(self):
        return TWO_PI / self.n

    @property
    def closed(self):
        return not np.any(self.shift)

    @property
    def u(self):
        """The parameter grid."""
        return np.arange(self.n) * self.param_step

    def periodic_part(self):
        return self.points - np.outer(self.u, self.shift) / TWO_PI

    def segment_lengths(self):
        """Chord lengths |γ_{j+1} - γ_j|, including the closing chord."""
        nxt = np.roll(self.points, -1, axis=0)
        nxt[-1] += self.shift
        return np.linalg.norm(nxt - self.points, axis=1)

    def transformed(self, rotation=None, translation=None, scale=1.0):
        """Return the image under x -> scale * rotation @ x + translation."""
        rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        trans = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        return DiscreteCurve(scale * self.points @ rot.T + trans,
                             shift=scale * rot @ self.shift)


@dataclass(frozen=True, eq=False)
class FrenetField:
    """Per-node Frenet data of a `DiscreteCurve`.

    ``tau``, ``normal`` and ``binormal`` are NaN where ``tau_valid`` is
    False, i.e. where κ is below `kappa_floor`.
    """

    v: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    binormal: np.ndarray
    tau_valid: np.ndarray
    ds: np.ndarray
    scheme: DerivativeScheme

    @property
    def n(self):
        return self.v.shape[0]

    @property
    def length(self):
        return float(np.sum(self.ds))

    @property
    def kappa_floor(self):
        return FLOOR_FACTOR * TWO_PI / self.length

    @property
    def tau_floor(self):
        return FLOOR_FACTOR * TWO_PI / self.length


# 4th-order central difference stencils: {offset: weight}, denominator
_FD4_STENCILS = {
    1: ({-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}, 12.0),
    2: ({-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}, 12.0),
    3: ({-3: 1.0, -2: -8.0, -1: 13.0, 1: -13.0, 2: 8.0, 3: -1.0}, 8.0),
}


def _spectral_multiplier(n, order, ndim):
    k = scipy.fft.rfftfreq(n, d=1.0 / n)
    mult = (1j * k) ** order
    if order % 2:
        mult[-1] = 0.0  # Nyquist mode has no odd derivative
    return mult.reshape((-1,) + (1,) * (ndim - 1))


def periodic_derivative(values, order, scheme=DerivativeScheme.SPECTRAL):
    """Derivative d^order/du^order of samples of a 2π-periodic function.

    Arguments:
    ----------
      values: samples on the uniform grid, shape (n,) or (n, m).

      order: derivative order, 1 to 3 for the FD4 scheme.

      scheme: a `DerivativeScheme`.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if scheme is DerivativeScheme.SPECTRAL:
        coef = scipy.fft.rfft(values, axis=0)
        return scipy.fft.irfft(_spectral_multiplier(n, order, values.ndim) * coef,
                               n=n, axis=0)
    weights, denom = _FD4_STENCILS[order]
    h = TWO_PI / n
    out = np.zeros_like(values)
    for offset, w in weights.items():
        out += w * np.roll(values, -offset, axis=0)
    return out / (denom * h ** order)


def curve_derivatives(curve, scheme=DerivativeScheme.SPECTRAL, orders=(1, 2, 3)):
    """Return [∂_u^m γ for m in orders] at the nodes of `curve`."""
    periodic = curve.periodic_part()
    if scheme is DerivativeScheme.SPECTRAL:
        coef = scipy.fft.rfft(periodic, axis=0)
        out = [scipy.fft.irfft(_spectral_multiplier(curve.n, m, 2) * coef, n=curve.n, axis=0)
               for m in orders]
    else:
        out = [periodic_derivative(periodic, m, scheme) for m in orders]
    if 1 in orders:
        i = orders.index(1)
        out[i] = out[i] + curve.shift / TWO_PI
    return out


def parametric_speed(d1, n):
    """Speed |∂_u γ| per node and the curve length; raises
    DegenerateCurveError below v_floor."""
    v = np.linalg.norm(d1, axis=1)
    length = np.sum(v) * TWO_PI / n
    v_floor = V_FLOOR_FACTOR * length / n
    if not np.all(np.isfinite(v)) or np.min(v) < v_floor:
        raise DegenerateCurveError(
            f"Node collision: minimum speed {np.min(v):.3g} below floor {v_floor:.3g}")
    return v, length


def frenet(curve, scheme=DerivativeScheme.SPECTRAL):
    """Compute the Frenet data of a curve.

    Parameters
    ----------
    curve : DiscreteCurve

    scheme : DerivativeScheme
        Spectral (trigonometric interpolation, the default) or 4th-order
        central differences.

    Returns
    -------
    FrenetField
        κ = |γ'×γ''|/|γ'|³ and τ = det(γ', γ'', γ''')/|γ'×γ''|².  Nodes
        with κ below the scale-aware floor have tau_valid False.

    Raises
    ------
    DegenerateCurveError
        If the parametrization speed drops below v_floor anywhere.
    """
    d1, d2, d3 = curve_derivatives(curve, scheme)
    v, length = parametric_speed(d1, curve.n)
    cross = np.cross(d1, d2)
    cnorm = np.linalg.norm(cross, axis=1)
    kappa = cnorm / v ** 3
    valid = kappa >= FLOOR_FACTOR * TWO_PI / length

    tangent = d1 / v[:, None]
    tau = np.full(curve.n, np.nan)
    normal = np.full((curve.n, 3), np.nan)
    binormal = np.full((curve.n, 3), np.nan)
    tau[valid] = np.einsum("ij,ij->i", cross[valid], d3[valid]) / cnorm[valid] ** 2
    binormal[valid] = cross[valid] / cnorm[valid, None]
    normal[valid] = np.cross(binormal[valid], tangent[valid])

    return FrenetField(v=v, kappa=kappa, tau=tau, tangent=tangent, normal=normal,
                       binormal=binormal, tau_valid=valid, ds=v * curve.param_step,
                       scheme=scheme)


def arclength_derivative(values, fr, order=1):
    """∂_s^order of a periodic per-node field, using ∂_s = v⁻¹ ∂_u."""
    out = np.asarray(values, dtype=float)
    for _ in range(order):
        out = periodic_derivative(out, 1, fr.scheme) / fr.v
    return out


def integrate_scalar(field, fr, mask=None):
    """Arclength quadrature Σ f_j v_j Δu (periodic rectangle rule).

    Arguments:
    ----------
      field: per-node values, length n.

      fr: the `FrenetField` supplying the weights.

      mask (optional): per-node flags, True where the node is excluded
        (together with its weight).
    """
    field = np.asarray(field, dtype=float)
    if field.shape != fr.ds.shape:
        raise ValueError(f"Field has shape {field.shape}, expected {fr.ds.shape}")
    if mask is None:
        return float(np.sum(field * fr.ds))
    keep = ~np.asarray(mask, dtype=bool)
    return float(np.sum(field[keep] * fr.ds[keep]))


def trig_eval(coef, n, x):
    """Evaluate the trigonometric interpolant with rfft coefficients `coef`
    (of n real samples, n even) at arbitrary parameters `x`."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.arange(coef.shape[0])
    weights = np.full(k.shape, 2.0)
    weights[0] = weights[-1] = 1.0
    phase = np.exp(1j * np.outer(x, k)) * weights
    return (phase @ coef).real / n


def resample_uniform_arclength(curve):
    """Redistribute the nodes of `curve` at equal arclength spacing.

    The geometric image is kept by evaluating the trigonometric
    interpolant of the periodic part at new parameters u*, found by
    Newton iteration on s(u*) = jL/n.  The node count is unchanged.
    Raises DegenerateCurveError when the inversion does not converge.
    """
    n = curve.n
    u = curve.u
    periodic = curve.periodic_part()
    coef = scipy.fft.rfft(periodic, axis=0)
    d1 = scipy.fft.irfft(_spectral_multiplier(n, 1, 2) * coef, n=n, axis=0)
    v, length = parametric_speed(d1 + curve.shift / TWO_PI, n)

    # s(u) = L u/2π + P(u) - P(0), with P' = v - L/2π
    v_coef = scipy.fft.rfft(v)
    k = scipy.fft.rfftfreq(n, d=1.0 / n)
    p_coef = np.zeros_like(v_coef)
    p_coef[1:-1] = v_coef[1:-1] / (1j * k[1:-1])
    p_nodes = scipy.fft.irfft(p_coef, n=n)
    p0 = p_nodes[0]
    s_nodes = length * u / TWO_PI + p_nodes - p0
    target = length * u / TWO_PI

    def residual(x):
        return length * x / TWO_PI + trig_eval(p_coef, n, x) - p0 - target

    def speed(x):
        return trig_eval(v_coef, n, x)

    guess = np.interp(target, s_nodes, u)
    new_u, converged, _ = optimize.newton(residual, guess, fprime=speed, tol=1e-13,
                                          maxiter=50, full_output=True)
    if not np.all(converged):
        raise DegenerateCurveError(
            f"Arclength inversion did not converge at {np.count_nonzero(~converged)} nodes")
    new_u = np.asarray(new_u, dtype=float)

    points = trig_eval(coef, n, new_u) + np.outer(new_u, curve.shift) / TWO_PI
    return DiscreteCurve(points, shift=curve.shift)


def handedness(fr):
    """-1 for a strictly left-handed curve (τ < -τ_floor at every valid
    node), +1 otherwise."""
    tau = fr.tau[fr.tau_valid]
    if tau.size and np.all(tau < -fr.tau_floor):
        return -1
    return 1


def oriented_tau(fr):
    """Torsion multiplied by the curve's handedness (NaN at invalid nodes)."""
    return handedness(fr) * fr.tau
