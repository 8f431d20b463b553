"""twistflow.singularity

Blow-up diagnostics for a flow run: the curvature maximum M_t = max κ²,
torsion ratios, the torsion-maximum quantity Q = 2κ² + 2∂_s² log κ,
an estimate of the singular time ω, a Type I / Type II verdict from the
indicator M_t(ω - t), and the rescaled final profile compared with the
circle and Grim Reaper models.

The verdict thresholds are heuristics: the Type I/II dichotomy is a
statement about the limit t → ω, which no finite run reaches.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, stats

from twistflow.errors import InsufficientDataError
from twistflow.geometry import DiscreteCurve, arclength_derivative, frenet, oriented_tau
from twistflow.scenarios import is_twisted

__all__ = ["Classification", "BlowupSeries", "OmegaEstimate", "SingularityVerdict",
           "MaxPointCheck", "ProfileModel", "collect", "estimate_omega", "classify",
           "rescaled_profile", "rescaled_profile_distance", "max_point_bound",
           "DEFAULT_THRESHOLDS"]

DEFAULT_THRESHOLDS = {"spread": 0.10, "growth": 10.0, "decade": 10.0}
ALPHAS = (0.5, 0.9)


class Classification(enum.Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"
    INCONCLUSIVE = "Inconclusive"


class ProfileModel(enum.Enum):
    CIRCLE = "Circle"
    GRIM_REAPER = "GrimReaper"


@dataclass
class BlowupSeries:
    """Per-snapshot blow-up data; torsion entries are NaN where no node
    has defined torsion."""

    t: np.ndarray
    m_t: np.ndarray
    argmax: Optional[np.ndarray] = None
    sup_tau_over_kappa: Optional[np.ndarray] = None
    sup_tau_over_kappa2: Optional[np.ndarray] = None
    sup_tau: Optional[np.ndarray] = None
    tau_argmax: Optional[np.ndarray] = None
    q_at_tau_max: Optional[np.ndarray] = None
    essential: Optional[np.ndarray] = None
    twisted: Optional[np.ndarray] = None
    rho: float = 0.5
    final_curve: Optional[DiscreteCurve] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.m_t = np.asarray(self.m_t, dtype=float)


@dataclass(frozen=True)
class OmegaEstimate:
    omega_hat: float
    uncertainty: float
    inconclusive: bool


@dataclass
class SingularityVerdict:
    omega_hat: float
    omega_uncertainty: float
    type_indicator: float
    indicator_band: tuple
    classification: Classification
    rescaled_profile: Optional[DiscreteCurve]
    spread: float
    growth: float
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    alpha_series: dict = field(default_factory=dict)
    reason: str = ""
    heuristic: bool = True

    def to_dict(self):
        """JSON-ready summary (the profile itself is written separately)."""
        return {
            "classification": self.classification.value,
            "omega_hat": self.omega_hat,
            "omega_uncertainty": self.omega_uncertainty,
            "type_indicator": self.type_indicator,
            "indicator_band": list(self.indicator_band),
            "spread": self.spread,
            "growth": self.growth,
            "thresholds": self.thresholds,
            "alpha_series": {str(a): list(v) for a, v in self.alpha_series.items()},
            "reason": self.reason,
            "heuristic": self.heuristic,
        }


def _log_kappa(fr):
    return np.log(np.maximum(fr.kappa, fr.kappa_floor))


def collect(snapshots, rho=0.5):
    """Extract the blow-up series from flow snapshots.

    Arguments:
    ----------
      snapshots: FlowState sequence, ordered in time.

      rho (optional, default: 0.5): essential-point threshold; the
        τ/κ²-argmax node is essential when κ² ≥ ρ M_t there.
    """
    n_snap = len(snapshots)
    out = {k: np.full(n_snap, np.nan) for k in
           ("m_t", "sup_tau_over_kappa", "sup_tau_over_kappa2", "sup_tau", "q_at_tau_max")}
    argmax = np.zeros(n_snap, dtype=int)
    tau_argmax = np.full(n_snap, -1, dtype=int)
    essential = np.zeros(n_snap, dtype=bool)
    twisted = np.zeros(n_snap, dtype=bool)

    for i, state in enumerate(snapshots):
        fr = state.frenet
        kappa = fr.kappa
        argmax[i] = int(np.argmax(kappa))
        m_t = float(kappa[argmax[i]] ** 2)
        out["m_t"][i] = m_t
        twisted[i] = is_twisted(state.curve, fr).twisted
        valid = np.flatnonzero(fr.tau_valid)
        if valid.size == 0:
            continue
        tau = oriented_tau(fr)[valid]
        kv = kappa[valid]
        out["sup_tau_over_kappa"][i] = np.max(tau / kv)
        ratio2 = tau / kv ** 2
        out["sup_tau_over_kappa2"][i] = np.max(ratio2)
        j = valid[np.argmax(tau)]
        tau_argmax[i] = j
        out["sup_tau"][i] = np.max(tau)
        q = 2 * kappa ** 2 + 2 * arclength_derivative(_log_kappa(fr), fr, order=2)
        out["q_at_tau_max"][i] = q[j]
        jr = valid[np.argmax(ratio2)]
        essential[i] = kappa[jr] ** 2 >= rho * m_t

    return BlowupSeries(t=np.array([s.t for s in snapshots]), argmax=argmax,
                        tau_argmax=tau_argmax, essential=essential, twisted=twisted, rho=rho,
                        final_curve=snapshots[-1].curve if snapshots else None, **out)


def estimate_omega(series, min_points=8):
    """Fit 1/M_t ≈ a(ω - t) over the last half of the series.

    Returns
    -------
    OmegaEstimate
        The uncertainty is the fit's residual RMS converted to time;
        ``inconclusive`` is set when 1/M_t is not monotone over the
        fitted half.

    Raises
    ------
    InsufficientDataError
        Fewer than `min_points` snapshots, or M_t not growing.
    """
    t, m = series.t, series.m_t
    if t.size < min_points:
        raise InsufficientDataError(f"Need at least {min_points} snapshots, got {t.size}")
    if not m[-1] > m[0] * (1 + 1e-9):
        raise InsufficientDataError("M_t does not grow over the series")
    half = slice(t.size // 2, None)
    th, inv = t[half], 1.0 / m[half]
    fit = stats.linregress(th, inv)
    if not fit.slope < 0:
        raise InsufficientDataError("1/M_t does not decrease over the fitted window")
    omega = -fit.intercept / fit.slope
    resid = inv - (fit.intercept + fit.slope * th)
    dof = max(th.size - 2, 1)
    uncertainty = float(np.sqrt(np.sum(resid ** 2) / dof) / abs(fit.slope))
    inconclusive = not bool(np.all(np.diff(inv) < 0))
    return OmegaEstimate(float(omega), uncertainty, inconclusive)


def classify(series, omega_hat, thresholds=None, omega_uncertainty=0.0):
    """Type I / Type II verdict from the indicator M_t(ω̂ - t).

    TypeII when the indicator is non-decreasing over the series and grows
    by at least the growth threshold; TypeI when its relative spread over
    the last decade of approach (ω̂ - t within a factor `decade` of the
    final gap) is below the spread threshold; Inconclusive otherwise.
    """
    th = dict(DEFAULT_THRESHOLDS, **(thresholds or {}))
    t, m = series.t, series.m_t
    if not omega_hat > t[-1]:
        raise ValueError(f"omega_hat={omega_hat} must exceed the last snapshot time {t[-1]}")
    gap = omega_hat - t
    indicator = m * gap
    window = gap <= th["decade"] * gap[-1]
    ind_w = indicator[window]
    band = (float(np.min(ind_w)), float(np.max(ind_w)))
    level = float(np.median(ind_w))
    spread = (band[1] - band[0]) / abs(level) if level else np.inf
    growth = float(indicator[-1] / indicator[0]) if indicator[0] > 0 else np.inf
    nondecreasing = bool(np.all(np.diff(indicator) >= -1e-12 * np.abs(indicator[1:])))

    if nondecreasing and growth >= th["growth"]:
        verdict = Classification.TYPE_II
        reason = f"indicator grew {growth:.3g}x monotonically"
    elif ind_w.size >= 3 and np.isfinite(spread) and spread < th["spread"]:
        verdict = Classification.TYPE_I
        reason = f"indicator spread {spread:.3g} over the last decade"
    else:
        verdict = Classification.INCONCLUSIVE
        reason = f"indicator spread {spread:.3g}, growth {growth:.3g}x"

    alpha_series = {}
    if series.q_at_tau_max is not None:
        alpha_series = {a: series.q_at_tau_max * gap ** a for a in ALPHAS}

    profile = None
    if series.final_curve is not None:
        profile = rescaled_profile(series.final_curve)

    return SingularityVerdict(
        omega_hat=float(omega_hat), omega_uncertainty=float(omega_uncertainty),
        type_indicator=level, indicator_band=band, classification=verdict,
        rescaled_profile=profile, spread=float(spread), growth=growth, thresholds=th,
        alpha_series=alpha_series, reason=reason)


def rescaled_profile(curve):
    """Scale `curve` so that max κ = 1, with the κ-argmax node at the origin."""
    fr = frenet(curve)
    j = int(np.argmax(fr.kappa))
    k = float(fr.kappa[j])
    return DiscreteCurve((curve.points - curve.points[j]) * k, shift=curve.shift * k)


def _local_window(profile, window):
    """Points within ±window arclength of the apex, in the apex Frenet
    frame (tangent x, normal y, binormal z)."""
    if isinstance(profile, DiscreteCurve):
        fr = frenet(profile)
        j = int(np.argmax(fr.kappa))
        n = profile.n
        offsets = np.arange(-(n // 2) + 1, n // 2)
        idx = (j + offsets) % n
        wraps = (j + offsets) // n
        pts = profile.points[idx] + wraps[:, None] * profile.shift
        s = np.cumsum(fr.ds[idx])
        s -= s[offsets == 0][0]
        frame = np.vstack([fr.tangent[j], fr.normal[j], fr.binormal[j]])
        local = (pts - profile.points[j]) @ frame.T
        return local[np.abs(s) <= window]
    pts = np.asarray(profile, dtype=float)
    apex = int(np.argmin(np.linalg.norm(pts, axis=1)))
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(chords)])
    s -= s[apex]
    return pts[np.abs(s) <= window]


def _grim_reaper_distance(xy):
    """Distance of planar points to y = -log cos x."""
    xi, eta = xy[:, 0], xy[:, 1]
    grid = np.linspace(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3, 801)
    gy = -np.log(np.cos(grid))
    d2 = (xi[:, None] - grid[None, :]) ** 2 + (eta[:, None] - gy[None, :]) ** 2
    x0 = grid[np.argmin(d2, axis=1)]
    coarse = np.sqrt(np.min(d2, axis=1))

    # stationary points of the squared distance
    def f(x):
        return (x - xi) - (np.log(np.cos(x)) + eta) * np.tan(x)

    def fprime(x):
        return (1 - np.log(np.cos(x)) - eta) / np.cos(x) ** 2

    with np.errstate(invalid="ignore", divide="ignore"):
        x, converged, _ = optimize.newton(f, x0, fprime=fprime, tol=1e-15, maxiter=50,
                                          full_output=True)
        fine = np.hypot(xi - x, eta + np.log(np.cos(x)))
    fine = np.where(converged & np.isfinite(fine), fine, np.inf)
    return np.minimum(coarse, fine)


def _model_distance(points, model):
    if model is ProfileModel.CIRCLE:
        planar = np.abs(np.hypot(points[:, 0], points[:, 1] - 1.0) - 1.0)
    else:
        planar = _grim_reaper_distance(points[:, :2])
    return np.hypot(planar, points[:, 2])


def _model_samples(model, window, m=241):
    """Model curve points at uniform arclength over ±window from the apex."""
    s = np.linspace(-window, window, m)
    if model is ProfileModel.CIRCLE:
        s = np.clip(s, -np.pi, np.pi)
        return np.column_stack([np.sin(s), 1 - np.cos(s), np.zeros_like(s)])
    return np.column_stack([np.arctan(np.sinh(s)), np.log(np.cosh(s)), np.zeros_like(s)])


def _polyline_distance(points, line):
    """Distance of each point to the polyline through `line`."""
    if line.shape[0] == 1:
        return np.linalg.norm(points - line[0], axis=1)
    a, ab = line[:-1], np.diff(line, axis=0)
    rel = points[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(rel * ab, axis=-1) / np.sum(ab * ab, axis=-1), 0.0, 1.0)
    d = np.linalg.norm(rel - t[..., None] * ab, axis=-1)
    return np.min(d, axis=1)


def rescaled_profile_distance(profile, model, window=3.0):
    """Symmetric mean distance between a rescaled profile and a model curve.

    Parameters
    ----------
    profile : DiscreteCurve or array, shape (m, 3)
        A curve rescaled to max κ = 1.  A DiscreteCurve is placed in the
        Frenet frame of its κ-argmax node; an array is taken as already
        in that frame (apex at the origin, tangent along x, normal +y)
        and ordered along the curve.

    model : ProfileModel
        Unit circle through the origin centered at (0, 1), or the Grim
        Reaper y = -log cos x.

    window : float
        Arclength half-width around the apex, for the profile and for the
        model alike.

    Returns
    -------
    float
        The average of the mean profile-to-model distance and the mean
        model-to-profile distance (to the profile polyline), after the
        best rigid motion in the osculating plane.  The out-of-plane
        offset counts in full.
    """
    model = ProfileModel(model)
    local = _local_window(profile, window)
    reference = _model_samples(model, window)

    def mean_distance(params):
        theta, a, b = params
        c, s = np.cos(theta), np.sin(theta)
        moved = local.copy()
        moved[:, 0] = c * local[:, 0] - s * local[:, 1] + a
        moved[:, 1] = s * local[:, 0] + c * local[:, 1] + b
        there = np.mean(_model_distance(moved, model))
        back = np.mean(_polyline_distance(reference, moved))
        return float(0.5 * (there + back))

    start = mean_distance((0.0, 0.0, 0.0))
    res = optimize.minimize(mean_distance, x0=np.zeros(3), method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    return min(start, float(res.fun))


@dataclass(frozen=True)
class MaxPointCheck:
    t: float
    lhs: float
    q: float
    satisfied: bool


def max_point_bound(series, rel_tol=0.02, abs_tol=1e-6):
    """Check ∂_t log sup τ ≤ Q at the torsion maximum.

    The time derivative is the centered difference over equally spaced
    neighbouring snapshots, all twisted.  Returns one `MaxPointCheck`
    per interior snapshot where it applies.
    """
    checks = []
    t = series.t
    for i in range(1, t.size - 1):
        d0, d1 = t[i] - t[i - 1], t[i + 1] - t[i]
        if abs(d0 - d1) > 1e-9 * (d0 + d1):
            continue
        if not np.all(series.twisted[i - 1:i + 2]):
            continue
        sup = series.sup_tau[i - 1:i + 2]
        if not np.all(sup > 0):
            continue
        lhs = (np.log(sup[2]) - np.log(sup[0])) / (t[i + 1] - t[i - 1])
        q = series.q_at_tau_max[i]
        checks.append(MaxPointCheck(float(t[i]), float(lhs), float(q),
                                    bool(lhs <= q + rel_tol * abs(q) + abs_tol)))
    return checks
