"""twistflow.scenarios

Analytic initial curves with known Frenet data.

Generator kinds (`KINDS`) are closed-form maps u -> R³.  Named
parameter sets for them ship as scenario packs in
``twistflow/packs/scenarios/*.yaml``, read once at import into
`packs`.  Either a kind or a pack name can be passed to `make`.
"""

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from astropy.io.misc import yaml

from twistflow.errors import InvalidParamsError
from twistflow.geometry import (DiscreteCurve, TWO_PI, handedness, oriented_tau)

__all__ = ["Preset", "KINDS", "packs", "preset", "make", "scenarios", "is_twisted",
           "TwistReport", "FlatPointReport", "flat_points", "count_flat_points"]

packs = {}


@dataclass(frozen=True)
class Preset:
    """A parametrized initial curve.

    ``generator`` maps parameters u (array) to points (len(u), 3);
    ``expected``, when known, maps u to closed-form (κ, τ).  ``sphere``
    is (center, radius) for curves constrained to a sphere.
    """

    id: str
    params: dict
    generator: Callable
    shift: np.ndarray = field(default_factory=lambda: np.zeros(3))
    expected: Optional[Callable] = None
    sphere: Optional[tuple] = None

    def sample(self, n):
        u = np.arange(n) * TWO_PI / n
        return DiscreteCurve(self.generator(u), shift=self.shift)


def _frenet_from_derivatives(d1, d2, d3):
    cross = np.cross(d1, d2)
    cn = np.linalg.norm(cross, axis=-1)
    v = np.linalg.norm(d1, axis=-1)
    kappa = cn / v ** 3
    with np.errstate(invalid="ignore", divide="ignore"):
        tau = np.einsum("...i,...i", cross, d3) / cn ** 2
    return kappa, tau


def _require(cond, msg):
    if not cond:
        raise InvalidParamsError(msg)


def _is_int(x):
    return float(x).is_integer()


def _circle(R=1.0):
    _require(R > 0, "circle: R must be positive")

    def gen(u):
        return np.column_stack([R * np.cos(u), R * np.sin(u), np.zeros_like(u)])

    def expected(u):
        return np.full_like(u, 1.0 / R), np.zeros_like(u)

    return dict(generator=gen, expected=expected)


def _ellipse(a=2.0, b=1.0):
    _require(a > 0 and b > 0, "ellipse: semi-axes must be positive")

    def gen(u):
        return np.column_stack([a * np.cos(u), b * np.sin(u), np.zeros_like(u)])

    def expected(u):
        kappa = a * b / (a ** 2 * np.sin(u) ** 2 + b ** 2 * np.cos(u) ** 2) ** 1.5
        return kappa, np.zeros_like(u)

    return dict(generator=gen, expected=expected)


def _helix(a=1.0, b=1.0):
    _require(a > 0, "helix: radius a must be positive")
    _require(b != 0, "helix: pitch b must be nonzero")

    def gen(u):
        return np.column_stack([a * np.cos(u), a * np.sin(u), b * u])

    def expected(u):
        c = a ** 2 + b ** 2
        return np.full_like(u, a / c), np.full_like(u, b / c)

    return dict(generator=gen, expected=expected, shift=np.array([0.0, 0.0, TWO_PI * b]))


def _torus_coil(R=2.0, r=0.5, p=1, q=8):
    _require(R > 0 and 0 < r < R, "torus_coil: need 0 < r < R")
    _require(_is_int(p) and _is_int(q) and p >= 1 and q >= 1,
             "torus_coil: p and q must be positive integers")
    p, q = int(p), int(q)
    _require(math.gcd(p, q) == 1, f"torus_coil: p={p} and q={q} must be coprime")

    def gen(u):
        rho = R + r * np.cos(q * u)
        return np.column_stack([rho * np.cos(p * u), rho * np.sin(p * u), r * np.sin(q * u)])

    def expected(u):
        sq, cq = np.sin(q * u), np.cos(q * u)
        rho = [R + r * cq, -r * q * sq, -r * q ** 2 * cq, r * q ** 3 * sq]
        # planar part ρ(u) e^{ipu}: derivatives as (real, imag) coefficients of e^{ipu}
        planar = [(rho[1], p * rho[0]),
                  (rho[2] - p ** 2 * rho[0], 2 * p * rho[1]),
                  (rho[3] - 3 * p ** 2 * rho[1], 3 * p * rho[2] - p ** 3 * rho[0])]
        zs = [r * q * cq, -r * q ** 2 * sq, -r * q ** 3 * cq]
        c, s = np.cos(p * u), np.sin(p * u)
        ds = [np.column_stack([re * c - im * s, re * s + im * c, z])
              for (re, im), z in zip(planar, zs)]
        return _frenet_from_derivatives(*ds)

    return dict(generator=gen, expected=expected)


def _spherical_lissajous(R=1.0, a=1, b=3, phi=0.0, h=0.3):
    _require(R > 0, "spherical_lissajous: R must be positive")
    _require(_is_int(a) and _is_int(b) and a >= 1 and b >= 1,
             "spherical_lissajous: a and b must be positive integers")
    _require(h != 0, "spherical_lissajous: h must be nonzero (h = 0 is a great circle)")
    a, b = int(a), int(b)

    def gen(u):
        w = np.column_stack([np.cos(a * u), np.sin(a * u), h * np.sin(b * u + phi)])
        return R * w / np.linalg.norm(w, axis=1)[:, None]

    return dict(generator=gen, sphere=(np.zeros(3), float(R)))


def _perturbed_circle_3d(R=1.0, eps=0.1, m=2, modes=3, delta=0.02, seed=0):
    _require(R > 0, "perturbed_circle_3d: R must be positive")
    _require(_is_int(m) and m >= 2, "perturbed_circle_3d: m must be an integer >= 2")
    _require(_is_int(modes) and modes >= 0, "perturbed_circle_3d: modes must be >= 0")
    m, modes = int(m), int(modes)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, TWO_PI, size=modes + 1)
    amps = delta * rng.standard_normal(modes)
    ks = np.arange(2, modes + 2)

    def gen(u):
        z = eps * np.sin(m * u + phases[0])
        if modes:
            z = z + np.sum(amps[:, None] * np.sin(np.outer(ks, u) + phases[1:, None]), axis=0)
        return R * np.column_stack([np.cos(u), np.sin(u), z])

    return dict(generator=gen)


KINDS = {
    "circle": _circle,
    "ellipse": _ellipse,
    "helix": _helix,
    "torus_coil": _torus_coil,
    "spherical_lissajous": _spherical_lissajous,
    "perturbed_circle_3d": _perturbed_circle_3d,
}

_SEEDED = {"perturbed_circle_3d"}


def read_scenario_packs():
    """Read all scenario packs into the 'packs' variable."""
    global packs
    for pack in (resources.files("twistflow") / "packs/scenarios").glob("*.yaml"):
        try:
            with open(pack) as fd:
                p = yaml.load(fd)
        except IOError as e:
            raise InvalidParamsError(
                "Error reading scenario pack file\n" f"\t{pack}\n\t{repr(e)}"
            )
        for name, entry in (p or {}).items():
            if entry.get("kind") not in KINDS:
                raise InvalidParamsError(f"Scenario {name} in {pack} has unknown kind")
            packs[name] = entry


def scenarios(match=None):
    """Returns the names of all generator kinds and shipped parameter sets.

    Arguments:
    ----------

      match (Optional): A glob-style string (or list of them); only
        matching names are returned.
    """
    names = list(KINDS) + list(packs)
    if not match:
        return names
    if not isinstance(match, (tuple, list)):
        match = (match,)
    return [x for x in names if any(Path(x).match(m) for m in match)]


def preset(id, params=None, seed=None):
    """Resolve a preset id (kind or pack name) and parameters.

    Parameters
    ----------
    id : str
        A generator kind (see `KINDS`) or a shipped parameter set name.

    params : dict, optional
        Parameter overrides.

    seed : int, optional
        Random seed, for seeded presets (perturbed_circle_3d).

    Returns
    -------
    Preset

    Raises
    ------
    InvalidParamsError
        For an unknown id, unknown parameter names, or parameters that do
        not define a valid curve.
    """
    merged = {}
    if id in packs:
        kind = packs[id]["kind"]
        merged.update(packs[id].get("params") or {})
    elif id in KINDS:
        kind = id
    else:
        raise InvalidParamsError(f"Unknown preset {id!r}; known: {', '.join(scenarios())}")
    merged.update(params or {})
    if seed is not None and kind in _SEEDED:
        merged["seed"] = seed
    try:
        parts = KINDS[kind](**merged)
    except TypeError as e:
        raise InvalidParamsError(f"Invalid parameters for {kind}: {e}")
    return Preset(id=id, params=merged, **parts)


def make(id, params=None, n=256, seed=None):
    """Sample preset `id` at n uniform parameter values."""
    return preset(id, params, seed).sample(n)


@dataclass(frozen=True)
class TwistReport:
    twisted: bool
    kappa_margin: float
    tau_margin: float

    def __bool__(self):
        return self.twisted


def is_twisted(curve, fr):
    """Scale-normalized twistedness certificate.

    Margins are min κ·L/2π and min τ̃·L/2π, with τ̃ the torsion oriented
    by the curve's handedness; the flag is set when both exceed the
    floor factor (equivalently min κ > κ_floor and min τ̃ > τ_floor).
    """
    scale = fr.length / TWO_PI
    kappa_margin = float(np.min(fr.kappa)) * scale
    if np.all(fr.tau_valid):
        tau_margin = float(np.min(oriented_tau(fr))) * scale
    else:
        tau_margin = 0.0
    twisted = kappa_margin > fr.kappa_floor * scale and tau_margin > fr.tau_floor * scale
    return TwistReport(bool(twisted), kappa_margin, tau_margin)


@dataclass(frozen=True)
class FlatPointReport:
    count: int
    nodes: np.ndarray
    partial: bool
    planar: bool


def flat_points(fr):
    """Locate sign changes of τ around the closed node cycle.

    Only nodes with |τ| > τ_floor take part, so a change is counted only
    when both flanking values exceed the floor.  When some nodes are
    invalid (κ < κ_floor) the count covers the valid arcs and is flagged
    partial; when no node exceeds the floor the curve is reported planar
    with count 0.
    """
    partial = not bool(np.all(fr.tau_valid))
    tau = np.where(fr.tau_valid, fr.tau, 0.0)
    idx = np.flatnonzero(np.abs(tau) > fr.tau_floor)
    if idx.size == 0:
        return FlatPointReport(0, idx, partial, True)
    signs = np.sign(tau[idx])
    change = signs != np.roll(signs, -1)
    return FlatPointReport(int(np.count_nonzero(change)), idx[change], partial, False)


def count_flat_points(fr):
    return flat_points(fr).count


read_scenario_packs()
