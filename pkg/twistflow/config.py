"""twistflow.config

Run configuration: a flat YAML mapping with one nesting level for the
preset parameters, e.g.

    preset: coil_twisted
    params: {r: 0.4}
    n: 256
    t_end: 0.06
    identities: [total_curvature, entropy]

Every key is optional; command line flags override file values.
"""

import itertools
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from astropy.io.misc.yaml import yaml

from twistflow.errors import ConfigError, InvalidParamsError
from twistflow.flow import FlowConfig
from twistflow.functionals.identities import IDENTITIES
from twistflow.geometry import MIN_NODES, DerivativeScheme
from twistflow.helpers import find_configfile
from twistflow.scenarios import preset as resolve_preset

__all__ = ["RunConfig", "UniqueKeyLoader", "DEFAULT_FLOW_T_END", "DEFAULT_SWEEP_T_END"]

DEFAULT_FLOW_T_END = 1.0
DEFAULT_SWEEP_T_END = 10.0


class UniqueKeyLoader(yaml.SafeLoader):
    def construct_mapping(self, node, deep=False):
        mapping = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=deep)
            if key in mapping:
                raise ConfigError(f"Duplicate {key!r} key found in YAML.")
            mapping.add(key)
        return super().construct_mapping(node, deep)


@dataclass
class RunConfig:
    """Everything a `run`, `verify` or `sweep` needs.

    t_end defaults to 1.0 for flow runs and 10.0 for reaction ODE sweeps
    when left unset.  identities=None enables every registered law.
    """

    preset: str = "circle"
    params: dict = field(default_factory=dict)
    n: int = 256
    seed: Optional[int] = None
    t_end: Optional[float] = None
    sigma_cfl: float = 0.2
    kappa_stop: float = 100.0
    dt_floor: float = 1e-12
    resample_every: int = 10
    snapshot_every: float = 0.01
    scheme: str = "spectral"
    identities: Optional[list] = None
    lambda_entropy: bool = False
    lambda_every: int = 1
    rho: float = 0.5
    out: str = "twistflow_out"
    refinements: int = 2
    min_order: float = 2.0
    order_tolerance: float = 0.1
    residual_floor: float = 1e-9
    max_relative_residual: float = 0.05
    sphere_tol: float = 1e-4
    workers: int = 1
    grid: Optional[list] = None
    kappa0: Optional[list] = None
    tau0: Optional[list] = None
    dt: float = 1e-4
    stiffness: float = 0.01
    trajectories: bool = False

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_yaml(cls, configfile):
        """Read a configuration file (or the name of a packaged one)."""
        path = find_configfile(configfile)
        try:
            with open(path) as fd:
                d = yaml.load(fd, Loader=UniqueKeyLoader)
        except IOError as e:
            raise ConfigError("Error reading run configuration\n" f"\t{path}\n\t{repr(e)}")
        except yaml.YAMLError as e:
            raise ConfigError(f"Malformed run configuration {path}: {e}")
        if d is None:
            d = {}
        if not isinstance(d, dict):
            raise ConfigError(f"Run configuration {path} must be a mapping")
        return cls.from_dict(d)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def override(self, **kwargs):
        """A copy with every non-None keyword applied."""
        changes = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **changes) if changes else self

    def validate(self):
        for f in fields(self):
            _check_type(f.name, getattr(self, f.name))
        if self.n < MIN_NODES or self.n % 2:
            raise ConfigError(f"n must be even and at least {MIN_NODES}, got {self.n}")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        for name in ("lambda_every", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.refinements < 0:
            raise ConfigError("refinements must be >= 0")
        for name in ("rho", "dt", "stiffness", "residual_floor", "max_relative_residual",
                     "sphere_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        try:
            DerivativeScheme(self.scheme)
        except ValueError:
            raise ConfigError(f"Unknown scheme {self.scheme!r}; use 'spectral' or 'fd4'")
        if self.identities is not None:
            bad = [i for i in self.identities if i not in IDENTITIES]
            if bad:
                raise ConfigError(f"Unknown identities: {', '.join(bad)}; "
                                  f"known: {', '.join(IDENTITIES)}")
        try:
            resolve_preset(self.preset, self.params, self.seed)
        except InvalidParamsError as e:
            raise ConfigError(str(e))
        self.flow_config()
        if self.grid is not None:
            for pair in self.grid:
                if not (isinstance(pair, (list, tuple)) and len(pair) == 2
                        and all(_is_number(x) for x in pair)):
                    raise ConfigError(f"grid entries must be [kappa0, tau0] pairs, got {pair!r}")

    def flow_config(self, **changes):
        """The `FlowConfig` for a flow run, with optional field changes."""
        kw = dict(t_end=self.t_end if self.t_end is not None else DEFAULT_FLOW_T_END,
                  sigma_cfl=self.sigma_cfl, kappa_stop=self.kappa_stop,
                  dt_floor=self.dt_floor, resample_every=self.resample_every,
                  snapshot_every=self.snapshot_every, scheme=DerivativeScheme(self.scheme))
        kw.update(changes)
        try:
            return FlowConfig(**kw)
        except InvalidParamsError as e:
            raise ConfigError(str(e))

    @property
    def enabled_identities(self):
        return list(IDENTITIES) if self.identities is None else list(self.identities)

    @property
    def sweep_t_end(self):
        return self.t_end if self.t_end is not None else DEFAULT_SWEEP_T_END

    def grid_points(self):
        """Initial (κ₀, τ₀) pairs of a sweep, in grid order.

        An explicit `grid` wins; otherwise the cartesian product of the
        `kappa0` and `tau0` lists.
        """
        if self.grid is not None:
            points = [(float(k), float(t)) for k, t in self.grid]
        elif self.kappa0 is not None and self.tau0 is not None:
            points = [(float(k), float(t)) for k, t in itertools.product(self.kappa0, self.tau0)]
        else:
            raise ConfigError("A sweep needs 'grid' or both 'kappa0' and 'tau0'")
        if not points:
            raise ConfigError("Sweep grid is empty")
        return points


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


_TYPES = {
    "preset": str, "params": dict, "n": int, "seed": int, "t_end": float,
    "sigma_cfl": float, "kappa_stop": float, "dt_floor": float, "resample_every": int,
    "snapshot_every": float, "scheme": str, "identities": list, "lambda_entropy": bool,
    "lambda_every": int, "rho": float, "out": str, "refinements": int, "min_order": float,
    "order_tolerance": float, "residual_floor": float, "max_relative_residual": float,
    "sphere_tol": float, "workers": int, "grid": list, "kappa0": list, "tau0": list,
    "dt": float, "stiffness": float, "trajectories": bool,
}


def _check_type(name, value):
    if value is None:
        if name in ("seed", "t_end", "identities", "grid", "kappa0", "tau0"):
            return
        raise ConfigError(f"{name} may not be empty")
    kind = _TYPES[name]
    if kind is float:
        ok = _is_number(value)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(f"{name} must be of type {kind.__name__}, got {value!r}")
    if name in ("kappa0", "tau0") and not all(_is_number(x) for x in value):
        raise ConfigError(f"{name} must be a list of numbers")
