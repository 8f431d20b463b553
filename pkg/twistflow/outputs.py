"""twistflow.outputs

Event detection during a run and the files a run leaves behind:
series.csv, events.jsonl, snapshots/snap_XXXX.csv, verdict.json,
identities.csv and phase.csv.

Tables are written with astropy's csv writer.  Floats use the shortest
decimal that round-trips, absent values are empty fields.
"""

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from astropy import log
from astropy.io import ascii
from astropy.table import Column, MaskedColumn, Table

from twistflow.flow import Observer, StopReason
from twistflow.functionals import SERIES_COLUMNS, FunctionalSample
from twistflow.geometry import oriented_tau
from twistflow.scenarios import count_flat_points, is_twisted

__all__ = ["EventKind", "EventRecord", "EventDetector", "fmt_float", "write_table",
           "write_series", "read_series", "write_events", "read_events", "write_snapshot",
           "write_verdict", "write_identities", "write_phase", "IDENTITY_COLUMNS",
           "PHASE_COLUMNS"]

IDENTITY_COLUMNS = ("identity_id", "resolution", "t_mid", "lhs", "rhs", "residual", "scale",
                    "measured_order")
PHASE_COLUMNS = ("kappa0", "tau0", "C", "tau_limit", "C_drift_max", "t_stop", "steps",
                 "stop_reason", "error")
_INT_COLUMNS = {"flat_point_count"}
_BOOL_COLUMNS = {"twisted"}


class EventKind(enum.Enum):
    INFLECTION_EMERGED = "InflectionEmerged"
    FLAT_POINT_EMERGED = "FlatPointEmerged"
    TWIST_LOST = "TwistLost"
    SINGULARITY_STOP = "SingularityStop"
    SPHERE_INVARIANT_BROKEN = "SphereInvariantBroken"


@dataclass(frozen=True)
class EventRecord:
    t: float
    kind: EventKind
    node: int
    min_kappa: float
    min_tau: Optional[float]
    flat_count: int

    def to_dict(self):
        return {"t": self.t, "kind": self.kind.value, "node": self.node,
                "min_kappa": self.min_kappa, "min_tau": self.min_tau,
                "flat_count": self.flat_count}


class EventDetector(Observer):
    """Emit an `EventRecord` when a condition starts to hold.

    Each kind fires once per contiguous episode of snapshots where its
    condition holds.  TwistLost fires on a twisted -> untwisted
    transition.  With ``sphere = (center, R)`` the invariant
    |γ - c|² = R² - 2t is checked to `sphere_tol`.
    """

    def __init__(self, sphere=None, sphere_tol=1e-4):
        self.sphere = sphere
        self.sphere_tol = sphere_tol
        self.events = []
        self._active = set()
        self._was_twisted = None

    def _payload(self, state):
        fr = state.frenet
        min_tau = None
        if np.any(fr.tau_valid):
            min_tau = float(np.min(oriented_tau(fr)[fr.tau_valid]))
        return float(np.min(fr.kappa)), min_tau, count_flat_points(fr)

    def _update(self, kind, holds, state, node):
        if not holds:
            self._active.discard(kind)
            return
        if kind in self._active:
            return
        self._active.add(kind)
        min_kappa, min_tau, flat = self._payload(state)
        self.events.append(EventRecord(float(state.t), kind, int(node), min_kappa, min_tau,
                                       flat))
        log.debug(f"Event {kind.value} at t={state.t:.6g}, node {node}")

    def observe(self, state, dt):
        fr = state.frenet
        self._update(EventKind.INFLECTION_EMERGED, bool(np.min(fr.kappa) < fr.kappa_floor),
                     state, np.argmin(fr.kappa))

        flat = count_flat_points(fr)
        tau = np.where(fr.tau_valid, np.abs(fr.tau), np.inf)
        self._update(EventKind.FLAT_POINT_EMERGED, flat > 0, state, np.argmin(tau))

        twisted = is_twisted(state.curve, fr).twisted
        untwisting = not twisted and (bool(self._was_twisted)
                                      or EventKind.TWIST_LOST in self._active)
        self._update(EventKind.TWIST_LOST, untwisting, state, np.argmin(tau))
        self._was_twisted = twisted

        if self.sphere is not None:
            center, radius = self.sphere
            dev = np.abs(np.sum((state.curve.points - center) ** 2, axis=1)
                         - (radius ** 2 - 2 * state.t))
            self._update(EventKind.SPHERE_INVARIANT_BROKEN, bool(np.max(dev) > self.sphere_tol),
                         state, np.argmax(dev))

    def close(self, result):
        if result.stop_reason is StopReason.SINGULARITY:
            final = result.final
            self._active.discard(EventKind.SINGULARITY_STOP)
            self._update(EventKind.SINGULARITY_STOP, True, final, np.argmax(final.frenet.kappa))


def fmt_float(x):
    """Shortest round-trip decimal of a float; empty when masked."""
    if x is np.ma.masked:
        return ""
    return repr(float(x))


def _column(name, values, kind=float):
    mask = [v is None for v in values]
    fill = {float: 0.0, int: 0, bool: False, str: ""}[kind]
    data = np.array([fill if v is None else v for v in values], dtype=kind)
    col = MaskedColumn(data, name=name, mask=mask) if any(mask) else Column(data, name=name)
    if kind is float:
        col.info.format = fmt_float
    return col


def write_table(filename, rows, columns, kinds=None):
    """Write dict rows as csv, columns in the given order.

    kinds maps column name -> python type (float by default).
    """
    kinds = kinds or {}
    table = Table([_column(name, [r.get(name) for r in rows], kinds.get(name, float))
                   for name in columns])
    table.write(filename, format="ascii.csv", overwrite=True)
    log.info(f"Wrote {filename}")
    return table


def write_series(filename, samples):
    kinds = {c: int for c in _INT_COLUMNS} | {c: bool for c in _BOOL_COLUMNS}
    rows = [{c: getattr(s, c) for c in SERIES_COLUMNS} for s in samples]
    return write_table(filename, rows, SERIES_COLUMNS, kinds)


def _cells(col):
    mask = getattr(col, "mask", None)
    out = []
    for i, v in enumerate(col):
        s = "" if (mask is not None and mask[i]) else str(v)
        out.append(None if s == "" else s)
    return out


def read_series(filename):
    """Parse series.csv back into a list of `FunctionalSample`."""
    table = Table.read(filename, format="ascii.csv",
                       converters={c: [ascii.convert_numpy(str)] for c in SERIES_COLUMNS})
    columns = {}
    for c in SERIES_COLUMNS:
        cells = _cells(table[c])
        if c in _INT_COLUMNS:
            columns[c] = [None if s is None else int(s) for s in cells]
        elif c in _BOOL_COLUMNS:
            columns[c] = [s == "True" for s in cells]
        else:
            columns[c] = [None if s is None else float(s) for s in cells]
    return [FunctionalSample(**{c: columns[c][i] for c in SERIES_COLUMNS})
            for i in range(len(table))]


def write_events(filename, events):
    with open(filename, "w") as fd:
        for e in events:
            fd.write(json.dumps(e.to_dict()) + "\n")
    log.info(f"Wrote {filename} ({len(events)} events)")


def read_events(filename):
    with open(filename) as fd:
        return [json.loads(line) for line in fd if line.strip()]


def write_snapshot(directory, index, state):
    """snap_XXXX.csv with the nodes' u, position, κ and τ (empty where undefined).

    Snapshot `index` is row `index` of series.csv.
    """
    fr = state.frenet
    pts = state.curve.points
    rows = [{"u": u, "x": p[0], "y": p[1], "z": p[2], "kappa": k,
             "tau": t if valid else None}
            for u, p, k, t, valid in zip(state.curve.u, pts, fr.kappa, fr.tau, fr.tau_valid)]
    path = Path(directory) / f"snap_{index:04d}.csv"
    table = Table([_column(name, [r[name] for r in rows])
                   for name in ("u", "x", "y", "z", "kappa", "tau")])
    table.write(path, format="ascii.csv", overwrite=True)
    return path


def write_verdict(filename, verdict):
    """verdict.json from a mapping (see `SingularityVerdict.to_dict`)."""
    with open(filename, "w") as fd:
        json.dump(verdict, fd, indent=2, default=_json_default)
        fd.write("\n")
    log.info(f"Wrote {filename}")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, enum.Enum):
        return obj.value
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def write_identities(filename, rows):
    """identities.csv from dict rows with `IDENTITY_COLUMNS` keys."""
    return write_table(filename, rows, IDENTITY_COLUMNS, {"identity_id": str, "resolution": int})


def write_phase(filename, rows):
    """phase.csv from dict rows with `PHASE_COLUMNS` keys."""
    return write_table(filename, rows, PHASE_COLUMNS,
                       {"steps": int, "stop_reason": str, "error": str})
