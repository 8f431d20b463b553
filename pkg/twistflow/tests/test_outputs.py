import numpy as np
from astropy.table import Table

from twistflow.flow import FlowConfig, FlowState, RunResult, StopReason, run
from twistflow.functionals import SERIES_COLUMNS, FunctionalTracker
from twistflow.outputs import (EventDetector, EventKind, fmt_float, read_events, read_series,
                               write_events, write_phase, write_series, write_snapshot)
from twistflow.scenarios import make, preset


def _tracked(tmp_path, name):
    tracker = FunctionalTracker(compute_lambda=True)
    run(make("coil_slow", n=32), FlowConfig(t_end=0.03), observers=[tracker])
    path = tmp_path / name
    write_series(path, tracker.samples)
    return tracker.samples, path


def test_fmt_float():
    assert fmt_float(0.1) == "0.1"
    assert fmt_float(np.float64(1e-5)) == "1e-05"
    assert float(fmt_float(np.pi)) == np.pi
    assert fmt_float(np.ma.masked) == ""


def test_series_round_trip(tmp_path):
    samples, path = _tracked(tmp_path, "series.csv")
    with open(path) as fd:
        header = fd.readline().strip()
        first = fd.readline().strip().split(",")
    assert header == ",".join(SERIES_COLUMNS)
    # dt is absent at t = 0
    assert first[1] == ""
    assert read_series(path) == samples


def test_series_deterministic(tmp_path):
    _, a = _tracked(tmp_path, "a.csv")
    _, b = _tracked(tmp_path, "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_event_episodes():
    coil = FlowState.start(make("coil_twisted", n=64))
    circle = FlowState.start(make("circle", n=64))
    detector = EventDetector()
    for state in (coil, circle, circle, coil, circle):
        detector.observe(state, np.nan)
    kinds = [e.kind for e in detector.events]
    assert kinds == [EventKind.TWIST_LOST, EventKind.TWIST_LOST]
    assert detector.events[0].min_tau == 0


def test_flat_point_and_singularity_events():
    state = FlowState.start(make("sphere_wave", n=128))
    detector = EventDetector()
    detector.observe(state, np.nan)
    detector.observe(state, np.nan)
    detector.close(RunResult([state], [np.nan], StopReason.SINGULARITY, FlowConfig()))
    kinds = [e.kind for e in detector.events]
    assert kinds == [EventKind.FLAT_POINT_EMERGED, EventKind.SINGULARITY_STOP]
    assert detector.events[0].flat_count >= 4


def test_sphere_invariant_event():
    p = preset("sphere_wave")
    state = FlowState.start(p.sample(64))
    center, radius = p.sphere
    detector = EventDetector(sphere=(center, radius))
    detector.observe(state, np.nan)
    assert EventKind.SPHERE_INVARIANT_BROKEN not in [e.kind for e in detector.events]
    detector = EventDetector(sphere=(center, 0.9 * radius))
    detector.observe(state, np.nan)
    assert EventKind.SPHERE_INVARIANT_BROKEN in [e.kind for e in detector.events]


def test_events_file(tmp_path):
    detector = EventDetector()
    detector.observe(FlowState.start(make("coil_twisted", n=64)), np.nan)
    detector.observe(FlowState.start(make("circle", n=64)), np.nan)
    write_events(tmp_path / "events.jsonl", detector.events)
    records = read_events(tmp_path / "events.jsonl")
    assert records == [e.to_dict() for e in detector.events]
    assert records[0]["kind"] == "TwistLost"


def test_snapshot_file(tmp_path):
    state = FlowState.start(make("ellipse_2to1", n=32))
    path = write_snapshot(tmp_path, 3, state)
    assert path.name == "snap_0003.csv"
    table = Table.read(path, format="ascii.csv")
    assert table.colnames == ["u", "x", "y", "z", "kappa", "tau"]
    np.testing.assert_allclose(table["kappa"], state.frenet.kappa, rtol=1e-15)


def test_phase_file_empty_cells(tmp_path):
    rows = [dict(kappa0=1.0, tau0=0.0, C=None, tau_limit=None, C_drift_max=None, t_stop=0.5,
                 steps=10, stop_reason="BlowUp", error="BlowUp")]
    write_phase(tmp_path / "phase.csv", rows)
    lines = (tmp_path / "phase.csv").read_text().splitlines()
    assert lines[0] == "kappa0,tau0,C,tau_limit,C_drift_max,t_stop,steps,stop_reason,error"
    assert lines[1] == "1.0,0.0,,,,0.5,10,BlowUp,BlowUp"
