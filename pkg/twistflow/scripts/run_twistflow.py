#!/usr/bin/env python

import argparse
import concurrent.futures
import math
import sys
from pathlib import Path
from warnings import warn

import numpy as np
from astropy import log

from twistflow.config import RunConfig
from twistflow.errors import (BlowUpError, ConfigError, DegenerateCurveError,
                              IdentityUnavailableError, InsufficientDataError,
                              TwistFlowWarning, UndefinedForZeroTauError)
from twistflow.flow import run
from twistflow.functionals import FunctionalTracker, check_identity, track_monotonicity
from twistflow.outputs import (EventDetector, write_events, write_identities, write_phase,
                               write_series, write_snapshot, write_table, write_verdict)
from twistflow.reaction_ode import ReactionState, conserved, integrate
from twistflow.scenarios import preset as resolve_preset
from twistflow.singularity import (ProfileModel, classify, collect, estimate_omega,
                                   max_point_bound, rescaled_profile_distance)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def initialize_parser():
    """
    Command line parser for twistflow

    Returns
    -------
    parser : argparse object
    """
    parser = argparse.ArgumentParser(
        description="Curve shortening flow of twisted space curves")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (or packaged name)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--t-end", dest="t_end", type=float, help="final time")
    common.add_argument("--workers", type=int, help="parallel workers")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    curve = argparse.ArgumentParser(add_help=False)
    curve.add_argument("--preset", help="scenario kind or named parameter set")
    curve.add_argument("--n", type=int, help="number of nodes")
    curve.add_argument("--seed", type=int, help="seed for perturbed presets")
    curve.add_argument("--lambda-entropy", dest="lambda_entropy", action="store_true",
                       default=None, help="track the Gaussian entropy (slow)")
    curve.add_argument("--identities",
                       help="comma separated evolution laws to check (default: all)")

    sub.add_parser("run", parents=[common, curve], help="evolve a preset curve")
    sub.add_parser("verify", parents=[common, curve],
                   help="check the evolution laws with a refinement study")
    sweep = sub.add_parser("sweep", parents=[common],
                           help="reaction ODE over a grid of initial (kappa, tau)")
    sweep.add_argument("--grid", help="initial conditions as kappa0:tau0,kappa0:tau0,...")
    sweep.add_argument("--trajectories", action="store_true", default=None,
                       help="also write every trajectory")
    return parser


def _parse_grid(text):
    try:
        return [[float(x) for x in pair.split(":")] for pair in text.split(",")]
    except ValueError:
        raise ConfigError(f"Cannot parse grid {text!r}; expected kappa0:tau0,...")


def load_config(args):
    """RunConfig from --config, with the command line flags applied."""
    config = RunConfig.from_yaml(args.config) if args.config else RunConfig()
    overrides = {name: getattr(args, name, None)
                 for name in ("preset", "n", "seed", "t_end", "out", "workers",
                              "lambda_entropy", "trajectories")}
    identities = getattr(args, "identities", None)
    if identities:
        overrides["identities"] = [i.strip() for i in identities.split(",") if i.strip()]
    grid = getattr(args, "grid", None)
    if grid:
        overrides["grid"] = _parse_grid(grid)
    return config.override(**overrides)


def _output_dir(config, *subdirs):
    out = Path(config.out)
    for d in (out,) + tuple(out / s for s in subdirs):
        d.mkdir(parents=True, exist_ok=True)
    return out


def _verdict(result, config, samples):
    series = collect(result.snapshots, rho=config.rho)
    verdict = {"classification": "Inconclusive", "heuristic": True}
    try:
        est = estimate_omega(series)
        if est.inconclusive:
            warn("1/M_t is not monotone over the fitted window", TwistFlowWarning)
        if est.omega_hat > series.t[-1]:
            v = classify(series, est.omega_hat, omega_uncertainty=est.uncertainty)
            verdict = v.to_dict()
            verdict["profile_distance"] = {
                m.value: rescaled_profile_distance(v.rescaled_profile, m) for m in ProfileModel}
        else:
            verdict.update(omega_hat=est.omega_hat,
                           reason="estimated singular time precedes the last snapshot")
        verdict["omega_fit_inconclusive"] = est.inconclusive
    except InsufficientDataError as err:
        verdict["reason"] = str(err)

    checks = max_point_bound(series)
    verdict.update(
        stop_reason=result.stop_reason.value,
        t_final=float(result.final.t),
        rho=config.rho,
        essential=series.essential.tolist(),
        max_point_bound={"checked": len(checks),
                         "violations": [c.t for c in checks if not c.satisfied]},
    )
    lam = [s for s in samples if s.gaussian_entropy is not None]
    if lam:
        verdict["gaussian_entropy"] = lam[-1].gaussian_entropy
        verdict["round_point_certificate"] = lam[-1].round_point_certificate
    return verdict


def cmd_run(config):
    """Evolve the configured preset and write its outputs."""
    out = _output_dir(config, "snapshots")
    p = resolve_preset(config.preset, config.params, config.seed)
    tracker = FunctionalTracker(config.lambda_entropy, config.lambda_every)
    events = EventDetector(p.sphere, config.sphere_tol)
    status = EXIT_OK
    try:
        result = run(p.sample(config.n), config.flow_config(), [tracker, events])
    except DegenerateCurveError as err:
        log.error(f"Run aborted: {err}")
        result, status = err.result, EXIT_FAILED

    write_series(out / "series.csv", tracker.samples)
    write_events(out / "events.jsonl", events.events)
    for i, state in enumerate(result.snapshots):
        write_snapshot(out / "snapshots", i, state)
    log.info(f"Wrote {len(result.snapshots)} snapshots to {out / 'snapshots'}")

    verdict = _verdict(result, config, tracker.samples)
    report = track_monotonicity(tracker.samples)
    verdict["monotonicity"] = {"ok": report.ok,
                               "total_curvature_nonincreasing":
                                   report.total_curvature_nonincreasing,
                               "twisted_intervals": len(report.twisted_intervals),
                               "violations": len(report.violations)}
    if not report.ok:
        warn(f"{len(report.violations)} monotonicity violations", TwistFlowWarning)
    write_verdict(out / "verdict.json", verdict)
    return status


def _equally_spaced_triples(snapshots):
    for i in range(1, len(snapshots) - 1):
        d0 = snapshots[i].t - snapshots[i - 1].t
        d1 = snapshots[i + 1].t - snapshots[i].t
        if abs(d0 - d1) <= 1e-9 * (d0 + d1):
            yield snapshots[i - 1:i + 2]


def _rms(values):
    return math.sqrt(sum(v * v for v in values) / len(values)) if values else math.nan


def cmd_verify(config):
    """Check every enabled evolution law, with a refinement study.

    Level k runs with 2^k n nodes and snapshot spacing halved k times
    (the parabolic step limit shrinks dt accordingly).  A coarse row
    passes if residual/scale < max_relative_residual or residual <
    residual_floor.  The measured order between levels is log2 of the
    ratio of RMS residuals over the coarse t_mid set.
    """
    out = _output_dir(config)
    p = resolve_preset(config.preset, config.params, config.seed)
    ids = config.enabled_identities
    rows, failures = [], []
    residuals = {}  # (identity, level) -> {t_mid: residual}

    for level in range(config.refinements + 1):
        n = config.n * 2 ** level
        flow_config = config.flow_config(snapshot_every=config.snapshot_every / 2 ** level)
        log.info(f"Refinement level {level}: n={n}, snapshot spacing "
                 f"{flow_config.snapshot_every:g}")
        try:
            result = run(p.sample(n), flow_config)
        except DegenerateCurveError as err:
            log.error(f"Verification run failed at level {level}: {err}")
            return EXIT_FAILED
        for triple in _equally_spaced_triples(result.snapshots):
            for identity in ids:
                try:
                    rep = check_identity(triple, identity)
                except IdentityUnavailableError as err:
                    log.error(f"Identity unavailable: {err}")
                    return EXIT_FAILED
                residuals.setdefault((identity, level), {})[rep.t_mid] = rep.residual
                row = dict(identity_id=identity, resolution=n, t_mid=rep.t_mid, lhs=rep.lhs,
                           rhs=rep.rhs, residual=rep.residual, scale=rep.scale,
                           measured_order=None)
                rows.append(row)
                if level == 0 and not (rep.relative < config.max_relative_residual
                                       or rep.residual < config.residual_floor):
                    failures.append(row)

    min_order = config.min_order - config.order_tolerance
    for identity in ids:
        coarse = sorted(residuals.get((identity, 0), {}))
        for level in range(1, config.refinements + 1):
            prev = residuals.get((identity, level - 1), {})
            cur = residuals.get((identity, level), {})
            prev_rms = _rms([prev[t] for t in _match(coarse, prev)])
            cur_rms = _rms([cur[t] for t in _match(coarse, cur)])
            if not prev_rms >= config.residual_floor:
                continue
            order = math.log2(prev_rms / max(cur_rms, 1e-300))
            log.info(f"{identity}: measured order {order:.3f} at level {level}")
            n = config.n * 2 ** level
            for row in rows:
                if row["identity_id"] == identity and row["resolution"] == n:
                    row["measured_order"] = order
            if math.isnan(order) or order < min_order:
                failures.append(dict(identity_id=identity, resolution=n, measured_order=order))

    write_identities(out / "identities.csv", rows)
    if failures:
        log.error(f"Verification failed: {failures[0]}")
        return EXIT_FAILED
    log.info(f"All {len(ids)} identities verified")
    return EXIT_OK


def _match(times, table):
    """Keys of `table` matching `times` to 1e-9."""
    keys = np.array(sorted(table))
    out = []
    for t in times:
        if keys.size:
            j = int(np.argmin(np.abs(keys - t)))
            if abs(keys[j] - t) <= 1e-9 * max(1.0, abs(t)):
                out.append(float(keys[j]))
    return out


def sweep_point(kappa0, tau0, t_end, dt, stiffness):
    """Integrate the reaction ODE from one grid point.

    Returns the phase.csv row and the trajectory (None after a blow-up
    without any steps).
    """
    initial = ReactionState(kappa0, tau0)
    row = dict(kappa0=kappa0, tau0=tau0, C=None, tau_limit=None, C_drift_max=None,
               t_stop=None, steps=None, stop_reason=None, error=None)
    try:
        row["C"] = conserved(initial)
    except UndefinedForZeroTauError:
        pass
    try:
        traj = integrate(initial, t_end=t_end, dt=dt, stiffness=stiffness)
    except BlowUpError as err:
        traj = err.trajectory
        row.update(error="BlowUp", stop_reason="BlowUp")
    else:
        row.update(tau_limit=traj.tau_limit, stop_reason=traj.stop_reason)
        if row["C"] is not None:
            row["C_drift_max"] = traj.conserved_drift()
    if traj is not None:
        row.update(t_stop=float(traj.t[-1]), steps=int(traj.t.size - 1))
    return row, traj


def cmd_sweep(config):
    """Reaction ODE over the configured grid; phase.csv rows in grid order."""
    points = config.grid_points()
    out = _output_dir(config, "trajectories") if config.trajectories else _output_dir(config)
    args = [(k, t, config.sweep_t_end, config.dt, config.stiffness) for k, t in points]
    log.info(f"Sweeping {len(points)} initial conditions with {config.workers} worker(s)")
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as executor:
            results = list(executor.map(sweep_point, *zip(*args)))
    else:
        results = [sweep_point(*a) for a in args]

    write_phase(out / "phase.csv", [row for row, _ in results])
    if config.trajectories:
        for i, (_, traj) in enumerate(results):
            if traj is None:
                continue
            rows = [dict(t=t, kappa=k, tau=s) for t, k, s in zip(traj.t, traj.kappa, traj.tau)]
            write_table(out / "trajectories" / f"traj_{i:04d}.csv", rows, ("t", "kappa", "tau"))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None):

    # setup and parse the command line
    parser = initialize_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        log.setLevel("DEBUG")

    try:
        config = load_config(args)
        return COMMANDS[args.command](config)
    except ConfigError as err:
        log.error(f"Configuration error: {err}")
        return EXIT_CONFIG
    except OSError as err:
        log.error(f"Cannot write outputs: {err}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
