import numpy as np
import pytest

from twistflow import geometry
from twistflow.errors import DegenerateCurveError, InvalidParamsError
from twistflow.geometry import (DerivativeScheme, DiscreteCurve, frenet, handedness,
                                integrate_scalar, oriented_tau, periodic_derivative,
                                resample_uniform_arclength)
from twistflow.scenarios import make, preset


def _rotation(axis, angle):
    axis = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * k @ k


def test_circle_frenet():
    fr = frenet(make("circle", {"R": 2.0}, n=64))
    np.testing.assert_allclose(fr.kappa, 0.5, rtol=1e-12)
    np.testing.assert_allclose(fr.tau, 0.0, atol=1e-12)
    np.testing.assert_allclose(fr.length, 4 * np.pi, rtol=1e-12)
    assert np.all(fr.tau_valid)


@pytest.mark.parametrize("id", ["circle", "ellipse_2to1", "helix_unit", "coil_twisted",
                                "coil_thin", "coil_slow"])
def test_frenet_matches_closed_forms(id):
    p = preset(id)
    n = 256
    fr = frenet(p.sample(n))
    kappa, tau = p.expected(np.arange(n) * 2 * np.pi / n)
    np.testing.assert_allclose(fr.kappa, kappa, atol=1e-8)
    np.testing.assert_allclose(fr.tau, tau, atol=1e-8)


def test_helix_lift():
    curve = make("helix", {"a": 1.0, "b": 1.0}, n=32)
    assert not curve.closed
    fr = frenet(curve)
    np.testing.assert_allclose(fr.kappa, 0.5, rtol=1e-12)
    np.testing.assert_allclose(fr.tau, 0.5, rtol=1e-12)
    np.testing.assert_allclose(fr.length, 2 * np.pi * np.sqrt(2), rtol=1e-12)


def test_spectral_error_decays_faster_than_algebraic():
    reference = frenet(make("sphere_wave", n=512)).kappa
    errors = []
    for n in (64, 128):
        kappa = frenet(make("sphere_wave", n=n)).kappa
        errors.append(np.max(np.abs(kappa - reference[::512 // n])))
    # fourth order would give a ratio of 16
    assert errors[0] > 0
    assert errors[0] / max(errors[1], 1e-300) > 100


def test_fd4_is_fourth_order():
    p = preset("coil_slow")
    errors = []
    for n in (128, 256):
        fr = frenet(p.sample(n), DerivativeScheme.FD4)
        kappa, tau = p.expected(np.arange(n) * 2 * np.pi / n)
        errors.append(np.max(np.abs(fr.kappa - kappa)))
    assert 10 < errors[0] / errors[1] < 22


def test_periodic_derivative_schemes():
    u = np.arange(64) * 2 * np.pi / 64
    f = np.sin(3 * u)
    np.testing.assert_allclose(periodic_derivative(f, 1), 3 * np.cos(3 * u), atol=1e-12)
    np.testing.assert_allclose(periodic_derivative(f, 2), -9 * f, atol=1e-11)
    np.testing.assert_allclose(periodic_derivative(f, 3, DerivativeScheme.FD4),
                               -27 * np.cos(3 * u), rtol=0, atol=0.1)


def test_rigid_motion_and_scaling():
    curve = make("coil_twisted", n=128)
    fr = frenet(curve)
    rot = _rotation([1.0, 2.0, -0.5], 0.7)
    moved = frenet(curve.transformed(rotation=rot, translation=[3.0, -1.0, 2.0], scale=2.5))
    np.testing.assert_allclose(moved.kappa, fr.kappa / 2.5, rtol=1e-10)
    np.testing.assert_allclose(moved.tau, fr.tau / 2.5, rtol=1e-9)
    np.testing.assert_allclose(moved.length, 2.5 * fr.length, rtol=1e-12)


def test_handedness_and_mirror():
    curve = make("coil_twisted", n=128)
    fr = frenet(curve)
    assert handedness(fr) == -1
    assert np.all(oriented_tau(fr) > 0)

    mirrored = frenet(curve.transformed(rotation=np.diag([1.0, 1.0, -1.0])))
    assert handedness(mirrored) == 1
    np.testing.assert_allclose(mirrored.tau, -fr.tau, rtol=1e-10)
    np.testing.assert_allclose(oriented_tau(mirrored), oriented_tau(fr), rtol=1e-10)

    # planar curves count as right-handed
    assert handedness(frenet(make("circle", n=32))) == 1


def test_resample_uniform_arclength():
    a, b = 2.0, 1.0
    curve = make("ellipse", {"a": a, "b": b}, n=128)
    resampled = resample_uniform_arclength(curve)
    fr = frenet(resampled)
    np.testing.assert_allclose(fr.v / np.mean(fr.v), 1.0, atol=1e-10)
    x, y = resampled.points[:, 0], resampled.points[:, 1]
    np.testing.assert_allclose(x ** 2 / a ** 2 + y ** 2 / b ** 2, 1.0, atol=1e-12)
    np.testing.assert_allclose(fr.length, frenet(curve).length, rtol=1e-12)


def test_resample_keeps_helix_shift():
    curve = make("helix", {"a": 1.0, "b": 0.5}, n=32)
    resampled = resample_uniform_arclength(curve)
    np.testing.assert_allclose(resampled.shift, curve.shift)
    np.testing.assert_allclose(frenet(resampled).kappa, frenet(curve).kappa, rtol=1e-12)


def test_integrate_scalar():
    fr = frenet(make("circle", n=32))
    np.testing.assert_allclose(integrate_scalar(np.ones(32), fr), 2 * np.pi, rtol=1e-12)
    mask = np.zeros(32, dtype=bool)
    mask[:16] = True
    np.testing.assert_allclose(integrate_scalar(np.ones(32), fr, mask=mask), np.pi,
                               rtol=1e-12)
    with pytest.raises(ValueError):
        integrate_scalar(np.ones(31), fr)


def test_invalid_curves():
    u = np.arange(33) * 2 * np.pi / 33
    with pytest.raises(InvalidParamsError):
        DiscreteCurve(np.column_stack([np.cos(u), np.sin(u), 0 * u]))
    with pytest.raises(InvalidParamsError):
        make("circle", n=8)
    points = make("circle", n=32).points.copy()
    points[5] = points[4]
    with pytest.raises(DegenerateCurveError):
        DiscreteCurve(points)
    points[5] = np.nan
    with pytest.raises(DegenerateCurveError):
        DiscreteCurve(points)


def test_resample_reports_failed_inversion(monkeypatch):
    def stalled(func, x0, **kwargs):
        x0 = np.asarray(x0)
        return x0, np.zeros(x0.shape, dtype=bool), np.zeros(x0.shape, dtype=bool)

    monkeypatch.setattr(geometry.optimize, "newton", stalled)
    with pytest.raises(DegenerateCurveError):
        resample_uniform_arclength(make("ellipse_2to1", n=32))
