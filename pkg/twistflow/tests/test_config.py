import pytest

from twistflow.config import RunConfig
from twistflow.errors import ConfigError
from twistflow.functionals import IDENTITIES
from twistflow.geometry import DerivativeScheme
from twistflow.helpers import find_configfile


def _write(tmp_path, text):
    path = tmp_path / "config.yaml"
    path.write_text(text)
    return str(path)


def test_packaged_configs():
    config = RunConfig.from_yaml("circle")
    assert config.preset == "circle"
    assert config.t_end == 0.45
    assert config.flow_config().t_end == 0.45

    config = RunConfig.from_yaml("coil_verify.yaml")
    assert config.enabled_identities == list(IDENTITIES)
    assert config.refinements == 2

    config = RunConfig.from_yaml("sweep")
    assert len(config.grid_points()) == 16


def test_defaults():
    config = RunConfig()
    assert config.flow_config().t_end == 1.0
    assert config.sweep_t_end == 10.0
    assert config.flow_config().scheme is DerivativeScheme.SPECTRAL
    assert config.enabled_identities == list(IDENTITIES)


def test_file_values(tmp_path):
    config = RunConfig.from_yaml(_write(tmp_path, """
preset: torus_coil
params: {R: 3.0, r: 1.0, p: 1, q: 3}
n: 64
scheme: fd4
identities: [length, entropy]
"""))
    assert config.params["q"] == 3
    assert config.flow_config().scheme is DerivativeScheme.FD4
    assert config.enabled_identities == ["length", "entropy"]


@pytest.mark.parametrize("text", [
    "n: 64\nn: 128\n",
    "nodes: 64\n",
    "n: sixty-four\n",
    "n: 8\n",
    "n: 17\n",
    "lambda_entropy: 1\n",
    "n: true\n",
    "preset: trefoil\n",
    "preset: torus_coil\nparams: {p: 2, q: 4}\n",
    "identities: [energy]\n",
    "scheme: fd2\n",
    "sigma_cfl: 0.9\n",
    "grid: [[1.0, 1.0], [2.0]]\n",
    "- n\n- 64\n",
    "n: [64\n",
])
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        RunConfig.from_yaml(_write(tmp_path, text))


def test_override():
    config = RunConfig().override(preset="coil_twisted", n=None, t_end=0.1)
    assert config.preset == "coil_twisted"
    assert config.n == 256
    assert config.t_end == 0.1
    with pytest.raises(ConfigError):
        RunConfig().override(n=3)


def test_grid_points():
    config = RunConfig(kappa0=[1, 2], tau0=[0.1, 1.0])
    assert config.grid_points() == [(1.0, 0.1), (1.0, 1.0), (2.0, 0.1), (2.0, 1.0)]
    config = RunConfig(grid=[[3, 0.1], [1, 1]], kappa0=[5], tau0=[5])
    assert config.grid_points() == [(3.0, 0.1), (1.0, 1.0)]
    with pytest.raises(ConfigError):
        RunConfig().grid_points()
    with pytest.raises(ConfigError):
        RunConfig(grid=[]).grid_points()


def test_missing_file():
    with pytest.raises(ConfigError):
        find_configfile("no_such_run.yaml")
