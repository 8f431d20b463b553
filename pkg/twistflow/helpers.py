import os
from importlib import resources

from twistflow.errors import ConfigError

__all__ = ["find_configfile"]


def find_configfile(configfile):
    """Determine run configuration path.

    If configfile is not an existing path, try to find one in the
    packs/runs directory that comes with twistflow.  If nothing is
    found, throw an error.

    Parameters
    ----------
    configfile : str
        Name or path of the run configuration.

    Returns
    -------
    configfile_found : str
        Full path of the configuration file.
    """
    if os.path.isfile(configfile):
        return str(configfile)
    for name in (configfile, f"{configfile}.yaml"):
        test_configfile = resources.files("twistflow") / "packs/runs" / name
        if os.path.isfile(test_configfile):
            return str(test_configfile)
    raise ConfigError("Run configuration {} not found".format(configfile))
