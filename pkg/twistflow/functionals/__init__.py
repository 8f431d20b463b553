from .functionals import (FunctionalSample, FunctionalTracker, gaussian_entropy, sample,
                          SERIES_COLUMNS)
from .identities import IDENTITIES, Identity, IdentityReport, check_identity
from .monotonicity import MonotonicityReport, TwistedInterval, track_monotonicity

__all__ = ['FunctionalSample', 'FunctionalTracker', 'gaussian_entropy', 'sample',
           'SERIES_COLUMNS', 'IDENTITIES', 'Identity', 'IdentityReport', 'check_identity',
           'MonotonicityReport', 'TwistedInterval', 'track_monotonicity']
