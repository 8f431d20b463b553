class TwistFlowError(Exception):
    pass


class DegenerateCurveError(TwistFlowError):
    """Nodes collide (speed below v_floor).

    When raised from within `twistflow.flow.run`, the partial run is
    available as the ``result`` attribute.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class IdentityUnavailableError(TwistFlowError):
    pass


class BlowUpError(TwistFlowError):
    """Reaction ODE trajectory diverged; ``trajectory`` holds the steps taken."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class UndefinedForZeroTauError(TwistFlowError):
    pass


class InsufficientDataError(TwistFlowError):
    pass


class InvalidParamsError(TwistFlowError):
    pass


class ConfigError(TwistFlowError):
    pass


class TwistFlowWarning(Warning):
    pass
