# -*- coding: utf-8 -*-


class LsvregError(Exception):

    def __bool__(self):
        return False


class PointNotInSet(LsvregError, ValueError):
    pass


class PatternOverflow(LsvregError):
    pass


class DimensionMismatch(LsvregError, ValueError):
    pass


class InvalidCone(LsvregError, ValueError):
    pass


class NotPolyhedral(LsvregError):
    pass


class BasepointOffGraph(LsvregError, ValueError):
    pass


class NonConvergent(LsvregError):
    pass


class NonconvergentSearch(NonConvergent):
    pass


class ConditionFailed(LsvregError):
    """Refusal of a certifier, `condition` names the hypothesis that failed."""

    def __init__(self, condition, msg='', witness=None):
        super().__init__(f'condition {condition} failed: {msg}'
                         if msg else f'condition {condition} failed')
        self.condition = condition
        self.witness = witness


class EmptyGraphicalDerivative(LsvregError, ValueError):
    pass


class DirectionNotInDomain(LsvregError, ValueError):
    pass


class DirectionNotTangent(LsvregError, ValueError):
    pass


class NormalConeUnavailable(LsvregError):
    pass


class CurveOffGraph(LsvregError, ValueError):
    pass


class DegenerateCurve(CurveOffGraph):
    pass


class NotASolution(LsvregError, ValueError):
    pass


class InvalidProblemError(LsvregError, ValueError):

    def __init__(self, msg, location=None):
        super().__init__(f'{location}: {msg}' if location else msg)
        self.location = location
        self.msg = msg


class InconsistencyError(LsvregError):
    pass
