"""Error hierarchy shared by the services, the CLI and the HTTP surface.

``exit_code`` is the CLI process status; the API maps the two families to
422 (validation) and 409 (numerical).
"""


class SimulationError(Exception):
    exit_code = 2


class ValidationFailure(SimulationError):
    exit_code = 1


class NumericalFailure(SimulationError):
    exit_code = 2


class ReproductionMismatch(SimulationError):
    exit_code = 3


# ssh_model
class ExceptionalPoint(NumericalFailure):
    pass


class PhaseBoundary(NumericalFailure):
    pass


class ZeroNorm(NumericalFailure):
    pass


# dynamics
class DegenerateDecay(NumericalFailure):
    pass


class NoOverlap(NumericalFailure):
    pass


# dilation
class PositivityLoss(NumericalFailure):
    pass


class NotPositive(NumericalFailure):
    pass


class NotHermitian(NumericalFailure):
    pass


class PostselectionVanished(NumericalFailure):
    pass


# pulse_compiler
class StepTooCoarse(NumericalFailure):
    pass


# readout_model
class UnknownFlip(ValidationFailure):
    pass


class SingularRates(NumericalFailure):
    pass


class SubspaceEmpty(NumericalFailure):
    pass


# topology
class OverlapVanished(NumericalFailure):
    pass


class OpenLoop(ValidationFailure):
    pass


class OutsideBloch(NumericalFailure):
    pass


class Ambiguous(NumericalFailure):
    pass


class NotHalfWinding(NumericalFailure):
    pass


class GridTooCoarse(UserWarning):
    """Adjacent samples too far apart for the principal log branch."""
