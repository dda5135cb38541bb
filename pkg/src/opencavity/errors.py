"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A computation failed for numerical (not input-validation) reasons."""


class DegenerateSteadyStateError(NumericalError):
    """The Lindblad generator has an ambiguous null space; no unique steady state."""


class IntegrationStepError(NumericalError):
    """Time step rejected: stability bound violated or trace drift detected."""


class StopbandNotFoundError(NumericalError):
    """No contiguous sub-threshold region found in a transmission spectrum."""


class SpectrumFormatError(ValueError):
    """Malformed spectrum data file."""
