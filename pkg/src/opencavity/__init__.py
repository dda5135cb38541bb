"""Steady-state spectra, parameter extraction, and mirror-stack optics for
tunable microcavity QED devices.

Subpackages by concern:

* :mod:`opencavity.hilbert`  -- truncated operators on the joint mode/dot space
* :mod:`opencavity.lindblad` -- master-equation generator and steady states
* :mod:`opencavity.spectrum` -- transmission scans and derived scalar metrics
* :mod:`opencavity.tmm`      -- transfer-matrix multilayer optics
* :mod:`opencavity.fit`      -- Levenberg-Marquardt engine and fit protocols
* :mod:`opencavity.cli`      -- YAML-driven batch front end
"""

__version__ = "0.1.0"

from .hilbert import SpaceSpec, make_space
from .lindblad import SystemParams
from .spectrum import ScalingParams, Spectrum

__all__ = [
    "__version__",
    "SpaceSpec",
    "make_space",
    "SystemParams",
    "ScalingParams",
    "Spectrum",
]
