"""Numerical laboratory for damped wave operators.

Modules: :mod:`discretize` (grids, operators, norms), :mod:`spectral`
(eigenvalues, resolvent norms, coercivity), :mod:`fourier` (exact
constant-damping modes), :mod:`waveguide` (strip with polynomial damping),
:mod:`evolve` (time stepping, contour integration, decay fits) and
:mod:`cli`.
"""

from . import discretize, evolve, fourier, spectral, waveguide
from .errors import DampwaveError, NumericalError, ValidationError

__version__ = "0.1.0"

__all__ = ["discretize", "spectral", "fourier", "waveguide", "evolve",
           "DampwaveError", "NumericalError", "ValidationError", "__version__"]
