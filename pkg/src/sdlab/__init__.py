"""Simulation and verification toolkit for the singular distorted
Brownian motion on R^3 with drift grad log psi, psi(x) proportional to
exp(-gamma |x|)/|x|.

Modules: model (closed forms), radial (1D diffusion engine), sphere
(S^2 Brownian motion), skewprod (killed 3D process), excursion
(reconstruction of the recurrent process), fukushima (zero-energy-part
diagnostics), approx (truncated models), stats/experiments/cli
(harness).
"""

from .model import ModelParams

__all__ = ["ModelParams"]
__version__ = "0.1.0"
