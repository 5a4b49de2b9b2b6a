"""Spectral-Galerkin simulation lab for the stochastic Burgers-Huxley equation.

The model is du = [nu u_xx - alpha u u_x + beta u(1-u)(u-gamma)] dt
+ sigma(u) dW on (0,1) with Dirichlet boundary conditions and trace-class
Q-Wiener noise, projected on the Dirichlet-Laplacian sine basis.
"""

__version__ = "0.1.0"

from .noise import AdditiveNoise, CovarianceSpec, MultiplicativeNoise
from .params import ModelParams
from .solver import BlowupError, SolverConfig, Trajectory, integrate, run_ensemble
from .spectral import PhysicalField, SpectralField

__all__ = [
    "AdditiveNoise",
    "BlowupError",
    "CovarianceSpec",
    "ModelParams",
    "MultiplicativeNoise",
    "PhysicalField",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "integrate",
    "run_ensemble",
    "__version__",
]