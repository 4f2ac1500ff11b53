"""PINN correctors for singularly perturbed convection-diffusion problems.

Pure-numpy MLPs with forward jets and reverse sweeps, central FDM baselines,
affine input transforms, Adam/L-BFGS training and tangent-kernel diagnostics.
"""

from .errors import CdPinnError, ConfigError, DomainError, NumericError, SamplingError, ShapeError
from .net import MLPParams, forward, forward_jet, init_xavier, param_gradient
from .problems import Problem1D, Problem2D
from .transform import AffineTransform

__version__ = "0.1.0"

__all__ = [
    "AffineTransform",
    "CdPinnError",
    "ConfigError",
    "DomainError",
    "MLPParams",
    "NumericError",
    "Problem1D",
    "Problem2D",
    "SamplingError",
    "ShapeError",
    "forward",
    "forward_jet",
    "init_xavier",
    "param_gradient",
]
