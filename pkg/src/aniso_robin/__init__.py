"""First Robin eigenpair of the anisotropic p-Laplacian and checks of the Faber-Krahn inequality."""

from .errors import DomainError, InputError, NumericError, UnsupportedError
from .norms import Custom, Euclidean, Quadratic, SmoothedPNorm

__version__ = "0.1.0"
