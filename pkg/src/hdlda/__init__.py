"""Finite-sample and high-dimensional theory of Fisher's linear discriminant."""

__version__ = "0.1.0"

from .estimator import FisherDiscriminant  # noqa: E402
from .model import PopulationModel, ProblemDims  # noqa: E402
from .rng import RngStream  # noqa: E402

__all__ = ["FisherDiscriminant", "PopulationModel", "ProblemDims", "RngStream", "__version__"]
