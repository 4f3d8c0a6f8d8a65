"""Truncated matrix model of the Moyal plane: heat semigroup, L^p analysis and Fujita experiments."""

__version__ = "0.1.0"

from .algebra import ModelConfig, model_config
from .errors import NcHeatError

__all__ = ["ModelConfig", "NcHeatError", "__version__", "model_config"]
