import importlib.metadata

__version__ = importlib.metadata.version("monodromy-speed")

from .integrations import presets
from .runner import SpeedRunner, Truncations
from .solvers.monodromy import closed_form_estimate, effective_tensor, principal_speed

__all__ = ["SpeedRunner", "Truncations", "closed_form_estimate", "effective_tensor", "presets", "principal_speed"]
