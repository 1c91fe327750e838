"""Hamiltonian geodesic flows on sub-Riemannian and Riemannian manifolds in charts."""

from .config import DEFAULT_TOLERANCES, FlowConfig, Tolerances
from .models import list_models, load_model

__version__ = "0.1.0"

__all__ = ["DEFAULT_TOLERANCES", "FlowConfig", "Tolerances", "__version__", "list_models", "load_model"]
