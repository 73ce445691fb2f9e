"""Noisy Grover search: gate-level simulation under memory and gate errors."""
from .circuit import build_grover_gate, build_grover_network, noiseless_success
from .mc import estimate_success_curve
from .noise import NoiseParams, RandomStream

__version__ = "0.1.0"

__all__ = [
    "NoiseParams",
    "RandomStream",
    "build_grover_gate",
    "build_grover_network",
    "estimate_success_curve",
    "noiseless_success",
    "__version__",
]
