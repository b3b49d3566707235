"""Causal-aware SNR regression for CT protocols.

Predicts CT image SNR from a phantom image plus acquisition parameters
(tube voltage, tube current, contrast agent) with a conditional VAE
regressor trained as a seed-varied ensemble, and answers interventional
and counterfactual what-if queries over scan protocols.
"""

__version__ = "0.1.0"

from .model import ModelConfig, SnrVae
from .scm import build_capri_dag
from .training import TrainConfig, train_ensemble, train_model

__all__ = [
    "__version__",
    "ModelConfig",
    "SnrVae",
    "build_capri_dag",
    "TrainConfig",
    "train_ensemble",
    "train_model",
]
