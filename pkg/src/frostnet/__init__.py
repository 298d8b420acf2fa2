"""Cost-sensitive 1D-CNN for imbalanced binary classification of spectra."""

from .data import Dataset, SynthSpec, load_csv, save_csv, stratified_split, synth_generate
from .harness import HarnessConfig, LossMode, default_config, desk_preset, run_train
from .loss import CostMatrix, CostWeights, cost_sensitive_loss, cross_entropy
from .metrics import ConfusionMatrix, accuracy, confusion, precision_recall_f1
from .model import ArchitectureConfig, ModelParams, build_model, forward

__all__ = [
    "ArchitectureConfig",
    "ConfusionMatrix",
    "CostMatrix",
    "CostWeights",
    "Dataset",
    "HarnessConfig",
    "LossMode",
    "ModelParams",
    "SynthSpec",
    "accuracy",
    "build_model",
    "confusion",
    "cost_sensitive_loss",
    "cross_entropy",
    "default_config",
    "desk_preset",
    "forward",
    "load_csv",
    "precision_recall_f1",
    "run_train",
    "save_csv",
    "stratified_split",
    "synth_generate",
]

__version__ = "0.1.0"
