"""Entropy-based variable feature weighted fuzzy k-means with baselines and validity metrics."""

from .baselines import BaselineOptions, fcm_fit, kmeans_fit
from .core import ControlParams, objective
from .dataset import Dataset, MixtureSpec, load_csv, standardize, synth_mixture
from .evfwfkm import ClusterModel, FitOptions, fit, harden

__all__ = [
    "BaselineOptions",
    "ClusterModel",
    "ControlParams",
    "Dataset",
    "FitOptions",
    "MixtureSpec",
    "fcm_fit",
    "fit",
    "harden",
    "kmeans_fit",
    "load_csv",
    "objective",
    "standardize",
    "synth_mixture",
]

__version__ = "0.1.0"
