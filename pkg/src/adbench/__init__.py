"""Anomaly detection toolkit and benchmark harness for 1-D range profiles."""

from .data import Dataset, DatasetSplit, RangeProfile, RngStream, SampleRole, load_dataset, make_split, save_dataset
from .deep import ConvAutoencoder, DeepSAD, DeepSVDD
from .metrics import aggregate, roc_auc
from .preprocess import Preprocessor, fit_minmax, fit_pca, preselect_energy
from .shallow import IsolationForest, LocalOutlierFactor, OneClassSVM, RandomProjectionDepth
from .synth import generate_benchmark

__version__ = "0.1.0"

__all__ = [
    "ConvAutoencoder", "Dataset", "DatasetSplit", "DeepSAD", "DeepSVDD", "IsolationForest",
    "LocalOutlierFactor", "OneClassSVM", "Preprocessor", "RandomProjectionDepth", "RangeProfile",
    "RngStream", "SampleRole", "aggregate", "fit_minmax", "fit_pca", "generate_benchmark",
    "load_dataset", "make_split", "preselect_energy", "roc_auc", "save_dataset",
]
