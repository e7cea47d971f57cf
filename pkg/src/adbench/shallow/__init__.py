from .iforest import IsolationForest, IsolationTree, anomaly_score, average_path_length, build_tree
from .lof import LocalOutlierFactor
from .ocsvm import ConvergenceError, OneClassSVM, smo_solve
from .rpd import RandomProjectionDepth, random_directions

__all__ = [
    "ConvergenceError", "IsolationForest", "IsolationTree", "LocalOutlierFactor", "OneClassSVM",
    "RandomProjectionDepth", "anomaly_score", "average_path_length", "build_tree",
    "random_directions", "smo_solve",
]
