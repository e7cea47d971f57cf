from .checkpoint import load_params, save_params
from .layers import Conv1D, Dense, LeakyReLU, MaxPool1D, Reshape, TransposeConv1D, Upsample1D
from .network import NetParams, Sequential, make_autoencoder, make_encoder
from .optim import NonFiniteError, OptimizerState, frobenius_grad, frobenius_penalty, sgd_step

__all__ = [
    "Conv1D", "Dense", "LeakyReLU", "MaxPool1D", "NetParams", "NonFiniteError", "OptimizerState",
    "Reshape", "Sequential", "TransposeConv1D", "Upsample1D", "frobenius_grad", "frobenius_penalty",
    "load_params", "make_autoencoder", "make_encoder", "save_params", "sgd_step",
]
