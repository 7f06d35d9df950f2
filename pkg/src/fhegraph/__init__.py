"""Neural networks as computational graphs over a simulated CKKS scheme."""
from .autofhe import CkksParams, ParamGroups, apply_params, auto_he, auto_he_discover, parameterise
from .builders import BUILDERS, build_constellation, build_sphira
from .ckks import KeyPair, VirtualCiphertext, decrypt, encrypt, keygen
from .data import Dataset, load_csv, make_blobs, make_series
from .firing import Broadcast, Generated, fire
from .graph import ComputationNode, ComputationalGraph, export_dot, load, save
from .training import TrainConfig, compare, evaluate, parameterise_graph, predict, train

__version__ = "0.1.0"

__all__ = [
    "CkksParams", "ParamGroups", "apply_params", "auto_he", "auto_he_discover", "parameterise",
    "BUILDERS", "build_constellation", "build_sphira",
    "KeyPair", "VirtualCiphertext", "decrypt", "encrypt", "keygen",
    "Dataset", "load_csv", "make_blobs", "make_series",
    "Broadcast", "Generated", "fire",
    "ComputationNode", "ComputationalGraph", "export_dot", "load", "save",
    "TrainConfig", "compare", "evaluate", "parameterise_graph", "predict", "train",
]
