"""Aerial tree-species CNN toolkit: layer primitives, initializers, optimizers,
the parameterized model family and dataset utilities, backed by the C++ core."""

from ._core import (
    ModelSpec,
    Optimizer,
    __version__,
    augment,
    build_model,
    compute_class_weights,
    conv2d,
    dense,
    fan_of,
    ground_resolution,
    initialize,
    maxpool2d,
    model_forward,
    oversample_plan,
    relu,
    softmax_cross_entropy,
    stratified_kfold,
    stratified_split,
)

__all__ = [
    "ModelSpec",
    "Optimizer",
    "__version__",
    "augment",
    "build_model",
    "compute_class_weights",
    "conv2d",
    "dense",
    "fan_of",
    "ground_resolution",
    "initialize",
    "maxpool2d",
    "model_forward",
    "oversample_plan",
    "relu",
    "softmax_cross_entropy",
    "stratified_kfold",
    "stratified_split",
]
