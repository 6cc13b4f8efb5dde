"""Python bindings for the sanet segmentation engine."""

from sanet._core import (
    FormatError,
    Model,
    ShapeError,
    adaptive_avg_pool2d,
    argmax,
    avg_pool2d,
    bilinear_resize,
    conv2d,
    cross_entropy,
    export_random,
    impulse_support_span,
    miou,
    poly_lr,
    receptive_field,
    selftest,
    set_threads,
    softmax,
    thread_count,
)

__all__ = [
    "FormatError",
    "Model",
    "ShapeError",
    "adaptive_avg_pool2d",
    "argmax",
    "avg_pool2d",
    "bilinear_resize",
    "conv2d",
    "cross_entropy",
    "export_random",
    "impulse_support_span",
    "miou",
    "poly_lr",
    "receptive_field",
    "selftest",
    "set_threads",
    "softmax",
    "thread_count",
]
