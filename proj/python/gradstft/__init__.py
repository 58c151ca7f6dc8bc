# Copyright 2026 The gradstft Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
"""Differentiable STFT window optimisation."""

from gradstft._core import (
    AdaptiveConfig,
    alternating_sines,
    chirp_sine,
    concentration,
    effective_length,
    encode_wav,
    exp_chirp,
    kendall_tau,
    load_wav,
    optimize_sigma,
    sparsity_loss,
    stft,
    train_adaptive,
    train_joint,
    trapezoid_window,
)

__all__ = [
    "AdaptiveConfig",
    "alternating_sines",
    "chirp_sine",
    "concentration",
    "effective_length",
    "encode_wav",
    "exp_chirp",
    "kendall_tau",
    "load_wav",
    "optimize_sigma",
    "sparsity_loss",
    "stft",
    "train_adaptive",
    "train_joint",
    "trapezoid_window",
]
