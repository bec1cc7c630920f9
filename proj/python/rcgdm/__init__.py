# Copyright 2026 The rcgdm Authors
# SPDX-License-Identifier: Apache-2.0
"""Reward-conditioned diffusion on linear-subspace data."""

from ._core import (
    ConfigError,
    Error,
    GaussianOracle,
    RidgeEstimate,
    World,
    __version__,
    config_ini,
    default_nu,
    fit_ridge,
    generate_datasets,
    latent_coefficients,
    load_matrix,
    make_world,
    off_support_deviation,
    run_pipeline,
    sample_oracle,
    spearman,
    subspace_angle,
    validate,
)

__all__ = [
    "ConfigError",
    "Error",
    "GaussianOracle",
    "RidgeEstimate",
    "World",
    "__version__",
    "config_ini",
    "default_nu",
    "fit_ridge",
    "generate_datasets",
    "latent_coefficients",
    "load_matrix",
    "make_world",
    "off_support_deviation",
    "run_pipeline",
    "sample_oracle",
    "spearman",
    "subspace_angle",
    "validate",
]
