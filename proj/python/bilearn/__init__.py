"""Bilevel learning of TV, TGV2 and ICTV denoising weights."""

from ._bilearn import (
    ConfigError,
    InnerSolveFailure,
    LinearSolveFailure,
    ParseError,
    ShapeMismatch,
    add_gaussian_noise,
    cost_value,
    denoise,
    geometric_image,
    learn,
    paired_t_test,
    piecewise_constant_image,
    psnr,
    read_pgm,
    ssim,
    write_pgm,
)

__all__ = [
    "ConfigError",
    "InnerSolveFailure",
    "LinearSolveFailure",
    "ParseError",
    "ShapeMismatch",
    "add_gaussian_noise",
    "cost_value",
    "denoise",
    "geometric_image",
    "learn",
    "paired_t_test",
    "piecewise_constant_image",
    "psnr",
    "read_pgm",
    "ssim",
    "write_pgm",
]
