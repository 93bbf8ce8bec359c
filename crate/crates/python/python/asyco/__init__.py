"""Partial-label learning with an asymmetric auxiliary task."""

from ._asyco import (
    MODES,
    cc_loss,
    gamma,
    generate_uniform,
    mu,
    rc_loss,
    train,
)

__all__ = ["MODES", "cc_loss", "gamma", "generate_uniform", "mu", "rc_loss", "train"]
