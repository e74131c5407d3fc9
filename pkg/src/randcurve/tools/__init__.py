"""Computational tools for randcurve."""

from . import geometry, groundstate, mincut, noise, oracle, stats, weaknorm

__all__ = ["geometry", "groundstate", "mincut", "noise", "oracle", "stats", "weaknorm"]
