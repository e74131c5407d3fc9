"""Data models for randcurve."""

from .data_models import (
    BoundaryKind,
    EnergyMode,
    ExperimentName,
    ExperimentRecord,
    NoiseKind,
    OperationResult,
    StencilKind,
    WeakNormResult,
)
from .fields import BoundaryCondition, NoiseField, SpinField
from .geometry_models import LineConfig
from .settings import RandcurveSettings, get_settings

__all__ = [
    "BoundaryCondition",
    "BoundaryKind",
    "EnergyMode",
    "ExperimentName",
    "ExperimentRecord",
    "LineConfig",
    "NoiseField",
    "NoiseKind",
    "OperationResult",
    "RandcurveSettings",
    "SpinField",
    "StencilKind",
    "WeakNormResult",
    "get_settings",
]
