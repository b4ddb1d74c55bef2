"""
Stratalign B-spline Package

Free-form deformation fields, the NCC + diffusion objective and its optimizer.
"""

from .field import BSplineField, axis_basis, basis_cubic, clamp_coefficients, grid_size, transform_point
from .io import field_from_record, field_record, load_field, load_trace, save_field, save_trace
from .loss import (
    LossBreakdown,
    OptimizerConfig,
    RegistrationObjective,
    evaluate_loss,
    loss_and_gradient,
    ncc_loss,
    reg_loss
)
from .optimizer import TraceEntry, optimize

__all__ = [
    # Fields
    "BSplineField",
    "axis_basis",
    "basis_cubic",
    "clamp_coefficients",
    "grid_size",
    "transform_point",

    # Objective
    "LossBreakdown",
    "OptimizerConfig",
    "RegistrationObjective",
    "evaluate_loss",
    "loss_and_gradient",
    "ncc_loss",
    "reg_loss",

    # Optimizer
    "TraceEntry",
    "optimize",

    # Files
    "field_from_record",
    "field_record",
    "load_field",
    "load_trace",
    "save_field",
    "save_trace"
]
