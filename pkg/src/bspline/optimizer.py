"""
Gradient descent over control-point displacements
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..core.errors import OptimizationError
from ..imaging import ScalarImage
from .field import BSplineField, clamp_coefficients
from .loss import LossBreakdown, OptimizerConfig, RegistrationObjective

logger = logging.getLogger(__name__)

GRADIENT_FLOOR = 1e-12


@dataclass
class TraceEntry:
    """One row of the loss trace; iteration 0 is the initial field"""
    iteration: int
    total: float
    ncc: float
    reg: float
    alpha_used: float

    @classmethod
    def from_breakdown(cls, iteration: int, loss: LossBreakdown, alpha_used: float) -> "TraceEntry":
        return cls(iteration=iteration, total=loss.total, ncc=loss.ncc_term, reg=loss.reg_term,
                   alpha_used=alpha_used)


def _check_finite(loss: LossBreakdown, iteration: int):
    if not (math.isfinite(loss.total) and math.isfinite(loss.ncc_term) and math.isfinite(loss.reg_term)):
        raise OptimizationError(f"loss became non-finite ({loss.total})", iteration)


def optimize(
    fixed: ScalarImage,
    moving: ScalarImage,
    init_field: BSplineField,
    config: Optional[OptimizerConfig] = None
) -> Tuple[BSplineField, List[TraceEntry]]:
    """Descend c <- c - alpha * g, returning the best iterate and the loss trace.

    With `normalize_gradient` the step is alpha * g / max|g|, so alpha is in
    pixels. With `backtracking` a loss increase halves alpha, at most
    `max_halvings` times per iteration, after which the descent stops.
    """
    config = config or OptimizerConfig()
    if fixed.shape != moving.shape:
        raise ValueError(f"Image shapes differ: {fixed.shape} vs {moving.shape}")

    objective = RegistrationObjective(fixed, moving, init_field, config)
    limit = init_field.max_coefficient_norm
    coeffs = clamp_coefficients(np.array(init_field.coeffs), limit)
    loss, grad = objective.evaluate(coeffs)
    _check_finite(loss, 0)

    trace = [TraceEntry.from_breakdown(0, loss, 0.0)]
    best_coeffs, best_loss = coeffs, loss

    for iteration in range(1, config.max_iterations + 1):
        peak = float(np.max(np.abs(grad)))
        if not math.isfinite(peak):
            raise OptimizationError("gradient became non-finite", iteration)
        if peak < GRADIENT_FLOOR:
            logger.debug(f"Gradient vanished at iteration {iteration}")
            break
        direction = grad / peak if config.normalize_gradient else grad

        alpha = config.alpha
        accepted = False
        for _ in range(config.max_halvings + 1):
            candidate = clamp_coefficients(coeffs - alpha * direction, limit)
            new_loss, new_grad = objective.evaluate(candidate)
            _check_finite(new_loss, iteration)
            if not config.backtracking or new_loss.total <= loss.total:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            logger.debug(f"Backtracking exhausted at iteration {iteration}")
            break

        change = abs(new_loss.total - loss.total)
        coeffs, loss, grad = candidate, new_loss, new_grad
        trace.append(TraceEntry.from_breakdown(iteration, loss, alpha))
        if loss.total < best_loss.total:
            best_coeffs, best_loss = coeffs, loss
        if change < config.epsilon:
            break

    logger.info(
        f"B-spline optimization: {len(trace) - 1} updates, loss {trace[0].total:.6f} -> "
        f"{best_loss.total:.6f}"
    )
    return init_field.with_coeffs(best_coeffs), trace
