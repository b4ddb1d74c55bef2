"""
B-spline refinement stage
"""

from typing import Any, Dict

from ..affine import invert
from ..bspline import BSplineField, ncc_loss, optimize
from ..core.errors import DegenerateContentError, OptimizationError
from ..core.models import PairState, PairStatus
from ..imaging import ScalarImage, warp
from .base import BaseStage


class BSplineStage(BaseStage):
    """Non-rigid refinement between the fixed image and the affine-prewarped moving image"""

    def _refine(self, state: PairState) -> Dict[str, Any]:
        fixed: ScalarImage = state.fixed
        cfg = self.config.optimizer
        prewarped = warp(state.moving, invert(state.affine), fixed.shape, self.config.fill_value)
        init = BSplineField.zeros(fixed.dims, cfg.grid_spacing)

        try:
            initial_ncc = ncc_loss(fixed, prewarped, init, cfg)
        except DegenerateContentError as e:
            return {"message": f"B-spline stage skipped: {e}"}

        try:
            deformation, trace = optimize(fixed, prewarped, init, cfg)
        except OptimizationError as e:
            self.logger.warning(f"{state.fixed_id} <- {state.moving_id}: {e}, keeping the affine")
            return {"initial_ncc": initial_ncc, "final_ncc": initial_ncc, "message": str(e)}

        final_ncc = ncc_loss(fixed, prewarped, deformation, cfg)
        update: Dict[str, Any] = {"initial_ncc": initial_ncc, "trace": trace}
        if final_ncc > initial_ncc:
            self.logger.warning(
                f"{state.fixed_id} <- {state.moving_id}: NCC worsened "
                f"({initial_ncc:.6f} -> {final_ncc:.6f}), keeping the affine"
            )
            update.update(final_ncc=initial_ncc, message="B-spline refinement worsened NCC")
            return update

        update.update(deformation=deformation, final_ncc=final_ncc, status=PairStatus.OK)
        return update

    async def execute(self, state: PairState) -> Dict[str, Any]:
        update = await self.run_blocking(self._refine, state)
        if update.get("status") == PairStatus.OK:
            self.logger.info(
                f"{state.fixed_id} <- {state.moving_id}: NCC {update['initial_ncc']:.4f} -> "
                f"{update['final_ncc']:.4f}"
            )
        return update
