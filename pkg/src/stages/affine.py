"""
RANSAC affine stage
"""

from typing import Any, Dict

from ..affine import ransac_affine
from ..core.errors import DegenerateConfigurationError, UnregistrableError
from ..core.models import PairState, PairStatus
from .base import BaseStage


class AffineStage(BaseStage):
    """Robust moving -> fixed affine from the winning (or externally supplied) matches"""

    async def execute(self, state: PairState) -> Dict[str, Any]:
        external = state.external_matches is not None
        matches = state.external_matches if external else state.matches
        rotation = 0.0 if external else state.rotation_deg

        try:
            affine, inliers = await self.run_blocking(ransac_affine, matches, self.config.ransac)
        except (UnregistrableError, DegenerateConfigurationError) as e:
            self.logger.warning(f"{state.fixed_id} <- {state.moving_id}: {e}")
            return {"status": PairStatus.UNREGISTRABLE, "message": str(e), "matches": matches}

        if not affine.is_sane():
            message = f"Affine determinant {affine.determinant:.3g} outside the accepted band"
            self.logger.warning(f"{state.fixed_id} <- {state.moving_id}: {message}")
            return {"status": PairStatus.UNREGISTRABLE, "message": message, "matches": matches}

        self.logger.info(
            f"{state.fixed_id} <- {state.moving_id}: affine from {len(inliers)}/{len(matches)} inliers"
        )
        return {
            "affine": affine,
            "inlier_count": int(len(inliers)),
            "rotation_deg": rotation,
            "matches": matches,
            "status": PairStatus.AFFINE_ONLY
        }
