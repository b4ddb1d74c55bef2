"""
Rotation sweep stage
"""

from typing import Any, Dict

from ..core.errors import UnregistrableError
from ..core.models import PairState, PairStatus
from ..matching import (
    BaseMatcher,
    export_matches,
    match_file_name,
    matcher_registry,
    rotation_sweep
)
from .base import BaseStage


class RotationSweepStage(BaseStage):
    """Picks the moving image orientation that yields the most RANSAC inliers"""

    def _matcher(self, state: PairState) -> BaseMatcher:
        if self.config.matches_dir:
            return matcher_registry.create(
                "imported",
                matches_dir=self.config.matches_dir,
                fixed_id=state.fixed_id,
                moving_id=state.moving_id,
                config=self.config.matcher_config()
            )
        return matcher_registry.create("builtin", config=self.config.matcher_config())

    async def execute(self, state: PairState) -> Dict[str, Any]:
        matcher = self._matcher(state)
        self.logger.info(
            f"Sweeping {len(self.config.angles)} angles for {state.fixed_id} <- {state.moving_id} "
            f"({matcher.name} matcher)"
        )
        try:
            result = await self.run_blocking(
                rotation_sweep, state.fixed, state.moving, self.config.angles, matcher, self.config.ransac
            )
        except UnregistrableError as e:
            self.logger.warning(f"{state.fixed_id} <- {state.moving_id}: {e}")
            return {
                "status": PairStatus.UNREGISTRABLE,
                "message": str(e),
                "per_angle_counts": e.per_angle_counts
            }

        if self.config.export_matches_dir:
            path = export_matches(
                result.best_matches,
                f"{self.config.export_matches_dir}/{match_file_name(state.fixed_id, state.moving_id)}"
            )
            self.logger.info(f"Exported {len(result.best_matches)} matches to {path}")

        return {
            "sweep": result,
            "per_angle_counts": result.per_angle_counts,
            "matches": result.best_matches,
            "rotation_deg": result.best_angle
        }
