import asyncio
import logging
from typing import Any, Callable, Dict, Optional

from ..config.registration import RegistrationConfig
from ..core.models import PairState


class BaseStage:
    """Base class for all pair registration stages"""

    def __init__(self, stage_id: str, config: Optional[RegistrationConfig] = None):
        self.stage_id = stage_id
        self.config = config or RegistrationConfig()
        self.logger = logging.getLogger(f"stage.{stage_id}")

    async def execute(self, state: PairState) -> Dict[str, Any]:
        """Run the stage and return the state fields it updates"""
        raise NotImplementedError("Subclasses must implement execute method")

    async def run_blocking(self, func: Callable[..., Any], *args: Any, **kwargs: Any) -> Any:
        """Run CPU-bound work in a worker thread"""
        return await asyncio.to_thread(func, *args, **kwargs)

    async def cleanup(self):
        """Cleanup resources after stage execution"""
        self.logger.debug(f"Cleaning up stage {self.stage_id}")
