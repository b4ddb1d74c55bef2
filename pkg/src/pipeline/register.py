"""
Single-pair registration entry point
"""

import logging
from typing import Optional, Union

from ..config.registration import RegistrationConfig
from ..config.settings import Settings
from ..core.errors import UnregistrableError
from ..core.models import PairRegistration, PairStatus
from ..core.orchestrator import PairJob, RegistrationOrchestrator
from ..imaging import ScalarImage
from ..matching import MatchSet
from ..stages import PAIR_STAGES

logger = logging.getLogger(__name__)

ConfigLike = Union[Settings, RegistrationConfig, None]


def as_registration_config(cfg: ConfigLike) -> RegistrationConfig:
    if cfg is None:
        return RegistrationConfig()
    if isinstance(cfg, Settings):
        return cfg.registration_config()
    return cfg


def build_orchestrator(cfg: ConfigLike = None, workers: int = 1) -> RegistrationOrchestrator:
    """Orchestrator with the standard stages registered"""
    orchestrator = RegistrationOrchestrator(as_registration_config(cfg), workers=workers)
    for stage_id, stage_class in PAIR_STAGES.items():
        orchestrator.register_stage(stage_class, stage_id)
    return orchestrator


def register_pair(
    fixed: ScalarImage,
    moving: ScalarImage,
    cfg: ConfigLike = None,
    external_matches: Optional[MatchSet] = None,
    fixed_id: str = "fixed",
    moving_id: str = "moving",
    strict: bool = False
) -> PairRegistration:
    """Rotation sweep, RANSAC affine and B-spline refinement of one pair.

    With external matches the sweep is skipped. With `strict` an
    unregistrable pair raises instead of being returned.
    """
    orchestrator = build_orchestrator(cfg)
    job = PairJob(0, fixed_id, moving_id, fixed, moving, external_matches)
    registration = orchestrator.run([job])[0]
    if strict and registration.status == PairStatus.UNREGISTRABLE:
        error = UnregistrableError(registration.message or "Pair unregistrable")
        error.per_angle_counts = dict(registration.per_angle_counts)
        raise error
    return registration
