"""
Stratalign - Core orchestration engine for pair registration: stage graph,
bounded concurrency, per-stage timings and result collection.
"""

import asyncio
import logging
import time
import traceback
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Type

from langgraph.graph import END, START, StateGraph

from ..config.registration import RegistrationConfig
from ..stages.base import BaseStage
from .models import PairRegistration, PairState, PairStatus, StageResult, StageStatus

logger = logging.getLogger(__name__)


@dataclass
class PairJob:
    """One consecutive pair to register; `pair_index` fixes its slot in the results"""
    pair_index: int
    fixed_id: str
    moving_id: str
    fixed: Any
    moving: Any
    external_matches: Any = None


class RegistrationOrchestrator:
    """Main orchestrator for running pair registrations through the stage graph"""

    def __init__(self, config: Optional[RegistrationConfig] = None, workers: int = 4):
        self.config = config or RegistrationConfig()
        self.workers = max(1, int(workers))
        self.stages: Dict[str, Type[BaseStage]] = {}
        self.logger = logging.getLogger("orchestrator")
        self._graph = None

        # Created per event loop in register_pairs
        self.semaphore: Optional[asyncio.Semaphore] = None

    def register_stage(self, stage_class: Type[BaseStage], stage_id: str):
        """Register a stage class"""
        self.stages[stage_id] = stage_class
        self._graph = None
        self.logger.info(f"Registered stage: {stage_id}")

    def get_available_stages(self) -> List[str]:
        return list(self.stages.keys())

    @property
    def graph(self):
        if self._graph is None:
            self._graph = self._build_pair_graph()
        return self._graph

    def _route_start(self, state: PairState) -> str:
        return "affine" if state.external_matches is not None else "rotation_sweep"

    def _route_after_sweep(self, state: PairState) -> str:
        return END if state.status == PairStatus.UNREGISTRABLE else "affine"

    def _route_after_affine(self, state: PairState) -> str:
        if state.status == PairStatus.UNREGISTRABLE or not self.config.bspline_enabled:
            return END
        return "bspline"

    def _build_pair_graph(self):
        """Build the rotation_sweep -> affine -> bspline graph"""
        for stage_id in ("rotation_sweep", "affine", "bspline"):
            if stage_id not in self.stages:
                raise ValueError(f"Stage {stage_id} not registered")

        graph = StateGraph(PairState)
        for stage_id in ("rotation_sweep", "affine", "bspline"):
            graph.add_node(stage_id, self._create_stage_node(stage_id))

        graph.add_conditional_edges(
            START, self._route_start, {"rotation_sweep": "rotation_sweep", "affine": "affine"}
        )
        graph.add_conditional_edges(
            "rotation_sweep", self._route_after_sweep, {"affine": "affine", END: END}
        )
        graph.add_conditional_edges(
            "affine", self._route_after_affine, {"bspline": "bspline", END: END}
        )
        graph.add_edge("bspline", END)
        return graph.compile()

    def _create_stage_node(self, stage_id: str):
        """Create a node function for a stage"""
        async def stage_node(state: PairState) -> Dict[str, Any]:
            stage = self.stages[stage_id](stage_id, self.config)
            start_time = time.perf_counter()
            self.logger.debug(f"Pair {state.pair_index}: starting {stage_id}")

            try:
                update = await stage.execute(state)
                result = StageResult(stage_id=stage_id, status=StageStatus.COMPLETED)
            except Exception as e:
                self.logger.error(f"Stage {stage_id} failed on pair {state.pair_index}: {str(e)}")
                self.logger.error(traceback.format_exc())
                result = StageResult(stage_id=stage_id, status=StageStatus.FAILED, error=str(e))
                if stage_id == "bspline":
                    # the affine result still stands
                    update = {"message": f"B-spline stage failed: {e}"}
                else:
                    update = {"status": PairStatus.UNREGISTRABLE, "message": str(e)}
            finally:
                await stage.cleanup()

            result.execution_time = time.perf_counter() - start_time
            self.logger.info(f"Pair {state.pair_index}: {stage_id} finished in {result.execution_time:.2f}s")
            update["stage_results"] = {**state.stage_results, stage_id: result}
            update["timings"] = {**state.timings, stage_id: result.execution_time}
            return update

        return stage_node

    @staticmethod
    def _to_registration(state: PairState) -> PairRegistration:
        status = state.status
        if status == PairStatus.OK and state.deformation is None:
            status = PairStatus.AFFINE_ONLY
        if status == PairStatus.AFFINE_ONLY and state.affine is None:
            status = PairStatus.UNREGISTRABLE

        registered = status != PairStatus.UNREGISTRABLE
        sweep = state.sweep
        return PairRegistration(
            fixed_id=state.fixed_id,
            moving_id=state.moving_id,
            status=status,
            rotation_deg=float(state.rotation_deg) if registered else 0.0,
            affine=state.affine if registered else None,
            deformation=state.deformation if status == PairStatus.OK else None,
            trace=list(state.trace),
            inlier_count=state.inlier_count if registered else 0,
            per_angle_counts=dict(state.per_angle_counts),
            baseline_match_count=sweep.baseline_match_count if sweep is not None else 0,
            best_match_count=sweep.best_match_count if sweep is not None else 0,
            initial_ncc=state.initial_ncc,
            final_ncc=state.final_ncc,
            message=state.message,
            timings=dict(state.timings)
        )

    async def register_pair(self, job: PairJob) -> PairRegistration:
        """Run one pair through the stage graph"""
        if self.semaphore is None:
            self.semaphore = asyncio.Semaphore(self.workers)

        async with self.semaphore:
            start_time = time.perf_counter()
            self.logger.info(f"Registering pair {job.pair_index}: {job.fixed_id} <- {job.moving_id}")
            state = PairState(
                pair_index=job.pair_index,
                fixed_id=job.fixed_id,
                moving_id=job.moving_id,
                fixed=job.fixed,
                moving=job.moving,
                external_matches=job.external_matches
            )
            try:
                result = await self.graph.ainvoke(state)
                final = result if isinstance(result, PairState) else PairState(**result)
            except Exception as e:
                self.logger.error(f"Pair {job.pair_index} failed: {str(e)}")
                self.logger.error(traceback.format_exc())
                final = state.model_copy(update={"status": PairStatus.UNREGISTRABLE, "message": str(e)})

            registration = self._to_registration(final)
            self.logger.info(
                f"Pair {job.pair_index} {registration.status.value} in "
                f"{time.perf_counter() - start_time:.2f}s"
            )
            return registration

    async def register_pairs(self, jobs: List[PairJob]) -> List[PairRegistration]:
        """Run pairs concurrently; results come back in pair-index order"""
        self.semaphore = asyncio.Semaphore(self.workers)
        results = await asyncio.gather(*(self.register_pair(job) for job in jobs))
        by_index = {job.pair_index: result for job, result in zip(jobs, results)}
        return [by_index[index] for index in sorted(by_index)]

    def run(self, jobs: List[PairJob]) -> List[PairRegistration]:
        """Synchronous entry point"""
        return asyncio.run(self.register_pairs(jobs))
