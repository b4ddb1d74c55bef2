"""
FastAPI routes for registration jobs
"""

import logging
import uuid
from datetime import datetime, timezone
from typing import Dict, List, Optional

from fastapi import APIRouter, BackgroundTasks, HTTPException

from ..config.settings import Settings
from ..core.errors import RegistrationError
from ..core.models import JobStatus
from ..matching import matcher_registry
from ..pipeline import build_orchestrator, evaluate_run, export_volume, load_sequence, register_sequence
from .models import CreateJobRequest, HealthResponse, JobResponse, PairSummary

logger = logging.getLogger(__name__)

# Base settings for jobs; replaced by create_app
app_settings: Settings = Settings()

# In-memory job storage
job_storage: Dict[str, JobResponse] = {}

router = APIRouter()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _get_job(job_id: str) -> JobResponse:
    job = job_storage.get(job_id)
    if job is None:
        raise HTTPException(status_code=404, detail="Job not found")
    return job


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint"""
    return HealthResponse(
        status="healthy",
        timestamp=_now(),
        version=app_settings.api.version,
        available_stages=build_orchestrator(app_settings).get_available_stages(),
        available_matchers=matcher_registry.list_matchers()
    )


@router.get("/config")
async def get_config():
    """Effective configuration"""
    return app_settings.to_dict()


@router.post("/jobs", response_model=JobResponse)
async def create_job(request: CreateJobRequest, background_tasks: BackgroundTasks) -> JobResponse:
    """Create and start a sequence registration job"""
    try:
        job_settings = app_settings.with_overrides(request.overrides)
    except RegistrationError as e:
        raise HTTPException(status_code=400, detail=str(e))

    job_id = str(uuid.uuid4())
    job = JobResponse(
        job_id=job_id,
        status=JobStatus.PENDING,
        input_dir=request.input_dir,
        out_dir=request.out_dir,
        created_at=_now(),
        updated_at=_now()
    )
    job_storage[job_id] = job
    background_tasks.add_task(run_job, job_id, request, job_settings)
    logger.info(f"Queued job {job_id} for {request.input_dir}")
    return job


def run_job(job_id: str, request: CreateJobRequest, job_settings: Settings):
    """Execute a job; runs in the background thread pool"""
    job = job_storage.get(job_id)
    if job is None or job.status == JobStatus.CANCELLED:
        return
    job.status = JobStatus.RUNNING
    job.updated_at = _now()

    try:
        slices, ids = load_sequence(request.input_dir, job_settings.imaging.downsample,
                                    job_settings.imaging.channel_policy)
        seq = register_sequence(slices, job_settings, ids)
        export_volume(seq, slices, out_dir=request.out_dir, cfg=job_settings)

        job.reference_id = seq.reference_id
        job.placed = seq.placed_ids
        job.breaks = [[f, m] for f, m in seq.breaks]
        job.pairs = [
            PairSummary(
                fixed_id=p.fixed_id, moving_id=p.moving_id, status=p.status.value,
                rotation_deg=p.rotation_deg, inlier_count=p.inlier_count, message=p.message
            )
            for p in seq.pairs
        ]
        if request.landmark_dir:
            report = evaluate_run(seq, request.landmark_dir, job_settings.pipeline.pixel_size_um,
                                  mode=request.evaluation_mode)
            job.metrics = report.to_dict()["aggregates"]

        job.status = JobStatus.PARTIAL if seq.partial else JobStatus.COMPLETED
        logger.info(f"Job {job_id} {job.status.value}")
    except Exception as e:
        logger.error(f"Job {job_id} failed: {e}")
        job.status = JobStatus.FAILED
        job.error = str(e)
    job.updated_at = _now()


@router.get("/jobs/{job_id}", response_model=JobResponse)
async def get_job(job_id: str) -> JobResponse:
    """Get job status"""
    return _get_job(job_id)


@router.get("/jobs", response_model=List[JobResponse])
async def list_jobs(limit: int = 50, offset: int = 0, status: Optional[JobStatus] = None):
    """List jobs"""
    jobs = [j for j in job_storage.values() if status is None or j.status == status]
    return jobs[offset:offset + limit]


@router.delete("/jobs/{job_id}")
async def delete_job(job_id: str):
    """Cancel a pending job or forget a finished one"""
    job = _get_job(job_id)
    if job.status == JobStatus.RUNNING:
        raise HTTPException(status_code=409, detail="Job is running and cannot be cancelled")
    if job.status == JobStatus.PENDING:
        job.status = JobStatus.CANCELLED
        job.updated_at = _now()
        return {"message": f"Job {job_id} cancelled"}
    del job_storage[job_id]
    return {"message": f"Job {job_id} removed"}
