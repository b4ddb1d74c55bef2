"""
Stratalign API Package

This package contains the FastAPI application, routes, and API models.
"""

from .app import app, create_app
from .models import CreateJobRequest, ErrorResponse, HealthResponse, JobResponse, PairSummary
from .routes import router

__all__ = [
    # FastAPI app
    "app",
    "create_app",
    "router",

    # Request models
    "CreateJobRequest",

    # Response models
    "JobResponse",
    "PairSummary",
    "ErrorResponse",
    "HealthResponse"
]
