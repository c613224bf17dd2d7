"""HTTP service and configuration for the annotation engine."""

from .app import create_app
from .config import AppConfig, ServerConfig, find_config, load_config
from .jobs import JobEvent, JobRecord, JobState, JobStore

__all__ = [
    "AppConfig",
    "JobEvent",
    "JobRecord",
    "JobState",
    "JobStore",
    "ServerConfig",
    "create_app",
    "find_config",
    "load_config",
]
