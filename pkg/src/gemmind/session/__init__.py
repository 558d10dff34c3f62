"""Headless session simulation, analysis pipeline, live service, and validation."""

from gemmind.session.config import SessionConfig, default_config, pilot_config, smoke_config
from gemmind.session.simulate import simulate_session
from gemmind.session.analyze import ReportBundle, analyze_session
from gemmind.session.validate import run_validation

__all__ = [
    "ReportBundle",
    "SessionConfig",
    "analyze_session",
    "default_config",
    "pilot_config",
    "run_validation",
    "simulate_session",
    "smoke_config",
]
