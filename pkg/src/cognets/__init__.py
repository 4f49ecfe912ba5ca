"""Cognitive data dissemination in opportunistic networks."""
from .engine import COGNITIVE, EPIDEMIC, RunResult, SimConfig, Simulation, batch, run, write_run
from .san import SemanticNet

__all__ = ["COGNITIVE", "EPIDEMIC", "RunResult", "SimConfig", "SemanticNet", "Simulation", "batch", "run",
           "write_run"]
__version__ = "0.1.0"
