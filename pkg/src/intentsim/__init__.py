"""intentsim: intent-based assistive-robot control, simulated.

A multi-agent runtime (core robot services, platform speech services,
task requesters, a priority harmoniser, a package store, and dynamic
task agents) on a closed message bus, plus a deterministic scenario
harness and an operator HTTP service.
"""

from .errors import ConfigError, SimError
from .harness import (
    ExperimentConfig,
    binomial_ci,
    render_report,
    run_keyword_experiment,
    run_scenario,
)
from .intent import Grammar, Intent, Source, parse_utterance
from .messaging import AgentId, Envelope, MessageBus, MessageKind, Role
from .store import Store, TaskPackage
from .system import Simulation, SystemConfig

__version__ = "0.1.0"

__all__ = [
    "AgentId",
    "ConfigError",
    "Envelope",
    "ExperimentConfig",
    "Grammar",
    "Intent",
    "MessageBus",
    "MessageKind",
    "Role",
    "SimError",
    "Simulation",
    "Source",
    "Store",
    "SystemConfig",
    "TaskPackage",
    "binomial_ci",
    "parse_utterance",
    "render_report",
    "run_keyword_experiment",
    "run_scenario",
    "__version__",
]
