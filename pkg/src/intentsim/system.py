"""System assembly: wires every agent onto one bus and steps the world.

One Simulation owns the clock, the bus, the seeded RNG, and all agents.
Agents are stepped in a fixed order each tick, which (together with the
monotone envelope ids) makes whole runs reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .core_agent import CoreAgent, Pose
from .dynamic_agent import DynamicAgent, spawn
from .errors import ConfigError
from .harmoniser import TaskHarmoniser
from .intent import load_grammar
from .messaging import AgentId, Clock, MessageBus, Role
from .platform_agent import PlatformAgent
from .requesters import (
    OperatorRequester,
    RequestIds,
    RobotRequester,
    SmartHomeRequester,
    load_button_rules,
    load_intent_map,
)
from .store import Store, StoreAgent, TaskPackage

DATA_DIR = Path(__file__).parent / "data"


def load_locations(path: str | Path) -> dict[str, tuple[float, float, float]]:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
        out = {}
        for name, pose in doc.items():
            x, y, theta = (float(v) for v in pose)
            if not all(math.isfinite(v) for v in (x, y, theta)):
                raise ValueError(f"non-finite pose for {name!r}")
            out[str(name)] = (x, y, theta)
        return out
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad locations file: {exc}", path=str(p)) from exc


def load_acoustic_model(path: str | Path) -> dict:
    """Per-spot recognition probabilities for each microphone."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
        spots = {}
        for spot_id, probs in doc["spots"].items():
            internal = float(probs["internal"])
            external = float(probs["external"])
            for v in (internal, external):
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"probability {v} outside [0, 1]")
            spots[int(spot_id)] = {"internal": internal, "external": external}
        return {"robot_spot": int(doc["robot_spot"]), "spots": spots}
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad acoustic model: {exc}", path=str(p)) from exc


@dataclass
class SystemConfig:
    seed: int = 42
    grammar_path: Path = DATA_DIR / "grammar.txt"
    button_rules_path: Path = DATA_DIR / "smart_home_rules.txt"
    intent_map_path: Path = DATA_DIR / "intent_map.json"
    locations_path: Path = DATA_DIR / "locations.json"
    acoustic_model_path: Path = DATA_DIR / "acoustic_model.json"
    store_dir: Path = DATA_DIR / "store"
    mic: str = "external"
    extra_packages: list[TaskPackage] = field(default_factory=list)


class Simulation:
    """All agents plus the tick loop; everything deterministic per seed."""

    STEP_ORDER = ("core", "platform", "smart_home", "robot_requester", "operator", "harmoniser", "store_agent")

    def __init__(self, config: Optional[SystemConfig] = None):
        self.config = config or SystemConfig()
        cfg = self.config
        self.clock = Clock()
        self.bus = MessageBus(self.clock)
        self.rng = random.Random(cfg.seed)
        self.grammar = load_grammar(cfg.grammar_path)
        self.locations = load_locations(cfg.locations_path)
        self.acoustic_model = load_acoustic_model(cfg.acoustic_model_path)
        self.store = Store()
        if Path(cfg.store_dir).is_dir():
            self.store.load_directory(cfg.store_dir)
        for pkg in cfg.extra_packages:
            self.store.publish(pkg)

        self.platform = PlatformAgent(self.bus, self.grammar, self.rng)
        self.core = CoreAgent(
            self.bus,
            self.clock,
            platform=self.platform.id,
            requester=AgentId(Role.REQUESTER, "robot"),
        )
        harmoniser_id = AgentId(Role.HARMONISER, "robot")
        request_ids = RequestIds()
        self.smart_home = SmartHomeRequester(
            self.bus, self.clock, harmoniser_id, load_button_rules(cfg.button_rules_path), ids=request_ids
        )
        self.robot_requester = RobotRequester(
            self.bus, self.clock, harmoniser_id, load_intent_map(cfg.intent_map_path), ids=request_ids
        )
        self.operator = OperatorRequester(self.bus, self.clock, harmoniser_id, ids=request_ids)
        self.harmoniser = TaskHarmoniser(
            self.bus,
            self.clock,
            core=self.core.id,
            store=AgentId(Role.STORE, "ars"),
            spawner=self._spawn,
        )
        self.store_agent = StoreAgent(self.bus, self.store)
        self.dynamic_agents: list[DynamicAgent] = []
        self.lock = threading.RLock()

    def _spawn(self, package: TaskPackage, priority: int) -> DynamicAgent:
        agent = spawn(
            self.bus,
            package,
            priority,
            harmoniser=self.harmoniser.id,
            core=self.core.id,
            locations=self.locations,
        )
        # Execution starts at the initial state on the next tick.
        agent.active_from = self.clock.tick + 1
        self.dynamic_agents.append(agent)
        return agent

    # -- injection helpers -------------------------------------------------

    def hear(self, utterance: str, channel_p: float) -> None:
        """Someone speaks near the robot with the given channel quality."""
        self.core.capture(utterance, channel_p)

    def hear_at_spot(self, utterance: str, spot: int, mic: Optional[str] = None) -> None:
        probs = self.acoustic_model["spots"][spot]
        self.hear(utterance, probs[mic or self.config.mic])

    def press_button(self, button_id: str) -> Optional[int]:
        return self.smart_home.press(button_id)

    # -- stepping ------------------------------------------------------------

    def tick(self, inject: Optional[Callable[[], None]] = None) -> None:
        with self.lock:
            self.clock.advance()
            if inject is not None:
                inject()
            for name in self.STEP_ORDER:
                getattr(self, name).step()
            for agent in list(self.dynamic_agents):
                if not agent.done and self.clock.tick >= agent.active_from:
                    agent.step()
            self.dynamic_agents = [a for a in self.dynamic_agents if not a.done]

    def run(self, ticks: int) -> None:
        for _ in range(ticks):
            self.tick()

    def run_until_quiet(self, max_ticks: int = 200) -> int:
        """Tick until no messages are pending and nothing is running."""
        for i in range(max_ticks):
            self.tick()
            if (
                self.bus.pending_count() == 0
                and self.harmoniser.running is None
                and self.harmoniser.phase == "idle"
                and self.harmoniser.queued_requests == 0
            ):
                return i + 1
        return max_ticks

    # -- views ------------------------------------------------------------

    def status(self) -> dict:
        with self.lock:
            running = None
            h = self.harmoniser
            if h.running is not None:
                running = {
                    "task_name": h.running.package_name,
                    "version": h.running.version,
                    "priority": h.running.priority,
                    "started_tick": h.running.started_tick,
                    "request_id": h.running.request_id,
                    "fsm_state": h.running.handle.state_path(),
                }
            last = h.last_decision
            return {
                "tick": self.clock.tick,
                "phase": h.phase,
                "conversation_open": h.conversation_open,
                "running": running,
                "last_decision": last.to_log_line() | {"human_text": last.human_text} if last else None,
                "tasks": self.store.catalog(),
                "history": h.task_history[-10:],
            }
