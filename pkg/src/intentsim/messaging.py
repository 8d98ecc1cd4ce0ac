"""In-process message bus with a closed communication topology.

Every inter-agent interaction in the system travels through one bus
instance as an addressed, typed envelope. The permitted routes are a
closed allow-list (`TOPOLOGY`); that constant is the single place to
amend if the system grows new communication edges.

Delivery is mediated by the simulation clock tick, never wall time, and
envelope ids increase monotonically across the whole bus so traces are
totally ordered.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from .errors import DuplicateAgent, RouteForbidden, UnknownAgent

_NAME_RE = re.compile(r"^[a-z_][a-z0-9_]*$")


class Role(Enum):
    CORE = "CoreAgent"
    PLATFORM = "PlatformAgent"
    REQUESTER = "TaskRequester"
    HARMONISER = "TaskHarmoniser"
    STORE = "StoreAgent"
    DYNAMIC = "DynamicAgent"


class MessageKind(Enum):
    TASK_REQUEST = "TaskRequestMsg"
    INTENT = "IntentMsg"
    DOWNLOAD_REQUEST = "DownloadRequest"
    DOWNLOAD_RESPONSE = "DownloadResponse"
    FAILURE_NOTICE = "FailureNotice"
    TTS_REQUEST = "TtsRequest"
    TTS_RESPONSE = "TtsResponse"
    STT_REQUEST = "SttRequest"
    STT_RESPONSE = "SttResponse"
    SAY = "SayCommand"
    ASK = "AskCommand"
    NAV_GOAL = "NavGoal"
    BODY = "BodyCommand"
    LIFECYCLE = "LifecycleCommand"
    ACK = "Ack"


@dataclass(frozen=True)
class AgentId:
    role: Role
    name: str

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"bad agent name {self.name!r}")

    def __str__(self) -> str:
        return f"{self.role.value}/{self.name}"


# Permitted (src role, dst role, kind) triples. Closed list; routes not in
# here are rejected with RouteForbidden.
TOPOLOGY: frozenset[tuple[Role, Role, MessageKind]] = frozenset(
    {
        (Role.REQUESTER, Role.HARMONISER, MessageKind.TASK_REQUEST),
        (Role.CORE, Role.REQUESTER, MessageKind.INTENT),
        (Role.HARMONISER, Role.STORE, MessageKind.DOWNLOAD_REQUEST),
        (Role.STORE, Role.HARMONISER, MessageKind.DOWNLOAD_RESPONSE),
        (Role.HARMONISER, Role.CORE, MessageKind.FAILURE_NOTICE),
        (Role.HARMONISER, Role.DYNAMIC, MessageKind.LIFECYCLE),
        (Role.HARMONISER, Role.DYNAMIC, MessageKind.INTENT),
        (Role.DYNAMIC, Role.HARMONISER, MessageKind.ACK),
        (Role.DYNAMIC, Role.CORE, MessageKind.SAY),
        (Role.DYNAMIC, Role.CORE, MessageKind.ASK),
        (Role.DYNAMIC, Role.CORE, MessageKind.NAV_GOAL),
        (Role.DYNAMIC, Role.CORE, MessageKind.BODY),
        (Role.CORE, Role.DYNAMIC, MessageKind.ACK),
        (Role.CORE, Role.PLATFORM, MessageKind.TTS_REQUEST),
        (Role.CORE, Role.PLATFORM, MessageKind.STT_REQUEST),
        (Role.PLATFORM, Role.CORE, MessageKind.TTS_RESPONSE),
        (Role.PLATFORM, Role.CORE, MessageKind.STT_RESPONSE),
    }
)


@dataclass(frozen=True)
class Envelope:
    id: int
    timestamp: int
    src: AgentId
    dst: AgentId
    kind: MessageKind
    payload: dict[str, Any]

    def wire_line(self) -> str:
        """Wire encoding: one UTF-8 JSON object, fixed field order."""
        doc = {
            "id": self.id,
            "ts": self.timestamp,
            "src": str(self.src),
            "dst": str(self.dst),
            "kind": self.kind.value,
            "payload": _canonical(self.payload),
        }
        return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def _canonical(value):
    # Recursively key-sort mappings so identical payloads always encode
    # to identical bytes regardless of construction order.
    if isinstance(value, dict):
        return {k: _canonical(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    return value


def parse_wire_line(line: str) -> dict[str, Any]:
    return json.loads(line)


class Clock:
    """Plain integer simulation tick; the harness advances it."""

    def __init__(self):
        self.tick = 0

    def advance(self):
        self.tick += 1


class Inbox:
    def __init__(self, owner: AgentId):
        self.owner = owner
        self._queue: deque[Envelope] = deque()

    def __len__(self) -> int:
        return len(self._queue)


class MessageBus:
    """Serialized mediator for all agent communication.

    One logical owner drives send/poll per simulation step; agents share
    no state and interact only through envelopes.
    """

    def __init__(self, clock: Optional[Clock] = None):
        self.clock = clock or Clock()
        self._inboxes: dict[AgentId, Inbox] = {}
        self._next_id = 1
        self.trace: list[Envelope] = []
        self.sent_count = 0
        self.polled_count = 0
        self.discarded_count = 0
        self._subscribers: list[Callable[[Envelope], None]] = []

    # -- registration -------------------------------------------------

    def register_agent(self, agent_id: AgentId) -> Inbox:
        if agent_id in self._inboxes:
            raise DuplicateAgent(f"{agent_id} already registered")
        if agent_id.role is Role.DYNAMIC and any(
            other.role is Role.DYNAMIC for other in self._inboxes
        ):
            # Single-slot backstop: at most one Dynamic Agent exists at a
            # time, even transiently, regardless of its name.
            raise DuplicateAgent("a DynamicAgent is already registered")
        inbox = Inbox(agent_id)
        self._inboxes[agent_id] = inbox
        return inbox

    def deregister_agent(self, agent_id: AgentId) -> int:
        """Remove an agent. Returns the number of undelivered envelopes."""
        inbox = self._inboxes.pop(agent_id, None)
        if inbox is None:
            raise UnknownAgent(str(agent_id))
        dropped = len(inbox)
        self.discarded_count += dropped
        return dropped

    def is_registered(self, agent_id: AgentId) -> bool:
        return agent_id in self._inboxes

    def registered_agents(self) -> list[AgentId]:
        return list(self._inboxes)

    # -- messaging ----------------------------------------------------

    def send(
        self,
        src: AgentId,
        dst: AgentId,
        kind: MessageKind,
        payload: Optional[dict[str, Any]] = None,
    ) -> Envelope:
        if src not in self._inboxes:
            raise UnknownAgent(f"sender {src} not registered")
        if dst not in self._inboxes:
            raise UnknownAgent(f"recipient {dst} not registered")
        if (src.role, dst.role, kind) not in TOPOLOGY:
            raise RouteForbidden(f"{src.role.value} -> {dst.role.value}: {kind.value}")
        env = Envelope(
            id=self._next_id,
            timestamp=self.clock.tick,
            src=src,
            dst=dst,
            kind=kind,
            payload=payload or {},
        )
        self._next_id += 1
        self._inboxes[dst]._queue.append(env)
        self.trace.append(env)
        self.sent_count += 1
        for notify in self._subscribers:
            notify(env)
        return env

    def poll(self, inbox: Inbox) -> Optional[Envelope]:
        if not inbox._queue:
            return None
        self.polled_count += 1
        return inbox._queue.popleft()

    def pending_count(self) -> int:
        return sum(len(box) for box in self._inboxes.values())

    # -- trace export ----------------------------------------------------

    def subscribe(self, callback: Callable[[Envelope], None]) -> None:
        """Register a callback invoked for every sent envelope."""
        self._subscribers.append(callback)

    def trace_lines(self) -> list[str]:
        return [env.wire_line() for env in self.trace]

    def write_trace(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.trace_lines():
                fh.write(line + "\n")
