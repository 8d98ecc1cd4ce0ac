"""Task Harmoniser: decides which task runs, and tells people why not.

Single-slot scheduler. Requests are examined strictly one at a time; a
request that needs a store round-trip or a graceful termination parks
the decision loop until that finishes, and later arrivals queue. Every
rejection produces both a machine-readable Decision and a spoken
failure notice through the core agent.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .dynamic_agent import DynamicAgent
from .errors import UnknownAgent
from .messaging import AgentId, Clock, MessageBus, MessageKind, Role
from .store import TaskPackage, parse_package

KIND_ACCEPTED = "Accepted"
KIND_PREEMPTED = "PreemptedAndAccepted"
KIND_REJECTED = "Rejected"

REASON_HIGHER_PRIORITY = "HigherPriorityRunning"
REASON_NOT_A_CREATION = "NotACreationIntent"
REASON_UNKNOWN_TASK = "UnknownTask"
REASON_STORE_UNAVAILABLE = "StoreUnavailable"

TERMINATE_DEADLINE_TICKS = 3

# Fixed per-reason templates. Repeated failures of the same shape
# produce identical text, which lets the speech cache absorb them.
_HUMAN_TEXT = {
    REASON_NOT_A_CREATION: "sorry, i did not recognise a task in that",
    REASON_HIGHER_PRIORITY: "cannot start {task}, a more important task is running",
    REASON_UNKNOWN_TASK: "i do not know how to do {task}",
    REASON_STORE_UNAVAILABLE: "cannot fetch {task} right now",
}


@dataclass(frozen=True)
class Decision:
    kind: str
    reason: Optional[str]
    human_text: str
    request_id: Optional[int]
    tick: int

    def __post_init__(self):
        if self.kind == KIND_REJECTED:
            assert self.reason is not None and self.human_text

    def to_log_line(self) -> dict:
        return {
            "request_id": self.request_id,
            "kind": self.kind,
            "reason": self.reason,
            "tick": self.tick,
        }


@dataclass
class RunningAgent:
    package_name: str
    version: int
    priority: int
    started_tick: int
    handle: DynamicAgent
    request_id: Optional[int]


class TaskHarmoniser:
    def __init__(
        self,
        bus: MessageBus,
        clock: Clock,
        core: AgentId,
        store: AgentId,
        spawner: Callable[[TaskPackage, int], DynamicAgent],
        name: str = "robot",
    ):
        self.bus = bus
        self.clock = clock
        self.core = core
        self.store = store
        self.spawner = spawner
        self.id = AgentId(Role.HARMONISER, name)
        self.inbox = bus.register_agent(self.id)
        self.running: Optional[RunningAgent] = None
        self.conversation_open = False
        self.decision_log: list[Decision] = []
        self.task_history: list[dict] = []
        self.forced_removals = 0
        self._pending: deque[dict] = deque()
        self._phase = "idle"  # idle | downloading | terminating
        self._inflight: Optional[dict] = None  # request payload being served
        self._inflight_preempted = False
        self._deadline: Optional[int] = None

    # -- public views ----------------------------------------------------

    @property
    def phase(self) -> str:
        return self._phase

    @property
    def queued_requests(self) -> int:
        return len(self._pending)

    @property
    def last_decision(self) -> Optional[Decision]:
        return self.decision_log[-1] if self.decision_log else None

    def decision_log_lines(self) -> list[str]:
        return [json.dumps(d.to_log_line(), sort_keys=True) for d in self.decision_log]

    # -- tick loop ---------------------------------------------------------

    def step(self) -> None:
        while True:
            env = self.bus.poll(self.inbox)
            if env is None:
                break
            self._dispatch(env)
        if (
            self._phase == "terminating"
            and self._deadline is not None
            and self.clock.tick >= self._deadline
        ):
            self._force_remove_running()
        while self._phase == "idle" and self._pending:
            self.handle_request(self._pending.popleft())

    def _dispatch(self, env) -> None:
        if env.kind is MessageKind.TASK_REQUEST:
            if env.payload.get("op") == "cancel":
                self._handle_cancel()
            elif env.payload.get("reply"):
                self._route_reply(env.payload)
            else:
                self._pending.append(env.payload)
        elif env.kind is MessageKind.DOWNLOAD_RESPONSE:
            self._handle_download(env.payload)
        elif env.kind is MessageKind.ACK:
            self._handle_agent_event(env)

    # -- scheduling --------------------------------------------------------

    def handle_request(self, payload: dict) -> Optional[Decision]:
        """Decide one request. Returns the Decision when it is immediate;
        accepted paths involve bus round-trips and log theirs later."""
        request_id = payload.get("request_id")
        task_name = payload.get("task_name", "")
        priority = int(payload.get("priority", 0))
        if not task_name:
            return self._reject(request_id, REASON_NOT_A_CREATION, task_name)
        if self.running is None:
            self._begin_download(payload, preempted=False)
            return None
        if self.running.priority >= priority:
            return self._reject(request_id, REASON_HIGHER_PRIORITY, task_name)
        self._begin_termination(successor=payload)
        return None

    def _begin_download(self, payload: dict, preempted: bool) -> None:
        self._inflight = payload
        self._inflight_preempted = preempted
        self._phase = "downloading"
        try:
            self.bus.send(
                self.id,
                self.store,
                MessageKind.DOWNLOAD_REQUEST,
                {"name": payload["task_name"], "request_id": payload.get("request_id")},
            )
        except UnknownAgent:
            self._finish_inflight_rejected(REASON_STORE_UNAVAILABLE)

    def _begin_termination(self, successor: Optional[dict]) -> None:
        self._inflight = successor
        self._inflight_preempted = successor is not None
        self._phase = "terminating"
        self._deadline = self.clock.tick + TERMINATE_DEADLINE_TICKS
        try:
            self.bus.send(
                self.id,
                self.running.handle.id,
                MessageKind.LIFECYCLE,
                {"cmd": "terminate"},
            )
        except UnknownAgent:
            # Already gone; its terminal report is presumably in flight.
            pass

    def _handle_cancel(self) -> None:
        if self.running is None or self._phase == "terminating":
            return
        self._begin_termination(successor=None)

    def _handle_download(self, payload: dict) -> None:
        if self._phase != "downloading" or self._inflight is None:
            return
        if not payload.get("ok"):
            self._finish_inflight_rejected(REASON_UNKNOWN_TASK)
            return
        try:
            package = parse_package(payload["package"])
        except (ValueError, KeyError, TypeError):
            self._finish_inflight_rejected(REASON_STORE_UNAVAILABLE)
            return
        if package.checksum() != payload.get("checksum"):
            self._finish_inflight_rejected(REASON_STORE_UNAVAILABLE)
            return
        request = self._inflight
        priority = int(request["priority"])
        handle = self.spawner(package, priority)
        self.bus.send(self.id, handle.id, MessageKind.LIFECYCLE, {"cmd": "start"})
        self.running = RunningAgent(
            package_name=package.name,
            version=package.version,
            priority=priority,
            started_tick=self.clock.tick,
            handle=handle,
            request_id=request.get("request_id"),
        )
        kind = KIND_PREEMPTED if self._inflight_preempted else KIND_ACCEPTED
        self.decision_log.append(
            Decision(
                kind=kind,
                reason=None,
                human_text="",
                request_id=request.get("request_id"),
                tick=self.clock.tick,
            )
        )
        self._inflight = None
        self._inflight_preempted = False
        self._phase = "idle"

    # -- dynamic-agent events ---------------------------------------------

    def _handle_agent_event(self, env) -> None:
        event = env.payload.get("event")
        if event == "conversation_open":
            if self.running is not None and env.src == self.running.handle.id:
                self.conversation_open = True
        elif event == "conversation_closed":
            self.conversation_open = False
        elif event == "terminal":
            if self.running is None or env.src != self.running.handle.id:
                return
            self.task_history.append(
                {
                    "request_id": self.running.request_id,
                    "task_name": self.running.package_name,
                    "outcome": env.payload.get("outcome", ""),
                    "tick": self.clock.tick,
                }
            )
            self.running = None
            self.conversation_open = False
            if self._phase == "terminating":
                self._continue_after_termination()

    def _continue_after_termination(self) -> None:
        self._deadline = None
        if self._inflight is not None:
            self._phase = "downloading"
            try:
                self.bus.send(
                    self.id,
                    self.store,
                    MessageKind.DOWNLOAD_REQUEST,
                    {
                        "name": self._inflight["task_name"],
                        "request_id": self._inflight.get("request_id"),
                    },
                )
            except UnknownAgent:
                self._finish_inflight_rejected(REASON_STORE_UNAVAILABLE)
        else:
            self._phase = "idle"

    def _force_remove_running(self) -> None:
        if self.running is not None:
            self.running.handle.force_remove()
            self.forced_removals += 1
            self.task_history.append(
                {
                    "request_id": self.running.request_id,
                    "task_name": self.running.package_name,
                    "outcome": "preempted",
                    "tick": self.clock.tick,
                }
            )
            self.running = None
            self.conversation_open = False
        self._continue_after_termination()

    # -- conversation relay --------------------------------------------------

    def _route_reply(self, payload: dict) -> None:
        if self.conversation_open and self.running is not None:
            self.bus.send(
                self.id,
                self.running.handle.id,
                MessageKind.INTENT,
                {
                    "intent": payload["intent"],
                    "unexpected": bool(payload.get("unexpected")),
                },
            )
            self.conversation_open = False
            return
        self._reject(payload.get("request_id"), REASON_NOT_A_CREATION, "")

    # -- rejection plumbing ----------------------------------------------

    def _reject(self, request_id: Optional[int], reason: str, task_name: str) -> Decision:
        text = _HUMAN_TEXT[reason].format(task=task_name or "that")
        decision = Decision(
            kind=KIND_REJECTED,
            reason=reason,
            human_text=text,
            request_id=request_id,
            tick=self.clock.tick,
        )
        self.decision_log.append(decision)
        try:
            self.bus.send(
                self.id,
                self.core,
                MessageKind.FAILURE_NOTICE,
                {"request_id": request_id, "reason": reason, "text": text},
            )
        except UnknownAgent:
            pass
        return decision

    def _finish_inflight_rejected(self, reason: str) -> None:
        request = self._inflight or {}
        self._inflight = None
        self._inflight_preempted = False
        self._phase = "idle"
        self._deadline = None
        self._reject(request.get("request_id"), reason, request.get("task_name", ""))
