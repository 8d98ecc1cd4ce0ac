"""Task requesters: the three doors through which work arrives.

Each requester converts its own input modality into the same
TaskRequestMsg shape, so the harmoniser never cares whether a task was
spoken, pressed, or typed into the operator console.
"""

from __future__ import annotations

import json
import queue
import re
from pathlib import Path
from typing import Optional

from .errors import ConfigError, InvalidPriority
from .intent import Intent, Source
from .messaging import AgentId, Clock, MessageBus, MessageKind, Role

_RULE_RE = re.compile(
    r"^button:(?P<button>[a-z_][a-z0-9_]*)\s*=>\s*(?P<task>[a-z_][a-z0-9_]*)\s*@\s*(?P<priority>\d+)$"
)


def parse_button_rules(text: str, path: str = "<rules>") -> dict[str, tuple[str, int]]:
    """Parse `button:<id> => <task> @ <priority>` lines."""
    rules: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _RULE_RE.match(line)
        if m is None:
            raise ConfigError(f"bad button rule: {raw!r}", path=path, line=lineno)
        priority = int(m.group("priority"))
        if m.group("button") in rules:
            raise ConfigError(f"duplicate button {m.group('button')!r}", path=path, line=lineno)
        rules[m.group("button")] = (m.group("task"), priority)
    return rules


def load_button_rules(path: str | Path) -> dict[str, tuple[str, int]]:
    p = Path(path)
    return parse_button_rules(p.read_text(encoding="utf-8"), path=str(p))


def load_intent_map(path: str | Path) -> dict[str, tuple[str, int]]:
    """Intent name -> (task name, priority); empty task means not a task."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
        out = {}
        for intent_name, entry in doc.items():
            out[str(intent_name)] = (str(entry["task"]), int(entry["priority"]))
        return out
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad intent map: {exc}", path=str(p)) from exc


class RequestIds:
    """System-wide request-id allocator; ids are unique across requesters."""

    def __init__(self):
        self._n = 0

    def next(self) -> int:
        self._n += 1
        return self._n


class SmartHomeRequester:
    """Turns wall-button presses into task requests."""

    def __init__(
        self,
        bus: MessageBus,
        clock: Clock,
        harmoniser: AgentId,
        rules: dict[str, tuple[str, int]],
        name: str = "smart_home",
        ids: Optional[RequestIds] = None,
    ):
        self.bus = bus
        self.clock = clock
        self.harmoniser = harmoniser
        self.rules = dict(rules)
        self.id = AgentId(Role.REQUESTER, name)
        self.inbox = bus.register_agent(self.id)
        self._ids = ids or RequestIds()
        self.norule_log: list[str] = []

    def press(self, button_id: str) -> Optional[int]:
        """Fire a button; returns the request id, or None if no rule."""
        rule = self.rules.get(button_id)
        if rule is None:
            self.norule_log.append(button_id)
            return None
        task_name, priority = rule
        intent = Intent(
            name=task_name,
            slots={"button": button_id},
            confidence=1.0,
            source=Source.BUTTON,
            timestamp=self.clock.tick,
        )
        request_id = self._ids.next()
        self.bus.send(
            self.id,
            self.harmoniser,
            MessageKind.TASK_REQUEST,
            {
                "request_id": request_id,
                "intent": intent.to_payload(),
                "task_name": task_name,
                "priority": priority,
            },
        )
        return request_id

    def step(self) -> None:
        # Nothing is addressed to this requester; drain defensively.
        while self.bus.poll(self.inbox) is not None:
            pass


class RobotRequester:
    """Maps recognised intents (voice) into task requests.

    Conversation replies pass through unmapped: the annotations from
    the core agent ride along so the harmoniser can route them to the
    asking agent instead of treating them as new work.
    """

    def __init__(
        self,
        bus: MessageBus,
        clock: Clock,
        harmoniser: AgentId,
        intent_map: dict[str, tuple[str, int]],
        name: str = "robot",
        ids: Optional[RequestIds] = None,
    ):
        self.bus = bus
        self.clock = clock
        self.harmoniser = harmoniser
        self.intent_map = dict(intent_map)
        self.id = AgentId(Role.REQUESTER, name)
        self.inbox = bus.register_agent(self.id)
        self._ids = ids or RequestIds()

    def step(self) -> None:
        while True:
            env = self.bus.poll(self.inbox)
            if env is None:
                return
            if env.kind is not MessageKind.INTENT:
                continue
            payload = env.payload
            intent_doc = payload["intent"]
            task_name, priority = self.intent_map.get(intent_doc["name"], ("", 0))
            out = {
                "request_id": self._ids.next(),
                "intent": intent_doc,
                "task_name": task_name,
                "priority": priority,
            }
            if payload.get("reply"):
                out["reply"] = True
                out["unexpected"] = bool(payload.get("unexpected"))
            self.bus.send(self.id, self.harmoniser, MessageKind.TASK_REQUEST, out)


class OperatorRequester:
    """Accepts typed submissions, safe to call from another thread.

    The HTTP service hands work in through a queue; the simulation
    thread drains it on step() so bus access stays single-threaded.
    """

    def __init__(
        self,
        bus: MessageBus,
        clock: Clock,
        harmoniser: AgentId,
        name: str = "operator",
        ids: Optional[RequestIds] = None,
    ):
        self.bus = bus
        self.clock = clock
        self.harmoniser = harmoniser
        self.id = AgentId(Role.REQUESTER, name)
        self.inbox = bus.register_agent(self.id)
        self._ids = ids or RequestIds()
        self._queue: "queue.Queue[dict]" = queue.Queue()

    def submit(self, task_name: str, priority: int, slots: Optional[dict] = None) -> int:
        if not isinstance(priority, int) or priority < 0:
            raise InvalidPriority(f"priority must be a non-negative integer, got {priority!r}")
        request_id = self._ids.next()
        self._queue.put(
            {
                "op": "submit",
                "task_name": task_name,
                "priority": priority,
                "request_id": request_id,
                "slots": {str(k): str(v) for k, v in (slots or {}).items()},
            }
        )
        return request_id

    def cancel_current(self) -> int:
        request_id = self._ids.next()
        self._queue.put({"op": "cancel", "request_id": request_id})
        return request_id

    def step(self) -> None:
        while self.bus.poll(self.inbox) is not None:
            pass
        while True:
            try:
                item = self._queue.get_nowait()
            except queue.Empty:
                return
            if item["op"] == "cancel":
                self.bus.send(
                    self.id,
                    self.harmoniser,
                    MessageKind.TASK_REQUEST,
                    {"request_id": item["request_id"], "op": "cancel"},
                )
                continue
            out = {
                "request_id": item["request_id"],
                "task_name": item["task_name"],
                "priority": item["priority"],
            }
            if item["task_name"]:
                intent = Intent(
                    name=item["task_name"],
                    slots=item.get("slots", {}),
                    confidence=1.0,
                    source=Source.OPERATOR,
                    timestamp=self.clock.tick,
                )
                out["intent"] = intent.to_payload()
            # An empty task name still goes to the harmoniser, which owns
            # the rejection (and the spoken explanation for it).
            self.bus.send(self.id, self.harmoniser, MessageKind.TASK_REQUEST, out)
