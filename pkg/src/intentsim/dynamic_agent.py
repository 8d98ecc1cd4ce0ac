"""Dynamic Agent runtime: declarative state machines executing one task.

A task package carries a state-machine document instead of executable
code; this runtime interprets it. Each state performs one action (speak,
converse, navigate, move body, wait) through core-agent messages and
routes the action's outcome through the state's transition map until a
terminal outcome is reached, which is reported to the harmoniser.

A state may alternatively hold a nested machine; the nested machine's
terminal outcomes become the parent state's outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from .errors import InvalidFsm
from .messaging import AgentId, MessageBus, MessageKind, Role

if TYPE_CHECKING:
    from .store import TaskPackage

REQUIRED_TERMINALS = frozenset({"succeeded", "aborted", "preempted"})

TORSO_RANGE = (0.0, 0.35)
PAN_RANGE = (-1.3, 1.3)
TILT_RANGE = (-0.98, 0.72)

ACTION_KINDS = ("say", "ask", "navigate", "body", "wait")


@dataclass(frozen=True)
class Action:
    kind: str
    text: str = ""
    expected: tuple[str, ...] = ()
    timeout: int = 0
    to: object = None  # location name or (x, y, theta)
    torso: float = 0.0
    pan: float = 0.0
    tilt: float = 0.0
    ticks: int = 0

    def outcomes(self) -> frozenset[str]:
        if self.kind == "ask":
            return frozenset(self.expected) | {"timeout", "unexpected"}
        return frozenset({"succeeded"})

    def to_doc(self) -> dict:
        if self.kind == "say":
            return {"kind": "say", "text": self.text}
        if self.kind == "ask":
            return {
                "kind": "ask",
                "text": self.text,
                "expected": sorted(self.expected),
                "timeout": self.timeout,
            }
        if self.kind == "navigate":
            to = self.to if isinstance(self.to, str) else list(self.to)
            return {"kind": "navigate", "to": to}
        if self.kind == "body":
            return {"kind": "body", "torso": self.torso, "pan": self.pan, "tilt": self.tilt}
        return {"kind": "wait", "ticks": self.ticks}


@dataclass(frozen=True)
class State:
    action: Optional[Action]
    sub: Optional["FsmDefinition"]
    transitions: dict[str, str]

    def outcomes(self) -> frozenset[str]:
        if self.sub is not None:
            return frozenset(self.sub.terminals)
        return self.action.outcomes()

    def to_doc(self) -> dict:
        doc: dict = {"transitions": dict(self.transitions)}
        if self.sub is not None:
            doc["sub"] = self.sub.to_doc()
        else:
            doc["action"] = self.action.to_doc()
        return doc


@dataclass(frozen=True)
class FsmDefinition:
    states: dict[str, State]
    initial: str
    terminals: frozenset[str]

    def to_doc(self) -> dict:
        return {
            "initial": self.initial,
            "terminals": sorted(self.terminals),
            "states": {name: state.to_doc() for name, state in self.states.items()},
        }


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code} at {self.where}: {self.detail}"


def parse_action(doc: dict) -> Action:
    kind = doc.get("kind")
    if kind == "say":
        return Action(kind="say", text=str(doc["text"]))
    if kind == "ask":
        return Action(
            kind="ask",
            text=str(doc["text"]),
            expected=tuple(doc.get("expected", ())),
            timeout=int(doc["timeout"]),
        )
    if kind == "navigate":
        to = doc["to"]
        if not isinstance(to, str):
            to = tuple(float(v) for v in to)
            if len(to) != 3:
                raise ValueError("navigate pose needs [x, y, theta]")
        return Action(kind="navigate", to=to)
    if kind == "body":
        return Action(
            kind="body",
            torso=float(doc["torso"]),
            pan=float(doc["pan"]),
            tilt=float(doc["tilt"]),
        )
    if kind == "wait":
        return Action(kind="wait", ticks=int(doc["ticks"]))
    raise ValueError(f"unknown action kind {kind!r}")


def parse_fsm(doc: dict) -> FsmDefinition:
    """Build an FsmDefinition from its document form.

    Raises ValueError on structural problems; semantic problems are left
    to validate().
    """
    states = {}
    for name, sdoc in dict(doc["states"]).items():
        transitions = {str(k): str(v) for k, v in dict(sdoc.get("transitions", {})).items()}
        if "sub" in sdoc:
            states[name] = State(action=None, sub=parse_fsm(sdoc["sub"]), transitions=transitions)
        else:
            states[name] = State(action=parse_action(sdoc["action"]), sub=None, transitions=transitions)
    return FsmDefinition(
        states=states,
        initial=str(doc["initial"]),
        terminals=frozenset(str(t) for t in doc.get("terminals", ())),
    )


def _check_action(name: str, action: Action, out: list[Violation]) -> None:
    def bad(detail):
        out.append(Violation("BadAction", name, detail))

    if action.kind not in ACTION_KINDS:
        bad(f"unknown kind {action.kind!r}")
        return
    if action.kind in ("say", "ask") and not action.text.strip():
        bad("empty text")
    if action.kind == "ask" and action.timeout < 1:
        bad("ask timeout must be >= 1")
    if action.kind == "wait" and action.ticks < 1:
        bad("wait ticks must be >= 1")
    if action.kind == "navigate" and not isinstance(action.to, str):
        if any(not math.isfinite(v) for v in action.to):
            bad("non-finite navigation pose")
    if action.kind == "body":
        for fname, value, (lo, hi) in (
            ("torso", action.torso, TORSO_RANGE),
            ("pan", action.pan, PAN_RANGE),
            ("tilt", action.tilt, TILT_RANGE),
        ):
            if not (math.isfinite(value) and lo <= value <= hi):
                bad(f"{fname} value {value} outside [{lo}, {hi}]")


def validate(fsm: FsmDefinition, _prefix: str = "") -> list[Violation]:
    """Check all structural invariants; violations are values, not errors."""
    out: list[Violation] = []
    here = _prefix or "<fsm>"
    if not fsm.states:
        out.append(Violation("EmptyStates", here, "no states defined"))
        return out
    missing = REQUIRED_TERMINALS - fsm.terminals
    if missing:
        out.append(Violation("MissingTerminals", here, f"terminals must include {sorted(missing)}"))
    if fsm.initial not in fsm.states:
        out.append(Violation("MissingInitial", here, f"initial state {fsm.initial!r} not defined"))
    ambiguous = fsm.terminals & set(fsm.states)
    for name in sorted(ambiguous):
        out.append(Violation("AmbiguousName", here, f"{name!r} is both a state and a terminal"))
    for name, state in fsm.states.items():
        where = f"{_prefix}{name}"
        if state.action is not None:
            _check_action(where, state.action, out)
        else:
            out.extend(validate(state.sub, _prefix=f"{where}/"))
        for outcome, target in state.transitions.items():
            if target not in fsm.states and target not in fsm.terminals:
                out.append(
                    Violation("DanglingTarget", where, f"outcome {outcome!r} -> unknown {target!r}")
                )
        uncovered = state.outcomes() - set(state.transitions)
        for outcome in sorted(uncovered):
            out.append(Violation("UncoveredOutcome", where, f"no transition for {outcome!r}"))
    return out


class DynamicAgent:
    """A live agent executing one task package's state machine."""

    def __init__(
        self,
        bus: MessageBus,
        package: "TaskPackage",
        priority: int,
        harmoniser: AgentId,
        core: AgentId,
        locations: dict[str, tuple[float, float, float]],
    ):
        self.bus = bus
        self.package = package
        self.priority = priority
        self.harmoniser = harmoniser
        self.core = core
        self.locations = dict(locations)
        self.id = AgentId(Role.DYNAMIC, package.name)
        self.inbox = bus.register_agent(self.id)
        self.active_from = 0  # tick gate; the spawner sets spawn_tick + 1
        self.visited: list[str] = []
        self._stack: list[tuple[FsmDefinition, str]] = []
        self._started = False
        self._awaiting: Optional[str] = None  # "say" | "ask" | "navigate" | "body"
        self._wait_remaining: Optional[int] = None
        self.outcome: Optional[str] = None

    # -- introspection ---------------------------------------------------

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def state_path(self) -> str:
        return "/".join(name for _, name in self._stack)

    # -- lifecycle ---------------------------------------------------

    def step(self) -> None:
        if self.done:
            return
        while True:
            env = self.bus.poll(self.inbox)
            if env is None:
                break
            self._handle(env)
            if self.done:
                return
        if self._wait_remaining is not None:
            self._wait_remaining -= 1
            if self._wait_remaining <= 0:
                self._wait_remaining = None
                self._complete("succeeded")

    def _handle(self, env) -> None:
        if env.kind is MessageKind.LIFECYCLE:
            cmd = env.payload.get("cmd")
            if cmd == "start" and not self._started:
                self._started = True
                self._enter(self.package.fsm, self.package.fsm.initial)
            elif cmd == "terminate":
                self.terminate()
        elif env.kind is MessageKind.ACK:
            self._handle_core_ack(env.payload)
        elif env.kind is MessageKind.INTENT:
            self._handle_reply(env.payload)

    def _handle_core_ack(self, payload: dict) -> None:
        cmd = payload.get("cmd")
        if cmd != self._awaiting:
            return
        self._awaiting = None
        if cmd == "ask" and payload.get("outcome") == "timeout":
            self.bus.send(self.id, self.harmoniser, MessageKind.ACK, {"event": "conversation_closed"})
            self._complete("timeout")
        else:
            self._complete(payload.get("outcome", "succeeded"))

    def _handle_reply(self, payload: dict) -> None:
        if self._awaiting != "ask":
            return
        self._awaiting = None
        intent = payload.get("intent", {})
        outcome = "unexpected" if payload.get("unexpected") else intent.get("name", "unexpected")
        self._complete(outcome)

    def terminate(self) -> str:
        """Cancel the current action and report "preempted". Idempotent."""
        if self.done:
            return self.outcome
        if self._awaiting == "navigate":
            self.bus.send(self.id, self.core, MessageKind.NAV_GOAL, {"cancel": True})
        elif self._awaiting == "ask":
            self.bus.send(self.id, self.core, MessageKind.ASK, {"cancel": True})
        self._awaiting = None
        self._wait_remaining = None
        self._finish("preempted")
        return self.outcome

    def force_remove(self) -> None:
        """Drop the agent without the goodbye handshake.

        Used by the harmoniser when a graceful terminate blows its
        deadline; no terminal report is sent because the supervisor is
        the one pulling the plug and does its own bookkeeping.
        """
        if self.done:
            return
        self.outcome = "preempted"
        self._awaiting = None
        self._wait_remaining = None
        if self.bus.is_registered(self.id):
            self.bus.deregister_agent(self.id)

    # -- state machine interpretation ---------------------------------

    def _enter(self, machine: FsmDefinition, name: str) -> None:
        self._stack.append((machine, name))
        self.visited.append(self.state_path())
        state = machine.states[name]
        if state.sub is not None:
            self._enter(state.sub, state.sub.initial)
        else:
            self._issue(state.action)

    def _issue(self, action: Action) -> None:
        if action.kind == "say":
            self._awaiting = "say"
            self.bus.send(self.id, self.core, MessageKind.SAY, {"text": action.text, "voice": "default"})
        elif action.kind == "ask":
            self._awaiting = "ask"
            self.bus.send(
                self.id,
                self.core,
                MessageKind.ASK,
                {
                    "text": action.text,
                    "voice": "default",
                    "expected": sorted(action.expected),
                    "timeout": action.timeout,
                },
            )
            self.bus.send(self.id, self.harmoniser, MessageKind.ACK, {"event": "conversation_open"})
        elif action.kind == "navigate":
            pose = action.to
            if isinstance(pose, str):
                resolved = self.locations.get(pose)
                if resolved is None:
                    # Unresolvable symbolic goal: the task cannot proceed.
                    self._finish("aborted")
                    return
                pose = resolved
            self._awaiting = "navigate"
            self.bus.send(
                self.id,
                self.core,
                MessageKind.NAV_GOAL,
                {"x": pose[0], "y": pose[1], "theta": pose[2]},
            )
        elif action.kind == "body":
            self._awaiting = "body"
            self.bus.send(
                self.id,
                self.core,
                MessageKind.BODY,
                {"torso": action.torso, "pan": action.pan, "tilt": action.tilt},
            )
        elif action.kind == "wait":
            self._wait_remaining = action.ticks

    def _complete(self, outcome: str) -> None:
        machine, name = self._stack[-1]
        state = machine.states[name]
        target = state.transitions.get(outcome)
        if target is None:
            # Validation guarantees coverage; an uncovered outcome at
            # runtime means the environment produced something illegal.
            self._finish("aborted")
            return
        self._stack.pop()
        if target in machine.states:
            self._enter(machine, target)
        elif len(self._stack) > 0:
            # Terminal of a nested machine becomes the parent outcome.
            self._complete(target)
        else:
            self._finish(target)

    def _finish(self, outcome: str) -> None:
        self.outcome = outcome
        self.bus.send(
            self.id,
            self.harmoniser,
            MessageKind.ACK,
            {"event": "terminal", "outcome": outcome, "package": self.package.name},
        )
        self.bus.deregister_agent(self.id)


def spawn(
    bus: MessageBus,
    package: "TaskPackage",
    priority: int,
    harmoniser: AgentId,
    core: AgentId,
    locations: dict[str, tuple[float, float, float]],
) -> DynamicAgent:
    """Create and register a Dynamic Agent for a validated package.

    Execution starts at the initial state once the start lifecycle
    command is delivered (the tick after spawning).
    """
    violations = validate(package.fsm)
    if violations:
        raise InvalidFsm(violations)
    return DynamicAgent(bus, package, priority, harmoniser, core, locations)
