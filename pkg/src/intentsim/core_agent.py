"""Core agent: the robot-resident services.

Owns the speech pipeline (synthesis cache, playback log, listening
windows for conversations), the navigation stack, and the body posture,
and bridges captured speech to the requester side as intents. All
hardware is simulated, but the interfaces mirror what a real base would
expose: goals go in, progress happens per tick, completion comes back
as a message.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Optional

from .errors import EmptyText, NonFiniteGoal, OutOfRange
from .intent import Intent, normalized_text
from .messaging import AgentId, Clock, MessageBus, MessageKind, Role

SPEED = 0.5  # metres per tick
ARRIVAL_EPS = 0.01

TORSO_RANGE = (0.0, 0.35)
PAN_RANGE = (-1.3, 1.3)
TILT_RANGE = (-0.98, 0.72)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass
class _Listening:
    expected: frozenset[str]
    deadline: int
    reply_to: AgentId


@dataclass
class _NavJob:
    goal: Pose
    reply_to: Optional[AgentId]


class CoreAgent:
    """Robot services behind one inbox; stepped once per tick."""

    def __init__(
        self,
        bus: MessageBus,
        clock: Clock,
        platform: AgentId,
        requester: AgentId,
        name: str = "robot",
        start_pose: Pose = Pose(0.0, 0.0, 0.0),
    ):
        self.bus = bus
        self.clock = clock
        self.platform = platform
        self.requester = requester
        self.id = AgentId(Role.CORE, name)
        self.inbox = bus.register_agent(self.id)
        self.pose = start_pose
        self.torso = 0.0
        self.pan = 0.0
        self.tilt = 0.0
        self.audible_log: list[dict] = []
        self._cache: dict[str, dict] = {}  # key -> TtsResponse payload
        self._inflight: dict[str, list[Optional[AgentId]]] = {}
        self._listening: Optional[_Listening] = None
        self._nav: Optional[_NavJob] = None
        self._nav_status = "idle"  # idle | moving | reached
        self.tts_requests_sent = 0
        self.cache_hits = 0
        self.cache_misses = 0

    # -- speech output -------------------------------------------------

    @staticmethod
    def cache_key(text: str, voice: str) -> str:
        return normalized_text(text) + "\0" + voice

    def say(self, text: str, voice: str = "default", reply_to: Optional[AgentId] = None) -> None:
        """Queue speech; playback is logged once a wave exists.

        The cache is keyed by normalized text + voice, and a request
        already in flight is joined rather than repeated, so each
        distinct key costs at most one synthesis round-trip ever.
        """
        if not text.strip():
            raise EmptyText("cannot say empty text")
        key = self.cache_key(text, voice)
        if key in self._cache:
            self.cache_hits += 1
            self._record_playback(self._cache[key], cached=True)
            self._ack(reply_to, "say")
            return
        if key in self._inflight:
            # A synthesis round-trip for this key is already underway;
            # piggyback instead of paying for another one.
            self.cache_hits += 1
            self._inflight[key].append(reply_to)
            return
        self.cache_misses += 1
        self._inflight[key] = [reply_to]
        self.tts_requests_sent += 1
        self.bus.send(self.id, self.platform, MessageKind.TTS_REQUEST, {"text": text, "voice": voice})

    def _record_playback(self, wave: dict, cached: bool) -> None:
        self.audible_log.append(
            {
                "tick": self.clock.tick,
                "event": "playback",
                "text_key": wave["text_key"],
                "voice": wave["voice"],
                "duration_ticks": wave["duration_ticks"],
                "cached": cached,
            }
        )

    def _on_tts_response(self, payload: dict) -> None:
        key = payload["text_key"] + "\0" + payload["voice"]
        self._cache[key] = payload
        for waiter in self._inflight.pop(key, []):
            self._record_playback(payload, cached=False)
            self._ack(waiter, "say")

    # -- conversations ---------------------------------------------------

    def ask(self, text: str, expected: list[str], timeout: int, reply_to: AgentId, voice: str = "default") -> None:
        """Speak a prompt, then listen until a reply or the deadline."""
        self.say(text, voice, reply_to=None)
        self._listening = _Listening(
            expected=frozenset(expected),
            deadline=self.clock.tick + timeout,
            reply_to=reply_to,
        )

    def cancel_ask(self) -> None:
        self._listening = None

    # -- speech input ----------------------------------------------------

    def capture(self, utterance: str, channel_p: float) -> None:
        """Forward raw audio (here: text plus channel quality) upstream."""
        self.bus.send(
            self.id,
            self.platform,
            MessageKind.STT_REQUEST,
            {"utterance": utterance, "channel_p": channel_p},
        )

    def _on_stt_response(self, payload: dict) -> None:
        if "intent" not in payload:
            self.audible_log.append(
                {
                    "tick": self.clock.tick,
                    "event": "no_match",
                    "channel_success": payload["channel_success"],
                }
            )
            return
        intent = Intent.from_payload(payload["intent"])
        intent = dataclasses.replace(intent, timestamp=self.clock.tick)
        out: dict = {"intent": intent.to_payload()}
        if self._listening is not None:
            out["reply"] = True
            out["unexpected"] = intent.name not in self._listening.expected
            self._listening = None
        self.bus.send(self.id, self.requester, MessageKind.INTENT, out)

    # -- navigation ------------------------------------------------------

    def set_navigation_goal(self, goal: Pose, reply_to: Optional[AgentId] = None) -> None:
        if not all(math.isfinite(v) for v in (goal.x, goal.y, goal.theta)):
            raise NonFiniteGoal(f"navigation goal {goal} is not finite")
        self._nav = _NavJob(goal=goal, reply_to=reply_to)
        self._nav_status = "moving"

    def cancel_navigation(self) -> None:
        self._nav = None
        self._nav_status = "idle"

    @property
    def nav_state(self) -> str:
        return self._nav_status

    @property
    def nav_goal(self) -> Optional[Pose]:
        return self._nav.goal if self._nav is not None else None

    def _advance_navigation(self) -> None:
        if self._nav is None:
            return
        goal = self._nav.goal
        dist = self.pose.distance_to(goal)
        if dist >= ARRIVAL_EPS:
            step = min(SPEED, dist)
            frac = step / dist
            self.pose = Pose(
                x=self.pose.x + (goal.x - self.pose.x) * frac,
                y=self.pose.y + (goal.y - self.pose.y) * frac,
                theta=self.pose.theta,
            )
            dist = self.pose.distance_to(goal)
        if dist < ARRIVAL_EPS:
            self.pose = goal
            reply_to = self._nav.reply_to
            self._nav = None
            self._nav_status = "reached"
            self._ack(reply_to, "navigate")

    # -- body ------------------------------------------------------------

    def set_body(self, torso: float, pan: float, tilt: float) -> None:
        """Set all three joints at once; rejects leave them untouched."""
        for name, value, (lo, hi) in (
            ("torso", torso, TORSO_RANGE),
            ("pan", pan, PAN_RANGE),
            ("tilt", tilt, TILT_RANGE),
        ):
            if not (math.isfinite(value) and lo <= value <= hi):
                raise OutOfRange(name, f"{name} value {value} outside [{lo}, {hi}]")
        self.torso = torso
        self.pan = pan
        self.tilt = tilt

    def audible_log_lines(self) -> list[str]:
        return [json.dumps(entry, sort_keys=True) for entry in self.audible_log]

    # -- bus plumbing ------------------------------------------------------

    def _ack(self, reply_to: Optional[AgentId], cmd: str, outcome: str = "succeeded") -> None:
        if reply_to is None:
            return
        try:
            self.bus.send(self.id, reply_to, MessageKind.ACK, {"cmd": cmd, "outcome": outcome})
        except Exception:
            # The waiter terminated before its action completed; the
            # ack has nowhere to go and that is fine.
            pass

    def step(self) -> None:
        while True:
            env = self.bus.poll(self.inbox)
            if env is None:
                break
            self._handle(env)
        self._advance_navigation()
        if self._listening is not None and self.clock.tick >= self._listening.deadline:
            reply_to = self._listening.reply_to
            self._listening = None
            self._ack(reply_to, "ask", outcome="timeout")

    def _handle(self, env) -> None:
        kind = env.kind
        payload = env.payload
        if kind is MessageKind.SAY:
            self.say(payload["text"], payload.get("voice", "default"), reply_to=env.src)
        elif kind is MessageKind.ASK:
            if payload.get("cancel"):
                self.cancel_ask()
            else:
                self.ask(
                    payload["text"],
                    payload.get("expected", []),
                    int(payload["timeout"]),
                    reply_to=env.src,
                    voice=payload.get("voice", "default"),
                )
        elif kind is MessageKind.NAV_GOAL:
            if payload.get("cancel"):
                self.cancel_navigation()
            else:
                goal = Pose(float(payload["x"]), float(payload["y"]), float(payload["theta"]))
                self.set_navigation_goal(goal, reply_to=env.src)
        elif kind is MessageKind.BODY:
            self.set_body(float(payload["torso"]), float(payload["pan"]), float(payload["tilt"]))
            self._ack(env.src, "body")
        elif kind is MessageKind.TTS_RESPONSE:
            self._on_tts_response(payload)
        elif kind is MessageKind.STT_RESPONSE:
            self._on_stt_response(payload)
        elif kind is MessageKind.FAILURE_NOTICE:
            self.say(payload["text"], payload.get("voice", "default"), reply_to=None)
