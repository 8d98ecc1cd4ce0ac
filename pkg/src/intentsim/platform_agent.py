"""Simulated cloud platform: deterministic text-to-speech and speech-to-intent.

Synthesis is a pure function of (normalized text, voice), so identical
requests yield byte-identical blobs. Recognition is the one stochastic
element in the whole system: a single Bernoulli draw per utterance from
one seeded stream models the acoustic channel, which makes every
experiment replayable from its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import EmptyText
from .hashing import stable_hash64
from .intent import Grammar, Intent, normalize, normalized_text, parse_utterance
from .messaging import AgentId, Inbox, MessageBus, MessageKind, Role


@dataclass(frozen=True)
class WaveBlob:
    bytes: bytes
    duration_ticks: int
    text_key: str


@dataclass(frozen=True)
class SttResult:
    outcome: Optional[Intent]  # None means no match
    channel_success: bool


def text_to_speech(text: str, voice: str) -> WaveBlob:
    """Synthesize a deterministic wave blob for (text, voice)."""
    words = normalize(text)
    if not words:
        raise EmptyText("cannot synthesize empty text")
    key = " ".join(words)
    digest = stable_hash64(f"{key}\0{voice}".encode("utf-8"))
    return WaveBlob(
        bytes=digest.to_bytes(8, "big"),
        duration_ticks=max(1, math.ceil(len(words) / 2)),
        text_key=key,
    )


def speech_to_intent(utterance: str, channel_p: float, rng, grammar: Grammar) -> SttResult:
    """Recognize an utterance over a lossy channel.

    Draws exactly one sample from `rng`; with probability channel_p the
    utterance reaches the recognizer and is parsed against the grammar.
    A failed channel forces a no-match outcome.
    """
    if not 0.0 <= channel_p <= 1.0:
        raise ValueError("channel_p outside [0, 1]")
    if rng.random() >= channel_p:
        return SttResult(outcome=None, channel_success=False)
    intent = parse_utterance(utterance, grammar)
    if intent is not None:
        # Channel quality degrades the reported confidence.
        intent = Intent(
            name=intent.name,
            slots=intent.slots,
            confidence=channel_p,
            source=intent.source,
            timestamp=intent.timestamp,
        )
    return SttResult(outcome=intent, channel_success=True)


class PlatformAgent:
    """Bus-facing wrapper answering TtsRequest and SttRequest envelopes."""

    def __init__(self, bus: MessageBus, grammar: Grammar, rng, name: str = "apl"):
        self.id = AgentId(Role.PLATFORM, name)
        self.bus = bus
        self.grammar = grammar
        self.rng = rng
        self.inbox: Inbox = bus.register_agent(self.id)
        self.tts_calls = 0
        self.stt_calls = 0

    def step(self) -> None:
        while True:
            env = self.bus.poll(self.inbox)
            if env is None:
                return
            if env.kind is MessageKind.TTS_REQUEST:
                self._handle_tts(env)
            elif env.kind is MessageKind.STT_REQUEST:
                self._handle_stt(env)

    def _handle_tts(self, env) -> None:
        self.tts_calls += 1
        blob = text_to_speech(env.payload["text"], env.payload["voice"])
        self.bus.send(
            self.id,
            env.src,
            MessageKind.TTS_RESPONSE,
            {
                "text_key": blob.text_key,
                "voice": env.payload["voice"],
                "wave": blob.bytes.hex(),
                "duration_ticks": blob.duration_ticks,
            },
        )

    def _handle_stt(self, env) -> None:
        self.stt_calls += 1
        result = speech_to_intent(
            env.payload["utterance"], env.payload["channel_p"], self.rng, self.grammar
        )
        payload = {"channel_success": result.channel_success}
        if result.outcome is not None:
            payload["intent"] = result.outcome.to_payload()
        self.bus.send(self.id, env.src, MessageKind.STT_RESPONSE, payload)
