"""Intent data model and the deterministic utterance parser.

The parser is an exact-token grammar matcher standing in for a cloud
speech pipeline: every (text, grammar) pair maps to exactly one outcome,
either an Intent or None, with no randomness anywhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import ConfigError

_PUNCT_RE = re.compile(r"[^a-z0-9\s]")
_SLOT_RE = re.compile(r"^<([a-z_][a-z0-9_]*)>$")


class Source(Enum):
    VOICE = "voice"
    BUTTON = "button"
    OPERATOR = "operator"


@dataclass(frozen=True)
class Intent:
    """Interpretation of a human input: a name plus slot bindings.

    Button and operator inputs are unambiguous, so their confidence is
    always 1.0; voice confidence may be degraded by the channel.
    """

    name: str
    slots: dict[str, str] = field(default_factory=dict)
    confidence: float = 1.0
    source: Source = Source.VOICE
    timestamp: int = 0

    def __post_init__(self):
        if not self.name:
            raise ValueError("intent name must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence outside [0, 1]")
        if self.source in (Source.BUTTON, Source.OPERATOR) and self.confidence != 1.0:
            raise ValueError(f"{self.source.value} intents always have confidence 1.0")

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "slots": dict(self.slots),
            "confidence": self.confidence,
            "source": self.source.value,
            "ts": self.timestamp,
        }

    @classmethod
    def from_payload(cls, doc: dict) -> "Intent":
        return cls(
            name=doc["name"],
            slots=dict(doc.get("slots", {})),
            confidence=doc.get("confidence", 1.0),
            source=Source(doc.get("source", "voice")),
            timestamp=doc.get("ts", 0),
        )


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _PUNCT_RE.sub(" ", text.lower()).split()


def normalized_text(text: str) -> str:
    return " ".join(normalize(text))


@dataclass(frozen=True)
class Rule:
    pattern: tuple[str, ...]  # literal tokens and "<slot>" placeholders
    intent_name: str

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("rule pattern must be non-empty")
        seen = set()
        for token in self.pattern:
            m = _SLOT_RE.match(token)
            if m:
                if m.group(1) in seen:
                    raise ValueError(f"duplicate slot <{m.group(1)}> in pattern")
                seen.add(m.group(1))


class Grammar:
    """Ordered rule list; the first matching rule wins."""

    def __init__(self, rules: list[Rule]):
        self.rules = list(rules)

    def __len__(self) -> int:
        return len(self.rules)


def _match_rule(rule: Rule, tokens: list[str]) -> Optional[dict[str, str]]:
    # A placeholder binds exactly one token, except in final position
    # where it greedily takes all remaining tokens. The whole token
    # sequence must be consumed.
    pattern = rule.pattern
    slots: dict[str, str] = {}
    i = 0
    for pos, pat in enumerate(pattern):
        m = _SLOT_RE.match(pat)
        last = pos == len(pattern) - 1
        if m:
            if i >= len(tokens):
                return None
            if last:
                slots[m.group(1)] = " ".join(tokens[i:])
                i = len(tokens)
            else:
                slots[m.group(1)] = tokens[i]
                i += 1
        else:
            if i >= len(tokens) or tokens[i] != pat:
                return None
            i += 1
    if i != len(tokens):
        return None
    return slots


def parse_utterance(text: str, grammar: Grammar) -> Optional[Intent]:
    """Match normalized tokens against the grammar.

    Returns an Intent with confidence 1.0 on the first rule that matches,
    or None when nothing does (a value, not an error).
    """
    tokens = normalize(text)
    if not tokens:
        return None
    for rule in grammar.rules:
        slots = _match_rule(rule, tokens)
        if slots is not None:
            return Intent(name=rule.intent_name, slots=slots, confidence=1.0)
    return None


def instantiate(rule: Rule, slot_values: dict[str, str]) -> str:
    """Render a rule's pattern back to an utterance (test/round-trip aid)."""
    out = []
    for token in rule.pattern:
        m = _SLOT_RE.match(token)
        out.append(slot_values[m.group(1)] if m else token)
    return " ".join(out)


def parse_grammar_text(text: str, path: str = "<grammar>") -> Grammar:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=>" not in line:
            raise ConfigError("expected 'pattern => intent_name'", path, lineno)
        lhs, rhs = (part.strip() for part in line.split("=>", 1))
        intent_name = rhs
        if not intent_name or " " in intent_name:
            raise ConfigError(f"bad intent name {rhs!r}", path, lineno)
        tokens = tuple(lhs.split())
        if not tokens:
            raise ConfigError("empty pattern", path, lineno)
        for tok in tokens:
            if tok.startswith("<") and not _SLOT_RE.match(tok):
                raise ConfigError(f"bad slot placeholder {tok!r}", path, lineno)
        try:
            rules.append(Rule(pattern=tokens, intent_name=intent_name))
        except ValueError as exc:
            raise ConfigError(str(exc), path, lineno) from exc
    return Grammar(rules)


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar_text(fh.read(), str(path))
