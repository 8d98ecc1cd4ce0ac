"""Scenario harness: scripted runs and the keyword-spotting experiment.

Scenarios are JSON scripts of timed events (utterances, button presses,
operator commands, conversation replies) replayed against a fresh
Simulation. The keyword experiment re-creates the accuracy study as
seeded Bernoulli trials through the recognition channel and renders the
grid as a text table, CSV, and an ASCII heatmap.
"""

from __future__ import annotations

import io
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .intent import Grammar, load_grammar
from .platform_agent import speech_to_intent
from .system import DATA_DIR, Simulation, SystemConfig, load_acoustic_model

KEYWORD = "call robot"
MICS = ("internal", "external")
DRAIN_TICKS = 120


# -- binomial confidence interval ----------------------------------------


def binomial_ci(n: int, p: float, confidence: float = 0.99) -> tuple[int, int]:
    """Central interval of the exact Binomial(n, p) distribution.

    Returns the smallest k-range [lo, hi] such that P(X < lo) <= alpha/2
    and P(X > hi) <= alpha/2, by direct enumeration of the pmf.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    alpha = 1.0 - confidence
    q = 1.0 - p
    cdf = 0.0
    lo, hi = 0, n
    lo_found = False
    for k in range(n + 1):
        pmf = math.comb(n, k) * (p**k) * (q ** (n - k))
        prev = cdf
        cdf += pmf
        if not lo_found and cdf > alpha / 2.0:
            lo = k
            lo_found = True
        if prev < 1.0 - alpha / 2.0 <= cdf:
            hi = k
    return lo, hi


# -- scenario scripts ------------------------------------------------------

EVENT_TYPES = ("utterance", "button", "reply", "operator")


@dataclass(frozen=True)
class ScenarioEvent:
    tick: int
    type: str
    fields: dict


@dataclass(frozen=True)
class ScenarioScript:
    events: tuple[ScenarioEvent, ...]

    @property
    def last_tick(self) -> int:
        return self.events[-1].tick if self.events else 0


def parse_script(doc: dict, path: str = "<script>") -> ScenarioScript:
    events = []
    last_tick = 1
    for i, entry in enumerate(doc.get("events", [])):
        try:
            tick = int(entry["tick"])
            etype = str(entry["type"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"event {i}: {exc}", path=path) from exc
        if etype not in EVENT_TYPES:
            raise ConfigError(f"event {i}: unknown type {etype!r}", path=path)
        if tick < 1:
            raise ConfigError(f"event {i}: tick must be >= 1", path=path)
        if tick < last_tick:
            raise ConfigError(f"event {i}: ticks must be non-decreasing", path=path)
        last_tick = tick
        fields = {k: v for k, v in entry.items() if k not in ("tick", "type")}
        events.append(ScenarioEvent(tick=tick, type=etype, fields=fields))
    return ScenarioScript(events=tuple(events))


def load_script(path: str | Path) -> ScenarioScript:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"bad scenario JSON: {exc}", path=str(p)) from exc
    return parse_script(doc, path=str(p))


@dataclass
class ScenarioResult:
    trace_lines: list[str]
    status: dict
    decision_lines: list[str]
    simulation: Simulation

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace_lines)


def _inject_event(sim: Simulation, event: ScenarioEvent) -> None:
    f = event.fields
    if event.type == "utterance":
        spot = int(f.get("spot", sim.acoustic_model["robot_spot"]))
        sim.hear_at_spot(str(f["text"]), spot, f.get("mic"))
    elif event.type == "button":
        sim.press_button(str(f["button"]))
    elif event.type == "reply":
        # Replies are spoken next to the robot; the channel is ideal so
        # scripted conversations are reproducible.
        sim.hear(str(f["text"]), 1.0)
    elif event.type == "operator":
        if f.get("op") == "cancel":
            sim.operator.cancel_current()
        else:
            sim.operator.submit(str(f["task"]), int(f["priority"]))


def run_scenario(
    script: ScenarioScript,
    config: Optional[SystemConfig] = None,
    seed: Optional[int] = None,
    drain_ticks: int = DRAIN_TICKS,
) -> ScenarioResult:
    """Replay a script on a fresh system and return its artifacts."""
    cfg = config or SystemConfig()
    if seed is not None:
        cfg.seed = seed
    sim = Simulation(cfg)
    queue = list(script.events)
    horizon = script.last_tick
    while sim.clock.tick < horizon or queue:
        due = [e for e in queue if e.tick == sim.clock.tick + 1]
        queue = [e for e in queue if e.tick != sim.clock.tick + 1]
        sim.tick(inject=(lambda evs=due: [_inject_event(sim, e) for e in evs]) if due else None)
    sim.run_until_quiet(drain_ticks)
    return ScenarioResult(
        trace_lines=sim.bus.trace_lines(),
        status=sim.status(),
        decision_lines=sim.harmoniser.decision_log_lines(),
        simulation=sim,
    )


# -- keyword-spotting experiment -------------------------------------------


@dataclass
class ExperimentConfig:
    n_spots: int = 12
    n_users: int = 5
    n_reps: int = 10
    seed: int = 42
    model: dict = field(default_factory=lambda: load_acoustic_model(DATA_DIR / "acoustic_model.json"))
    keyword: str = KEYWORD


@dataclass(frozen=True)
class ExperimentGrid:
    """successes per (spot_id, mic); trials is constant per cell."""

    cells: dict[tuple[int, str], tuple[int, int]]

    def accuracy(self, spot: int, mic: str) -> float:
        successes, trials = self.cells[(spot, mic)]
        return successes / trials

    @property
    def total_trials(self) -> int:
        return sum(t for _, t in self.cells.values())


def run_keyword_experiment(cfg: ExperimentConfig, grammar: Optional[Grammar] = None) -> ExperimentGrid:
    """Draw n_users * n_reps recognition trials per spot and microphone.

    Iteration order (spot, then mic, then user, then rep) is part of the
    contract: one RNG draw per trial, so reports reproduce bit-exactly
    for a given seed.
    """
    grammar = grammar or load_grammar(DATA_DIR / "grammar.txt")
    rng = random.Random(cfg.seed)
    spots = cfg.model["spots"]
    cells: dict[tuple[int, str], tuple[int, int]] = {}
    trials = cfg.n_users * cfg.n_reps
    for spot in sorted(spots)[: cfg.n_spots]:
        for mic in MICS:
            p = spots[spot][mic]
            successes = 0
            for _user in range(cfg.n_users):
                for _rep in range(cfg.n_reps):
                    result = speech_to_intent(cfg.keyword, p, rng, grammar)
                    if result.outcome is not None:
                        successes += 1
            cells[(spot, mic)] = (successes, trials)
    return ExperimentGrid(cells=cells)


# -- reporting ------------------------------------------------------------

HEATMAP_GLYPHS = ((0.25, "."), (0.50, "-"), (0.75, "+"), (1.01, "#"))


def _glyph(accuracy: float) -> str:
    for upper, glyph in HEATMAP_GLYPHS:
        if accuracy < upper:
            return glyph
    return "#"


@dataclass(frozen=True)
class Report:
    table: str
    csv: str
    heatmap: str

    def text(self) -> str:
        return f"{self.table}\n{self.heatmap}\n"


def render_report(grid: ExperimentGrid) -> Report:
    spots = sorted({spot for spot, _ in grid.cells})

    out = io.StringIO()
    out.write(f"{'spot':>4}  {'mic':>8}  {'successes':>9}  {'trials':>6}  {'accuracy':>8}\n")
    csv_out = io.StringIO()
    csv_out.write("spot_id,mic,successes,trials,accuracy\n")
    for spot in spots:
        for mic in MICS:
            successes, trials = grid.cells[(spot, mic)]
            acc = successes / trials
            out.write(f"{spot:>4}  {mic:>8}  {successes:>9}  {trials:>6}  {acc:>8.3f}\n")
            csv_out.write(f"{spot},{mic},{successes},{trials},{acc:.4f}\n")

    heat = io.StringIO()
    heat.write("accuracy heatmap (. <25%  - <50%  + <75%  # >=75%)\n")
    heat.write("spot      " + " ".join(f"{s:>2}" for s in spots) + "\n")
    for mic in MICS:
        row = "  ".join(_glyph(grid.accuracy(s, mic)) for s in spots)
        heat.write(f"{mic:>8}   {row}\n")

    return Report(table=out.getvalue(), csv=csv_out.getvalue(), heatmap=heat.getvalue())


def parse_report_csv(text: str) -> ExperimentGrid:
    """Inverse of render_report's CSV (accuracy column is derived)."""
    cells = {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header, rows = lines[0], lines[1:]
    if header != "spot_id,mic,successes,trials,accuracy":
        raise ValueError(f"unexpected CSV header: {header!r}")
    for row in rows:
        spot_s, mic, successes_s, trials_s, _acc = row.split(",")
        cells[(int(spot_s), mic)] = (int(successes_s), int(trials_s))
    return ExperimentGrid(cells=cells)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
        cfg = ExperimentConfig()
        if "n_spots" in doc:
            cfg.n_spots = int(doc["n_spots"])
        if "n_users" in doc:
            cfg.n_users = int(doc["n_users"])
        if "n_reps" in doc:
            cfg.n_reps = int(doc["n_reps"])
        if "seed" in doc:
            cfg.seed = int(doc["seed"])
        if "keyword" in doc:
            cfg.keyword = str(doc["keyword"])
        if "model" in doc:
            cfg.model = load_acoustic_model_doc(doc["model"], path=str(p))
        return cfg
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad experiment config: {exc}", path=str(p)) from exc


def load_acoustic_model_doc(doc: dict, path: str = "<config>") -> dict:
    spots = {}
    try:
        for spot_id, probs in doc["spots"].items():
            spots[int(spot_id)] = {
                "internal": float(probs["internal"]),
                "external": float(probs["external"]),
            }
        return {"robot_spot": int(doc["robot_spot"]), "spots": spots}
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad acoustic model: {exc}", path=path) from exc
