import json
from pathlib import Path

import pytest

from intentsim.errors import ConfigError
from intentsim.system import Simulation, SystemConfig, load_acoustic_model, load_locations

from .conftest import fresh_sim

DATA = Path(__file__).resolve().parents[1] / "src" / "intentsim" / "data"


def test_all_agents_registered_at_boot():
    sim = fresh_sim()
    names = sorted(str(a) for a in sim.bus.registered_agents())
    assert names == [
        "CoreAgent/robot",
        "PlatformAgent/apl",
        "StoreAgent/ars",
        "TaskHarmoniser/robot",
        "TaskRequester/operator",
        "TaskRequester/robot",
        "TaskRequester/smart_home",
    ]


def test_load_locations_and_acoustic_model():
    locations = load_locations(DATA / "locations.json")
    assert "user" in locations and len(locations["user"]) == 3
    model = load_acoustic_model(DATA / "acoustic_model.json")
    assert set(model) == {"robot_spot", "spots"}
    for probs in model["spots"].values():
        assert 0.0 <= probs["internal"] <= 1.0
        assert 0.0 <= probs["external"] <= 1.0


def test_load_locations_rejects_bad_pose(tmp_path):
    p = tmp_path / "loc.json"
    p.write_text('{"dock": [1.0, "Infinity", 0.0]}', encoding="utf-8")
    with pytest.raises(ConfigError):
        load_locations(p)


def test_load_acoustic_model_rejects_bad_probability(tmp_path):
    p = tmp_path / "ac.json"
    p.write_text('{"robot_spot": 0, "spots": {"0": {"internal": 1.5, "external": 0.5}}}', encoding="utf-8")
    with pytest.raises(ConfigError):
        load_acoustic_model(p)


def test_tick_advances_clock_and_steps_agents():
    sim = fresh_sim()
    assert sim.clock.tick == 0
    sim.tick()
    assert sim.clock.tick == 1


def test_injection_happens_before_agent_steps():
    sim = fresh_sim()
    sim.tick(inject=lambda: sim.press_button("call_button_kitchen"))
    lines = [json.loads(l) for l in sim.bus.trace_lines()]
    request = next(l for l in lines if l["kind"] == "TaskRequestMsg")
    # the press lands on tick 1 and the harmoniser consumes it that tick
    assert request["ts"] == 1
    assert sim.harmoniser.phase == "downloading"


def test_full_task_runs_to_completion():
    sim = fresh_sim()
    rid = sim.press_button("call_button_kitchen")
    ticks = sim.run_until_quiet()
    assert ticks < 50
    assert sim.harmoniser.running is None
    assert sim.dynamic_agents == []
    (entry,) = [h for h in sim.harmoniser.task_history if h["request_id"] == rid]
    assert entry["outcome"] == "succeeded"
    assert sim.core.nav_state == "reached"


def test_status_shape_idle():
    sim = fresh_sim()
    sim.run(2)
    status = sim.status()
    assert status["tick"] == 2
    assert status["phase"] == "idle"
    assert status["running"] is None
    assert status["last_decision"] is None
    assert status["conversation_open"] is False
    assert [name for name, _, _ in status["tasks"]] == ["call_robot", "guard", "medicine_reminder"]
    assert status["history"] == []


def test_status_shape_running():
    sim = fresh_sim()
    sim.operator.submit("guard", 4)
    sim.run(6)
    status = sim.status()
    running = status["running"]
    assert running["task_name"] == "guard"
    assert running["priority"] == 4
    assert isinstance(running["fsm_state"], str) and running["fsm_state"]
    assert status["last_decision"]["kind"] == "Accepted"
    assert "human_text" in status["last_decision"]


def test_dynamic_agent_first_acts_tick_after_spawn():
    sim = fresh_sim()
    sim.press_button("call_button_kitchen")
    spawn_tick = None
    for _ in range(12):
        sim.tick()
        if sim.dynamic_agents and spawn_tick is None:
            spawn_tick = sim.clock.tick
            assert sim.dynamic_agents[0].active_from == spawn_tick + 1
            break
    assert spawn_tick is not None
    first_da_send = None
    for line in sim.bus.trace_lines():
        doc = json.loads(line)
        if doc["src"].startswith("DynamicAgent/"):
            first_da_send = doc["ts"]
            break
    assert first_da_send is None  # nothing sent yet on its spawn tick
    sim.tick()
    for line in sim.bus.trace_lines():
        doc = json.loads(line)
        if doc["src"].startswith("DynamicAgent/"):
            first_da_send = doc["ts"]
            break
    assert first_da_send == spawn_tick + 1


def test_done_agents_pruned():
    sim = fresh_sim()
    sim.press_button("call_button_kitchen")
    sim.run_until_quiet()
    assert sim.dynamic_agents == []
    assert not any(a.role.value == "DynamicAgent" for a in sim.bus.registered_agents())


def test_two_sims_same_seed_identical_traces():
    def drive(sim):
        sim.tick(inject=lambda: sim.hear_at_spot("call robot", 3))
        sim.run_until_quiet()
        return "\n".join(sim.bus.trace_lines())

    assert drive(fresh_sim(seed=7)) == drive(fresh_sim(seed=7))


def test_different_seed_can_differ():
    # spot 1 on the internal mic recognises only 30% of utterances,
    # so over a dozen seeds both outcomes occur
    outcomes = set()
    for seed in range(12):
        sim = fresh_sim(seed=seed)
        sim.tick(inject=lambda: sim.hear_at_spot("call robot", 1, mic="internal"))
        sim.run_until_quiet()
        outcomes.add(bool(sim.harmoniser.task_history))
        if len(outcomes) == 2:
            break
    assert outcomes == {True, False}


def test_extra_packages_config():
    from tests.test_store import make_package

    sim = fresh_sim(extra_packages=[make_package(name="fetch_tea", priority=6)])
    names = [name for name, _, _ in sim.store.catalog()]
    assert "fetch_tea" in names
    rid = sim.operator.submit("fetch_tea", 6)
    sim.run_until_quiet()
    (entry,) = [h for h in sim.harmoniser.task_history if h["request_id"] == rid]
    assert entry["outcome"] == "succeeded"


def test_run_until_quiet_reports_tick_count():
    sim = fresh_sim()
    ticks = sim.run_until_quiet(max_ticks=5)
    assert ticks == 1  # nothing to do; quiet after the first tick
