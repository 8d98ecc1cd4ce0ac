import pytest

from intentsim.messaging import AgentId, Clock, MessageBus, Role
from intentsim.system import Simulation, SystemConfig


@pytest.fixture
def bus():
    return MessageBus(Clock())


@pytest.fixture
def sim():
    return Simulation(SystemConfig(seed=42))


def fresh_sim(seed=42, **kwargs) -> Simulation:
    return Simulation(SystemConfig(seed=seed, **kwargs))


def register_system_agents(bus: MessageBus) -> dict[str, AgentId]:
    """All eight agents of the assembled system on one bus."""
    ids = {
        "core": AgentId(Role.CORE, "robot"),
        "platform": AgentId(Role.PLATFORM, "apl"),
        "tr_smart_home": AgentId(Role.REQUESTER, "smart_home"),
        "tr_robot": AgentId(Role.REQUESTER, "robot"),
        "tr_operator": AgentId(Role.REQUESTER, "operator"),
        "harmoniser": AgentId(Role.HARMONISER, "robot"),
        "store": AgentId(Role.STORE, "ars"),
        "dynamic": AgentId(Role.DYNAMIC, "task"),
    }
    for agent_id in ids.values():
        bus.register_agent(agent_id)
    return ids
