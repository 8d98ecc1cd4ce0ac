"""HTTP surface of the operator service, exercised over real sockets."""

import json
import time
import urllib.error
import urllib.request

import pytest

from intentsim.service import OperatorService

from .conftest import fresh_sim


@pytest.fixture
def service():
    svc = OperatorService(fresh_sim(), port=0, tick_hz=200.0)
    svc.start()
    yield svc
    svc.stop()


def call(svc, method, path, body=None):
    data = None if body is None else json.dumps(body).encode("utf-8")
    req = urllib.request.Request(
        f"http://127.0.0.1:{svc.port}{path}",
        data=data,
        method=method,
        headers={"Content-Type": "application/json"} if data else {},
    )
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode("utf-8") or "{}"), dict(resp.headers)
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode("utf-8") or "{}"), dict(err.headers)


def wait_idle(svc, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        with svc.sim.lock:
            h = svc.sim.harmoniser
            if h.running is None and h.phase == "idle" and h.queued_requests == 0:
                return
        time.sleep(0.02)
    raise TimeoutError("simulation never went idle")


def test_status_snapshot(service):
    code, doc, headers = call(service, "GET", "/status")
    assert code == 200
    assert headers["Content-Type"] == "application/json"
    assert headers["Access-Control-Allow-Origin"] == "*"
    assert {"tick", "phase", "running", "tasks", "history", "last_decision", "conversation_open"} <= set(doc)
    assert ["call_robot", "guard", "medicine_reminder"] == [t[0] for t in doc["tasks"]]


def test_submit_task_returns_decision(service):
    code, doc, _ = call(service, "POST", "/tasks", {"task_name": "guard", "priority": 4})
    assert code == 200
    assert isinstance(doc["request_id"], int)
    decision = doc["decision"]
    assert decision["kind"] == "Accepted"
    assert decision["request_id"] == doc["request_id"]
    assert decision["human_text"] == ""
    assert sorted(decision) == ["human_text", "kind", "reason", "request_id", "tick"]


def test_submit_unknown_task_rejected(service):
    code, doc, _ = call(service, "POST", "/tasks", {"task_name": "polish_silver", "priority": 1})
    assert code == 200
    assert doc["decision"]["kind"] == "Rejected"
    assert doc["decision"]["reason"] == "UnknownTask"
    assert doc["decision"]["human_text"] == "i do not know how to do polish_silver"


def test_submit_default_priority_from_store(service):
    code, doc, _ = call(service, "POST", "/tasks", {"task_name": "medicine_reminder"})
    assert code == 200
    assert doc["decision"]["kind"] == "Accepted"
    with service.sim.lock:
        assert service.sim.harmoniser.running.priority == 5


def test_submit_bad_priority_rejected(service):
    code, doc, _ = call(service, "POST", "/tasks", {"task_name": "guard", "priority": "high"})
    assert code == 400 and doc["error"] == "InvalidPriority"
    code, doc, _ = call(service, "POST", "/tasks", {"task_name": "guard", "priority": -2})
    assert code == 400 and doc["error"] == "InvalidPriority"


def test_cancel_running_then_conflict_when_idle(service):
    call(service, "POST", "/tasks", {"task_name": "guard", "priority": 4})
    code, doc, _ = call(service, "DELETE", "/tasks/current")
    assert code == 200 and doc == {"ok": True}
    wait_idle(service)
    code, doc, _ = call(service, "DELETE", "/tasks/current")
    assert code == 409 and doc["error"] == "NotRunning"


def test_unknown_paths_404(service):
    assert call(service, "GET", "/nope")[0] == 404
    assert call(service, "POST", "/nope", {})[0] == 404
    assert call(service, "DELETE", "/nope")[0] == 404


def test_options_preflight(service):
    req = urllib.request.Request(f"http://127.0.0.1:{service.port}/tasks", method="OPTIONS")
    with urllib.request.urlopen(req, timeout=10) as resp:
        assert resp.status == 204
        assert "POST" in resp.headers["Access-Control-Allow-Methods"]


def test_status_reflects_decision_after_submit(service):
    _, doc, _ = call(service, "POST", "/tasks", {"task_name": "polish_silver", "priority": 1})
    _, status, _ = call(service, "GET", "/status")
    last = status["last_decision"]
    assert last["request_id"] == doc["request_id"]
    assert last["reason"] == "UnknownTask"


def test_event_stream_carries_ordered_envelopes(service):
    import http.client

    conn = http.client.HTTPConnection("127.0.0.1", service.port, timeout=10)
    conn.request("GET", "/events")
    resp = conn.getresponse()
    assert resp.status == 200
    assert resp.headers["Content-Type"].startswith("text/event-stream")
    call(service, "POST", "/tasks", {"task_name": "guard", "priority": 4})
    ids = []
    deadline = time.monotonic() + 10
    while len(ids) < 5 and time.monotonic() < deadline:
        raw = resp.readline().decode("utf-8").strip()
        if raw.startswith("data: "):
            doc = json.loads(raw[len("data: "):])
            assert list(doc) == ["id", "ts", "src", "dst", "kind", "payload"]
            ids.append(doc["id"])
    conn.close()
    assert len(ids) >= 5
    assert ids == sorted(ids)
    assert len(set(ids)) == len(ids)


def test_decision_bytes_match_harmoniser_log(service):
    _, doc, _ = call(service, "POST", "/tasks", {"task_name": "polish_silver", "priority": 1})
    served = {k: v for k, v in doc["decision"].items() if k != "human_text"}
    with service.sim.lock:
        logged = [json.loads(line) for line in service.sim.harmoniser.decision_log_lines()]
    assert served in logged
