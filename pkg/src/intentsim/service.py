"""Operator HTTP service: the boundary the browser console talks to.

Endpoints:
  POST   /tasks          {task_name, priority?, slots?} -> request_id + Decision
  DELETE /tasks/current  cancel the running task
  GET    /status         scheduler snapshot
  GET    /events         server-push stream of wire envelopes (SSE framing)

The simulation runs on its own thread at a fixed tick rate; HTTP
handlers only enqueue work or read snapshots under the simulation lock,
so the bus itself stays single-threaded.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .errors import InvalidPriority, UnknownTask
from .harmoniser import Decision
from .system import Simulation

DECISION_WAIT_S = 3.0


class OperatorService:
    def __init__(self, sim: Simulation, host: str = "127.0.0.1", port: int = 8765, tick_hz: float = 50.0):
        self.sim = sim
        self.host = host
        self.port = port
        self.tick_interval = 1.0 / tick_hz
        self._stop = threading.Event()
        self._clients: set[queue.Queue] = set()
        self._clients_lock = threading.Lock()
        self.sim.bus.subscribe(self._on_envelope)
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.port = self.httpd.server_address[1]
        self._threads: list[threading.Thread] = []

    # -- lifecycle -----------------------------------------------------

    def start(self) -> None:
        t1 = threading.Thread(target=self._tick_loop, name="sim-tick", daemon=True)
        t2 = threading.Thread(target=self.httpd.serve_forever, name="http", daemon=True)
        t1.start()
        t2.start()
        self._threads = [t1, t2]

    def stop(self) -> None:
        self._stop.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        for t in self._threads:
            t.join(timeout=2.0)

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stop.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def _tick_loop(self) -> None:
        while not self._stop.is_set():
            self.sim.tick()
            time.sleep(self.tick_interval)

    # -- event fan-out ---------------------------------------------------

    def _on_envelope(self, env) -> None:
        line = env.wire_line()
        with self._clients_lock:
            for q in self._clients:
                q.put(line)

    def attach_client(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._clients_lock:
            self._clients.add(q)
        return q

    def detach_client(self, q: queue.Queue) -> None:
        with self._clients_lock:
            self._clients.discard(q)

    # -- operations used by handlers ---------------------------------------

    def submit_task(self, task_name: str, priority: Optional[int], slots: Optional[dict]) -> tuple[int, Optional[Decision]]:
        if priority is None:
            priority = self._default_priority(task_name)
        request_id = self.sim.operator.submit(task_name, priority, slots)
        decision = self._wait_for_decision(request_id)
        return request_id, decision

    def _default_priority(self, task_name: str) -> int:
        try:
            with self.sim.lock:
                return self.sim.store.download(task_name).default_priority
        except UnknownTask:
            return 1

    def cancel_current(self) -> bool:
        with self.sim.lock:
            if self.sim.harmoniser.running is None:
                return False
        self.sim.operator.cancel_current()
        return True

    def _wait_for_decision(self, request_id: int, timeout: float = DECISION_WAIT_S) -> Optional[Decision]:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self.sim.lock:
                for decision in reversed(self.sim.harmoniser.decision_log):
                    if decision.request_id == request_id:
                        return decision
            time.sleep(0.01)
        return None


def _make_handler(service: OperatorService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            pass

        # -- plumbing ----------------------------------------------------

        def _cors(self) -> None:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def _json(self, code: int, doc: dict) -> None:
            body = json.dumps(doc, sort_keys=True).encode("utf-8")
            self.send_response(code)
            self._cors()
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            return json.loads(self.rfile.read(length).decode("utf-8"))

        # -- verbs ----------------------------------------------------------

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            if self.path == "/status":
                self._json(200, service.sim.status())
            elif self.path.startswith("/events"):
                self._stream_events()
            else:
                self._json(404, {"error": "NotFound"})

        def do_POST(self):
            if self.path != "/tasks":
                self._json(404, {"error": "NotFound"})
                return
            try:
                body = self._read_body()
            except ValueError:
                self._json(400, {"error": "BadRequest", "detail": "invalid JSON"})
                return
            task_name = body.get("task_name", "")
            priority = body.get("priority")
            if priority is not None and not isinstance(priority, int):
                self._json(400, {"error": "InvalidPriority", "detail": "priority must be an integer"})
                return
            try:
                request_id, decision = service.submit_task(task_name, priority, body.get("slots"))
            except InvalidPriority as exc:
                self._json(400, {"error": "InvalidPriority", "detail": str(exc)})
                return
            doc = {"request_id": request_id, "decision": None}
            if decision is not None:
                doc["decision"] = decision.to_log_line() | {"human_text": decision.human_text}
            self._json(200, doc)

        def do_DELETE(self):
            if self.path != "/tasks/current":
                self._json(404, {"error": "NotFound"})
                return
            if service.cancel_current():
                self._json(200, {"ok": True})
            else:
                self._json(409, {"error": "NotRunning"})

        # -- event stream ------------------------------------------------

        def _stream_events(self):
            q = service.attach_client()
            try:
                self.send_response(200)
                self._cors()
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Connection", "close")
                self.end_headers()
                while not service._stop.is_set():
                    try:
                        line = q.get(timeout=1.0)
                    except queue.Empty:
                        self.wfile.write(b": ping\n\n")
                        self.wfile.flush()
                        continue
                    self.wfile.write(f"data: {line}\n\n".encode("utf-8"))
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                service.detach_client(q)

    return Handler


def serve(sim: Simulation, host: str = "127.0.0.1", port: int = 8765, tick_hz: float = 50.0) -> OperatorService:
    service = OperatorService(sim, host=host, port=port, tick_hz=tick_hz)
    service.start()
    return service
