"""Task package store: versioned registry of state-machine packages.

Packages are validated at publish time, so anything a download returns
is safe to spawn. Checksums cover a canonical serialization (key-sorted
compact JSON), letting receivers detect corruption independent of dict
ordering or whitespace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dynamic_agent import FsmDefinition, parse_fsm, validate
from .errors import ConfigError, DuplicateVersion, InvalidFsm, UnknownTask
from .hashing import stable_hash64
from .messaging import AgentId, MessageBus, MessageKind, Role


@dataclass(frozen=True)
class TaskPackage:
    name: str
    version: int
    default_priority: int
    fsm: FsmDefinition

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "default_priority": self.default_priority,
            "fsm": self.fsm.to_doc(),
        }

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_doc(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    def checksum(self) -> str:
        return f"{stable_hash64(self.canonical_bytes()):016x}"


def parse_package(doc: dict) -> TaskPackage:
    return TaskPackage(
        name=str(doc["name"]),
        version=int(doc["version"]),
        default_priority=int(doc["default_priority"]),
        fsm=parse_fsm(doc["fsm"]),
    )


class Store:
    """In-memory package registry, keyed by (name, version)."""

    def __init__(self):
        self._packages: dict[str, dict[int, TaskPackage]] = {}

    def publish(self, package: TaskPackage) -> None:
        violations = validate(package.fsm)
        if violations:
            raise InvalidFsm(violations)
        versions = self._packages.setdefault(package.name, {})
        if package.version in versions:
            raise DuplicateVersion(f"{package.name} v{package.version} already published")
        versions[package.version] = package

    def download(self, name: str) -> TaskPackage:
        versions = self._packages.get(name)
        if not versions:
            raise UnknownTask(name)
        return versions[max(versions)]

    def catalog(self) -> list[tuple[str, int, int]]:
        """Latest (name, version, default_priority) per package, by name."""
        out = []
        for name in sorted(self._packages):
            pkg = self.download(name)
            out.append((pkg.name, pkg.version, pkg.default_priority))
        return out

    def load_directory(self, path: str | Path) -> int:
        """Publish every *.json package document under path."""
        count = 0
        for file in sorted(Path(path).glob("*.json")):
            try:
                doc = json.loads(file.read_text(encoding="utf-8"))
                self.publish(parse_package(doc))
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"bad package document: {exc}", path=str(file)) from exc
            count += 1
        return count


class StoreAgent:
    """Bus front-end answering download requests from the harmoniser."""

    def __init__(self, bus: MessageBus, store: Store, name: str = "ars"):
        self.bus = bus
        self.store = store
        self.id = AgentId(Role.STORE, name)
        self.inbox = bus.register_agent(self.id)

    def step(self) -> None:
        while True:
            env = self.bus.poll(self.inbox)
            if env is None:
                return
            if env.kind is not MessageKind.DOWNLOAD_REQUEST:
                continue
            name = env.payload.get("name", "")
            try:
                pkg = self.store.download(name)
            except UnknownTask:
                payload = {"ok": False, "error": "unknown_task", "name": name}
            else:
                payload = {
                    "ok": True,
                    "package": pkg.to_doc(),
                    "checksum": pkg.checksum(),
                }
            self.bus.send(self.id, env.src, MessageKind.DOWNLOAD_RESPONSE, payload)
