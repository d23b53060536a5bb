"""Durable session persistence: one directory per session, canonical JSON files.

Every write is atomic (temp file + rename in the same directory), so a
process killed between any two pipeline stages restarts into exactly the
state it last committed. File bytes are canonical (sorted keys, fixed
separators) to make restart equivalence byte-checkable.
"""

from __future__ import annotations

import json
import os
import tempfile
import uuid as uuidlib
from pathlib import Path
from typing import Any, Optional

from .core import (
    Detection,
    DeviceInventory,
    DeviceRecord,
    Landmark,
    RoomSession,
    canonical_dumps,
)
from .errors import UnknownSession
from .topology import SpatialGraph, TopologyReport

SESSION_FILE = "session.json"
RAW_DETECTIONS_FILE = "raw_detections.json"
RECORDS_FILE = "records.json"
LANDMARKS_FILE = "landmarks.json"
GRAPH_FILE = "graph.json"
TOPOLOGY_FILE = "topology.json"
ANNOTATED_FILE = "annotated.png"


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SessionStore:
    """Filesystem-backed store; all JSON is canonical and atomic."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- session lifecycle -------------------------------------------------

    def create_session(self) -> str:
        session_id = uuidlib.uuid4().hex[:12]
        path = self.root / session_id
        path.mkdir(parents=True, exist_ok=False)
        self._write_json(
            session_id,
            SESSION_FILE,
            {
                "session_id": session_id,
                "inventory": None,
                "image_ref": None,
                "bindings": {},
                "confirmed": [],
            },
        )
        return session_id

    def session_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / SESSION_FILE).exists()
        )

    def _session_dir(self, session_id: str) -> Path:
        path = self.root / session_id
        if not (path / SESSION_FILE).exists():
            raise UnknownSession(f"no session {session_id!r}")
        return path

    def session_path(self, session_id: str, filename: str) -> Path:
        return self._session_dir(session_id) / filename

    # -- raw file helpers ------------------------------------------------

    def _write_json(self, session_id: str, filename: str, payload: Any) -> None:
        path = self.root / session_id / filename
        _atomic_write(path, canonical_dumps(payload).encode("utf-8"))

    def _read_json(self, session_id: str, filename: str) -> Optional[Any]:
        path = self._session_dir(session_id) / filename
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def write_bytes(self, session_id: str, filename: str, data: bytes) -> Path:
        path = self._session_dir(session_id) / filename
        _atomic_write(path, data)
        return path

    def read_bytes(self, session_id: str, filename: str) -> Optional[bytes]:
        path = self._session_dir(session_id) / filename
        return path.read_bytes() if path.exists() else None

    # -- typed accessors ---------------------------------------------------

    def _meta(self, session_id: str) -> dict:
        meta = self._read_json(session_id, SESSION_FILE)
        if meta is None:
            raise UnknownSession(f"no session {session_id!r}")
        return meta

    def _patch_meta(self, session_id: str, **fields) -> None:
        meta = self._meta(session_id)
        meta.update(fields)
        self._write_json(session_id, SESSION_FILE, meta)

    def save_inventory(self, session_id: str, inventory: DeviceInventory) -> None:
        self._patch_meta(session_id, inventory=inventory.to_json())

    def save_image(self, session_id: str, image_bytes: bytes, suffix: str = "png") -> str:
        filename = f"image.{suffix}"
        self.write_bytes(session_id, filename, image_bytes)
        self._patch_meta(session_id, image_ref=filename)
        return filename

    def save_raw_detections(self, session_id: str, detections: list[Detection]) -> None:
        self._write_json(session_id, RAW_DETECTIONS_FILE, [d.to_json() for d in detections])

    def save_records(self, session_id: str, records: list[DeviceRecord]) -> None:
        self._write_json(session_id, RECORDS_FILE, [r.to_json() for r in records])

    def save_landmarks(self, session_id: str, landmarks: list[Landmark]) -> None:
        self._write_json(session_id, LANDMARKS_FILE, [l.to_json() for l in landmarks])

    def save_graph(self, session_id: str, graph: SpatialGraph) -> None:
        self._write_json(session_id, GRAPH_FILE, graph.to_json())

    def save_topology(self, session_id: str, report: TopologyReport) -> None:
        self._write_json(session_id, TOPOLOGY_FILE, report.to_json())

    def save_bindings(self, session_id: str, bindings: dict[str, str]) -> None:
        self._patch_meta(session_id, bindings=dict(bindings))

    def save_confirmed(self, session_id: str, confirmed: list[str]) -> None:
        self._patch_meta(session_id, confirmed=sorted(confirmed))

    def load_raw_detections(self, session_id: str) -> list[Detection]:
        data = self._read_json(session_id, RAW_DETECTIONS_FILE) or []
        return [Detection.from_json(d) for d in data]

    def load_records(self, session_id: str) -> list[DeviceRecord]:
        data = self._read_json(session_id, RECORDS_FILE) or []
        return [DeviceRecord.from_json(d) for d in data]

    def load_landmarks(self, session_id: str) -> list[Landmark]:
        data = self._read_json(session_id, LANDMARKS_FILE) or []
        return [Landmark.from_json(d) for d in data]

    def load_graph(self, session_id: str) -> Optional[SpatialGraph]:
        data = self._read_json(session_id, GRAPH_FILE)
        return SpatialGraph.from_json(data) if data else None

    def load_topology(self, session_id: str) -> Optional[TopologyReport]:
        data = self._read_json(session_id, TOPOLOGY_FILE)
        return TopologyReport.from_json(data) if data else None

    def load_confirmed(self, session_id: str) -> list[str]:
        return list(self._meta(session_id).get("confirmed") or [])

    def load_image(self, session_id: str) -> Optional[bytes]:
        meta = self._meta(session_id)
        if not meta.get("image_ref"):
            return None
        return self.read_bytes(session_id, meta["image_ref"])

    def load_session(self, session_id: str) -> RoomSession:
        meta = self._meta(session_id)
        inventory = (
            DeviceInventory.from_json(meta["inventory"]) if meta.get("inventory") else None
        )
        return RoomSession(
            session_id=meta["session_id"],
            inventory=inventory,
            image_ref=meta.get("image_ref"),
            records=tuple(self.load_records(session_id)),
            landmarks=tuple(self.load_landmarks(session_id)),
            bindings=meta.get("bindings") or {},
            topology=self.load_topology(session_id),
        )

    def canonical_snapshot(self, session_id: str) -> dict[str, bytes]:
        """Bytes of every persisted artifact, for restart-equivalence checks."""
        directory = self._session_dir(session_id)
        return {
            p.name: p.read_bytes()
            for p in sorted(directory.iterdir())
            if p.is_file()
        }
