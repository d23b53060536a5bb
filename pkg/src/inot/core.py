"""Shared domain types and primitive geometry used by every pipeline stage.

Coordinate frame: image convention, origin top-left, y grows downward.
"Above" therefore always means smaller y. Boxes are (x1, y1, x2, y2) with
x1 < x2 and y1 < y2; serialized everywhere as the array [x1, y1, x2, y2].

All types here are immutable value objects and safe to share across threads.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional

from .errors import EmptyType, InvalidBox, InvariantViolation

# Known device-type vocabulary. Canonical forms are the values of SYNONYMS
# plus the standalone entries of VOCABULARY; inputs outside the table pass
# through lowercased and singularized.
SYNONYMS: dict[str, str] = {
    "lamp": "light",
    "air conditioner": "ac",
    "air-conditioner": "ac",
    "airconditioner": "ac",
    "television": "tv",
    "telly": "tv",
    "fridge": "refrigerator",
    "ceiling fan": "fan",
}

VOCABULARY: frozenset[str] = frozenset(
    {"fan", "light", "ac", "tv", "refrigerator", "thermostat", "heater", "speaker"}
)


def _singularize(word: str) -> str:
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and word[:-2].endswith(("sh", "ch", "x", "z", "s")):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        return word[:-1]
    return word


def canonicalize_type(raw: str) -> str:
    """Normalize a device-type phrase to its canonical lowercase singular form.

    Idempotent: applying twice equals applying once.
    """
    text = re.sub(r"\s+", " ", raw.strip().lower())
    if not text:
        raise EmptyType("device type is blank")
    if text in SYNONYMS:
        return SYNONYMS[text]
    words = text.split(" ")
    words[-1] = _singularize(words[-1])
    text = " ".join(words)
    return SYNONYMS.get(text, text)


def canonical_dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, no whitespace. Stable byte-for-byte."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box, top-left origin. x1 < x2, y1 < y2, all >= 0."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidBox(f"non-finite coordinates: {vals}")
        if min(vals) < 0:
            raise InvalidBox(f"negative coordinates: {vals}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidBox(f"degenerate box: {vals}")

    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def within(self, width: float, height: float) -> bool:
        return self.x2 <= width and self.y2 <= height

    def to_json(self) -> list[float]:
        return [float(self.x1), float(self.y1), float(self.x2), float(self.y2)]

    @classmethod
    def from_json(cls, data: Any) -> "BBox":
        if not (isinstance(data, (list, tuple)) and len(data) == 4):
            raise InvalidBox(f"box must be [x1,y1,x2,y2], got {data!r}")
        try:
            return cls(*(float(v) for v in data))
        except (TypeError, ValueError) as exc:
            raise InvalidBox(f"box coordinates not numeric: {data!r}") from exc


def bbox_center(box: BBox) -> tuple[float, float]:
    return box.center()


def _check_score(score: float) -> float:
    score = float(score)
    if not (0.0 <= score <= 1.0) or not math.isfinite(score):
        raise InvariantViolation(f"score outside [0,1]: {score}")
    return score


@dataclass(frozen=True)
class Detection:
    """One raw detector hit: canonical label, box, confidence in [0,1]."""

    label: str
    box: BBox
    score: float

    def __post_init__(self):
        if not self.label or self.label != self.label.lower():
            raise InvariantViolation(f"label must be non-empty lowercase: {self.label!r}")
        _check_score(self.score)

    def to_json(self) -> dict[str, Any]:
        return {"label": self.label, "box": self.box.to_json(), "score": float(self.score)}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Detection":
        return cls(label=str(data["label"]), box=BBox.from_json(data["box"]), score=float(data["score"]))


@dataclass(frozen=True)
class DeviceRecord:
    """A refined, uniquely identified and named device instance."""

    uuid: str
    label: str
    name: str
    box: BBox
    score: float

    def __post_init__(self):
        _check_score(self.score)
        if not self.name.startswith(self.label):
            raise InvariantViolation(f"name {self.name!r} must be prefixed by label {self.label!r}")

    def to_json(self) -> dict[str, Any]:
        return {
            "uuid": self.uuid,
            "label": self.label,
            "name": self.name,
            "box": self.box.to_json(),
            "score": float(self.score),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "DeviceRecord":
        return cls(
            uuid=str(data["uuid"]),
            label=str(data["label"]),
            name=str(data["name"]),
            box=BBox.from_json(data["box"]),
            score=float(data["score"]),
        )


@dataclass(frozen=True)
class Landmark:
    """Non-IoT spatial anchor (window, door, ...) used by commands and topology."""

    name: str
    box: BBox

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "box": self.box.to_json()}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Landmark":
        return cls(name=str(data["name"]), box=BBox.from_json(data["box"]))


@dataclass(frozen=True)
class DeviceInventory:
    """User-declared device counts, keyed by canonical type."""

    counts: Mapping[str, int]

    def __post_init__(self):
        clean: dict[str, int] = {}
        for key, value in self.counts.items():
            canon = canonicalize_type(key)
            count = int(value)
            if count < 1:
                raise InvariantViolation(f"count for {key!r} must be >= 1, got {value}")
            clean[canon] = clean.get(canon, 0) + count
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    def __contains__(self, label: str) -> bool:
        return label in self.counts

    def get(self, label: str, default: int = 0) -> int:
        return self.counts.get(label, default)

    def __len__(self) -> int:
        return len(self.counts)

    def to_json(self) -> dict[str, Any]:
        return {"counts": dict(self.counts)}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "DeviceInventory":
        return cls(counts={str(k): int(v) for k, v in data["counts"].items()})


@dataclass(frozen=True)
class RoomSession:
    """Persistent aggregate of one onboarding pass over one room image."""

    session_id: str
    inventory: Optional[DeviceInventory] = None
    image_ref: Optional[str] = None
    records: tuple[DeviceRecord, ...] = ()
    landmarks: tuple[Landmark, ...] = ()
    bindings: Mapping[str, str] = field(default_factory=dict)
    topology: Optional["Any"] = None  # TopologyReport; typed loosely to avoid a cycle

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        object.__setattr__(self, "bindings", dict(self.bindings))
        uuids = {r.uuid for r in self.records}
        if len(uuids) != len(self.records):
            raise InvariantViolation("duplicate record uuid in session")
        names = {r.name for r in self.records}
        if len(names) != len(self.records):
            raise InvariantViolation("duplicate record name in session")
        lm_names = {l.name for l in self.landmarks}
        if len(lm_names) != len(self.landmarks):
            raise InvariantViolation("duplicate landmark name in session")
        for uuid in self.bindings:
            if uuid not in uuids:
                raise InvariantViolation(f"binding references unknown record uuid {uuid}")
        if self.inventory is not None:
            per_type: dict[str, int] = {}
            for r in self.records:
                per_type[r.label] = per_type.get(r.label, 0) + 1
            for label, n in per_type.items():
                if n > self.inventory.get(label):
                    raise InvariantViolation(
                        f"{n} records of type {label!r} exceed inventory count {self.inventory.get(label)}"
                    )

    def record_by_uuid(self, uuid: str) -> Optional[DeviceRecord]:
        for r in self.records:
            if r.uuid == uuid:
                return r
        return None

    def record_by_name(self, name: str) -> Optional[DeviceRecord]:
        for r in self.records:
            if r.name == name:
                return r
        return None

    def to_json(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "inventory": self.inventory.to_json() if self.inventory else None,
            "image_ref": self.image_ref,
            "records": [r.to_json() for r in self.records],
            "landmarks": [l.to_json() for l in self.landmarks],
            "bindings": dict(self.bindings),
            "topology": self.topology.to_json() if self.topology is not None else None,
        }


def detections_to_json(detections: Iterable[Detection]) -> list[dict[str, Any]]:
    return [d.to_json() for d in detections]


def with_inventory(session: RoomSession, inventory: DeviceInventory) -> RoomSession:
    return replace(session, inventory=inventory)
