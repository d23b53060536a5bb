"""Spatial understanding of the scene.

A deterministic geometric graph is always computed from the 2D boxes; a
vision-language adapter can additionally produce a free-text report. Both
feed command resolution.

Relation semantics (y-down image frame):
  left_of / right_of  strict x-interval disjointness
  above / below       strict y-interval disjointness ("above" = smaller y)
  x_overlap/y_overlap intervals intersect on that axis
  near                center distance <= near_threshold * image diagonal
  nearest_of_type     per device, the closest instance of every other type
                      and of every landmark name

Overlapping intervals are reported as overlap rather than forced into a
direction: a forced call in an ambiguous layout would give commands false
confidence.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .core import BBox, DeviceRecord, Landmark, canonical_dumps
from .errors import EmptyReport, NoDevices, NoSuchType


class RelationKind(str, enum.Enum):
    LEFT_OF = "left_of"
    RIGHT_OF = "right_of"
    ABOVE = "above"
    BELOW = "below"
    X_OVERLAP = "x_overlap"
    Y_OVERLAP = "y_overlap"
    NEAR = "near"
    NEAREST_OF_TYPE = "nearest_of_type"


@dataclass(frozen=True)
class SpatialEdge:
    subject_id: str  # record uuid or landmark name
    kind: RelationKind
    object_id: str
    # near/nearest: center distance / image diagonal; directional kinds:
    # signed center gap in pixels along the relation's axis (object - subject)
    metric: float

    def to_json(self) -> dict[str, Any]:
        return {
            "subject_id": self.subject_id,
            "kind": self.kind.value,
            "object_id": self.object_id,
            "metric": float(self.metric),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "SpatialEdge":
        return cls(
            subject_id=str(data["subject_id"]),
            kind=RelationKind(data["kind"]),
            object_id=str(data["object_id"]),
            metric=float(data["metric"]),
        )


@dataclass(frozen=True)
class SpatialGraph:
    edges: tuple[SpatialEdge, ...]
    image_diag: float
    image_w: float = 0.0
    image_h: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))

    def lookup(self, subject_id: str, kind: RelationKind) -> list[SpatialEdge]:
        return [e for e in self.edges if e.subject_id == subject_id and e.kind == kind]

    def has_edge(self, subject_id: str, kind: RelationKind, object_id: str) -> bool:
        return any(
            e.subject_id == subject_id and e.kind == kind and e.object_id == object_id
            for e in self.edges
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "edges": [e.to_json() for e in self.edges],
            "image_diag": float(self.image_diag),
            "image_w": float(self.image_w),
            "image_h": float(self.image_h),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "SpatialGraph":
        return cls(
            edges=tuple(SpatialEdge.from_json(e) for e in data["edges"]),
            image_diag=float(data["image_diag"]),
            image_w=float(data.get("image_w", 0.0)),
            image_h=float(data.get("image_h", 0.0)),
        )


@dataclass(frozen=True)
class TopologyConfig:
    # fraction of the image diagonal under which two centers count as near
    near_threshold: float = 0.20

    def __post_init__(self):
        if not 0.0 < self.near_threshold < 1.0:
            raise ValueError(f"near_threshold must be in (0,1): {self.near_threshold}")


@dataclass(frozen=True)
class TopologyReport:
    """Free-text spatial description from the VLM route, capped at 1000 words."""

    text: str
    warnings: tuple[str, ...] = field(default=())

    def to_json(self) -> dict[str, Any]:
        return {"text": self.text}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "TopologyReport":
        return cls(text=str(data["text"]))


def classify_pair(a: BBox, b: BBox) -> tuple[RelationKind, RelationKind]:
    """(horizontal, vertical) relation of a with respect to b."""
    if a.x2 < b.x1:
        horizontal = RelationKind.LEFT_OF
    elif a.x1 > b.x2:
        horizontal = RelationKind.RIGHT_OF
    else:
        horizontal = RelationKind.X_OVERLAP
    if a.y2 < b.y1:
        vertical = RelationKind.ABOVE
    elif a.y1 > b.y2:
        vertical = RelationKind.BELOW
    else:
        vertical = RelationKind.Y_OVERLAP
    return horizontal, vertical


def _distance(a: BBox, b: BBox) -> float:
    (ax, ay), (bx, by) = a.center(), b.center()
    return math.hypot(bx - ax, by - ay)


def _edge_sort_key(edge: SpatialEdge) -> tuple:
    return (edge.subject_id, edge.kind.value, edge.object_id)


def compute_graph(
    records: Sequence[DeviceRecord],
    landmarks: Sequence[Landmark],
    config: TopologyConfig | None = None,
    image_size: tuple[float, float] = (0.0, 0.0),
) -> SpatialGraph:
    """Classify every ordered device-device and device-landmark pair.

    Near edges are emitted in both directions whenever the normalized center
    distance clears the threshold. Each device additionally gets one
    nearest_of_type edge per other device type and per landmark name, with
    distance ties broken by the candidate's lexicographic name.
    """
    if not records:
        raise NoDevices("cannot compute a graph with no device records")
    config = config or TopologyConfig()
    width, height = image_size
    diag = math.hypot(width, height)
    if diag <= 0:
        xs = [r.box.x2 for r in records] + [l.box.x2 for l in landmarks]
        ys = [r.box.y2 for r in records] + [l.box.y2 for l in landmarks]
        diag = math.hypot(max(xs), max(ys))
        width, height = max(xs), max(ys)

    edges: list[SpatialEdge] = []

    def directional(sid: str, sbox: BBox, oid: str, obox: BBox) -> None:
        horizontal, vertical = classify_pair(sbox, obox)
        (scx, scy), (ocx, ocy) = sbox.center(), obox.center()
        edges.append(SpatialEdge(sid, horizontal, oid, metric=ocx - scx))
        edges.append(SpatialEdge(sid, vertical, oid, metric=ocy - scy))

    def near_pair(aid: str, abox: BBox, bid: str, bbox: BBox) -> None:
        normalized = _distance(abox, bbox) / diag
        if normalized <= config.near_threshold:
            edges.append(SpatialEdge(aid, RelationKind.NEAR, bid, metric=normalized))
            edges.append(SpatialEdge(bid, RelationKind.NEAR, aid, metric=normalized))

    for a in records:
        for b in records:
            if a.uuid == b.uuid:
                continue
            directional(a.uuid, a.box, b.uuid, b.box)
        for lm in landmarks:
            directional(a.uuid, a.box, lm.name, lm.box)

    for i, a in enumerate(records):
        for b in records[i + 1 :]:
            near_pair(a.uuid, a.box, b.uuid, b.box)
        for lm in landmarks:
            near_pair(a.uuid, a.box, lm.name, lm.box)

    by_label: dict[str, list[DeviceRecord]] = {}
    for rec in records:
        by_label.setdefault(rec.label, []).append(rec)
    for a in records:
        for label in sorted(by_label):
            if label == a.label:
                continue
            best = min(
                by_label[label], key=lambda c: (_distance(a.box, c.box), c.name)
            )
            edges.append(
                SpatialEdge(
                    a.uuid,
                    RelationKind.NEAREST_OF_TYPE,
                    best.uuid,
                    metric=_distance(a.box, best.box) / diag,
                )
            )
        for lm in landmarks:
            edges.append(
                SpatialEdge(
                    a.uuid,
                    RelationKind.NEAREST_OF_TYPE,
                    lm.name,
                    metric=_distance(a.box, lm.box) / diag,
                )
            )

    return SpatialGraph(
        edges=tuple(sorted(edges, key=_edge_sort_key)),
        image_diag=diag,
        image_w=width,
        image_h=height,
    )


_AXIS_KEYS = {
    "leftmost": (0, min),
    "rightmost": (0, max),
    "topmost": (1, min),
    "bottommost": (1, max),
}


def superlative(records: Sequence[DeviceRecord], label: str, axis: str) -> DeviceRecord:
    """Extremal record of a type along an axis; ties break by name."""
    pool = [r for r in records if r.label == label]
    if not pool:
        raise NoSuchType(f"no records of type {label!r}")
    index, pick = _AXIS_KEYS[axis]
    target = pick(r.box.center()[index] for r in pool)
    candidates = sorted(
        (r for r in pool if r.box.center()[index] == target), key=lambda r: r.name
    )
    return candidates[0]


TOPOLOGY_PROMPT_TEMPLATE = """Analyze the provided image and the annotations {object_list}, ensuring the response does not exceed 1000 words.

Object Location: Briefly describe each device's position relative to major room features (e.g., walls, windows, doors, furniture).

Nearby Objects: Identify the closest objects (IoT and non-IoT) and summarize their influence on placement.

Spatial Relationships: Note relative depth, alignment, and positioning concisely, prioritizing only the most relevant details.
"""


@dataclass(frozen=True)
class TopologyPrompt:
    text: str
    image_b64: str


def build_topology_prompt(
    annotated_image_b64: str, records: Sequence[DeviceRecord]
) -> TopologyPrompt:
    """Three-part spatial analysis prompt with the device list inlined."""
    if not records:
        raise NoDevices("topology prompt needs at least one device record")
    object_list = canonical_dumps(
        [{"name": r.name, "box": r.box.to_json()} for r in sorted(records, key=lambda r: r.name)]
    )
    return TopologyPrompt(
        text=TOPOLOGY_PROMPT_TEMPLATE.format(object_list=object_list),
        image_b64=annotated_image_b64,
    )


_MENTION_RE = re.compile(r"\b([a-z]+)[ _-]?0*(\d+)\b")
MAX_REPORT_WORDS = 1000


def parse_topology_report(
    vlm_text: str, records: Sequence[DeviceRecord]
) -> TopologyReport:
    """Validate a VLM report: cap length, resolve mentioned device names.

    Mentions that look like device names but match no record become warnings,
    never errors — the report is advisory context, not ground truth.
    """
    text = vlm_text.strip()
    if not text:
        raise EmptyReport("report text is empty")
    warnings: list[str] = []
    words = text.split()
    if len(words) > MAX_REPORT_WORDS:
        warnings.append(f"report truncated from {len(words)} to {MAX_REPORT_WORDS} words")
        text = " ".join(words[:MAX_REPORT_WORDS])

    known_names = {r.name for r in records}
    known_labels = {r.label for r in records}
    seen: set[str] = set()
    for match in _MENTION_RE.finditer(text.lower()):
        label, number = match.group(1), int(match.group(2))
        if label not in known_labels:
            continue
        canonical = f"{label}_{number:02d}"
        if canonical not in known_names and canonical not in seen:
            seen.add(canonical)
            warnings.append(f"report mentions unknown device {canonical}")
    return TopologyReport(text=text, warnings=tuple(warnings))
