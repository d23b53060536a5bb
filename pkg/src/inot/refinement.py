"""Quality control: raw Detections -> uniquely identified, named DeviceRecords.

Four ordered stages: inventory filter, confidence rank/select, positional
naming, UUID assignment. All stages are pure and permutation-invariant, so
the output never depends on adapter reply ordering.
"""

from __future__ import annotations

import uuid as uuidlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import BBox, Detection, DeviceInventory, DeviceRecord


@dataclass(frozen=True)
class RefinementConfig:
    # detections scoring below the threshold are dropped outright
    confidence_threshold: float = 0.5
    # boxes whose center-x values sit within this many pixels of each other
    # count as "on the same horizontal axis" and are ordered top to bottom
    alignment_epsilon: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError(f"confidence_threshold outside [0,1]: {self.confidence_threshold}")
        if self.alignment_epsilon < 0:
            raise ValueError(f"alignment_epsilon must be >= 0: {self.alignment_epsilon}")


def filter_by_inventory(
    detections: Sequence[Detection], inventory: DeviceInventory
) -> list[Detection]:
    """Drop detections whose type the user never declared; order preserved."""
    return [d for d in detections if d.label in inventory]


def rank_and_select(
    detections: Sequence[Detection],
    inventory: DeviceInventory,
    config: RefinementConfig,
) -> list[Detection]:
    """Per type: drop sub-threshold scores, keep the top-N by confidence.

    N is the declared inventory count. Score ties break spatially (x1 then
    y1) so selection is fully deterministic. Under-detection is legal.
    """
    selected: list[Detection] = []
    for label in sorted(inventory.counts):
        pool = [
            d
            for d in detections
            if d.label == label and d.score >= config.confidence_threshold
        ]
        pool.sort(key=lambda d: (-d.score, d.box.x1, d.box.y1))
        selected.extend(pool[: inventory.get(label)])
    return selected


def _center(box: BBox) -> tuple[float, float]:
    return box.center()


def _ordered_for_naming(group: list[Detection], epsilon: float) -> list[Detection]:
    """Left-to-right order; runs of epsilon-aligned center-x reorder top-down.

    A run is maximal in the cx-sorted sequence with (max cx - min cx) <= eps.
    """
    by_cx = sorted(group, key=lambda d: (_center(d.box)[0], _center(d.box)[1], d.box.x1, d.box.y1, -d.score))
    ordered: list[Detection] = []
    i = 0
    while i < len(by_cx):
        j = i + 1
        start_cx = _center(by_cx[i].box)[0]
        while j < len(by_cx) and _center(by_cx[j].box)[0] - start_cx <= epsilon:
            j += 1
        run = sorted(by_cx[i:j], key=lambda d: (_center(d.box)[1], _center(d.box)[0], d.box.x1, d.box.y1, -d.score))
        ordered.extend(run)
        i = j
    return ordered


def assign_names(
    detections: Sequence[Detection], config: RefinementConfig
) -> list[tuple[Detection, str]]:
    """Name the selected set ``{type}_{NN}`` by spatial position.

    Within a type, names run left to right on box centers; groups aligned on
    the same vertical through-line (center-x within alignment_epsilon) run
    top to bottom instead.
    """
    named: list[tuple[Detection, str]] = []
    for label in sorted({d.label for d in detections}):
        group = [d for d in detections if d.label == label]
        for index, det in enumerate(_ordered_for_naming(group, config.alignment_epsilon), start=1):
            named.append((det, f"{label}_{index:02d}"))
    return named


def assign_uuids(
    named_detections: Sequence[tuple[Detection, str]],
    stable_uuids: dict[tuple[str, tuple[float, float, float, float]], str] | None = None,
) -> list[DeviceRecord]:
    """Mint one record per named detection.

    ``stable_uuids`` maps (label, box tuple) -> uuid for detections that must
    keep their identity across a refresh (user-confirmed annotations); every
    other detection gets a fresh opaque UUID.
    """
    remaining = dict(stable_uuids or {})
    records = []
    for det, name in named_detections:
        key = (det.label, (det.box.x1, det.box.y1, det.box.x2, det.box.y2))
        uid = remaining.pop(key, None) or str(uuidlib.uuid4())
        records.append(
            DeviceRecord(uuid=uid, label=det.label, name=name, box=det.box, score=det.score)
        )
    return records


def refine(
    detections: Sequence[Detection],
    inventory: DeviceInventory,
    config: RefinementConfig | None = None,
    confirmed: Iterable[DeviceRecord] = (),
) -> list[DeviceRecord]:
    """Full pipeline: filter -> rank/select -> name -> uuid.

    ``confirmed`` records survive unconditionally with their uuids intact;
    they consume inventory capacity for their type, and the whole set is
    renamed together so naming stays globally consistent.
    """
    config = config or RefinementConfig()
    confirmed = list(confirmed)

    stable = {
        (r.label, (r.box.x1, r.box.y1, r.box.x2, r.box.y2)): r.uuid for r in confirmed
    }
    kept = filter_by_inventory(detections, inventory)
    # a re-detection of an exact confirmed box is the same device, not a new one
    kept = [
        d
        for d in kept
        if (d.label, (d.box.x1, d.box.y1, d.box.x2, d.box.y2)) not in stable
    ]
    taken: dict[str, int] = {}
    for rec in confirmed:
        taken[rec.label] = taken.get(rec.label, 0) + 1
    remaining_counts = {
        label: max(0, count - taken.get(label, 0))
        for label, count in inventory.counts.items()
        if count - taken.get(label, 0) > 0
    }
    selected: list[Detection] = []
    if remaining_counts:
        selected = rank_and_select(kept, DeviceInventory(counts=remaining_counts), config)

    pool = [Detection(label=r.label, box=r.box, score=r.score) for r in confirmed] + selected
    named = assign_names(pool, config)
    records = assign_uuids(named, stable_uuids=stable)
    return sorted(records, key=lambda r: r.name)
