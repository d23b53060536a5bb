"""Zero-shot detection stage: inventory -> natural-language prompts -> raw Detections.

The detector itself always lives behind an adapter; this module owns prompt
templating, adapter-boundary validation (boxes inside the image, scores in
range — violations are rejected, never clamped) and deterministic merging.
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Optional, Union

from PIL import Image, UnidentifiedImageError

from .adapters import DetectorAdapter
from .core import BBox, Detection, DeviceInventory
from .errors import (
    AdapterProtocolError,
    EmptyInventory,
    ImageDecodeError,
    MissingFile,
    SchemaViolation,
)
from .visualizer import encode_base64

# Type -> detection phrase. Types outside the table use the default article
# form. "light" switches phrasing when the room context is a kitchen.
PROMPT_TEMPLATES: dict[str, str] = {
    "fan": "a ceiling fan",
    "refrigerator": "a smart refrigerator",
    "light": "a light",
}
KITCHEN_LIGHT_PROMPT = "a kitchen light"
DEFAULT_TEMPLATE = "a {type}"


def build_detection_prompts(
    inventory: DeviceInventory, room_context: Optional[str] = None
) -> list[tuple[str, str]]:
    """One (type, prompt) pair per inventory type, sorted by type name."""
    if len(inventory) == 0:
        raise EmptyInventory("inventory has no device types")
    prompts = []
    for label in sorted(inventory.counts):
        if label == "light" and room_context == "kitchen":
            prompt = KITCHEN_LIGHT_PROMPT
        else:
            prompt = PROMPT_TEMPLATES.get(label, DEFAULT_TEMPLATE.format(type=label))
        prompts.append((label, prompt))
    return prompts


ImageSource = Union[bytes, str, Path]


def load_image_bytes(image_ref: ImageSource) -> bytes:
    if isinstance(image_ref, bytes):
        return image_ref
    path = Path(image_ref)
    if not path.exists():
        raise MissingFile(f"image not found: {path}")
    return path.read_bytes()


def image_size(image_bytes: bytes) -> tuple[int, int]:
    """Decode just enough to get (width, height); ImageDecodeError otherwise."""
    try:
        with Image.open(io.BytesIO(image_bytes)) as img:
            return img.size
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc


def _sort_key(det: Detection) -> tuple:
    return (det.label, det.box.x1, det.box.y1, det.box.x2, det.box.y2, -det.score)


def detect(
    image_ref: ImageSource,
    prompts: list[tuple[str, str]],
    adapter: DetectorAdapter,
) -> list[Detection]:
    """Run every prompt through the adapter and merge raw detections.

    No filtering happens here; over-detection is expected and resolved by
    refinement. Output order is (label, x1, y1, ...) so it is independent of
    prompt order and adapter reply order.
    """
    if not prompts:
        raise EmptyInventory("no prompts to run")
    image_bytes = load_image_bytes(image_ref)
    width, height = image_size(image_bytes)
    b64 = encode_base64(image_bytes)

    raw = adapter.detect(b64, [p for _, p in prompts])
    detections: list[Detection] = []
    for entry in raw:
        try:
            index = int(entry["prompt_index"])
            box = BBox.from_json(entry["box"])
            score = float(entry["score"])
        except Exception as exc:
            raise AdapterProtocolError(f"malformed detection entry: {entry!r}") from exc
        if not 0 <= index < len(prompts):
            raise AdapterProtocolError(f"prompt_index {index} out of range")
        if not (0.0 <= score <= 1.0):
            raise AdapterProtocolError(f"score {score} outside [0,1]")
        if not box.within(width, height):
            # reject rather than clamp: a clamped box would silently corrupt
            # all downstream spatial reasoning
            raise AdapterProtocolError(f"box {box.to_json()} outside {width}x{height} image")
        detections.append(Detection(label=prompts[index][0], box=box, score=score))
    return sorted(detections, key=_sort_key)


def load_fixture_detections(path: str | Path) -> list[Detection]:
    """Parse a canonical Detection JSON array file, validating invariants."""
    p = Path(path)
    if not p.exists():
        raise MissingFile(f"detection fixture missing: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise SchemaViolation(f"not valid JSON: {p}") from exc
    if not isinstance(data, list):
        raise SchemaViolation("fixture must be a JSON array of detections")
    detections = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict) or not {"label", "box", "score"} <= set(entry):
            raise SchemaViolation(f"entry {i} missing label/box/score")
        try:
            detections.append(Detection.from_json(entry))
        except Exception as exc:
            raise SchemaViolation(f"entry {i} invalid: {exc}") from exc
    return detections
