"""Draws device boxes, names and landmark annotations onto the scene image.

Output is always true-color PNG with fixed encoder settings, so identical
inputs produce byte-identical bytes and pixel-level tests stay feasible.
Rendering with zero records and zero landmarks reduces to a plain re-encode
of the source image.
"""

from __future__ import annotations

import base64
import io
from typing import Iterable, Mapping, Sequence

from PIL import Image, ImageDraw, ImageFont, UnidentifiedImageError

from .core import BBox, DeviceRecord, Landmark
from .errors import BoxOutOfBounds, EmptyPayload, ImageDecodeError

RGB = tuple[int, int, int]

# Fixed, ordered palette. Types are assigned colors by lexicographic rank,
# so the mapping never depends on detection order. Do not reorder entries.
PALETTE: tuple[RGB, ...] = (
    (230, 57, 70),    # red
    (29, 120, 216),   # blue
    (46, 160, 67),    # green
    (255, 140, 0),    # orange
    (142, 68, 173),   # purple
    (0, 170, 160),    # teal
    (214, 51, 132),   # pink
    (121, 85, 61),    # brown
    (255, 205, 0),    # yellow
    (92, 107, 192),   # indigo
    (0, 137, 78),     # sea green
    (244, 114, 54),   # coral
)

# Landmarks are always this neutral shade; it is reserved and never assigned
# to a device type.
LANDMARK_COLOR: RGB = (128, 128, 128)

_OUTLINE_WIDTH = 3
_LABEL_PAD = 2


def _shade(color: RGB, cycle: int) -> RGB:
    if cycle == 0:
        return color
    factor = 0.6**cycle
    return tuple(max(0, int(round(c * factor))) for c in color)  # type: ignore[return-value]


def assign_colors(types: Iterable[str]) -> dict[str, RGB]:
    """Deterministic type -> color map: lexicographic types, palette order.

    Overflow beyond the palette wraps with progressively darker shades.
    """
    mapping: dict[str, RGB] = {}
    for i, label in enumerate(sorted(set(types))):
        mapping[label] = _shade(PALETTE[i % len(PALETTE)], i // len(PALETTE))
    return mapping


def encode_base64(payload: bytes) -> str:
    """RFC 4648 Base64 with padding; round-trips losslessly."""
    if not payload:
        raise EmptyPayload("cannot encode empty payload")
    return base64.b64encode(payload).decode("ascii")


def _decode_rgb(image_bytes: bytes) -> Image.Image:
    try:
        img = Image.open(io.BytesIO(image_bytes))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc
    # normalize channel layout once here so every downstream consumer sees
    # true-color RGB regardless of the capture pipeline's ordering
    return img.convert("RGB")


def _encode_png(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def reencode_png(image_bytes: bytes) -> bytes:
    """The no-op render: decode then re-encode with the canonical settings."""
    return _encode_png(_decode_rgb(image_bytes))


def _check_bounds(box: BBox, width: int, height: int, what: str) -> None:
    if not box.within(width, height):
        raise BoxOutOfBounds(f"{what} box {box.to_json()} outside {width}x{height} image")


def _place_label(
    draw: ImageDraw.ImageDraw,
    font,
    text: str,
    box: BBox,
    occupied: list[tuple[float, float, float, float]],
    width: int,
    height: int,
) -> tuple[float, float, float, float]:
    l, t, r, b = draw.textbbox((0, 0), text, font=font)
    tw, th = r - l, b - t
    x = min(max(box.x1, 0), max(0, width - tw - 2 * _LABEL_PAD))
    y = box.y1 - th - 2 * _LABEL_PAD
    if y < 0:
        y = box.y1 + _OUTLINE_WIDTH
    rect = (x, y, x + tw + 2 * _LABEL_PAD, y + th + 2 * _LABEL_PAD)

    def overlaps(a, b):
        return not (a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1])

    # labels never stack: nudge down until the slot is free
    while any(overlaps(rect, o) for o in occupied) and rect[3] < height:
        y += th + 2 * _LABEL_PAD
        rect = (x, y, x + tw + 2 * _LABEL_PAD, y + th + 2 * _LABEL_PAD)
    occupied.append(rect)
    return rect


def render_annotations(
    image_bytes: bytes,
    records: Sequence[DeviceRecord],
    landmarks: Sequence[Landmark] = (),
    palette_map: Mapping[str, RGB] | None = None,
    show_scores: bool = False,
) -> bytes:
    """Return the annotated scene as PNG bytes.

    Every record draws in its type color with its display name (score
    appended only under the debug flag); landmarks draw in the reserved
    neutral color. Raises BoxOutOfBounds before touching any pixel if an
    annotation does not fit the image.
    """
    img = _decode_rgb(image_bytes)
    width, height = img.size
    for rec in records:
        _check_bounds(rec.box, width, height, f"record {rec.name}")
    for lm in landmarks:
        _check_bounds(lm.box, width, height, f"landmark {lm.name}")

    if not records and not landmarks:
        return _encode_png(img)

    palette_map = dict(palette_map or assign_colors({r.label for r in records}))
    draw = ImageDraw.Draw(img)
    font = ImageFont.load_default()
    occupied: list[tuple[float, float, float, float]] = []

    for item, color, text in [
        (lm, LANDMARK_COLOR, lm.name) for lm in landmarks
    ] + [
        (
            rec,
            palette_map.get(rec.label, LANDMARK_COLOR),
            f"{rec.name} {rec.score:.2f}" if show_scores else rec.name,
        )
        for rec in records
    ]:
        box = item.box
        draw.rectangle(
            (box.x1, box.y1, box.x2, box.y2), outline=color, width=_OUTLINE_WIDTH
        )
        rect = _place_label(draw, font, text, box, occupied, width, height)
        draw.rectangle(rect, fill=color)
        draw.text((rect[0] + _LABEL_PAD, rect[1] + _LABEL_PAD), text, fill=(255, 255, 255), font=font)

    return _encode_png(img)
