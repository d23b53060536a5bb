import io
import json
from pathlib import Path

import pytest
from PIL import Image, ImageDraw

from inot.core import Detection, DeviceInventory, Landmark
from inot.refinement import RefinementConfig, refine
from inot.topology import TopologyConfig, compute_graph

FIXTURES = Path(__file__).parent / "fixtures"

ROOM_W, ROOM_H = 800, 600  # diagonal is exactly 1000 px


def make_room_image() -> bytes:
    """Deterministic synthetic room scene matching the fixture geometry."""
    img = Image.new("RGB", (ROOM_W, ROOM_H), (236, 233, 225))
    draw = ImageDraw.Draw(img)
    blocks = {
        (20, 40, 180, 260): (176, 196, 222),    # window
        (600, 60, 760, 140): (210, 215, 220),   # ac
        (300, 380, 520, 560): (160, 120, 90),   # desk
        (360, 160, 460, 240): (120, 100, 80),   # photo frame
        (80, 280, 140, 340): (255, 244, 180),   # light 1
        (380, 300, 440, 360): (255, 244, 180),  # desk lamp
        (380, 40, 440, 100): (255, 244, 180),   # ceiling light
        (200, 60, 280, 120): (90, 90, 95),      # fan 1
        (560, 300, 640, 380): (90, 90, 95),     # fan 2
        (500, 420, 560, 520): (140, 110, 85),   # chair
    }
    for box, color in blocks.items():
        draw.rectangle(box, fill=color, outline=(60, 60, 60))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="session")
def room_image() -> bytes:
    return make_room_image()


@pytest.fixture(scope="session")
def raw_detections() -> list[Detection]:
    data = json.loads((FIXTURES / "detections_room.json").read_text())
    return [Detection.from_json(d) for d in data]


@pytest.fixture(scope="session")
def room_landmarks() -> list[Landmark]:
    data = json.loads((FIXTURES / "landmarks_room.json").read_text())
    return [Landmark.from_json(d) for d in data]


@pytest.fixture(scope="session")
def room_inventory() -> DeviceInventory:
    return DeviceInventory(counts={"light": 3, "fan": 2})


@pytest.fixture()
def room_records(raw_detections, room_inventory):
    return refine(raw_detections, room_inventory, RefinementConfig())


@pytest.fixture()
def room_graph(room_records, room_landmarks):
    return compute_graph(
        room_records, room_landmarks, TopologyConfig(), image_size=(ROOM_W, ROOM_H)
    )


@pytest.fixture(scope="session")
def command_corpus() -> list[dict]:
    return json.loads((FIXTURES / "command_corpus.json").read_text())


@pytest.fixture(scope="session")
def inventory_corpus() -> list[dict]:
    return json.loads((FIXTURES / "inventory_corpus.json").read_text())
