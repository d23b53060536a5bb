import itertools

import pytest

from inot.adapters import FixtureDetectorAdapter
from inot.core import DeviceInventory
from inot.detection import build_detection_prompts, detect, load_fixture_detections
from inot.errors import (
    AdapterProtocolError,
    AdapterTimeout,
    EmptyInventory,
    ImageDecodeError,
    MissingFile,
    SchemaViolation,
)

from conftest import FIXTURES


class TestPrompts:
    def test_fan_template(self):
        prompts = build_detection_prompts(DeviceInventory(counts={"fan": 2}))
        assert prompts == [("fan", "a ceiling fan")]

    def test_refrigerator_template(self):
        prompts = build_detection_prompts(DeviceInventory(counts={"refrigerator": 1}))
        assert prompts == [("refrigerator", "a smart refrigerator")]

    def test_kitchen_context_switches_light(self):
        inv = DeviceInventory(counts={"light": 1})
        assert build_detection_prompts(inv) == [("light", "a light")]
        assert build_detection_prompts(inv, room_context="kitchen") == [
            ("light", "a kitchen light")
        ]

    def test_sorted_by_type(self):
        inv = DeviceInventory(counts={"light": 1, "ac": 1, "fan": 1})
        assert [t for t, _ in build_detection_prompts(inv)] == ["ac", "fan", "light"]

    def test_empty_inventory(self):
        with pytest.raises(EmptyInventory):
            build_detection_prompts(DeviceInventory(counts={}))


def _fixture_adapter():
    adapter = FixtureDetectorAdapter.from_file(FIXTURES / "detections_room.json")
    adapter.register_prompt("a ceiling fan", "fan")
    adapter.register_prompt("a light", "light")
    return adapter


class TestDetect:
    def test_fixture_scene_returns_raw_overdetections(self, room_image):
        prompts = build_detection_prompts(DeviceInventory(counts={"light": 3}))
        found = detect(room_image, prompts, _fixture_adapter())
        assert len(found) == 5  # over-detection expected before refinement
        assert all(d.label == "light" for d in found)

    def test_empty_result_is_legal(self, room_image):
        class EmptyAdapter:
            def detect(self, image_b64, prompts):
                return []

        prompts = build_detection_prompts(DeviceInventory(counts={"fan": 1}))
        assert detect(room_image, prompts, EmptyAdapter()) == []

    def test_unreachable_adapter(self, room_image):
        from inot.adapters import HttpDetectorAdapter

        adapter = HttpDetectorAdapter("http://127.0.0.1:1/detect", timeout=0.2)
        prompts = build_detection_prompts(DeviceInventory(counts={"fan": 1}))
        with pytest.raises(AdapterTimeout):
            detect(room_image, prompts, adapter)

    def test_prompt_order_invariance(self, room_image):
        inv = DeviceInventory(counts={"light": 3, "fan": 2})
        base_prompts = build_detection_prompts(inv)
        baseline = detect(room_image, base_prompts, _fixture_adapter())
        for perm in itertools.permutations(base_prompts):
            assert detect(room_image, list(perm), _fixture_adapter()) == baseline

    def test_boundary_validation_rejects(self, room_image):
        class OutOfImageAdapter:
            def detect(self, image_b64, prompts):
                return [{"prompt_index": 0, "box": [700, 500, 900, 700], "score": 0.9}]

        prompts = build_detection_prompts(DeviceInventory(counts={"fan": 1}))
        with pytest.raises(AdapterProtocolError):
            detect(room_image, prompts, OutOfImageAdapter())

    def test_score_validation_rejects(self, room_image):
        class BadScoreAdapter:
            def detect(self, image_b64, prompts):
                return [{"prompt_index": 0, "box": [0, 0, 10, 10], "score": 1.5}]

        prompts = build_detection_prompts(DeviceInventory(counts={"fan": 1}))
        with pytest.raises(AdapterProtocolError):
            detect(room_image, prompts, BadScoreAdapter())

    def test_undecodable_image(self):
        prompts = build_detection_prompts(DeviceInventory(counts={"fan": 1}))
        with pytest.raises(ImageDecodeError):
            detect(b"not an image at all", prompts, _fixture_adapter())


class TestFixtureLoader:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "dets.json"
        path.write_text('[{"label":"fan","box":[10,10,50,50],"score":0.9}]')
        found = load_fixture_detections(path)
        assert len(found) == 1
        assert found[0].label == "fan"

    def test_bad_score(self, tmp_path):
        path = tmp_path / "dets.json"
        path.write_text('[{"label":"fan","box":[10,10,50,50],"score":1.2}]')
        with pytest.raises(SchemaViolation):
            load_fixture_detections(path)

    def test_empty_array(self, tmp_path):
        path = tmp_path / "dets.json"
        path.write_text("[]")
        assert load_fixture_detections(path) == []

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_fixture_detections(tmp_path / "nope.json")

    def test_fixture_room_file_is_valid(self):
        found = load_fixture_detections(FIXTURES / "detections_room.json")
        labels = sorted(d.label for d in found)
        assert labels.count("light") == 5
        assert labels.count("fan") == 2
        assert labels.count("chair") == 1
