import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from inot.core import (
    BBox,
    Detection,
    DeviceInventory,
    DeviceRecord,
    Landmark,
    RoomSession,
    bbox_center,
    canonical_dumps,
    canonicalize_type,
)
from inot.errors import EmptyType, InvalidBox, InvariantViolation


class TestBBox:
    def test_center_symmetric(self):
        assert bbox_center(BBox(0, 0, 10, 10)) == (5, 5)

    def test_center_small_scale(self):
        assert bbox_center(BBox(0, 0, 0.1, 0.1)) == (0.05, 0.05)

    def test_center_hand_arithmetic(self):
        assert bbox_center(BBox(100, 40, 300, 80)) == (200, 60)

    @pytest.mark.parametrize(
        "coords",
        [(10, 0, 5, 10), (0, 10, 10, 5), (0, 0, 0, 10), (-1, 0, 10, 10), (0, 0, float("nan"), 10)],
    )
    def test_invalid_boxes_rejected(self, coords):
        with pytest.raises(InvalidBox):
            BBox(*coords)

    def test_json_round_trip(self):
        box = BBox(1.5, 2.5, 3.5, 4.5)
        assert BBox.from_json(box.to_json()) == box
        assert box.to_json() == [1.5, 2.5, 3.5, 4.5]


class TestCanonicalizeType:
    def test_lowercase_singular(self):
        assert canonicalize_type("Fans") == "fan"

    def test_synonym_table(self):
        assert canonicalize_type("air conditioner") == "ac"
        assert canonicalize_type("lamp") == "light"
        assert canonicalize_type("television") == "tv"

    def test_identity(self):
        assert canonicalize_type("light") == "light"

    def test_blank_rejected(self):
        with pytest.raises(EmptyType):
            canonicalize_type("   ")

    def test_plural_synonyms(self):
        assert canonicalize_type("air conditioners") == "ac"
        assert canonicalize_type("lamps") == "light"
        assert canonicalize_type("fridges") == "refrigerator"

    @given(st.text(alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Zs")), min_size=1))
    def test_idempotent(self, raw):
        try:
            once = canonicalize_type(raw)
        except EmptyType:
            return
        assert canonicalize_type(once) == once


class TestDetection:
    def test_score_bounds(self):
        with pytest.raises(InvariantViolation):
            Detection(label="fan", box=BBox(0, 0, 1, 1), score=1.2)

    def test_label_must_be_lowercase(self):
        with pytest.raises(InvariantViolation):
            Detection(label="Fan", box=BBox(0, 0, 1, 1), score=0.5)

    def test_json_round_trip(self):
        det = Detection(label="fan", box=BBox(10, 10, 50, 50), score=0.9)
        again = Detection.from_json(json.loads(canonical_dumps(det.to_json())))
        assert again == det


class TestInventory:
    def test_counts_canonicalized_and_merged(self):
        inv = DeviceInventory(counts={"Lamps": 1, "light": 2})
        assert inv.counts == {"light": 3}

    def test_nonpositive_rejected(self):
        with pytest.raises(InvariantViolation):
            DeviceInventory(counts={"fan": 0})

    def test_json_round_trip(self):
        inv = DeviceInventory(counts={"fan": 2, "light": 1})
        assert DeviceInventory.from_json(inv.to_json()) == inv


class TestRoomSession:
    def _record(self, uuid, name="light_01", label="light"):
        return DeviceRecord(uuid=uuid, label=label, name=name, box=BBox(0, 0, 5, 5), score=0.9)

    def test_duplicate_uuid_rejected(self):
        with pytest.raises(InvariantViolation):
            RoomSession(
                session_id="s",
                records=[self._record("a"), self._record("a", name="light_02")],
            )

    def test_binding_must_reference_record(self):
        with pytest.raises(InvariantViolation):
            RoomSession(session_id="s", records=[self._record("a")], bindings={"zzz": "dev"})

    def test_records_capped_by_inventory(self):
        inv = DeviceInventory(counts={"light": 1})
        with pytest.raises(InvariantViolation):
            RoomSession(
                session_id="s",
                inventory=inv,
                records=[self._record("a"), self._record("b", name="light_02")],
            )

    def test_well_formed_session(self):
        session = RoomSession(
            session_id="s",
            inventory=DeviceInventory(counts={"light": 2}),
            records=[self._record("a"), self._record("b", name="light_02")],
            landmarks=[Landmark(name="window", box=BBox(0, 0, 10, 10))],
            bindings={"a": "dev-1"},
        )
        payload = session.to_json()
        assert payload["bindings"] == {"a": "dev-1"}
        assert len(payload["records"]) == 2


def test_canonical_dumps_is_stable():
    one = canonical_dumps({"b": 1, "a": [1.5, 2]})
    two = canonical_dumps({"a": [1.5, 2], "b": 1})
    assert one == two == '{"a":[1.5,2],"b":1}'
