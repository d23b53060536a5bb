import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inot.core import BBox, DeviceRecord, Landmark
from inot.errors import EmptyReport, NoDevices, NoSuchType
from inot.topology import (
    RelationKind,
    SpatialGraph,
    TopologyConfig,
    build_topology_prompt,
    classify_pair,
    compute_graph,
    parse_topology_report,
    superlative,
)


def rec(uuid, label, name, x1, y1, x2, y2, score=0.9):
    return DeviceRecord(uuid=uuid, label=label, name=name, box=BBox(x1, y1, x2, y2), score=score)


class TestClassifyPair:
    def test_disjoint_x_same_y(self):
        a, b = BBox(0, 0, 10, 10), BBox(20, 0, 30, 10)
        assert classify_pair(a, b) == (RelationKind.LEFT_OF, RelationKind.Y_OVERLAP)

    def test_identity(self):
        a = BBox(0, 0, 10, 10)
        assert classify_pair(a, a) == (RelationKind.X_OVERLAP, RelationKind.Y_OVERLAP)

    def test_below(self):
        a, b = BBox(0, 20, 10, 30), BBox(0, 0, 10, 10)
        assert classify_pair(a, b) == (RelationKind.X_OVERLAP, RelationKind.BELOW)

    @given(
        st.tuples(*(st.floats(0, 500, allow_nan=False) for _ in range(4))),
        st.tuples(*(st.floats(0, 500, allow_nan=False) for _ in range(4))),
    )
    @settings(max_examples=200, deadline=None)
    def test_antisymmetry(self, p, q):
        try:
            a = BBox(p[0], p[1], p[0] + p[2] + 1, p[1] + p[3] + 1)
            b = BBox(q[0], q[1], q[0] + q[2] + 1, q[1] + q[3] + 1)
        except Exception:
            return
        ha, va = classify_pair(a, b)
        hb, vb = classify_pair(b, a)
        assert (ha == RelationKind.LEFT_OF) == (hb == RelationKind.RIGHT_OF)
        assert (va == RelationKind.ABOVE) == (vb == RelationKind.BELOW)
        assert (ha == RelationKind.X_OVERLAP) == (hb == RelationKind.X_OVERLAP)


from oracles import oracle_edges, random_record_scene


def random_scene(rng, n_max=7, lm_max=3):
    return random_record_scene(rng, DeviceRecord, n_max=n_max, lm_max=lm_max)


class TestComputeGraph:
    def test_near_threshold_example(self):
        # 200 px apart in a 1000x1000 image: 200/1414.2 ~ 0.141 <= 0.20
        a = rec("a", "light", "light_01", 100, 100, 120, 120)
        b = rec("b", "fan", "fan_01", 300, 100, 320, 120)
        graph = compute_graph([a, b], [], TopologyConfig(), image_size=(1000, 1000))
        assert graph.has_edge("a", RelationKind.NEAR, "b")
        assert graph.has_edge("b", RelationKind.NEAR, "a")

    def test_single_device_no_landmarks(self):
        a = rec("a", "light", "light_01", 0, 0, 10, 10)
        graph = compute_graph([a], [], TopologyConfig(), image_size=(100, 100))
        assert graph.edges == ()

    def test_no_devices(self):
        with pytest.raises(NoDevices):
            compute_graph([], [], TopologyConfig(), image_size=(100, 100))

    def test_matches_oracle_on_random_scenes(self):
        rng = random.Random(2024)
        config = TopologyConfig()
        for _ in range(200):
            records, landmarks = random_scene(rng)
            graph = compute_graph(records, landmarks, config, image_size=(1000, 700))
            diag = math.hypot(1000, 700)
            got = {(e.subject_id, e.kind.value, e.object_id) for e in graph.edges}
            want = oracle_edges(records, landmarks, config.near_threshold, diag)
            assert got == want

    def test_translation_invariance(self):
        rng = random.Random(5)
        config = TopologyConfig()
        records, landmarks = random_scene(rng)
        base = compute_graph(records, landmarks, config, image_size=(2000, 2000))
        dx, dy = 37.0, 53.0
        moved_records = [
            rec(r.uuid, r.label, r.name, r.box.x1 + dx, r.box.y1 + dy, r.box.x2 + dx, r.box.y2 + dy, r.score)
            for r in records
        ]
        moved_landmarks = [
            Landmark(name=l.name, box=BBox(l.box.x1 + dx, l.box.y1 + dy, l.box.x2 + dx, l.box.y2 + dy))
            for l in landmarks
        ]
        moved = compute_graph(moved_records, moved_landmarks, config, image_size=(2000, 2000))
        strip = lambda g: {(e.subject_id, e.kind.value, e.object_id) for e in g.edges}
        assert strip(base) == strip(moved)

    def test_uniform_scaling_preserves_near(self):
        rng = random.Random(6)
        config = TopologyConfig()
        records, landmarks = random_scene(rng)
        base = compute_graph(records, landmarks, config, image_size=(1000, 1000))
        k = 2.5
        scaled_records = [
            rec(r.uuid, r.label, r.name, r.box.x1 * k, r.box.y1 * k, r.box.x2 * k, r.box.y2 * k, r.score)
            for r in records
        ]
        scaled_landmarks = [
            Landmark(name=l.name, box=BBox(l.box.x1 * k, l.box.y1 * k, l.box.x2 * k, l.box.y2 * k))
            for l in landmarks
        ]
        scaled = compute_graph(scaled_records, scaled_landmarks, config, image_size=(2500, 2500))
        near = lambda g: {
            (e.subject_id, e.object_id) for e in g.edges if e.kind == RelationKind.NEAR
        }
        assert near(base) == near(scaled)

    def test_serialization_round_trip(self, room_records, room_landmarks):
        graph = compute_graph(room_records, room_landmarks, TopologyConfig(), image_size=(800, 600))
        again = SpatialGraph.from_json(graph.to_json())
        assert again == graph

    def test_fixture_room_near_relations(self, room_records, room_landmarks):
        graph = compute_graph(room_records, room_landmarks, TopologyConfig(), image_size=(800, 600))
        by_name = {r.name: r for r in room_records}
        # hand-computed: dist(light_01, window) = sqrt(100+25600) ~ 160.3 <= 200
        assert graph.has_edge(by_name["light_01"].uuid, RelationKind.NEAR, "window")
        assert graph.has_edge(by_name["fan_01"].uuid, RelationKind.NEAR, "window")
        # dist(light_02, ac) ~ 271.7 > 200: not near
        assert not graph.has_edge(by_name["light_02"].uuid, RelationKind.NEAR, "ac")


class TestSuperlative:
    def _lights(self):
        return [
            rec("a", "light", "light_01", 80, 0, 120, 10),    # cx 100
            rec("b", "light", "light_02", 280, 0, 320, 10),   # cx 300
            rec("c", "light", "light_03", 480, 0, 520, 10),   # cx 500
        ]

    def test_leftmost(self):
        assert superlative(self._lights(), "light", "leftmost").uuid == "a"

    def test_rightmost(self):
        assert superlative(self._lights(), "light", "rightmost").uuid == "c"

    def test_single_any_axis(self):
        fan = rec("f", "fan", "fan_01", 0, 0, 10, 10)
        for axis in ("leftmost", "rightmost", "topmost", "bottommost"):
            assert superlative([fan], "fan", axis).uuid == "f"

    def test_absent_type(self):
        with pytest.raises(NoSuchType):
            superlative(self._lights(), "fan", "leftmost")

    def test_tie_breaks_by_name(self):
        a = rec("x", "light", "light_02", 100, 0, 120, 10)
        b = rec("y", "light", "light_01", 100, 20, 120, 30)
        assert superlative([a, b], "light", "leftmost").name == "light_01"


class TestTopologyPrompt:
    def test_headings_present(self, room_records):
        prompt = build_topology_prompt("aW1n", room_records)
        for heading in ("Object Location", "Nearby Objects", "Spatial Relationships"):
            assert heading in prompt.text

    def test_word_cap_clause(self, room_records):
        prompt = build_topology_prompt("aW1n", room_records)
        assert "does not exceed 1000 words" in prompt.text

    def test_empty_records(self):
        with pytest.raises(NoDevices):
            build_topology_prompt("aW1n", [])


class TestReportParsing:
    def test_valid_report_no_warnings(self, room_records):
        text = (
            "light_01 sits by the window on the left wall. "
            "light_02 hangs above the photo frame, near fan_01. "
            "light_03 is the desk lamp. fan_02 is on the right side."
        )
        report = parse_topology_report(text, room_records)
        assert report.warnings == ()
        assert report.text == text

    def test_unknown_device_warns(self, room_records):
        report = parse_topology_report("light_09 is by the door", room_records)
        assert any("light_09" in w for w in report.warnings)

    def test_name_variant_resolves(self, room_records):
        report = parse_topology_report("light2 is above the photo frame", room_records)
        assert report.warnings == ()

    def test_empty_rejected(self):
        with pytest.raises(EmptyReport):
            parse_topology_report("", [])

    def test_overlong_truncated(self, room_records):
        text = "light_01 " + "word " * 1200
        report = parse_topology_report(text, room_records)
        assert len(report.text.split()) == 1000
        assert any("truncated" in w for w in report.warnings)
