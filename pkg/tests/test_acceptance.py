"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
and enforcing its runtime budget. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import functools
import json
import random
import string
import time

import pytest

from inot.actuation import DeviceClient, HttpTransport, RetryPolicy
from inot.command import (
    Action,
    ControlCommand,
    parse_llm_command_response,
    parse_spatial_command,
    resolve,
)
from inot.config import AppConfig
from inot.core import BBox, Detection, DeviceInventory, DeviceRecord, Landmark, canonical_dumps
from inot.errors import AmbiguousTarget, InotError
from inot.onboarding import extract_inventory_rulebased
from inot.pipeline import Runtime
from inot.refinement import RefinementConfig, assign_names, rank_and_select, refine
from inot.simulator import FaultPlan, spawn_fleet
from inot.topology import TopologyConfig, compute_graph

from conftest import FIXTURES, make_room_image
from oracles import (
    oracle_edges,
    oracle_names,
    oracle_select,
    random_detection_scene,
    random_record_scene,
)

LANDMARKS = [Landmark.from_json(e) for e in json.loads((FIXTURES / "landmarks_room.json").read_text())]


def criterion(name, budget_seconds):
    """Time the body, enforce the budget, print one PASS/FAIL line."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  {name}")
                raise
            elapsed = time.perf_counter() - start
            assert elapsed < budget_seconds, f"{name}: {elapsed:.2f}s over budget {budget_seconds}s"
            print(f"PASS  {name}  ({elapsed:.2f}s < {budget_seconds}s)")

        return wrapper

    return deco


@criterion("inventory extraction: 20/20 corpus sentences", 1.0)
def test_acceptance_inventory_extraction(inventory_corpus):
    assert len(inventory_corpus) == 20
    texts = [e["text"] for e in inventory_corpus]
    assert "There are 2 fans and 1 light in this room." in texts
    assert "One fan, three lights, and one air conditioner are present." in texts
    hits = 0
    for entry in inventory_corpus:
        inv = extract_inventory_rulebased(entry["text"])
        assert inv.counts == entry["expected"], entry["text"]
        hits += 1
    assert hits == 20
    assert extract_inventory_rulebased("There are 2 fans and 1 light").counts == {
        "fan": 2,
        "light": 1,
    }


@criterion("refinement: 100 scenes match brute-force oracle", 5.0)
def test_acceptance_refinement_oracle():
    rng = random.Random(20250810)
    config = RefinementConfig()
    agreements = 0
    for _ in range(100):
        detections, counts = random_detection_scene(rng)
        inventory = DeviceInventory(counts=counts)
        got = rank_and_select(detections, inventory, config)
        want = oracle_select(detections, counts, config.confidence_threshold)
        assert got == want
        assert all(d.score >= 0.5 for d in got)
        agreements += 1
    assert agreements == 100
    # threshold excludes every sub-threshold detection
    low = Detection(label="fan", box=BBox(0, 0, 10, 10), score=0.49)
    assert rank_and_select([low], DeviceInventory(counts={"fan": 1}), config) == []


@criterion("naming: 1000 scenes, permutation-invariant, oracle-exact", 10.0)
def test_acceptance_naming_determinism():
    rng = random.Random(31337)
    config = RefinementConfig()
    checked = 0
    for _ in range(1000):
        detections, _ = random_detection_scene(rng, max_per_type=5)
        if not detections:
            continue
        base = {id(d): n for d, n in assign_names(detections, config)}
        assert base == oracle_names(detections, config.alignment_epsilon)
        shuffled = detections[:]
        rng.shuffle(shuffled)
        assert {id(d): n for d, n in assign_names(shuffled, config)} == base
        checked += 1
    assert checked >= 950


@criterion("topology: 500 scenes equal independent O(n^2) classifier", 10.0)
def test_acceptance_topology_oracle():
    rng = random.Random(777)
    config = TopologyConfig()
    import math

    for _ in range(500):
        records, landmarks = random_record_scene(rng, DeviceRecord)
        graph = compute_graph(records, landmarks, config, image_size=(1000, 700))
        got = {(e.subject_id, e.kind.value, e.object_id) for e in graph.edges}
        want = oracle_edges(records, landmarks, config.near_threshold, math.hypot(1000, 700))
        assert got == want
        # antisymmetry (device pairs are classified in both directions) and
        # near symmetry (always bidirectional)
        device_ids = {r.uuid for r in records}
        for s, k, o in got:
            if o in device_ids:
                if k == "left_of":
                    assert (o, "right_of", s) in got
                if k == "above":
                    assert (o, "below", s) in got
            if k == "near":
                assert (o, "near", s) in got
        # nearest_of_type total per (device, other type present) and landmark
        labels = {r.label for r in records}
        for r in records:
            for label in labels - {r.label}:
                assert any(
                    k == "nearest_of_type" and s == r.uuid and any(c.uuid == o for c in records if c.label == label)
                    for s, k, o in got
                )
            for lm in landmarks:
                assert (r.uuid, "nearest_of_type", lm.name) in got


@criterion("command resolution: 25/25 corpus with candidate counts", 1.0)
def test_acceptance_command_corpus(command_corpus, raw_detections, room_inventory):
    records = refine(raw_detections, room_inventory, RefinementConfig())
    graph = compute_graph(records, LANDMARKS, TopologyConfig(), image_size=(800, 600))
    by_name = {r.name: r for r in records}
    assert len(command_corpus) == 25
    resolved = 0
    for entry in command_corpus:
        ast = parse_spatial_command(entry["command"])
        if "expected_error" in entry:
            with pytest.raises(AmbiguousTarget) as err:
                resolve(ast, records, graph)
            assert len(err.value.candidates) == entry["expected_candidates"], entry["command"]
        else:
            commands = resolve(ast, records, graph)
            got = {c.uuid for c in commands}
            want = {by_name[n].uuid for n in entry["expected_names"]}
            assert got == want, entry["command"]
            expected_action = Action.from_json(entry["expected_action"])
            assert all(c.action == expected_action for c in commands)
        resolved += 1
    assert resolved == 25


def _fuzz_strings(rng, count):
    templates = [
        "[UUID: {u}, Action: {a}]",
        '{{"device": "{u}", "command": "{a}"}}',
        '[{{"device": "{u}", "command": "{a}"}}]',
        "random prose {u} {a}",
        "{a}{u}",
    ]
    pool = string.printable + "光风扇灯💡"
    for _ in range(count):
        choice = rng.random()
        if choice < 0.4:
            yield "".join(rng.choice(pool) for _ in range(rng.randint(0, 120)))
        else:
            template = rng.choice(templates)
            u = "".join(rng.choice(pool) for _ in range(rng.randint(0, 24)))
            a = "".join(rng.choice(pool) for _ in range(rng.randint(0, 16)))
            text = template.replace("{u}", u).replace("{a}", a)
            if rng.random() < 0.3:  # random corruption
                cut = rng.randint(0, len(text))
                text = text[:cut] + rng.choice(pool) + text[cut:]
            yield text


@criterion("model-response parser: both forms + 10000 fuzzed inputs", 30.0)
def test_acceptance_llm_parser(raw_detections, room_inventory):
    records = refine(raw_detections, room_inventory, RefinementConfig())
    by_name = {r.name: r for r in records}
    bracket = parse_llm_command_response(
        f"[UUID: {by_name['fan_01'].uuid}, Action: switch_on]", records
    )
    assert bracket == [ControlCommand(uuid=by_name["fan_01"].uuid, action=Action(kind="switch_on"))]
    json_form = parse_llm_command_response(
        '{"device": "light2", "command": "switch_on"}', records
    )
    assert json_form == [
        ControlCommand(uuid=by_name["light_02"].uuid, action=Action(kind="switch_on"))
    ]

    rng = random.Random(424242)
    for text in _fuzz_strings(rng, 10_000):
        try:
            out = parse_llm_command_response(text, records)
            assert isinstance(out, list) and out
        except InotError:
            pass  # errors are the expected outcome; crashes are not


FLEET_TEN = {
    "devices": [
        *({"device_id": f"light-{i}", "type": "light"} for i in range(1, 7)),
        *({"device_id": f"fan-{i}", "type": "fan"} for i in range(1, 5)),
    ]
}


def _oracle_fleet_state():
    # (on, brightness) per device; brightness None for fans
    state = {}
    for d in FLEET_TEN["devices"]:
        state[d["device_id"]] = [False, 100 if d["type"] == "light" else None]
    return state


def _oracle_apply(state, device_id, action: Action):
    entry = state[device_id]
    if action.kind == "switch_on":
        entry[0] = True
    elif action.kind == "switch_off":
        entry[0] = False
    elif action.kind == "toggle":
        entry[0] = not entry[0]
    elif action.kind == "adjust_brightness":
        entry[1] = action.level
        entry[0] = action.level > 0


def _random_commands(seed, n=1000):
    rng = random.Random(seed)
    lights = [f"light-{i}" for i in range(1, 7)]
    fans = [f"fan-{i}" for i in range(1, 5)]
    commands = []
    for _ in range(n):
        if rng.random() < 0.25:
            device = rng.choice(lights)
            action = Action(kind="adjust_brightness", level=rng.randint(0, 100))
        else:
            device = rng.choice(lights + fans)
            action = Action(kind=rng.choice(["switch_on", "switch_off", "toggle"]))
        commands.append((device, action))
    return commands


def _protocol_run(seed):
    handle = spawn_fleet(FLEET_TEN, fault_plan=FaultPlan(transient_failure_rate=0.1, seed=seed))
    try:
        client = DeviceClient(
            HttpTransport(handle.base_url, timeout=5.0), "inot-client", "inot-secret"
        )
        policy = RetryPolicy(max_attempts=3, base_backoff_ms=1)
        uuid_of = {d["device_id"]: f"uuid-{d['device_id']}" for d in FLEET_TEN["devices"]}
        bindings = {u: d for d, u in uuid_of.items()}
        plan = _random_commands(seed)
        commands = [ControlCommand(uuid=uuid_of[d], action=a) for d, a in plan]
        results = client.execute_all(commands, bindings, policy)

        oracle = _oracle_fleet_state()
        for (device_id, action), result in zip(plan, results):
            assert result.attempts <= policy.max_attempts
            if result.status == "success":
                _oracle_apply(oracle, device_id, action)

        final = {}
        for entry in client.list_devices():
            final[entry["device_id"]] = [
                entry["state"]["on"],
                entry["state"].get("brightness"),
            ]
        outcome_vector = [(r.status, r.attempts, r.error_kind) for r in results]
        return oracle, final, outcome_vector
    finally:
        handle.stop()


@criterion("protocol round-trip: 1000 commands, 10% faults, reproducible", 30.0)
def test_acceptance_protocol_round_trip():
    seed = 20250810
    oracle_a, final_a, vector_a = _protocol_run(seed)
    assert final_a == oracle_a  # zero final-state divergence
    oracle_b, final_b, vector_b = _protocol_run(seed)
    assert final_b == oracle_b
    assert vector_a == vector_b  # bit-reproducible across runs
    assert final_a == final_b
    assert any(attempts > 1 for _, attempts, _ in vector_a)  # faults actually fired


def _offline_runtime(tmp_path) -> Runtime:
    return Runtime(
        AppConfig(
            store_root=str(tmp_path / "sessions"),
            fixture_detections=str(FIXTURES / "detections_room.json"),
            use_simulator=True,
            simulator_fleet=str(FIXTURES / "fleet_room.json"),
        )
    )


def _drive_pipeline(runtime: Runtime) -> tuple[str, dict]:
    sid = runtime.create_session()
    runtime.set_inventory(sid, "There are three lights and two fans in this room.")
    records = runtime.ingest_image(sid, make_room_image())
    annotations = runtime.get_annotations(sid)
    runtime.put_annotations(
        sid,
        annotations["records"],
        [l.to_json() for l in LANDMARKS],
        [],
    )
    records = runtime.store.load_records(sid)
    by_name = {r.name: r.uuid for r in records}
    runtime.set_bindings(
        sid,
        {
            by_name["light_01"]: "light-1",
            by_name["light_02"]: "light-2",
            by_name["light_03"]: "light-3",
            by_name["fan_01"]: "fan-1",
            by_name["fan_02"]: "fan-2",
        },
    )
    runtime.compute_topology(sid, mode="deterministic")
    return sid, by_name


@criterion("end-to-end offline pipeline flips the right light", 1.0)
def test_acceptance_end_to_end(tmp_path):
    runtime = _offline_runtime(tmp_path)
    sid, by_name = _drive_pipeline(runtime)
    outcome = runtime.run_command(sid, text="switch on the light that is near the AC")
    assert outcome["commands"] == [{"uuid": by_name["light_02"], "action": "switch_on"}]
    assert outcome["results"][0]["status"] == "success"
    assert runtime.simulator.device("light-2").on is True
    assert runtime.simulator.device("light-1").on is False
    assert runtime.simulator.device("light-3").on is False


@criterion("persistence: restart between stages is byte-identical", 10.0)
def test_acceptance_persistence(tmp_path):
    config = AppConfig(
        store_root=str(tmp_path / "sessions"),
        fixture_detections=str(FIXTURES / "detections_room.json"),
        use_simulator=True,
        simulator_fleet=str(FIXTURES / "fleet_room.json"),
    )

    def reopen() -> Runtime:
        return Runtime(config)  # fresh process stand-in over the same files

    runtime = reopen()
    sid = runtime.create_session()
    runtime.set_inventory(sid, "There are three lights and two fans in this room.")
    snapshots = [runtime.store.canonical_snapshot(sid)]

    runtime = reopen()
    assert runtime.store.canonical_snapshot(sid) == snapshots[-1]
    runtime.ingest_image(sid, make_room_image())
    snapshots.append(runtime.store.canonical_snapshot(sid))

    runtime = reopen()
    assert runtime.store.canonical_snapshot(sid) == snapshots[-1]
    annotations = runtime.get_annotations(sid)
    runtime.put_annotations(sid, annotations["records"], [l.to_json() for l in LANDMARKS], [])
    snapshots.append(runtime.store.canonical_snapshot(sid))

    runtime = reopen()
    assert runtime.store.canonical_snapshot(sid) == snapshots[-1]
    runtime.compute_topology(sid, mode="deterministic")
    snapshots.append(runtime.store.canonical_snapshot(sid))

    runtime = reopen()
    assert runtime.store.canonical_snapshot(sid) == snapshots[-1]
    # canonical serialization of the aggregate is also restart-stable
    before = canonical_dumps(runtime.store.load_session(sid).to_json())
    runtime = reopen()
    assert canonical_dumps(runtime.store.load_session(sid).to_json()) == before
