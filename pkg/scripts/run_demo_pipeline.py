#!/usr/bin/env python3
"""Offline end-to-end demo: synthetic room -> records -> graph -> actuation.

Builds a synthetic room image and a matching detection fixture, drives the
full deterministic pipeline against the in-process device simulator, and
executes a spatially-qualified command. No model endpoints, no network.

Usage: python3 scripts/run_demo_pipeline.py [--workdir DIR] [--command TEXT]
"""

import argparse
import io
import json
import sys
import tempfile
from pathlib import Path

from PIL import Image, ImageDraw

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from inot.config import AppConfig
from inot.errors import AmbiguousTarget
from inot.pipeline import Runtime

SCENE_W, SCENE_H = 800, 600

# (label, box, score): intentionally over-detected; refinement prunes it
DETECTIONS = [
    ("light", [80, 280, 140, 340], 0.92),
    ("light", [380, 300, 440, 360], 0.88),
    ("light", [380, 40, 440, 100], 0.81),
    ("light", [700, 500, 750, 560], 0.55),
    ("light", [90, 285, 150, 345], 0.42),
    ("fan", [200, 60, 280, 120], 0.90),
    ("fan", [560, 300, 640, 380], 0.80),
    ("chair", [500, 420, 560, 520], 0.55),
]

LANDMARKS = [
    ("window", [20, 40, 180, 260]),
    ("ac", [600, 60, 760, 140]),
    ("desk", [300, 380, 520, 560]),
    ("photo frame", [360, 160, 460, 240]),
]

FLEET = {
    "devices": [
        {"device_id": "light-1", "type": "light"},
        {"device_id": "light-2", "type": "light"},
        {"device_id": "light-3", "type": "light"},
        {"device_id": "fan-1", "type": "fan"},
        {"device_id": "fan-2", "type": "fan"},
    ]
}


def paint_room() -> bytes:
    img = Image.new("RGB", (SCENE_W, SCENE_H), (236, 233, 225))
    draw = ImageDraw.Draw(img)
    for _, box in LANDMARKS:
        draw.rectangle(box, fill=(200, 205, 210), outline=(90, 90, 90))
    for label, box, _ in DETECTIONS:
        fill = {"light": (255, 244, 180), "fan": (90, 90, 95)}.get(label, (150, 120, 95))
        draw.rectangle(box, fill=fill, outline=(60, 60, 60))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", help="keep artifacts here instead of a temp dir")
    parser.add_argument(
        "--command", default="switch on the light that is near the AC"
    )
    args = parser.parse_args()

    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp(prefix="inot-demo-"))
    workdir.mkdir(parents=True, exist_ok=True)
    detections_path = workdir / "detections.json"
    detections_path.write_text(
        json.dumps([{"label": l, "box": b, "score": s} for l, b, s in DETECTIONS], indent=2)
    )
    fleet_path = workdir / "fleet.json"
    fleet_path.write_text(json.dumps(FLEET, indent=2))

    runtime = Runtime(
        AppConfig(
            store_root=str(workdir / "sessions"),
            fixture_detections=str(detections_path),
            use_simulator=True,
            simulator_fleet=str(fleet_path),
        )
    )

    sid = runtime.create_session()
    print(f"[1] session created: {sid}")

    inventory = runtime.set_inventory(sid, "There are three lights and two fans in this room.")
    print(f"[2] inventory extracted: {dict(inventory.counts)}")

    records = runtime.ingest_image(sid, paint_room())
    print(f"[3] detection + refinement: {len(records)} records")
    for rec in records:
        print(f"      {rec.name:10s} box={[int(v) for v in rec.box.to_json()]} score={rec.score:.2f}")

    annotations = runtime.get_annotations(sid)
    runtime.put_annotations(
        sid,
        annotations["records"],
        [{"name": n, "box": b} for n, b in LANDMARKS],
        [],
    )
    print(f"[4] landmarks annotated: {[n for n, _ in LANDMARKS]}")
    annotated = runtime.store.session_path(sid, "annotated.png")
    print(f"      annotated image: {annotated}")

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
    print("[5] bindings set (record uuid -> simulated device)")

    graph, _ = runtime.compute_topology(sid)
    near = [e for e in graph.edges if e.kind.value == "near"]
    print(f"[6] spatial graph: {len(graph.edges)} edges ({len(near)} near)")

    before = {d["device_id"]: d["state"] for d in runtime.devices()}
    print(f"[7] command: {args.command!r}")
    try:
        outcome = runtime.run_command(sid, text=args.command)
    except AmbiguousTarget as exc:
        print(f"      ambiguous: {exc.detail}")
        for uuid, name in exc.candidates:
            print(f"        candidate {name} ({uuid})")
        return 2
    for cmd, res in zip(outcome["commands"], outcome["results"]):
        name = next(r.name for r in records if r.uuid == cmd["uuid"])
        print(f"      resolved -> {name}  action={cmd['action']}  result={res['status']}")

    after = {d["device_id"]: d["state"] for d in runtime.devices()}
    changed = {k: (before[k], after[k]) for k in after if before[k] != after[k]}
    for device_id, (b, a) in changed.items():
        print(f"[8] device state changed: {device_id}: {b} -> {a}")
    if not changed:
        print("[8] no device state changed")
    print(f"artifacts kept in {workdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
