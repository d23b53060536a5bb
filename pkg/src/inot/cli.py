"""``inot`` command line: batch pipeline driving, simulator, and service.

Exit codes: 0 success, 2 command-resolution ambiguity, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ENV_CONFIG, AppConfig, load_config
from .errors import AmbiguousTarget, InotError
from .pipeline import Runtime

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_AMBIGUOUS = 2


def _runtime_from_args(args) -> Runtime:
    if getattr(args, "config", None) or os.environ.get(ENV_CONFIG):
        config = load_config(getattr(args, "config", None))
        if getattr(args, "store", None):
            config = AppConfig(**{**config.__dict__, "store_root": args.store})
        return Runtime(config)
    # no config file: offline defaults with an in-process simulator
    kwargs = {"store_root": getattr(args, "store", None) or "./inot_sessions", "use_simulator": True}
    if getattr(args, "fixtures", None):
        kwargs["fixture_detections"] = str(Path(args.fixtures) / "detections.json")
    if getattr(args, "fleet", None):
        kwargs["simulator_fleet"] = args.fleet
    return Runtime(AppConfig(**kwargs))


def _cmd_onboard(args) -> int:
    runtime = _runtime_from_args(args)
    session_id = runtime.create_session()
    inventory = runtime.set_inventory(session_id, args.inventory)
    records = runtime.ingest_image(session_id, Path(args.image).read_bytes())
    print(f"session: {session_id}")
    print(f"inventory: {json.dumps(dict(inventory.counts))}")
    for rec in records:
        print(f"  {rec.name}  uuid={rec.uuid}  box={rec.box.to_json()}  score={rec.score:.2f}")
    return EXIT_OK


def _cmd_annotate(args) -> int:
    runtime = _runtime_from_args(args)
    png = runtime.store.read_bytes(args.session, "annotated.png")
    if png is None:
        print("session has no annotated image yet", file=sys.stderr)
        return EXIT_ERROR
    Path(args.out).write_bytes(png)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_topology(args) -> int:
    runtime = _runtime_from_args(args)
    graph, report = runtime.compute_topology(args.session, mode=args.mode)
    print(json.dumps(graph.to_json(), indent=2))
    if report:
        print(report.text)
    return EXIT_OK


def _cmd_cmd(args) -> int:
    runtime = _runtime_from_args(args)
    try:
        outcome = runtime.run_command(
            args.session, text=args.text, mode=args.mode, dry_run=args.dry_run
        )
    except AmbiguousTarget as exc:
        print(f"ambiguous command: {exc.detail}", file=sys.stderr)
        for uuid, name in exc.candidates:
            print(f"  candidate: {name}  uuid={uuid}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    for cmd in outcome["commands"]:
        print(f"resolved: {json.dumps(cmd)}")
    failed = False
    for res in outcome["results"]:
        line = f"executed: {res['status']}"
        if res["error_kind"]:
            line += f" ({res['error_kind']})"
            failed = True
        print(line)
    return EXIT_ERROR if failed else EXIT_OK


def _cmd_sim(args) -> int:
    from .simulator import FaultPlan, spawn_fleet

    plan = None
    if args.fault_rate > 0:
        plan = FaultPlan(transient_failure_rate=args.fault_rate, seed=args.seed)
    handle = spawn_fleet(args.fleet, port=args.port, fault_plan=plan)
    print(f"simulator listening on {handle.base_url}")
    try:
        handle.thread.join()
    except KeyboardInterrupt:
        handle.stop()
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(load_config(args.config))
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("onboard", help="create a session from an image and an inventory sentence")
    p.add_argument("--image", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--fixtures", help="directory with detections.json for offline detection")
    p.add_argument("--store", help="session store root")
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_onboard)

    p = sub.add_parser("annotate", help="export the annotated image")
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--store")
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_annotate)

    p = sub.add_parser("topology", help="compute the spatial graph")
    p.add_argument("--session", required=True)
    p.add_argument("--mode", choices=["deterministic", "vlm"], default="deterministic")
    p.add_argument("--store")
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_topology)

    p = sub.add_parser("cmd", help="resolve (and execute) a natural-language command")
    p.add_argument("--session", required=True)
    p.add_argument("text")
    p.add_argument("--mode", choices=["deterministic", "llm"], default="deterministic")
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--store")
    p.add_argument("--fleet")
    p.add_argument("--config")
    p.set_defaults(fn=_cmd_cmd)

    p = sub.add_parser("sim", help="run the device simulator standalone")
    p.add_argument("--fleet", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--fault-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_sim)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=False)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8600)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except AmbiguousTarget as exc:
        print(f"ambiguous: {exc.detail}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except InotError as exc:
        print(f"error: {exc.kind}: {exc.detail}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
