"""Session-scoped orchestration of the full pipeline.

One Runtime owns the store, the configured adapters and the device backend
(real or simulated), and exposes the logical operations the HTTP service
and the CLI both call. Requests within one session are serialized; separate
sessions proceed in parallel.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from typing import Any, Optional, Sequence

from . import command as command_mod
from . import detection, onboarding, refinement, topology, visualizer
from .actuation import DeviceClient, HttpTransport, InProcessTransport, RetryPolicy, validate_bindings
from .adapters import (
    FixtureDetectorAdapter,
    HttpDetectorAdapter,
    HttpLlmAdapter,
    HttpVlmAdapter,
)
from .command import Action, CommandAST, ControlCommand
from .config import AppConfig
from .core import BBox, Detection, DeviceInventory, DeviceRecord, Landmark, canonicalize_type
from .errors import (
    ConfigError,
    EmptyInventory,
    ImageDecodeError,
    InvariantViolation,
    NoDevices,
    UnknownDevice,
)
from .refinement import RefinementConfig
from .simulator import DeviceSimulator, FaultPlan
from .topology import SpatialGraph, TopologyConfig, TopologyReport


class Runtime:
    def __init__(self, config: AppConfig):
        from .store import SessionStore

        self.config = config
        self.store = SessionStore(config.store_root)
        self.refine_config = RefinementConfig(
            confidence_threshold=config.confidence_threshold,
            alignment_epsilon=config.alignment_epsilon,
        )
        self.topology_config = TopologyConfig(near_threshold=config.near_threshold)
        self.retry_policy = RetryPolicy()

        self.onboarding_llm = (
            HttpLlmAdapter(config.onboarding_llm_endpoint)
            if config.onboarding_llm_endpoint
            else None
        )
        self.command_llm = (
            HttpLlmAdapter(config.command_llm_endpoint) if config.command_llm_endpoint else None
        )
        self.topology_vlm = (
            HttpVlmAdapter(config.topology_vlm_endpoint)
            if config.topology_vlm_endpoint
            else None
        )

        self.simulator: Optional[DeviceSimulator] = None
        if config.use_simulator:
            fleet = config.simulator_fleet or {"devices": []}
            self.simulator = DeviceSimulator.from_fleet_config(
                fleet,
                client_id=config.backend_client_id,
                secret=config.backend_secret,
            )
            if config.simulator_fault_rate > 0:
                self.simulator.inject_faults(
                    FaultPlan(
                        transient_failure_rate=config.simulator_fault_rate,
                        seed=config.simulator_seed,
                    )
                )
            transport = InProcessTransport(self.simulator)
        else:
            transport = HttpTransport(config.backend_base_url)
        self.client = DeviceClient(
            transport, client_id=config.backend_client_id, secret=config.backend_secret
        )

        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[session_id]

    # -- onboarding -----------------------------------------------------------

    def create_session(self) -> str:
        return self.store.create_session()

    def set_inventory(self, session_id: str, text: str, mode: str = "deterministic") -> DeviceInventory:
        """Re-declaration replaces the previous inventory outright."""
        self.store._meta(session_id)  # existence check
        if mode == "llm":
            if self.onboarding_llm is None:
                raise ConfigError("onboarding_llm_endpoint is not configured")
            inventory = onboarding.extract_inventory(text, adapter=self.onboarding_llm)
        else:
            inventory = onboarding.extract_inventory_rulebased(text)
        self.store.save_inventory(session_id, inventory)
        return inventory

    # -- detection / annotation ------------------------------------------------

    def _detector(self) -> Any:
        if self.config.fixture_detections:
            return FixtureDetectorAdapter.from_file(self.config.fixture_detections)
        if self.config.detector_endpoint:
            return HttpDetectorAdapter(self.config.detector_endpoint)
        raise ConfigError("no detector configured (detector_endpoint or fixture_detections)")

    def _run_detection(self, session_id: str, image_bytes: bytes) -> list[Detection]:
        session = self.store.load_session(session_id)
        if session.inventory is None or len(session.inventory) == 0:
            raise EmptyInventory("declare the device inventory before uploading an image")
        prompts = detection.build_detection_prompts(
            session.inventory, room_context=self.config.room_context
        )
        adapter = self._detector()
        if isinstance(adapter, FixtureDetectorAdapter):
            for label, prompt in prompts:
                adapter.register_prompt(prompt, label)
        raw = detection.detect(image_bytes, prompts, adapter)
        self.store.save_raw_detections(session_id, raw)
        return raw

    def _render(self, session_id: str, records, landmarks) -> None:
        image = self.store.load_image(session_id)
        if image is None:
            return
        palette = visualizer.assign_colors({r.label for r in records})
        png = visualizer.render_annotations(image, records, landmarks, palette)
        self.store.write_bytes(session_id, "annotated.png", png)

    def _recompute_graph(self, session_id: str) -> Optional[SpatialGraph]:
        records = self.store.load_records(session_id)
        if not records:
            return None
        landmarks = self.store.load_landmarks(session_id)
        image = self.store.load_image(session_id)
        size = detection.image_size(image) if image else (0.0, 0.0)
        graph = topology.compute_graph(records, landmarks, self.topology_config, image_size=size)
        self.store.save_graph(session_id, graph)
        return graph

    def ingest_image(self, session_id: str, image_bytes: bytes) -> list[DeviceRecord]:
        """Full visual pass: store image, detect, refine, render, regraph."""
        detection.image_size(image_bytes)  # validates decodability up front
        self.store.save_image(session_id, image_bytes)
        raw = self._run_detection(session_id, image_bytes)
        session = self.store.load_session(session_id)
        confirmed_ids = set(self.store.load_confirmed(session_id))
        confirmed = [r for r in session.records if r.uuid in confirmed_ids]
        records = refinement.refine(
            raw, session.inventory, self.refine_config, confirmed=confirmed
        )
        self.store.save_records(session_id, records)
        self.store.save_confirmed(session_id, [r.uuid for r in records if r.uuid in confirmed_ids])
        self._render(session_id, records, session.landmarks)
        self._recompute_graph(session_id)
        return records

    def refresh_annotations(self, session_id: str) -> list[DeviceRecord]:
        """Re-run detection on the stored image; confirmed records survive."""
        image = self.store.load_image(session_id)
        if image is None:
            raise ImageDecodeError("session has no image to re-detect")
        raw = self._run_detection(session_id, image)
        session = self.store.load_session(session_id)
        confirmed_ids = set(self.store.load_confirmed(session_id))
        confirmed = [r for r in session.records if r.uuid in confirmed_ids]
        records = refinement.refine(
            raw, session.inventory, self.refine_config, confirmed=confirmed
        )
        self.store.save_records(session_id, records)
        self.store.save_confirmed(session_id, [r.uuid for r in records if r.uuid in confirmed_ids])
        self._render(session_id, records, session.landmarks)
        self._recompute_graph(session_id)
        return records

    def get_annotations(self, session_id: str) -> dict[str, Any]:
        session = self.store.load_session(session_id)
        return {
            "records": [r.to_json() for r in session.records],
            "landmarks": [l.to_json() for l in session.landmarks],
            "confirmed": self.store.load_confirmed(session_id),
        }

    def put_annotations(
        self,
        session_id: str,
        records_payload: Sequence[dict],
        landmarks_payload: Sequence[dict],
        confirmed: Sequence[str] = (),
    ) -> dict[str, Any]:
        """Manual corrections: replace boxes wholesale, re-run naming.

        Entries carrying a uuid keep it; new entries get fresh uuids. The
        inventory grows to cover manual additions so the session invariant
        (records per type <= declared count) keeps holding.
        """
        session = self.store.load_session(session_id)
        detections: list[Detection] = []
        stable: dict[tuple[str, tuple[float, float, float, float]], str] = {}
        for entry in records_payload:
            label = canonicalize_type(str(entry["label"]))
            box = BBox.from_json(entry["box"])
            score = float(entry.get("score", 1.0))
            det = Detection(label=label, box=box, score=score)
            detections.append(det)
            if entry.get("uuid"):
                stable[(label, (box.x1, box.y1, box.x2, box.y2))] = str(entry["uuid"])

        named = refinement.assign_names(detections, self.refine_config)
        records = sorted(
            refinement.assign_uuids(named, stable_uuids=stable), key=lambda r: r.name
        )

        landmarks = [
            Landmark(name=str(e["name"]).strip().lower(), box=BBox.from_json(e["box"]))
            for e in landmarks_payload
        ]
        if len({l.name for l in landmarks}) != len(landmarks):
            raise InvariantViolation("landmark names must be unique")

        counts: dict[str, int] = {}
        for rec in records:
            counts[rec.label] = counts.get(rec.label, 0) + 1
        if session.inventory is not None:
            for label, count in session.inventory.counts.items():
                counts[label] = max(counts.get(label, 0), count)
        if counts:
            self.store.save_inventory(session_id, DeviceInventory(counts=counts))

        uuids = {r.uuid for r in records}
        kept_confirmed = sorted(u for u in confirmed if u in uuids)

        self.store.save_records(session_id, records)
        self.store.save_landmarks(session_id, landmarks)
        self.store.save_confirmed(session_id, kept_confirmed)
        self._render(session_id, records, landmarks)
        self._recompute_graph(session_id)
        return self.get_annotations(session_id)

    # -- bindings / topology ---------------------------------------------------

    def set_bindings(self, session_id: str, bindings: dict[str, str]) -> dict[str, str]:
        session = self.store.load_session(session_id)
        clean = validate_bindings(bindings, session.records)
        self.store.save_bindings(session_id, clean)
        return clean

    def compute_topology(
        self, session_id: str, mode: str = "deterministic"
    ) -> tuple[SpatialGraph, Optional[TopologyReport]]:
        graph = self._recompute_graph(session_id)
        if graph is None:
            raise NoDevices("no records to build topology from")
        report = None
        if mode == "vlm":
            if self.topology_vlm is None:
                raise ConfigError("topology_vlm_endpoint is not configured")
            records = self.store.load_records(session_id)
            annotated = self.store.read_bytes(session_id, "annotated.png")
            if annotated is None:
                raise ImageDecodeError("no annotated image for the vision model")
            prompt = topology.build_topology_prompt(
                visualizer.encode_base64(annotated), records
            )
            text = self.topology_vlm.complete_with_image(prompt.text, prompt.image_b64)
            report = topology.parse_topology_report(text, records)
            self.store.save_topology(session_id, report)
        return graph, report

    # -- commands ----------------------------------------------------------

    def _graph_for(self, session_id: str) -> SpatialGraph:
        graph = self.store.load_graph(session_id)
        if graph is None:
            graph = self._recompute_graph(session_id)
        if graph is None:
            raise NoDevices("no records in session; annotate before commanding")
        return graph

    def resolve_command(
        self,
        session_id: str,
        text: Optional[str] = None,
        mode: str = "deterministic",
        uuid: Optional[str] = None,
        action: Any = None,
    ) -> list[ControlCommand]:
        records = self.store.load_records(session_id)
        if not records:
            raise NoDevices("no records in session; annotate before commanding")

        if uuid is not None:
            if not any(r.uuid == uuid for r in records):
                raise UnknownDevice(f"uuid {uuid} not in session records")
            return [ControlCommand(uuid=uuid, action=Action.from_json(action))]

        if not text or not text.strip():
            raise NoDevices("command text is empty")

        if mode == "llm":
            if self.command_llm is None:
                raise ConfigError("command_llm_endpoint is not configured")
            context: Any = self.store.load_topology(session_id) or self._graph_for(session_id)
            prompt = command_mod.build_command_prompt(text, records, context)
            reply = self.command_llm.complete(prompt)
            return command_mod.parse_llm_command_response(reply, records)

        ast: CommandAST = command_mod.parse_spatial_command(text)
        return command_mod.resolve(ast, records, self._graph_for(session_id))

    def execute(self, session_id: str, commands: Sequence[ControlCommand]):
        session = self.store.load_session(session_id)
        return self.client.execute_all(commands, session.bindings, self.retry_policy)

    def run_command(
        self,
        session_id: str,
        text: Optional[str] = None,
        mode: str = "deterministic",
        dry_run: bool = False,
        uuid: Optional[str] = None,
        action: Any = None,
    ) -> dict[str, Any]:
        commands = self.resolve_command(session_id, text=text, mode=mode, uuid=uuid, action=action)
        results = [] if dry_run else self.execute(session_id, commands)
        return {
            "commands": [c.to_json() for c in commands],
            "results": [r.to_json() for r in results],
        }

    def devices(self) -> list[dict[str, Any]]:
        return self.client.list_devices()
