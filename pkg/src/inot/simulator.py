"""Simulated smart-device fleet speaking the actuation wire protocol.

The protocol handler is transport-independent: the HTTP server delegates to
``handle()`` and tests may call it in-process, so both paths exercise the
exact same request/response dicts. Fault injection is seeded and draws only
on command requests, which keeps whole runs bit-reproducible.

Wire protocol (shared with the client; JSON over HTTP):
  POST /v1/auth {"client_id": s, "secret": s}
      -> 200 {"token": s, "expires_in": int} | 401 {"error": "auth_failure"}
  GET /v1/devices (Bearer)
      -> 200 [{"device_id": s, "type": s, "online": b, "state": {...}}]
  POST /v1/devices/{id}/commands (Bearer)
      {"commands": [{"code": "switch_on"|"switch_off"|"toggle"|"set_brightness",
                     "value": bool|int}]}
      -> 200 {"success": true, "t": epoch_ms} | 404 {"error": "not_found"}
       | 409 {"error": "device_offline"} | 503 {"error": "transient_failure"}
       | 400 {"error": "invalid_value"}
  GET /v1/devices/{id}/state (Bearer)
      -> 200 {"on": b, "online": b, "brightness"?: int, "speed"?: int}
"""

from __future__ import annotations

import json
import random
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Callable, Optional

from .errors import DeviceOffline, DuplicateDeviceId, InvalidValue, PortUnavailable

COMMAND_CODES = ("switch_on", "switch_off", "toggle", "set_brightness")

DEFAULT_CLIENT_ID = "inot-client"
DEFAULT_SECRET = "inot-secret"
DEFAULT_TOKEN_TTL = 3600


@dataclass
class SimDevice:
    """One simulated device. Brightness exists only on lights, speed only on fans."""

    device_id: str
    type: str
    online: bool = True
    on: bool = False
    brightness: Optional[int] = None
    speed: Optional[int] = None

    def __post_init__(self):
        if self.type == "light" and self.brightness is None:
            self.brightness = 100
        if self.type == "fan" and self.speed is None:
            self.speed = 1

    def state(self) -> dict[str, Any]:
        out: dict[str, Any] = {"on": self.on, "online": self.online}
        if self.type == "light":
            out["brightness"] = self.brightness
        if self.type == "fan":
            out["speed"] = self.speed
        return out


def apply_command(device: SimDevice, code: str, value: Any = None) -> SimDevice:
    """Mutate device state per one protocol command; returns the device."""
    if not device.online:
        raise DeviceOffline(f"{device.device_id} is offline")
    if code == "switch_on":
        device.on = True
    elif code == "switch_off":
        device.on = False
    elif code == "toggle":
        device.on = not device.on
    elif code == "set_brightness":
        if device.type != "light":
            raise InvalidValue(f"brightness not supported on {device.type}")
        try:
            level = int(value)
        except (TypeError, ValueError):
            raise InvalidValue(f"brightness value {value!r} is not an integer")
        if not 0 <= level <= 100:
            raise InvalidValue(f"brightness {level} outside 0-100")
        device.brightness = level
        device.on = level > 0
    else:
        raise InvalidValue(f"unknown command code {code!r}")
    return device


@dataclass(frozen=True)
class FaultPlan:
    transient_failure_rate: float = 0.0
    offline_ids: frozenset[str] = frozenset()
    auth_reject: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.transient_failure_rate <= 1.0:
            raise ValueError(f"failure rate outside [0,1]: {self.transient_failure_rate}")
        object.__setattr__(self, "offline_ids", frozenset(self.offline_ids))


@dataclass
class _Token:
    value: str
    expires_at: float


class DeviceSimulator:
    """In-process fleet with the protocol handler. Thread-safe."""

    def __init__(
        self,
        devices: list[SimDevice] | None = None,
        client_id: str = DEFAULT_CLIENT_ID,
        secret: str = DEFAULT_SECRET,
        token_ttl: int = DEFAULT_TOKEN_TTL,
        clock: Callable[[], float] = time.time,
    ):
        self._devices: dict[str, SimDevice] = {}
        for dev in devices or []:
            if dev.device_id in self._devices:
                raise DuplicateDeviceId(f"duplicate device id {dev.device_id!r}")
            self._devices[dev.device_id] = dev
        self.client_id = client_id
        self.secret = secret
        self.token_ttl = token_ttl
        self.clock = clock
        self._plan: Optional[FaultPlan] = None
        self._rng = random.Random(0)
        self._tokens: dict[str, _Token] = {}
        self._token_counter = 0
        self._lock = threading.RLock()

    # -- fleet management ------------------------------------------------

    @classmethod
    def from_fleet_config(cls, config: dict | str | Path, **kwargs) -> "DeviceSimulator":
        """Build from ``{"devices": [{"device_id": s, "type": s}]}``."""
        if not isinstance(config, dict):
            config = json.loads(Path(config).read_text(encoding="utf-8"))
        devices = [
            SimDevice(device_id=str(d["device_id"]), type=str(d["type"]))
            for d in config.get("devices", [])
        ]
        return cls(devices=devices, **kwargs)

    def device(self, device_id: str) -> Optional[SimDevice]:
        return self._devices.get(device_id)

    def inject_faults(self, plan: Optional[FaultPlan]) -> None:
        """Arm (or clear, with None) the fault plan; reseeds the PRNG."""
        with self._lock:
            self._plan = plan
            self._rng = random.Random(plan.seed if plan else 0)
            if plan:
                for device_id in plan.offline_ids:
                    if device_id in self._devices:
                        self._devices[device_id].online = False

    # -- protocol handler --------------------------------------------------

    def handle(
        self, method: str, path: str, headers: dict[str, str], body: bytes
    ) -> tuple[int, Any]:
        with self._lock:
            return self._handle_locked(method, path, {k.lower(): v for k, v in headers.items()}, body)

    def _handle_locked(self, method, path, headers, body) -> tuple[int, Any]:
        if method == "POST" and path == "/v1/auth":
            return self._auth(body)
        if not path.startswith("/v1/devices"):
            return 404, {"error": "not_found"}
        if not self._authorized(headers):
            return 401, {"error": "auth_failure"}
        if method == "GET" and path == "/v1/devices":
            return 200, [
                {
                    "device_id": d.device_id,
                    "type": d.type,
                    "online": d.online,
                    "state": d.state(),
                }
                for d in sorted(self._devices.values(), key=lambda d: d.device_id)
            ]
        m = re.fullmatch(r"/v1/devices/([^/]+)/commands", path)
        if m and method == "POST":
            return self._commands(m.group(1), body)
        m = re.fullmatch(r"/v1/devices/([^/]+)/state", path)
        if m and method == "GET":
            device = self._devices.get(m.group(1))
            if device is None:
                return 404, {"error": "not_found"}
            return 200, device.state()
        return 404, {"error": "not_found"}

    def _auth(self, body: bytes) -> tuple[int, Any]:
        if self._plan and self._plan.auth_reject:
            return 401, {"error": "auth_failure"}
        try:
            payload = json.loads(body or b"{}")
        except ValueError:
            return 401, {"error": "auth_failure"}
        if (
            not isinstance(payload, dict)
            or payload.get("client_id") != self.client_id
            or payload.get("secret") != self.secret
        ):
            return 401, {"error": "auth_failure"}
        self._token_counter += 1
        token = f"tok-{self._token_counter:08d}"
        self._tokens[token] = _Token(value=token, expires_at=self.clock() + self.token_ttl)
        return 200, {"token": token, "expires_in": self.token_ttl}

    def _authorized(self, headers: dict[str, str]) -> bool:
        auth = headers.get("authorization", "")
        if not auth.startswith("Bearer "):
            return False
        token = self._tokens.get(auth[len("Bearer ") :])
        return token is not None and token.expires_at > self.clock()

    def _commands(self, device_id: str, body: bytes) -> tuple[int, Any]:
        device = self._devices.get(device_id)
        if device is None:
            return 404, {"error": "not_found"}
        # transient faults reject before any state change, so client retries
        # can never double-apply a toggle
        if self._plan and self._plan.transient_failure_rate > 0:
            if self._rng.random() < self._plan.transient_failure_rate:
                return 503, {"error": "transient_failure"}
        try:
            payload = json.loads(body or b"{}")
            commands = payload["commands"]
            assert isinstance(commands, list) and commands
        except (ValueError, KeyError, AssertionError):
            return 400, {"error": "invalid_value", "detail": "body must carry a commands list"}
        try:
            for cmd in commands:
                apply_command(device, str(cmd.get("code")), cmd.get("value"))
        except DeviceOffline:
            return 409, {"error": "device_offline"}
        except InvalidValue as exc:
            return 400, {"error": "invalid_value", "detail": exc.detail}
        return 200, {"success": True, "t": int(self.clock() * 1000)}


# -- standalone HTTP serving ---------------------------------------------------


class _SimRequestHandler(BaseHTTPRequestHandler):
    simulator: DeviceSimulator

    def _respond(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, payload = self.simulator.handle(
            self.command, self.path, dict(self.headers.items()), body
        )
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    do_GET = _respond
    do_POST = _respond

    def log_message(self, fmt, *args):  # keep test output quiet
        pass


@dataclass
class SimulatorHandle:
    simulator: DeviceSimulator
    server: ThreadingHTTPServer
    thread: threading.Thread
    port: int = field(init=False)

    def __post_init__(self):
        self.port = self.server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)


def spawn_fleet(
    fleet_config: dict | str | Path,
    port: int = 0,
    fault_plan: Optional[FaultPlan] = None,
    **sim_kwargs,
) -> SimulatorHandle:
    """Start a fleet serving the wire protocol on a local port (0 = ephemeral)."""
    simulator = DeviceSimulator.from_fleet_config(fleet_config, **sim_kwargs)
    if fault_plan:
        simulator.inject_faults(fault_plan)
    handler = type("BoundHandler", (_SimRequestHandler,), {"simulator": simulator})
    try:
        server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    except OSError as exc:
        raise PortUnavailable(f"cannot bind port {port}: {exc}") from exc
    thread = threading.Thread(target=server.serve_forever, name="inot-sim", daemon=True)
    thread.start()
    return SimulatorHandle(simulator=simulator, server=server, thread=thread)
