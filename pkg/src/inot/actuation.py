"""Executes ControlCommands against a Tuya-style backend.

The client speaks the wire protocol documented in ``simulator`` through a
pluggable transport: HTTP for a real backend, or direct in-process calls
into a DeviceSimulator. Authentication is cached and refreshed shortly
before expiry; transient failures and timeouts retry with exponential
backoff; unbound devices never reach the backend at all.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional, Sequence

import httpx

from .command import Action, ControlCommand
from .core import DeviceRecord
from .errors import (
    AuthFailure,
    BackendTimeout,
    DeviceOffline,
    InvariantViolation,
    ProtocolError,
    TransientFailure,
)
from .simulator import DeviceSimulator

# re-auth this many seconds before the token would expire
TOKEN_REFRESH_MARGIN = 30.0


@dataclass(frozen=True)
class AuthToken:
    token: str
    expires_at: float

    def fresh(self, now: float) -> bool:
        return now < self.expires_at - TOKEN_REFRESH_MARGIN


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff_ms: float = 100.0
    multiplier: float = 2.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def backoff_seconds(self, attempt: int) -> float:
        """Delay after the given 1-based failed attempt."""
        return (self.base_backoff_ms / 1000.0) * (self.multiplier ** (attempt - 1))


@dataclass(frozen=True)
class DeviceState:
    on: bool
    online: bool
    brightness: Optional[int] = None
    speed: Optional[int] = None


@dataclass(frozen=True)
class ExecutionResult:
    command: ControlCommand
    status: str  # "success" | "failed"
    error_kind: Optional[str] = None
    attempts: int = 0

    def __post_init__(self):
        if self.status == "failed" and not self.error_kind:
            raise InvariantViolation("failed result must carry an error kind")

    def to_json(self) -> dict[str, Any]:
        return {
            "command": self.command.to_json(),
            "status": self.status,
            "error_kind": self.error_kind,
            "attempts": self.attempts,
        }


def validate_bindings(
    bindings: Mapping[str, str], records: Sequence[DeviceRecord]
) -> dict[str, str]:
    """Bindings must be injective and reference only existing record uuids."""
    uuids = {r.uuid for r in records}
    for uuid in bindings:
        if uuid not in uuids:
            raise InvariantViolation(f"binding references unknown record uuid {uuid}")
    if len(set(bindings.values())) != len(bindings):
        raise InvariantViolation("bindings must map distinct uuids to distinct device ids")
    return dict(bindings)


class Transport:
    def request(
        self, method: str, path: str, headers: dict[str, str], body: Optional[dict]
    ) -> tuple[int, Any]:
        raise NotImplementedError


class HttpTransport(Transport):
    def __init__(self, base_url: str, timeout: float = 5.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout)

    def request(self, method, path, headers, body) -> tuple[int, Any]:
        try:
            response = self._client.request(
                method, self.base_url + path, headers=headers, json=body
            )
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"backend timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise BackendTimeout(f"backend unreachable: {exc}") from exc
        try:
            return response.status_code, response.json()
        except ValueError as exc:
            raise ProtocolError("backend reply is not JSON") from exc

    def close(self):
        self._client.close()


class InProcessTransport(Transport):
    """Calls a DeviceSimulator directly; same payloads as the HTTP path."""

    def __init__(self, simulator: DeviceSimulator):
        self.simulator = simulator

    def request(self, method, path, headers, body) -> tuple[int, Any]:
        raw = json.dumps(body).encode("utf-8") if body is not None else b""
        return self.simulator.handle(method, path, headers, raw)


class DeviceClient:
    """Protocol client with token caching and retrying execution."""

    def __init__(
        self,
        transport: Transport,
        client_id: str,
        secret: str,
        clock: Callable[[], float] = time.time,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.transport = transport
        self.client_id = client_id
        self.secret = secret
        self.clock = clock
        self.sleeper = sleeper
        self._token: Optional[AuthToken] = None
        self._token_lock = threading.Lock()

    # -- auth ---------------------------------------------------------------

    def authenticate(self) -> AuthToken:
        status, body = self.transport.request(
            "POST", "/v1/auth", {}, {"client_id": self.client_id, "secret": self.secret}
        )
        if status == 401:
            raise AuthFailure("backend rejected credentials")
        if status != 200 or not isinstance(body, dict) or "token" not in body:
            raise ProtocolError(f"unexpected auth reply: HTTP {status}")
        token = AuthToken(
            token=str(body["token"]),
            expires_at=self.clock() + float(body.get("expires_in", 0)),
        )
        with self._token_lock:
            self._token = token
        return token

    def _current_token(self) -> AuthToken:
        with self._token_lock:
            token = self._token
        if token is None or not token.fresh(self.clock()):
            return self.authenticate()
        return token

    def _bearer(self, token: AuthToken) -> dict[str, str]:
        return {"Authorization": f"Bearer {token.token}"}

    def _authorized_request(
        self, method: str, path: str, body: Optional[dict], token: Optional[AuthToken]
    ) -> tuple[int, Any]:
        tok = token or self._current_token()
        status, reply = self.transport.request(method, path, self._bearer(tok), body)
        if status == 401 and token is None:
            # server-side expiry can outrun the local clock; refresh once
            tok = self.authenticate()
            status, reply = self.transport.request(method, path, self._bearer(tok), body)
        return status, reply

    # -- protocol operations --------------------------------------------------

    @staticmethod
    def _wire_command(action: Action) -> dict[str, Any]:
        if action.kind == "switch_on":
            return {"code": "switch_on", "value": True}
        if action.kind == "switch_off":
            return {"code": "switch_off", "value": False}
        if action.kind == "toggle":
            return {"code": "toggle", "value": True}
        return {"code": "set_brightness", "value": int(action.level)}

    def send_command(
        self, device_id: str, action: Action, token: Optional[AuthToken] = None
    ) -> dict[str, Any]:
        status, body = self._authorized_request(
            "POST",
            f"/v1/devices/{device_id}/commands",
            {"commands": [self._wire_command(action)]},
            token,
        )
        if status == 200 and isinstance(body, dict) and body.get("success"):
            return body
        if status == 401:
            raise AuthFailure("request rejected after re-authentication")
        if status == 409:
            raise DeviceOffline(f"device {device_id} is offline")
        if status == 503:
            raise TransientFailure(f"transient backend failure for {device_id}")
        raise ProtocolError(f"command to {device_id} failed: HTTP {status} {body!r}")

    def query_state(
        self, device_id: str, token: Optional[AuthToken] = None
    ) -> DeviceState:
        status, body = self._authorized_request(
            "GET", f"/v1/devices/{device_id}/state", None, token
        )
        if status == 401:
            raise AuthFailure("request rejected after re-authentication")
        if status != 200 or not isinstance(body, dict):
            raise ProtocolError(f"state query for {device_id} failed: HTTP {status}")
        return DeviceState(
            on=bool(body.get("on")),
            online=bool(body.get("online")),
            brightness=body.get("brightness"),
            speed=body.get("speed"),
        )

    def list_devices(self, token: Optional[AuthToken] = None) -> list[dict[str, Any]]:
        status, body = self._authorized_request("GET", "/v1/devices", None, token)
        if status == 401:
            raise AuthFailure("request rejected after re-authentication")
        if status != 200 or not isinstance(body, list):
            raise ProtocolError(f"device listing failed: HTTP {status}")
        return body

    # -- batch execution ---------------------------------------------------

    def execute_all(
        self,
        commands: Sequence[ControlCommand],
        bindings: Mapping[str, str],
        policy: RetryPolicy | None = None,
    ) -> list[ExecutionResult]:
        """Run commands in order; retry transient faults; never contact the
        backend for an unbound uuid. Results keep input order."""
        policy = policy or RetryPolicy()
        results = []
        for command in commands:
            device_id = bindings.get(command.uuid)
            if device_id is None:
                results.append(
                    ExecutionResult(
                        command=command, status="failed", error_kind="UnboundDevice", attempts=0
                    )
                )
                continue
            results.append(self._execute_one(command, device_id, policy))
        return results

    def _execute_one(
        self, command: ControlCommand, device_id: str, policy: RetryPolicy
    ) -> ExecutionResult:
        attempts = 0
        while True:
            attempts += 1
            try:
                self.send_command(device_id, command.action)
                return ExecutionResult(command=command, status="success", attempts=attempts)
            except (TransientFailure, BackendTimeout) as exc:
                if attempts >= policy.max_attempts:
                    kind = "Timeout" if isinstance(exc, BackendTimeout) else "ProtocolError"
                    return ExecutionResult(
                        command=command, status="failed", error_kind=kind, attempts=attempts
                    )
                self.sleeper(policy.backoff_seconds(attempts))
            except DeviceOffline:
                return ExecutionResult(
                    command=command, status="failed", error_kind="DeviceOffline", attempts=attempts
                )
            except AuthFailure:
                return ExecutionResult(
                    command=command, status="failed", error_kind="AuthFailure", attempts=attempts
                )
            except ProtocolError:
                return ExecutionResult(
                    command=command, status="failed", error_kind="ProtocolError", attempts=attempts
                )
