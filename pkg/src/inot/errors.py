"""Exception hierarchy shared by every pipeline stage.

Each error carries a stable ``kind`` string (snake_case) used verbatim in
HTTP error bodies and CLI diagnostics, so clients can switch on it without
parsing messages.
"""

from __future__ import annotations


class InotError(Exception):
    """Base class; ``kind`` is the wire-visible error identifier."""

    kind = "error"

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.kind)
        self.detail = detail or self.kind


# core
class EmptyType(InotError):
    kind = "empty_type"


class InvalidBox(InotError):
    kind = "invalid_box"


class InvariantViolation(InotError):
    kind = "invariant_violation"


# onboarding
class EmptyInput(InotError):
    kind = "empty_input"


class MalformedResponse(InotError):
    kind = "malformed_response"


class NonPositiveCount(InotError):
    kind = "non_positive_count"


class NoDevicesFound(InotError):
    kind = "no_devices_found"


# detection
class EmptyInventory(InotError):
    kind = "empty_inventory"


class AdapterTimeout(InotError):
    kind = "adapter_timeout"


class AdapterProtocolError(InotError):
    kind = "adapter_protocol_error"


class ImageDecodeError(InotError):
    kind = "image_decode_error"


class SchemaViolation(InotError):
    kind = "schema_violation"


class MissingFile(InotError):
    kind = "missing_file"


# visualizer
class BoxOutOfBounds(InotError):
    kind = "box_out_of_bounds"


class EmptyPayload(InotError):
    kind = "empty_payload"


# topology
class NoDevices(InotError):
    kind = "no_devices"


class NoSuchType(InotError):
    kind = "no_such_type"


class EmptyReport(InotError):
    kind = "empty_report"


# command
class ParseFailure(InotError):
    kind = "parse_failure"


class UnknownDevice(InotError):
    kind = "unknown_device"


class UnknownAction(InotError):
    kind = "unknown_action"


class UnparsableCommand(InotError):
    kind = "unparsable_command"


class NoMatch(InotError):
    kind = "no_match"


class AmbiguousTarget(InotError):
    """More than one device satisfies the command and no cardinality was given.

    ``candidates`` is a list of (uuid, name) pairs sorted by name; ``action``
    is the already-parsed action so callers can issue a uuid-direct command
    after the user picks one.
    """

    kind = "ambiguous_target"

    def __init__(self, detail: str, candidates, action=None):
        super().__init__(detail)
        self.candidates = list(candidates)
        self.action = action


# actuation / simulator
class AuthFailure(InotError):
    kind = "auth_failure"


class DeviceOffline(InotError):
    kind = "device_offline"


class BackendTimeout(InotError):
    kind = "timeout"


class ProtocolError(InotError):
    kind = "protocol_error"


class UnboundDevice(InotError):
    kind = "unbound_device"


class TransientFailure(InotError):
    kind = "transient_failure"


class PortUnavailable(InotError):
    kind = "port_unavailable"


class DuplicateDeviceId(InotError):
    kind = "duplicate_device_id"


class InvalidValue(InotError):
    kind = "invalid_value"


# service / config
class UnknownSession(InotError):
    kind = "unknown_session"


class ConfigError(InotError):
    kind = "config_error"
