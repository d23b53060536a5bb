"""inot: spatial context-aware smart-device control plane."""

from .core import (
    BBox,
    Detection,
    DeviceInventory,
    DeviceRecord,
    Landmark,
    RoomSession,
    bbox_center,
    canonicalize_type,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "Detection",
    "DeviceInventory",
    "DeviceRecord",
    "Landmark",
    "RoomSession",
    "bbox_center",
    "canonicalize_type",
    "__version__",
]
