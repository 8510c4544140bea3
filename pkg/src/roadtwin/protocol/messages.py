"""Message types for the vehicle <-> twin link.

Every message shares an 18-byte header (magic, version, type, sequence
number, sender timestamp in microseconds) followed by a fixed
little-endian payload; see PROTOCOL.md for the byte-level layout. Float
payload fields travel as IEEE-754 binary32, so values round-trip bitwise
only if they are f32-representable (use as_f32 when building messages
from doubles). TTC/THW carry +inf as the IEEE infinity, no sentinel.
"""

import struct
from dataclasses import dataclass

MAGIC = b"CDTS"
VERSION = 1
HEADER_SIZE = 18

MSG_TELEMETRY = 1
MSG_OPERATOR_ALERT = 2
MSG_HELLO = 3
MSG_HEARTBEAT = 4
MSG_ACK = 5

CLASS_CAR = 1
CLASS_PEDESTRIAN = 2

STATE_SAFE = 0
STATE_HAZARDOUS = 1
STATE_DANGEROUS = 2

SEVERITY_INFO = 0
SEVERITY_WARNING = 1
SEVERITY_RECALL = 2

OVERRIDE_NONE = 0
OVERRIDE_SAFE = 1
OVERRIDE_HAZARDOUS = 2
OVERRIDE_DANGEROUS = 3

MAX_ALERT_TEXT_BYTES = 512

TELEMETRY_FIXED_SIZE = HEADER_SIZE + 25  # ego pose/speed block + object count
TELEMETRY_OBJECT_SIZE = 34
OPERATOR_FIXED_SIZE = HEADER_SIZE + 4  # severity, override, text length

_F32 = struct.Struct("<f")


def as_f32(value: float) -> float:
    """Round a double to the nearest binary32 value (what the wire carries)."""
    return _F32.unpack(_F32.pack(value))[0]


@dataclass(frozen=True)
class TelemetryObject:
    """One tracked object inside a telemetry message."""

    object_id: int
    class_code: int  # CLASS_CAR | CLASS_PEDESTRIAN
    rel_x: float
    rel_y: float
    rel_z: float
    abs_speed_mps: float
    yaw_deg: float
    ttc_s: float
    thw_s: float
    state: int  # STATE_SAFE | STATE_HAZARDOUS | STATE_DANGEROUS


@dataclass(frozen=True)
class TelemetryMessage:
    """Uplink scene sample: ego pose/speed plus the tracked object list."""

    msg_type = MSG_TELEMETRY
    seq: int = 0
    timestamp_us: int = 0
    ego_lat: float = 0.0
    ego_lon: float = 0.0
    ego_yaw_deg: float = 0.0
    ego_speed_mps: float = 0.0
    objects: tuple[TelemetryObject, ...] = ()


@dataclass(frozen=True)
class OperatorMessage:
    """Downlink operator alert with an optional safety-state override."""

    msg_type = MSG_OPERATOR_ALERT
    seq: int = 0
    timestamp_us: int = 0
    severity: int = SEVERITY_INFO
    state_override: int = OVERRIDE_NONE
    text: str = ""


@dataclass(frozen=True)
class HelloMessage:
    """First uplink datagram; teaches the twin the vehicle's public address."""

    msg_type = MSG_HELLO
    seq: int = 0
    timestamp_us: int = 0


@dataclass(frozen=True)
class HeartbeatMessage:
    """Periodic uplink keepalive that holds the NAT mapping open."""

    msg_type = MSG_HEARTBEAT
    seq: int = 0
    timestamp_us: int = 0


@dataclass(frozen=True)
class AckMessage:
    """Reply to a heartbeat, echoing its seq and timestamp for RTT measurement."""

    msg_type = MSG_ACK
    seq: int = 0
    timestamp_us: int = 0


Message = TelemetryMessage | OperatorMessage | HelloMessage | HeartbeatMessage | AckMessage


def telemetry_size(object_count: int) -> int:
    """Total encoded size of a telemetry message with object_count objects."""
    return TELEMETRY_FIXED_SIZE + TELEMETRY_OBJECT_SIZE * object_count


def operator_size(text_bytes: int) -> int:
    return OPERATOR_FIXED_SIZE + text_bytes
