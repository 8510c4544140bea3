"""Pure-Python reference codec (struct-based).

The compiled codec in _codec.pyx implements the same byte contract; the
test suite holds the two bit-identical. Keep any layout change in sync
with PROTOCOL.md and the extension.
"""

import struct

from .errors import EncodeError, Malformed, NotOurProtocol, Truncated, VersionMismatch
from .messages import (
    HEADER_SIZE,
    MAGIC,
    MAX_ALERT_TEXT_BYTES,
    MSG_ACK,
    MSG_HEARTBEAT,
    MSG_HELLO,
    MSG_TELEMETRY,
    OPERATOR_FIXED_SIZE,
    TELEMETRY_FIXED_SIZE,
    TELEMETRY_OBJECT_SIZE,
    VERSION,
    AckMessage,
    HeartbeatMessage,
    HelloMessage,
    Message,
    OperatorMessage,
    TelemetryMessage,
    TelemetryObject,
)

_HEADER = struct.Struct("<4sBBIQ")
_TELEMETRY_FIXED = struct.Struct("<ddffB")
_TELEMETRY_OBJECT = struct.Struct("<IBfffffffB")
_OPERATOR_FIXED = struct.Struct("<BBH")

_HEADER_ONLY_TYPES = {
    MSG_HELLO: HelloMessage,
    MSG_HEARTBEAT: HeartbeatMessage,
    MSG_ACK: AckMessage,
}


def _check_uint(value: int, bits: int, name: str):
    if not isinstance(value, int) or value < 0 or value >> bits:
        raise EncodeError(f"{name} must be an unsigned {bits}-bit integer, got {value!r}")


def _header(msg_type: int, seq: int, timestamp_us: int) -> bytes:
    _check_uint(seq, 32, "seq")
    _check_uint(timestamp_us, 64, "timestamp_us")
    return _HEADER.pack(MAGIC, VERSION, msg_type, seq, timestamp_us)


def encode_message(msg: Message) -> bytes:
    """Serialize a message to its exact wire bytes.

    Raises EncodeError when the message violates its invariants (ranges,
    object count, text length, or float fields that overflow binary32).
    """
    head = _header(msg.msg_type, msg.seq, msg.timestamp_us)

    if isinstance(msg, TelemetryMessage):
        if len(msg.objects) > 255:
            raise EncodeError(f"object_count must fit one byte, got {len(msg.objects)}")
        parts = [head]
        try:
            parts.append(
                _TELEMETRY_FIXED.pack(
                    msg.ego_lat, msg.ego_lon, msg.ego_yaw_deg, msg.ego_speed_mps, len(msg.objects)
                )
            )
            for obj in msg.objects:
                _check_uint(obj.object_id, 32, "object_id")
                if obj.class_code not in (1, 2):
                    raise EncodeError(f"class_code must be 1 or 2, got {obj.class_code}")
                if obj.state not in (0, 1, 2):
                    raise EncodeError(f"state must be 0..2, got {obj.state}")
                parts.append(
                    _TELEMETRY_OBJECT.pack(
                        obj.object_id,
                        obj.class_code,
                        obj.rel_x,
                        obj.rel_y,
                        obj.rel_z,
                        obj.abs_speed_mps,
                        obj.yaw_deg,
                        obj.ttc_s,
                        obj.thw_s,
                        obj.state,
                    )
                )
        except (struct.error, OverflowError) as exc:
            raise EncodeError(str(exc)) from exc
        return b"".join(parts)

    if isinstance(msg, OperatorMessage):
        if msg.severity not in (0, 1, 2):
            raise EncodeError(f"severity must be 0..2, got {msg.severity}")
        if msg.state_override not in (0, 1, 2, 3):
            raise EncodeError(f"state_override must be 0..3, got {msg.state_override}")
        text = msg.text.encode("utf-8")
        if len(text) > MAX_ALERT_TEXT_BYTES:
            raise EncodeError(f"alert text is {len(text)} bytes, limit {MAX_ALERT_TEXT_BYTES}")
        return head + _OPERATOR_FIXED.pack(msg.severity, msg.state_override, len(text)) + text

    if msg.msg_type in _HEADER_ONLY_TYPES:
        return head

    raise EncodeError(f"unknown message type {type(msg).__name__}")


def decode_message(data: bytes) -> Message:
    """Parse wire bytes into a message, or raise a typed DecodeError."""
    n = len(data)
    if n < 4:
        if MAGIC.startswith(data):
            raise Truncated(n, HEADER_SIZE)
        raise NotOurProtocol("bad magic")
    if data[:4] != MAGIC:
        raise NotOurProtocol("bad magic")
    if n < 5:
        raise Truncated(n, HEADER_SIZE)
    version = data[4]
    if version != VERSION:
        raise VersionMismatch(version)
    if n < 6:
        raise Truncated(n, HEADER_SIZE)
    msg_type = data[5]
    if msg_type < MSG_TELEMETRY or msg_type > MSG_ACK:
        raise Malformed(f"unknown message type {msg_type}")
    if n < HEADER_SIZE:
        raise Truncated(n, HEADER_SIZE)
    _, _, _, seq, timestamp_us = _HEADER.unpack_from(data, 0)

    if msg_type in _HEADER_ONLY_TYPES:
        if n > HEADER_SIZE:
            raise Malformed(f"{n - HEADER_SIZE} trailing bytes after header-only message")
        return _HEADER_ONLY_TYPES[msg_type](seq=seq, timestamp_us=timestamp_us)

    if msg_type == MSG_TELEMETRY:
        if n < TELEMETRY_FIXED_SIZE:
            raise Truncated(n, TELEMETRY_FIXED_SIZE)
        ego_lat, ego_lon, ego_yaw, ego_speed, count = _TELEMETRY_FIXED.unpack_from(data, HEADER_SIZE)
        expected = TELEMETRY_FIXED_SIZE + TELEMETRY_OBJECT_SIZE * count
        if n < expected:
            raise Truncated(n, expected)
        if n > expected:
            raise Malformed(f"{n - expected} trailing bytes after {count} objects")
        objects = []
        offset = TELEMETRY_FIXED_SIZE
        for _ in range(count):
            (object_id, class_code, rel_x, rel_y, rel_z, abs_speed, yaw, ttc_s, thw_s, state) = (
                _TELEMETRY_OBJECT.unpack_from(data, offset)
            )
            if class_code not in (1, 2):
                raise Malformed(f"class_code must be 1 or 2, got {class_code}")
            if state > 2:
                raise Malformed(f"state must be 0..2, got {state}")
            objects.append(
                TelemetryObject(object_id, class_code, rel_x, rel_y, rel_z, abs_speed, yaw, ttc_s, thw_s, state)
            )
            offset += TELEMETRY_OBJECT_SIZE
        return TelemetryMessage(
            seq=seq,
            timestamp_us=timestamp_us,
            ego_lat=ego_lat,
            ego_lon=ego_lon,
            ego_yaw_deg=ego_yaw,
            ego_speed_mps=ego_speed,
            objects=tuple(objects),
        )

    # MSG_OPERATOR_ALERT
    if n < OPERATOR_FIXED_SIZE:
        raise Truncated(n, OPERATOR_FIXED_SIZE)
    severity, state_override, text_len = _OPERATOR_FIXED.unpack_from(data, HEADER_SIZE)
    if severity > 2:
        raise Malformed(f"severity must be 0..2, got {severity}")
    if state_override > 3:
        raise Malformed(f"state_override must be 0..3, got {state_override}")
    if text_len > MAX_ALERT_TEXT_BYTES:
        raise Malformed(f"text_len {text_len} exceeds limit {MAX_ALERT_TEXT_BYTES}")
    expected = OPERATOR_FIXED_SIZE + text_len
    if n < expected:
        raise Truncated(n, expected)
    if n > expected:
        raise Malformed(f"{n - expected} trailing bytes after alert text")
    try:
        text = data[OPERATOR_FIXED_SIZE:expected].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise Malformed(f"alert text is not valid UTF-8: {exc}") from exc
    return OperatorMessage(
        seq=seq, timestamp_us=timestamp_us, severity=severity, state_override=state_override, text=text
    )
