# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled codec for the wire-protocol hot path.

Byte-for-byte and error-for-error equivalent to _codec_py; the test suite
cross-checks the two on fuzzed corpora. Selected at import by
roadtwin.protocol unless ROADTWIN_PURE_CODEC is set.
"""

from cpython.bytes cimport PyBytes_AS_STRING, PyBytes_FromStringAndSize
from cpython.unicode cimport PyUnicode_DecodeUTF8
from libc.string cimport memcpy
from libc.stdint cimport uint8_t, uint16_t, uint32_t, uint64_t
from libc.math cimport isfinite, isinf

from .errors import EncodeError, Malformed, NotOurProtocol, Truncated, VersionMismatch
from .messages import (
    AckMessage,
    HeartbeatMessage,
    HelloMessage,
    OperatorMessage,
    TelemetryMessage,
    TelemetryObject,
)

cdef int _VERSION = 1
cdef int _HEADER_SIZE = 18
cdef int _TELEMETRY_FIXED = 43
cdef int _TELEMETRY_OBJECT = 34
cdef int _OPERATOR_FIXED = 22
cdef int _MAX_TEXT = 512

cdef uint8_t _MAGIC[4]  # "CDTS"
_MAGIC[0] = 0x43
_MAGIC[1] = 0x44
_MAGIC[2] = 0x54
_MAGIC[3] = 0x53

cdef int _MSG_TELEMETRY = 1
cdef int _MSG_OPERATOR = 2
cdef int _MSG_HELLO = 3
cdef int _MSG_HEARTBEAT = 4
cdef int _MSG_ACK = 5


cdef inline uint16_t _ru16(const uint8_t* p):
    return p[0] | (<uint16_t>p[1] << 8)


cdef inline uint32_t _ru32(const uint8_t* p):
    return (p[0] | (<uint32_t>p[1] << 8) | (<uint32_t>p[2] << 16) | (<uint32_t>p[3] << 24))


cdef inline uint64_t _ru64(const uint8_t* p):
    return _ru32(p) | (<uint64_t>_ru32(p + 4) << 32)


cdef inline float _rf32(const uint8_t* p):
    cdef uint32_t bits = _ru32(p)
    cdef float out
    memcpy(&out, &bits, 4)
    return out


cdef inline double _rf64(const uint8_t* p):
    cdef uint64_t bits = _ru64(p)
    cdef double out
    memcpy(&out, &bits, 8)
    return out


cdef inline void _wu16(uint8_t* p, uint16_t v):
    p[0] = v & 0xFF
    p[1] = (v >> 8) & 0xFF


cdef inline void _wu32(uint8_t* p, uint32_t v):
    p[0] = v & 0xFF
    p[1] = (v >> 8) & 0xFF
    p[2] = (v >> 16) & 0xFF
    p[3] = (v >> 24) & 0xFF


cdef inline void _wu64(uint8_t* p, uint64_t v):
    _wu32(p, <uint32_t>(v & 0xFFFFFFFF))
    _wu32(p + 4, <uint32_t>(v >> 32))


cdef inline void _wf64(uint8_t* p, double v):
    cdef uint64_t bits
    memcpy(&bits, &v, 8)
    _wu64(p, bits)


cdef inline int _wf32(uint8_t* p, double v) except -1:
    # Matches CPython's binary32 packing: a finite double that rounds to
    # infinity is an overflow; everything else converts by C cast.
    cdef float f = <float>v
    cdef uint32_t bits
    if isinf(f) and isfinite(v):
        raise EncodeError(f"float field {v!r} overflows binary32")
    memcpy(&bits, &f, 4)
    _wu32(p, bits)
    return 0


cdef _check_uint(object value, int bits, str name):
    if not isinstance(value, int) or value < 0 or (value >> bits):
        raise EncodeError(f"{name} must be an unsigned {bits}-bit integer, got {value!r}")


cdef inline void _write_header(uint8_t* p, int msg_type, uint32_t seq, uint64_t ts):
    p[0] = _MAGIC[0]
    p[1] = _MAGIC[1]
    p[2] = _MAGIC[2]
    p[3] = _MAGIC[3]
    p[4] = _VERSION
    p[5] = <uint8_t>msg_type
    _wu32(p + 6, seq)
    _wu64(p + 10, ts)


def encode_message(object msg):
    """Serialize a message to its exact wire bytes (see _codec_py)."""
    cdef int msg_type = msg.msg_type
    _check_uint(msg.seq, 32, "seq")
    _check_uint(msg.timestamp_us, 64, "timestamp_us")
    cdef uint32_t seq = <uint32_t>msg.seq
    cdef uint64_t ts = <uint64_t>msg.timestamp_us

    cdef Py_ssize_t size, offset
    cdef bytes out
    cdef uint8_t* buf
    cdef object objects, obj
    cdef bytes text_bytes

    if msg_type == _MSG_TELEMETRY:
        objects = msg.objects
        if len(objects) > 255:
            raise EncodeError(f"object_count must fit one byte, got {len(objects)}")
        size = _TELEMETRY_FIXED + _TELEMETRY_OBJECT * len(objects)
        out = PyBytes_FromStringAndSize(NULL, size)
        buf = <uint8_t*>PyBytes_AS_STRING(out)
        _write_header(buf, msg_type, seq, ts)
        _wf64(buf + 18, msg.ego_lat)
        _wf64(buf + 26, msg.ego_lon)
        _wf32(buf + 34, msg.ego_yaw_deg)
        _wf32(buf + 38, msg.ego_speed_mps)
        buf[42] = <uint8_t>len(objects)
        offset = _TELEMETRY_FIXED
        for obj in objects:
            _check_uint(obj.object_id, 32, "object_id")
            if obj.class_code not in (1, 2):
                raise EncodeError(f"class_code must be 1 or 2, got {obj.class_code}")
            if obj.state not in (0, 1, 2):
                raise EncodeError(f"state must be 0..2, got {obj.state}")
            _wu32(buf + offset, <uint32_t>obj.object_id)
            buf[offset + 4] = <uint8_t>obj.class_code
            _wf32(buf + offset + 5, obj.rel_x)
            _wf32(buf + offset + 9, obj.rel_y)
            _wf32(buf + offset + 13, obj.rel_z)
            _wf32(buf + offset + 17, obj.abs_speed_mps)
            _wf32(buf + offset + 21, obj.yaw_deg)
            _wf32(buf + offset + 25, obj.ttc_s)
            _wf32(buf + offset + 29, obj.thw_s)
            buf[offset + 33] = <uint8_t>obj.state
            offset += _TELEMETRY_OBJECT
        return out

    if msg_type == _MSG_OPERATOR:
        if msg.severity not in (0, 1, 2):
            raise EncodeError(f"severity must be 0..2, got {msg.severity}")
        if msg.state_override not in (0, 1, 2, 3):
            raise EncodeError(f"state_override must be 0..3, got {msg.state_override}")
        text_bytes = msg.text.encode("utf-8")
        if len(text_bytes) > _MAX_TEXT:
            raise EncodeError(f"alert text is {len(text_bytes)} bytes, limit {_MAX_TEXT}")
        size = _OPERATOR_FIXED + len(text_bytes)
        out = PyBytes_FromStringAndSize(NULL, size)
        buf = <uint8_t*>PyBytes_AS_STRING(out)
        _write_header(buf, msg_type, seq, ts)
        buf[18] = <uint8_t>msg.severity
        buf[19] = <uint8_t>msg.state_override
        _wu16(buf + 20, <uint16_t>len(text_bytes))
        if len(text_bytes) > 0:
            memcpy(buf + 22, <const uint8_t*><const char*>text_bytes, len(text_bytes))
        return out

    if msg_type == _MSG_HELLO or msg_type == _MSG_HEARTBEAT or msg_type == _MSG_ACK:
        out = PyBytes_FromStringAndSize(NULL, _HEADER_SIZE)
        buf = <uint8_t*>PyBytes_AS_STRING(out)
        _write_header(buf, msg_type, seq, ts)
        return out

    raise EncodeError(f"unknown message type {type(msg).__name__}")


def decode_message(object data):
    """Parse wire bytes into a message, or raise a typed DecodeError."""
    cdef const uint8_t* buf
    cdef Py_ssize_t n
    cdef const uint8_t[::1] view
    if type(data) is bytes:
        buf = <const uint8_t*><const char*>PyBytes_AS_STRING(<bytes>data)
        n = len(<bytes>data)
        return _decode(buf, n)
    view = data
    n = view.shape[0]
    buf = &view[0] if n > 0 else NULL
    return _decode(buf, n)


cdef _decode(const uint8_t* buf, Py_ssize_t n):
    cdef Py_ssize_t i
    if n < 4:
        for i in range(n):
            if buf[i] != _MAGIC[i]:
                raise NotOurProtocol("bad magic")
        raise Truncated(n, _HEADER_SIZE)
    for i in range(4):
        if buf[i] != _MAGIC[i]:
            raise NotOurProtocol("bad magic")
    if n < 5:
        raise Truncated(n, _HEADER_SIZE)
    cdef int version = buf[4]
    if version != _VERSION:
        raise VersionMismatch(version)
    if n < 6:
        raise Truncated(n, _HEADER_SIZE)
    cdef int msg_type = buf[5]
    if msg_type < _MSG_TELEMETRY or msg_type > _MSG_ACK:
        raise Malformed(f"unknown message type {msg_type}")
    if n < _HEADER_SIZE:
        raise Truncated(n, _HEADER_SIZE)
    cdef uint32_t seq = _ru32(buf + 6)
    cdef uint64_t ts = _ru64(buf + 10)

    cdef Py_ssize_t expected, offset
    cdef int count, class_code, state, severity, state_override
    cdef Py_ssize_t text_len
    cdef list objects

    if msg_type == _MSG_HELLO or msg_type == _MSG_HEARTBEAT or msg_type == _MSG_ACK:
        if n > _HEADER_SIZE:
            raise Malformed(f"{n - _HEADER_SIZE} trailing bytes after header-only message")
        if msg_type == _MSG_HELLO:
            return HelloMessage(seq=seq, timestamp_us=ts)
        if msg_type == _MSG_HEARTBEAT:
            return HeartbeatMessage(seq=seq, timestamp_us=ts)
        return AckMessage(seq=seq, timestamp_us=ts)

    if msg_type == _MSG_TELEMETRY:
        if n < _TELEMETRY_FIXED:
            raise Truncated(n, _TELEMETRY_FIXED)
        count = buf[42]
        expected = _TELEMETRY_FIXED + _TELEMETRY_OBJECT * count
        if n < expected:
            raise Truncated(n, expected)
        if n > expected:
            raise Malformed(f"{n - expected} trailing bytes after {count} objects")
        objects = []
        offset = _TELEMETRY_FIXED
        for i in range(count):
            class_code = buf[offset + 4]
            if class_code != 1 and class_code != 2:
                raise Malformed(f"class_code must be 1 or 2, got {class_code}")
            state = buf[offset + 33]
            if state > 2:
                raise Malformed(f"state must be 0..2, got {state}")
            objects.append(
                TelemetryObject(
                    _ru32(buf + offset),
                    class_code,
                    _rf32(buf + offset + 5),
                    _rf32(buf + offset + 9),
                    _rf32(buf + offset + 13),
                    _rf32(buf + offset + 17),
                    _rf32(buf + offset + 21),
                    _rf32(buf + offset + 25),
                    _rf32(buf + offset + 29),
                    state,
                )
            )
            offset += _TELEMETRY_OBJECT
        return TelemetryMessage(
            seq=seq,
            timestamp_us=ts,
            ego_lat=_rf64(buf + 18),
            ego_lon=_rf64(buf + 26),
            ego_yaw_deg=_rf32(buf + 34),
            ego_speed_mps=_rf32(buf + 38),
            objects=tuple(objects),
        )

    # operator alert
    if n < _OPERATOR_FIXED:
        raise Truncated(n, _OPERATOR_FIXED)
    severity = buf[18]
    if severity > 2:
        raise Malformed(f"severity must be 0..2, got {severity}")
    state_override = buf[19]
    if state_override > 3:
        raise Malformed(f"state_override must be 0..3, got {state_override}")
    text_len = _ru16(buf + 20)
    if text_len > _MAX_TEXT:
        raise Malformed(f"text_len {text_len} exceeds limit {_MAX_TEXT}")
    expected = _OPERATOR_FIXED + text_len
    if n < expected:
        raise Truncated(n, expected)
    if n > expected:
        raise Malformed(f"{n - expected} trailing bytes after alert text")
    try:
        text = PyUnicode_DecodeUTF8(<const char*>(buf + 22), text_len, NULL)
    except UnicodeDecodeError as exc:
        raise Malformed(f"alert text is not valid UTF-8: {exc}") from exc
    return OperatorMessage(
        seq=seq, timestamp_us=ts, severity=severity, state_override=state_override, text=text
    )
