"""Vehicle <-> twin messaging: codec, channel simulator, link stats, sessions.

encode_message/decode_message resolve at import time to the compiled
codec when the extension is available, with the pure-Python codec as the
fallback; set ROADTWIN_PURE_CODEC=1 to force the fallback. Both
implementations share one byte contract (PROTOCOL.md).
"""

import os

from . import _codec_py
from .errors import (
    DecodeError,
    EncodeError,
    Malformed,
    NotOurProtocol,
    Truncated,
    VersionMismatch,
)
from .messages import (
    CLASS_CAR,
    CLASS_PEDESTRIAN,
    HEADER_SIZE,
    MAGIC,
    MAX_ALERT_TEXT_BYTES,
    MSG_ACK,
    MSG_HEARTBEAT,
    MSG_HELLO,
    MSG_OPERATOR_ALERT,
    MSG_TELEMETRY,
    OVERRIDE_DANGEROUS,
    OVERRIDE_HAZARDOUS,
    OVERRIDE_NONE,
    OVERRIDE_SAFE,
    SEVERITY_INFO,
    SEVERITY_RECALL,
    SEVERITY_WARNING,
    VERSION,
    AckMessage,
    HeartbeatMessage,
    HelloMessage,
    Message,
    OperatorMessage,
    TelemetryMessage,
    TelemetryObject,
    as_f32,
    operator_size,
    telemetry_size,
)

if os.environ.get("ROADTWIN_PURE_CODEC"):
    _impl = _codec_py
else:
    try:
        from . import _codec as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _codec_py

encode_message = _impl.encode_message
decode_message = _impl.decode_message
CODEC_IMPLEMENTATION = "python" if _impl is _codec_py else "cython"

from .channel import ChannelModel, cellular_profile, simulate_channel  # noqa: E402
from .linkstats import LinkStats, NoData, ReceptionLog, compute_stats  # noqa: E402
from .session import (  # noqa: E402
    DOWNLINK_QUEUE_DEPTH,
    HEARTBEAT_INTERVAL_S,
    MISSED_HEARTBEATS_DISCONNECT,
    TwinSession,
    VehicleSession,
)
from .transport import LoopbackLink, UdpTransport  # noqa: E402

__all__ = [
    "AckMessage", "ChannelModel", "CODEC_IMPLEMENTATION", "CLASS_CAR", "CLASS_PEDESTRIAN",
    "DecodeError", "DOWNLINK_QUEUE_DEPTH", "EncodeError", "HEADER_SIZE", "HEARTBEAT_INTERVAL_S",
    "HeartbeatMessage", "HelloMessage", "LinkStats", "LoopbackLink", "MAGIC", "Malformed",
    "MAX_ALERT_TEXT_BYTES", "Message", "MISSED_HEARTBEATS_DISCONNECT", "MSG_ACK", "MSG_HEARTBEAT",
    "MSG_HELLO", "MSG_OPERATOR_ALERT", "MSG_TELEMETRY", "NoData", "NotOurProtocol",
    "OperatorMessage", "OVERRIDE_DANGEROUS", "OVERRIDE_HAZARDOUS", "OVERRIDE_NONE", "OVERRIDE_SAFE",
    "ReceptionLog", "SEVERITY_INFO", "SEVERITY_RECALL", "SEVERITY_WARNING", "TelemetryMessage",
    "TelemetryObject", "Truncated", "TwinSession", "UdpTransport", "VehicleSession", "VERSION",
    "VersionMismatch", "as_f32", "cellular_profile", "compute_stats", "decode_message",
    "encode_message", "operator_size", "simulate_channel", "telemetry_size",
]
