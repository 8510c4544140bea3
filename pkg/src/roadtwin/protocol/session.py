"""Client-initiated session contract over unreliable datagrams.

The vehicle sits behind carrier-grade NAT, so every exchange starts with
an uplink Hello that teaches the twin the vehicle's observed address; a
1 Hz Heartbeat keeps the translation mapping alive, and the twin marks
the vehicle disconnected after five silent heartbeat periods. Downlink
traffic attempted before any Hello is held in a bounded newest-wins
queue and flushed when the Hello arrives. The twin answers heartbeats
with an Ack echoing their seq/timestamp, which gives the vehicle an RTT
probe off its own clock.
"""

import time
from collections import deque
from typing import Callable

from . import decode_message, encode_message
from .errors import DecodeError
from .messages import (
    AckMessage,
    HeartbeatMessage,
    HelloMessage,
    OperatorMessage,
    TelemetryMessage,
)
from .transport import wall_us

HEARTBEAT_INTERVAL_S = 1.0
MISSED_HEARTBEATS_DISCONNECT = 5
DOWNLINK_QUEUE_DEPTH = 8
HELLO_RETRY_INITIAL_S = 1.0
HELLO_RETRY_MAX_S = 30.0


class VehicleSession:
    """Vehicle-side endpoint: initiates contact, uplinks telemetry, takes alerts.

    Telemetry has its own sequence space (the twin estimates loss from its
    gaps); hello/heartbeat share a control counter. rtt_ms measures
    heartbeat-to-ack turnaround as seen by this session's poll cadence, so
    it includes up to one poll interval of quantization on top of the
    network round trip.
    """

    def __init__(
        self,
        transport,
        twin_addr: tuple,
        clock_us: Callable[[], int] = wall_us,
        on_warning: Callable[[str], None] | None = None,
    ):
        self.transport = transport
        self.twin_addr = twin_addr
        self.clock_us = clock_us
        self.on_warning = on_warning
        self.telemetry_seq = 0
        self.control_seq = 0
        self.malformed_count = 0
        self.rtt_ms: float | None = None
        self.last_downlink_us: int | None = None
        self._last_heartbeat_us: int | None = None
        self._last_hello_us: int | None = None
        self._hello_backoff_s = HELLO_RETRY_INITIAL_S
        self._warned_unreachable = False

    def start(self):
        self._send_hello()

    def _send_hello(self):
        now = self.clock_us()
        msg = HelloMessage(seq=self.control_seq, timestamp_us=now)
        self.control_seq += 1
        self.transport.sendto(encode_message(msg), self.twin_addr)
        self._last_hello_us = now

    def tick(self):
        """Run periodic duties: heartbeat cadence and Hello retry with backoff."""
        now = self.clock_us()
        if self._last_heartbeat_us is None or now - self._last_heartbeat_us >= HEARTBEAT_INTERVAL_S * 1e6:
            msg = HeartbeatMessage(seq=self.control_seq, timestamp_us=now)
            self.control_seq += 1
            self.transport.sendto(encode_message(msg), self.twin_addr)
            self._last_heartbeat_us = now
        if self.last_downlink_us is None and self._last_hello_us is not None:
            if now - self._last_hello_us >= self._hello_backoff_s * 1e6:
                if not self._warned_unreachable and self.on_warning:
                    self.on_warning(
                        f"twin at {self.twin_addr} is not answering; retrying Hello with backoff"
                    )
                    self._warned_unreachable = True
                self._hello_backoff_s = min(self._hello_backoff_s * 2.0, HELLO_RETRY_MAX_S)
                self._send_hello()

    def send_telemetry(self, msg: TelemetryMessage) -> TelemetryMessage:
        """Stamp the message with the next telemetry seq and send it."""
        stamped = TelemetryMessage(
            seq=self.telemetry_seq,
            timestamp_us=self.clock_us(),
            ego_lat=msg.ego_lat,
            ego_lon=msg.ego_lon,
            ego_yaw_deg=msg.ego_yaw_deg,
            ego_speed_mps=msg.ego_speed_mps,
            objects=msg.objects,
        )
        self.telemetry_seq += 1
        self.transport.sendto(encode_message(stamped), self.twin_addr)
        return stamped

    def poll(self) -> list[OperatorMessage]:
        """Receive downlink traffic; returns operator alerts in arrival order."""
        alerts: list[OperatorMessage] = []
        for data, _addr, recv_ts_us in self.transport.poll():
            try:
                msg = decode_message(data)
            except DecodeError:
                self.malformed_count += 1
                continue
            self.last_downlink_us = recv_ts_us
            if isinstance(msg, AckMessage):
                self.rtt_ms = (self.clock_us() - msg.timestamp_us) / 1000.0
            elif isinstance(msg, OperatorMessage):
                alerts.append(msg)
        return alerts


class TwinSession:
    """Twin-side endpoint: learns the vehicle address, acks heartbeats, downlinks."""

    def __init__(
        self,
        transport,
        clock_us: Callable[[], int] = wall_us,
        on_telemetry: Callable[[TelemetryMessage, int], None] | None = None,
        heartbeat_interval_s: float = HEARTBEAT_INTERVAL_S,
    ):
        self.transport = transport
        self.clock_us = clock_us
        self.on_telemetry = on_telemetry
        self.heartbeat_interval_s = heartbeat_interval_s
        self.vehicle_addr: tuple | None = None
        self.last_uplink_us: int | None = None
        self.decode_errors = 0
        self.telemetry_count = 0
        self._pending_downlink: deque[OperatorMessage] = deque(maxlen=DOWNLINK_QUEUE_DEPTH)

    def poll(self):
        for data, addr, recv_ts_us in self.transport.poll():
            self.handle_datagram(data, addr, recv_ts_us)

    def handle_datagram(self, data: bytes, addr: tuple, recv_ts_us: int):
        try:
            msg = decode_message(data)
        except DecodeError:
            self.decode_errors += 1
            return None
        self.last_uplink_us = recv_ts_us
        if isinstance(msg, HelloMessage):
            self.vehicle_addr = addr
            self._flush_pending()
        elif isinstance(msg, HeartbeatMessage):
            ack = AckMessage(seq=msg.seq, timestamp_us=msg.timestamp_us)
            self.transport.sendto(encode_message(ack), addr)
        elif isinstance(msg, TelemetryMessage):
            self.telemetry_count += 1
            if self.on_telemetry is not None:
                self.on_telemetry(msg, recv_ts_us)
        return msg

    def send_operator(self, msg: OperatorMessage) -> bool:
        """Downlink an alert now, or hold it (newest wins) until a Hello arrives."""
        if self.vehicle_addr is None:
            self._pending_downlink.append(msg)
            return False
        self.transport.sendto(encode_message(msg), self.vehicle_addr)
        return True

    def _flush_pending(self):
        while self._pending_downlink:
            msg = self._pending_downlink.popleft()
            self.transport.sendto(encode_message(msg), self.vehicle_addr)

    def connected(self, now_us: int | None = None) -> bool:
        """True while uplink traffic arrived within the disconnect window."""
        if self.vehicle_addr is None or self.last_uplink_us is None:
            return False
        now = self.clock_us() if now_us is None else now_us
        window_us = MISSED_HEARTBEATS_DISCONNECT * self.heartbeat_interval_s * 1e6
        return now - self.last_uplink_us < window_us
