"""Datagram transports: real UDP sockets and an in-process loopback pair.

Both expose the same minimal surface — sendto(data, addr) and
poll(timeout) returning (data, addr, recv_ts_us) tuples — so sessions and
apps do not care which one they run on. The loopback pair routes each
direction through an optional ChannelModel, delivering the same byte
payloads a socket would.
"""

import heapq
import select
import socket
import time
from typing import Callable

from .channel import ChannelModel

Datagram = tuple[bytes, tuple, int]  # payload, source address, recv timestamp (us)


def wall_us() -> int:
    """Wall-clock microseconds; the sender timestamp used on the wire."""
    return time.time_ns() // 1000


class UdpTransport:
    """Non-blocking UDP socket with wall-clock receive stamps."""

    def __init__(self, bind_addr: tuple[str, int] | None = None):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        if bind_addr is not None:
            self._sock.bind(bind_addr)
        self._sock.setblocking(False)

    @property
    def local_addr(self) -> tuple[str, int]:
        return self._sock.getsockname()

    def sendto(self, data: bytes, addr: tuple[str, int]):
        try:
            self._sock.sendto(data, addr)
        except OSError:
            pass  # unreachable peers are a normal UDP condition

    def poll(self, timeout_s: float = 0.0) -> list[Datagram]:
        """Drain every datagram currently queued, waiting up to timeout_s for the first."""
        out: list[Datagram] = []
        deadline = time.monotonic() + timeout_s
        while True:
            try:
                data, addr = self._sock.recvfrom(65535)
                out.append((data, addr, wall_us()))
                continue
            except BlockingIOError:
                pass
            except OSError:
                return out
            remaining = deadline - time.monotonic()
            if out or remaining <= 0:
                return out
            ready, _, _ = select.select([self._sock], [], [], remaining)
            if not ready:
                return out

    def close(self):
        self._sock.close()


class _LoopbackEndpoint:
    def __init__(self, link: "LoopbackLink", name: str):
        self._link = link
        self.address = (name, 0)

    def sendto(self, data: bytes, addr: tuple | None = None):
        self._link._dispatch(self, bytes(data))

    def poll(self, timeout_s: float = 0.0) -> list[Datagram]:
        return self._link._due(self)

    def close(self):
        pass


class LoopbackLink:
    """A vehicle/twin endpoint pair joined by in-process queues.

    Each direction optionally runs through a seeded ChannelModel (drops and
    delays); without a model, delivery is immediate. The clock is
    injectable so tests can drive delivery deterministically.
    """

    def __init__(
        self,
        uplink: ChannelModel | None = None,
        downlink: ChannelModel | None = None,
        clock_us: Callable[[], int] = wall_us,
    ):
        self.vehicle = _LoopbackEndpoint(self, "vehicle")
        self.twin = _LoopbackEndpoint(self, "twin")
        self._clock_us = clock_us
        self._samplers = {
            id(self.vehicle): uplink.sampler() if uplink else None,
            id(self.twin): downlink.sampler() if downlink else None,
        }
        self._inboxes: dict[int, list] = {id(self.vehicle): [], id(self.twin): []}
        self._counter = 0
        self.dropped = 0

    def _peer(self, endpoint: _LoopbackEndpoint) -> _LoopbackEndpoint:
        return self.twin if endpoint is self.vehicle else self.vehicle

    def _dispatch(self, sender: _LoopbackEndpoint, data: bytes):
        now = self._clock_us()
        sampler = self._samplers[id(sender)]
        if sampler is None:
            deliver = now
        else:
            deliver = sampler.deliver_ts_us(now)
            if deliver is None:
                self.dropped += 1
                return
        self._counter += 1
        heapq.heappush(
            self._inboxes[id(self._peer(sender))],
            (deliver, self._counter, data, sender.address),
        )

    def _due(self, receiver: _LoopbackEndpoint) -> list[Datagram]:
        now = self._clock_us()
        inbox = self._inboxes[id(receiver)]
        out: list[Datagram] = []
        while inbox and inbox[0][0] <= now:
            deliver, _, data, addr = heapq.heappop(inbox)
            out.append((data, addr, deliver))
        return out
