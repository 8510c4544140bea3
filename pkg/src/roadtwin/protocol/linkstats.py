"""Reception bookkeeping and link-quality statistics.

The receiver records (seq, send_ts, recv_ts) per datagram; compute_stats
turns a log into latency min/max/mean/std (population) plus a loss rate
estimated from sequence-number gaps. Duplicate sequence numbers are
ignored. Negative latencies (possible only when sender and receiver do
not share a clock) are kept for loss accounting but flagged and excluded
from the latency fields.
"""

import math
import threading
from dataclasses import dataclass


class NoData(ValueError):
    """Statistics requested from a log with no usable latency samples."""


@dataclass(frozen=True)
class LinkStats:
    latency_min_ms: float
    latency_max_ms: float
    latency_mean_ms: float
    latency_std_ms: float
    loss_rate: float
    sent_estimate: int
    received: int

    def __post_init__(self):
        if not (self.latency_min_ms <= self.latency_mean_ms <= self.latency_max_ms):
            raise ValueError("latency fields must satisfy min <= mean <= max")
        if not (0.0 <= self.loss_rate <= 1.0):
            raise ValueError(f"loss_rate must be in [0, 1], got {self.loss_rate}")
        if self.latency_std_ms < 0:
            raise ValueError("latency_std_ms must be >= 0")


class ReceptionLog:
    """Thread-safe accumulator of per-datagram reception records."""

    def __init__(self):
        self._lock = threading.Lock()
        self._seen: set[int] = set()
        self._latencies_ms: list[float] = []
        self._min_seq: int | None = None
        self._max_seq: int | None = None
        self.skew_flagged = 0

    def record(self, seq: int, send_ts_us: int, recv_ts_us: int) -> bool:
        """Record one reception; returns False for duplicate sequence numbers."""
        with self._lock:
            if seq in self._seen:
                return False
            self._seen.add(seq)
            self._min_seq = seq if self._min_seq is None else min(self._min_seq, seq)
            self._max_seq = seq if self._max_seq is None else max(self._max_seq, seq)
            latency_ms = (recv_ts_us - send_ts_us) / 1000.0
            if latency_ms < 0:
                self.skew_flagged += 1
            else:
                self._latencies_ms.append(latency_ms)
            return True

    def __len__(self) -> int:
        with self._lock:
            return len(self._seen)

    def snapshot(self) -> tuple[list[float], int, int | None, int | None]:
        """Consistent copy of (latencies, received, min_seq, max_seq)."""
        with self._lock:
            return list(self._latencies_ms), len(self._seen), self._min_seq, self._max_seq


def compute_stats(log: ReceptionLog) -> LinkStats:
    """Reduce a reception log to LinkStats.

    loss_rate = 1 - received / (max_seq - min_seq + 1): the sender count is
    estimated from the observed sequence span, which is exact once the
    first and last datagrams of a run arrive. std is the population
    standard deviation.
    """
    latencies, received, min_seq, max_seq = log.snapshot()
    if not latencies:
        raise NoData("no usable latency samples recorded")
    mean = sum(latencies) / len(latencies)
    variance = sum((x - mean) ** 2 for x in latencies) / len(latencies)
    sent_estimate = max_seq - min_seq + 1
    return LinkStats(
        latency_min_ms=min(latencies),
        latency_max_ms=max(latencies),
        latency_mean_ms=mean,
        latency_std_ms=math.sqrt(variance),
        loss_rate=1.0 - received / sent_estimate,
        sent_estimate=sent_estimate,
        received=received,
    )
