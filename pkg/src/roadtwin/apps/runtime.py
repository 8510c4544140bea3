"""Twin-side runtime glue: session + sequence gate + reception log + store.

Used by the twin server over UDP and by the vehicle agent's --loopback
mode over in-process queues; both paths run the identical message
handling: decode -> out-of-order gate -> reception log -> entity store.
"""

from ..geometry import GeoOrigin
from ..protocol import NoData, ReceptionLog, TelemetryMessage, TwinSession, compute_stats
from ..tracker import TrackerConfig
from ..twin import EntityStore


class TwinRuntime:
    def __init__(
        self,
        transport,
        origin: GeoOrigin | None = None,
        thresholds: TrackerConfig | None = None,
        entity_ttl_ms: float = 1000.0,
        offset_sign_positive: bool = False,
        clock_us=None,
    ):
        self.store = EntityStore(
            origin=origin,
            entity_ttl_ms=entity_ttl_ms,
            thresholds=thresholds,
            offset_sign_positive=offset_sign_positive,
        )
        self.reception = ReceptionLog()
        self.stale_drops = 0
        kwargs = {} if clock_us is None else {"clock_us": clock_us}
        self.session = TwinSession(transport, on_telemetry=self._on_telemetry, **kwargs)

    def _on_telemetry(self, msg: TelemetryMessage, recv_ts_us: int):
        if not self.store.accept_seq(msg.seq):
            self.stale_drops += 1
            return
        self.reception.record(msg.seq, msg.timestamp_us, recv_ts_us)
        self.store.apply_telemetry(msg, recv_ts_us / 1000.0)

    def pump(self):
        """Process everything currently queued on the transport."""
        self.session.poll()
        self.store.set_connected(self.session.connected())
        try:
            self.store.set_link_stats(compute_stats(self.reception))
        except NoData:
            pass

    def send_pending_alerts(self, clock_us) -> int:
        """Drain the store's alert queue onto the downlink; returns count sent/held."""
        count = 0
        for alert in self.store.drain_alerts():
            stamped = type(alert)(
                seq=alert.seq,
                timestamp_us=clock_us(),
                severity=alert.severity,
                state_override=alert.state_override,
                text=alert.text,
            )
            self.session.send_operator(stamped)
            count += 1
        return count
