"""Infrastructure-side entity store with spawn/update/remove semantics.

The store consumes decoded telemetry: the ego pose is projected into the
local tangent plane, each object record is placed in the world frame via
the Z-X-Y transformation, and the safety state is recomputed on this side
from the received TTC/THW rather than trusted from the vehicle. Objects
missing from telemetry for longer than entity_ttl_ms are removed on the
next maintenance pass; entities missing for more than one telemetry
period are flagged stale in snapshots.
"""

import math
import threading
from collections import deque
from dataclasses import dataclass, replace

from .geometry import CameraPoint, EulerZXY, GeoOrigin, WorldPoint, geo_to_local, relative_to_world
from .protocol import (
    DOWNLINK_QUEUE_DEPTH,
    EncodeError,
    MAX_ALERT_TEXT_BYTES,
    LinkStats,
    OperatorMessage,
    TelemetryMessage,
)
from .scene import ObjectClass
from .tracker import SafetyState, TrackerConfig, classify

SEQ_WINDOW = 1 << 31  # serial-number arithmetic window for 32-bit seqs

_CLASS_FROM_CODE = {1: ObjectClass.CAR, 2: ObjectClass.PEDESTRIAN}


def out_of_order_filter(last_seq: int | None, msg_seq: int) -> bool:
    """Accept a telemetry seq iff it is newer than last_seq, modulo wraparound.

    Uses a 2^31 serial-number window: seq 0 is newer than 2^32 - 1.
    """
    if last_seq is None:
        return True
    return 0 < ((msg_seq - last_seq) & 0xFFFFFFFF) < SEQ_WINDOW


@dataclass(frozen=True)
class Entity:
    """One live twin object, as last seen in telemetry."""

    object_id: int
    obj_class: ObjectClass
    world_pos: WorldPoint
    rel_x: float
    rel_y: float
    rel_z: float
    yaw_deg: float
    abs_speed_mps: float
    ttc_s: float
    thw_s: float
    state: SafetyState
    last_update_ms: float
    stale: bool = False


@dataclass(frozen=True)
class EgoEntity:
    world_pos: WorldPoint = WorldPoint(0.0, 0.0, 0.0)
    lat: float = 0.0
    lon: float = 0.0
    yaw_deg: float = 0.0
    speed_mps: float = 0.0
    connected: bool = False
    last_update_ms: float | None = None


@dataclass(frozen=True)
class StoreDiff:
    """Ids spawned, updated, and removed by one maintenance pass; disjoint."""

    spawned: tuple[int, ...] = ()
    updated: tuple[int, ...] = ()
    removed: tuple[int, ...] = ()


@dataclass(frozen=True)
class Snapshot:
    """Point-in-time copy of the store; entity ids ascend."""

    ego: EgoEntity
    entities: tuple[Entity, ...]
    stats: LinkStats | None
    taken_at_ms: float


class EntityStore:
    """Authoritative set of live entities, shared by ingest and snapshot readers.

    One writer applies telemetry; any number of readers take snapshots.
    All mutation happens under one lock, and snapshots are consistent
    copies (frozen dataclasses all the way down).
    """

    def __init__(
        self,
        origin: GeoOrigin | None = None,
        entity_ttl_ms: float = 1000.0,
        stale_after_ms: float = 150.0,
        thresholds: TrackerConfig | None = None,
        offset_sign_positive: bool = False,
    ):
        self.origin = origin or GeoOrigin(30.0, 31.0)
        self.entity_ttl_ms = entity_ttl_ms
        self.stale_after_ms = stale_after_ms
        self.thresholds = thresholds or TrackerConfig()
        self.offset_sign_positive = offset_sign_positive
        self._lock = threading.Lock()
        self._entities: dict[int, Entity] = {}
        self._ego = EgoEntity()
        self._stats: LinkStats | None = None
        self._alert_queue: deque[OperatorMessage] = deque(maxlen=DOWNLINK_QUEUE_DEPTH)
        self._downlink_seq = 0
        self.last_telemetry_seq: int | None = None

    def accept_seq(self, msg_seq: int) -> bool:
        """Out-of-order gate; advances the high-water mark on accept."""
        with self._lock:
            if not out_of_order_filter(self.last_telemetry_seq, msg_seq):
                return False
            self.last_telemetry_seq = msg_seq
            return True

    def apply_telemetry(self, msg: TelemetryMessage, recv_ts_ms: float) -> StoreDiff:
        """Fold one telemetry message into the store and expire old entities."""
        with self._lock:
            ego_pos = geo_to_local(msg.ego_lat, msg.ego_lon, self.origin)
            self._ego = EgoEntity(
                world_pos=ego_pos,
                lat=msg.ego_lat,
                lon=msg.ego_lon,
                yaw_deg=msg.ego_yaw_deg,
                speed_mps=msg.ego_speed_mps,
                connected=self._ego.connected,
                last_update_ms=recv_ts_ms,
            )
            angles = EulerZXY(0.0, 0.0, math.radians(msg.ego_yaw_deg))
            spawned, updated = [], []
            for obj in msg.objects:
                rel = CameraPoint(obj.rel_x, obj.rel_y, obj.rel_z)
                entity = Entity(
                    object_id=obj.object_id,
                    obj_class=_CLASS_FROM_CODE[obj.class_code],
                    world_pos=relative_to_world(
                        ego_pos, angles, rel, offset_sign_positive=self.offset_sign_positive
                    ),
                    rel_x=obj.rel_x,
                    rel_y=obj.rel_y,
                    rel_z=obj.rel_z,
                    yaw_deg=obj.yaw_deg,
                    abs_speed_mps=obj.abs_speed_mps,
                    ttc_s=obj.ttc_s,
                    thw_s=obj.thw_s,
                    state=classify(obj.ttc_s, obj.thw_s, self.thresholds),
                    last_update_ms=recv_ts_ms,
                )
                (spawned if obj.object_id not in self._entities else updated).append(obj.object_id)
                self._entities[obj.object_id] = entity
            removed = self._expire_locked(recv_ts_ms, exclude=set(spawned) | set(updated))
            return StoreDiff(tuple(spawned), tuple(updated), tuple(removed))

    def expire(self, now_ms: float) -> StoreDiff:
        """Remove entities whose last update is older than entity_ttl_ms."""
        with self._lock:
            return StoreDiff(removed=tuple(self._expire_locked(now_ms, exclude=set())))

    def _expire_locked(self, now_ms: float, exclude: set[int]) -> list[int]:
        removed = [
            oid
            for oid, entity in self._entities.items()
            if oid not in exclude and now_ms - entity.last_update_ms > self.entity_ttl_ms
        ]
        for oid in removed:
            del self._entities[oid]
        return removed

    def set_connected(self, connected: bool):
        with self._lock:
            self._ego = replace(self._ego, connected=connected)

    def set_link_stats(self, stats: LinkStats | None):
        with self._lock:
            self._stats = stats

    def snapshot(self, now_ms: float | None = None) -> Snapshot:
        with self._lock:
            reference = now_ms
            if reference is None:
                reference = self._ego.last_update_ms if self._ego.last_update_ms else 0.0
            entities = tuple(
                replace(e, stale=reference - e.last_update_ms > self.stale_after_ms)
                for e in sorted(self._entities.values(), key=lambda e: e.object_id)
            )
            return Snapshot(ego=self._ego, entities=entities, stats=self._stats, taken_at_ms=reference)

    def entity_ids(self) -> tuple[int, ...]:
        with self._lock:
            return tuple(sorted(self._entities))

    def enqueue_operator_alert(self, severity: int, state_override: int, text: str) -> OperatorMessage:
        """Stamp an alert with the next downlink seq and queue it (newest wins)."""
        if len(text.encode("utf-8")) > MAX_ALERT_TEXT_BYTES:
            raise EncodeError(
                f"alert text is {len(text.encode('utf-8'))} bytes, limit {MAX_ALERT_TEXT_BYTES}"
            )
        with self._lock:
            msg = OperatorMessage(
                seq=self._downlink_seq,
                timestamp_us=0,  # stamped by the downlink sender
                severity=severity,
                state_override=state_override,
                text=text,
            )
            self._downlink_seq += 1
            self._alert_queue.append(msg)
            return msg

    def drain_alerts(self) -> list[OperatorMessage]:
        with self._lock:
            out = list(self._alert_queue)
            self._alert_queue.clear()
            return out
