"""Per-object tracking and safety classification.

ObjectTracker keeps one Track per detection id: a rolling window of depth
samples, an anchor-based range rate smoothed with an EMA, TTC/THW with
infinity semantics, a discrete yaw estimate, and a safe/hazardous/dangerous
state. Range rate is signed with negative meaning closing; TTC is finite
only while the EMA range rate is below -closing_speed_eps, THW only while
the ego moves at least ego_speed_min.

All depths entering this module are horizontal-range meters (tilt
compensation and mm-to-m conversion happen at the ingest boundary).
"""

import math
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Deque

from .geometry import CameraIntrinsics, CameraPoint, DegenerateGeometry, pixel_to_camera
from .scene import ObjectClass, SceneFrame, StreamOrderError

INF = math.inf


class NoObservation(ValueError):
    """An operation needed at least one depth sample."""


class NoVelocity(ValueError):
    """Range rate undefined: fewer than two samples or zero elapsed time."""


class InvalidDepthSample(ValueError):
    """A yaw estimate was asked for with a non-positive depth sample."""


class InvalidYaw(ValueError):
    """Yaw outside the discrete {0, 90, 180, 270} set."""


class SafetyState(IntEnum):
    """Severity-ordered so that max() picks the worst state."""

    SAFE = 0
    HAZARDOUS = 1
    DANGEROUS = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


class Orientation(IntEnum):
    PARALLEL = 0
    PERPENDICULAR = 1


@dataclass(frozen=True)
class TrackerConfig:
    ema_alpha: float = 0.3
    fps: float = 20.0
    depth_window: int = 5
    track_ttl_frames: int = 10
    ego_speed_min_mps: float = 0.1
    closing_speed_eps_mps: float = 0.05
    ttc_hazard_s: float = 3.0
    ttc_danger_s: float = 1.5
    thw_hazard_s: float = 1.0
    thw_danger_s: float = 0.5

    def __post_init__(self):
        if not (0 < self.ema_alpha <= 1):
            raise ValueError(f"ema_alpha must be in (0, 1], got {self.ema_alpha}")
        if self.ttc_danger_s >= self.ttc_hazard_s:
            raise ValueError("ttc_danger_s must be below ttc_hazard_s")
        if self.thw_danger_s >= self.thw_hazard_s:
            raise ValueError("thw_danger_s must be below thw_hazard_s")
        for name in ("fps", "depth_window", "track_ttl_frames", "ego_speed_min_mps",
                     "closing_speed_eps_mps", "ttc_hazard_s", "ttc_danger_s",
                     "thw_hazard_s", "thw_danger_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DepthRing = Deque[tuple[int, float]]  # (timestamp_us, depth_m), oldest first


def smoothed_depth(ring: DepthRing) -> float:
    """Arithmetic mean of the depths in the rolling window."""
    if not ring:
        raise NoObservation("empty depth window")
    return sum(d for _, d in ring) / len(ring)


def anchor_range_rate(ring: DepthRing) -> float:
    """Range rate (m/s) anchored at the window ends; negative means closing."""
    if len(ring) < 2:
        raise NoVelocity("need at least two depth samples")
    t0, d0 = ring[0]
    t1, d1 = ring[-1]
    if t1 == t0:
        raise NoVelocity("zero elapsed time across the window")
    return (d1 - d0) / ((t1 - t0) / 1e6)


def ema(prev: float | None, raw: float, alpha: float) -> float:
    """Exponential moving average; initializes to raw when prev is absent."""
    if not math.isfinite(raw):
        raise ValueError(f"raw must be finite, got {raw}")
    if prev is None:
        return raw
    return alpha * raw + (1.0 - alpha) * prev


def ema_metric_update(prev_ema: float, raw: float, alpha: float) -> float:
    """EMA for metrics that may be infinite.

    A finite raw value updates (or, after an all-infinite history,
    re-initializes) the EMA; an infinite raw value leaves the previous EMA
    untouched, so infinity persists only until the first finite sample.
    """
    if math.isinf(raw):
        return prev_ema
    return ema(prev_ema if math.isfinite(prev_ema) else None, raw, alpha)


def object_speed(vx: float, vz: float, point: CameraPoint) -> float:
    """Line-of-sight approach speed (m/s, positive = closing) of an object.

    vx and vz are the object's position change rates in the camera x/z
    plane; the projection is onto the unit vector toward the object.
    """
    norm = math.hypot(point.x, point.z)
    if norm == 0.0:
        raise DegenerateGeometry("object at the camera origin has no line of sight")
    return -(vx * point.x + vz * point.z) / norm


def absolute_speed(ego_speed_mps: float, range_rate_mps: float) -> float:
    """Object ground speed from ego speed plus signed range rate, floored at 0."""
    return max(ego_speed_mps + range_rate_mps, 0.0)


def yaw_from_depths(d_top: float, d_bottom: float, d_left: float, d_right: float) -> int:
    """Discrete yaw from depth differences at the bbox edge midpoints.

    The dominant axis decides: a larger horizontal difference maps to 0 or
    180 degrees, otherwise (ties included) the vertical difference maps to
    90 or 270.
    """
    for name, d in (("top", d_top), ("bottom", d_bottom), ("left", d_left), ("right", d_right)):
        if not (d > 0) or not math.isfinite(d):
            raise InvalidDepthSample(f"{name} depth must be finite and > 0, got {d}")
    delta_vert = d_bottom - d_top
    delta_horiz = d_right - d_left
    if abs(delta_horiz) > abs(delta_vert):
        return 0 if delta_horiz < 0 else 180
    return 90 if delta_vert < 0 else 270


def orientation_class(yaw_deg: int) -> Orientation:
    """Parallel for 0/180 degrees, perpendicular for 90/270."""
    if yaw_deg in (0, 180):
        return Orientation.PARALLEL
    if yaw_deg in (90, 270):
        return Orientation.PERPENDICULAR
    raise InvalidYaw(f"yaw must be one of 0/90/180/270, got {yaw_deg}")


def ttc(distance_m: float, range_rate_mps: float, eps: float = 0.05) -> float:
    """Time to collision: distance over closing speed, inf when not closing."""
    if not (distance_m > 0):
        raise ValueError(f"distance_m must be > 0, got {distance_m}")
    if range_rate_mps < -eps:
        return distance_m / -range_rate_mps
    return INF


def thw(distance_m: float, ego_speed_mps: float, min_speed: float = 0.1) -> float:
    """Time headway: distance over ego speed, inf below the minimum speed."""
    if not (distance_m > 0):
        raise ValueError(f"distance_m must be > 0, got {distance_m}")
    if ego_speed_mps >= min_speed:
        return distance_m / ego_speed_mps
    return INF


def classify(ttc_s: float, thw_s: float, cfg: TrackerConfig) -> SafetyState:
    """Map TTC/THW to the three-level safety state via the config thresholds."""
    if ttc_s < cfg.ttc_danger_s or thw_s < cfg.thw_danger_s:
        return SafetyState.DANGEROUS
    if ttc_s < cfg.ttc_hazard_s or thw_s < cfg.thw_hazard_s:
        return SafetyState.HAZARDOUS
    return SafetyState.SAFE


def format_metric(value: float) -> str:
    """Render a metric for display: one decimal (round half up) plus 's', or 'inf'."""
    if math.isinf(value):
        return "inf"
    return f"{math.floor(value * 10.0 + 0.5) / 10.0:.1f}s"


@dataclass
class Track:
    """Mutable per-object history; owned and updated by ObjectTracker."""

    object_id: int
    obj_class: ObjectClass
    ring: DepthRing
    smoothed_depth_m: float | None = None
    ema_range_rate_mps: float | None = None
    ema_ttc_s: float = INF
    ema_thw_s: float = INF
    yaw_deg: int = 0
    orientation: Orientation = Orientation.PARALLEL
    abs_speed_mps: float = 0.0
    approach_speed_mps: float = 0.0
    camera_point: CameraPoint | None = None
    camera_point_ts_us: int | None = None
    last_seen_frame: int = 0
    state: SafetyState = SafetyState.SAFE


@dataclass(frozen=True)
class ObjectReport:
    """Per-object record in a SafetyReport; values are the track's latest."""

    object_id: int
    obj_class: ObjectClass
    distance_m: float
    rel: CameraPoint
    abs_speed_mps: float
    range_rate_mps: float
    approach_speed_mps: float
    yaw_deg: int
    ttc_s: float
    thw_s: float
    state: SafetyState
    stale: bool


@dataclass(frozen=True)
class SafetyReport:
    frame_index: int
    timestamp_us: int
    ego_speed_mps: float
    objects: tuple[ObjectReport, ...]
    overall_state: SafetyState

    @staticmethod
    def overall(objects) -> SafetyState:
        return max((o.state for o in objects), default=SafetyState.SAFE)


def report_to_json(report: "SafetyReport") -> dict:
    """JSON-safe form of a report: infinities become null plus display strings."""

    def metric(value: float):
        return None if math.isinf(value) else value

    return {
        "schema": 1,
        "frame_index": report.frame_index,
        "timestamp_us": report.timestamp_us,
        "ego_speed_mps": report.ego_speed_mps,
        "overall_state": report.overall_state.label,
        "objects": [
            {
                "id": o.object_id,
                "class": o.obj_class.value,
                "distance_m": o.distance_m,
                "rel": [o.rel.x, o.rel.y, o.rel.z],
                "abs_speed_mps": o.abs_speed_mps,
                "range_rate_mps": o.range_rate_mps,
                "approach_speed_mps": o.approach_speed_mps,
                "yaw_deg": o.yaw_deg,
                "ttc_s": metric(o.ttc_s),
                "thw_s": metric(o.thw_s),
                "ttc": format_metric(o.ttc_s),
                "thw": format_metric(o.thw_s),
                "state": o.state.label,
                "stale": o.stale,
            }
            for o in report.objects
        ],
    }


class ObjectTracker:
    """Tracks per-object depth, velocity, TTC/THW, and safety state.

    One instance per stream; update() must be called with strictly
    increasing frame timestamps. Tracks survive disappearance for
    track_ttl_frames frames (reported with stale=True) before being dropped.
    """

    def __init__(self, cfg: TrackerConfig | None = None, intr: CameraIntrinsics | None = None):
        self.cfg = cfg or TrackerConfig()
        self.intr = intr or CameraIntrinsics(350.0, 0.11989, 336.0, 188.0, tilt_deg=15.0)
        self.tracks: dict[int, Track] = {}
        self._last_ts_us: int | None = None

    def update(self, frame: SceneFrame) -> SafetyReport:
        if self._last_ts_us is not None and frame.timestamp_us <= self._last_ts_us:
            raise StreamOrderError(
                f"frame timestamp {frame.timestamp_us} does not advance past {self._last_ts_us}"
            )
        self._last_ts_us = frame.timestamp_us
        cfg = self.cfg

        for det in frame.detections:
            track = self.tracks.get(det.object_id)
            if track is None:
                track = Track(det.object_id, det.obj_class, deque(maxlen=cfg.depth_window))
                self.tracks[det.object_id] = track
            track.obj_class = det.obj_class
            track.last_seen_frame = frame.frame_index
            self._update_track(track, det, frame)

        for object_id in [oid for oid, t in self.tracks.items()
                          if frame.frame_index - t.last_seen_frame >= cfg.track_ttl_frames]:
            del self.tracks[object_id]

        objects = tuple(
            self._report_for(track, frame.frame_index)
            for track in sorted(self.tracks.values(), key=lambda t: t.object_id)
            if track.smoothed_depth_m is not None
        )
        return SafetyReport(
            frame_index=frame.frame_index,
            timestamp_us=frame.timestamp_us,
            ego_speed_mps=frame.ego_speed_mps,
            objects=objects,
            overall_state=SafetyReport.overall(objects),
        )

    def _update_track(self, track: Track, det, frame: SceneFrame):
        cfg = self.cfg
        if det.depth_center_m is not None:
            track.ring.append((frame.timestamp_us, det.depth_center_m))
        if not track.ring:
            return
        track.smoothed_depth_m = smoothed_depth(track.ring)

        try:
            raw_rate = anchor_range_rate(track.ring)
        except NoVelocity:
            raw_rate = None
        if raw_rate is not None:
            track.ema_range_rate_mps = ema(track.ema_range_rate_mps, raw_rate, cfg.ema_alpha)

        rate = track.ema_range_rate_mps
        raw_ttc = ttc(track.smoothed_depth_m, rate, cfg.closing_speed_eps_mps) if rate is not None else INF
        track.ema_ttc_s = ema_metric_update(track.ema_ttc_s, raw_ttc, cfg.ema_alpha)
        raw_thw = thw(track.smoothed_depth_m, frame.ego_speed_mps, cfg.ego_speed_min_mps)
        track.ema_thw_s = ema_metric_update(track.ema_thw_s, raw_thw, cfg.ema_alpha)

        edges = det.edge_depths()
        if edges is not None:
            track.yaw_deg = yaw_from_depths(*edges)
            track.orientation = orientation_class(track.yaw_deg)

        u, v = det.center
        point = pixel_to_camera(u, v, track.smoothed_depth_m, self.intr)
        if track.camera_point is not None and track.camera_point_ts_us is not None:
            dt_s = (frame.timestamp_us - track.camera_point_ts_us) / 1e6
            if dt_s > 0:
                vx = (point.x - track.camera_point.x) / dt_s
                vz = (point.z - track.camera_point.z) / dt_s
                try:
                    track.approach_speed_mps = object_speed(vx, vz, point)
                except DegenerateGeometry:
                    pass
        track.camera_point = point
        track.camera_point_ts_us = frame.timestamp_us

        track.abs_speed_mps = absolute_speed(frame.ego_speed_mps, rate if rate is not None else 0.0)
        track.state = classify(track.ema_ttc_s, track.ema_thw_s, cfg)

    def _report_for(self, track: Track, frame_index: int) -> ObjectReport:
        return ObjectReport(
            object_id=track.object_id,
            obj_class=track.obj_class,
            distance_m=track.smoothed_depth_m,
            rel=track.camera_point if track.camera_point is not None else CameraPoint(0.0, 0.0, track.smoothed_depth_m),
            abs_speed_mps=track.abs_speed_mps,
            range_rate_mps=track.ema_range_rate_mps if track.ema_range_rate_mps is not None else 0.0,
            approach_speed_mps=track.approach_speed_mps,
            yaw_deg=track.yaw_deg,
            ttc_s=track.ema_ttc_s,
            thw_s=track.ema_thw_s,
            state=track.state,
            stale=track.last_seen_frame < frame_index,
        )
