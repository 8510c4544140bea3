"""Scene sources for the vehicle agent: JSONL log replay and scenario synthesis.

A scene log is one JSON object per line (schema 1), each describing a
timestamped perception sample: ego pose/speed plus the detections the
on-board stack produced for that frame. Depth samples in a log are raw
optical-axis depths straight out of the depth stack; the agent projects
them onto the horizontal plane at ingest (see geometry.tilt_compensate).

The scenario generator synthesizes the same frames from ground-truth
kinematics, so tests and demos know the exact gap, speed, and collision
time behind every sample.
"""

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator

from .geometry import CameraIntrinsics, GeoOrigin, local_to_geo

SCHEMA_VERSION = 1

# Cuboid dimensions (width, height, meters) used to synthesize bounding
# boxes by pinhole projection. Only synthetic fixtures depend on these.
CAR_SIZE_M = (4.5, 1.8, 1.5)
PEDESTRIAN_SIZE_M = (0.5, 0.5, 1.7)

# Depth offsets (m, optical axis) added to the four bbox edge midpoints of
# a synthesized detection, ordered (top, bottom, left, right). Chosen so a
# preceding car reads as parallel and a pedestrian as perpendicular under
# the discrete yaw rule.
CAR_EDGE_DEPTH_OFFSETS_M = (0.2, 0.1, 0.5, -0.5)
PEDESTRIAN_EDGE_DEPTH_OFFSETS_M = (0.05, 0.0, 0.02, -0.02)


class ObjectClass(Enum):
    CAR = "Car"
    PEDESTRIAN = "Pedestrian"


class ParseError(ValueError):
    """A scene log line failed to parse or violated a frame invariant."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class StreamOrderError(ValueError):
    """Frame timestamps went backwards (or repeated) within one stream."""


@dataclass(frozen=True)
class Detection:
    """One detected object: stable tracking id, class, box, depth samples.

    Depth is sampled at the bbox center and the four edge midpoints; any
    sample may be None when the depth stack had no valid value there.
    """

    object_id: int
    obj_class: ObjectClass
    bbox: tuple[float, float, float, float]  # u_min, v_min, u_max, v_max
    confidence: float
    depth_center_m: float | None = None
    depth_top_m: float | None = None
    depth_bottom_m: float | None = None
    depth_left_m: float | None = None
    depth_right_m: float | None = None

    def __post_init__(self):
        u_min, v_min, u_max, v_max = self.bbox
        if not (u_min < u_max and v_min < v_max):
            raise ValueError(f"degenerate bbox {self.bbox}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range: {self.confidence}")
        for name in ("depth_center_m", "depth_top_m", "depth_bottom_m", "depth_left_m", "depth_right_m"):
            value = getattr(self, name)
            if value is not None and not (value > 0):
                raise ValueError(f"{name} must be > 0 when present, got {value}")

    @property
    def center(self) -> tuple[float, float]:
        u_min, v_min, u_max, v_max = self.bbox
        return (u_min + u_max) / 2.0, (v_min + v_max) / 2.0

    def edge_depths(self) -> tuple[float, float, float, float] | None:
        """(top, bottom, left, right) when all four samples are present."""
        depths = (self.depth_top_m, self.depth_bottom_m, self.depth_left_m, self.depth_right_m)
        if any(d is None for d in depths):
            return None
        return depths  # type: ignore[return-value]


@dataclass(frozen=True)
class SceneFrame:
    """One timestamped perception sample from the on-board stack."""

    frame_index: int
    timestamp_us: int
    ego_speed_mps: float
    ego_lat: float
    ego_lon: float
    ego_yaw_deg: float
    detections: tuple[Detection, ...] = ()
    collision: bool = False  # scenario marker: an actor gap reached zero

    def __post_init__(self):
        if self.ego_speed_mps < 0:
            raise ValueError(f"ego_speed_mps must be >= 0, got {self.ego_speed_mps}")
        if self.timestamp_us < 0:
            raise ValueError(f"timestamp_us must be >= 0, got {self.timestamp_us}")


# ---------------------------------------------------------------------------
# JSONL log I/O


def _detection_to_json(det: Detection) -> dict:
    return {
        "object_id": det.object_id,
        "class": det.obj_class.value,
        "bbox": list(det.bbox),
        "confidence": det.confidence,
        "depth_center_m": det.depth_center_m,
        "depth_top_m": det.depth_top_m,
        "depth_bottom_m": det.depth_bottom_m,
        "depth_left_m": det.depth_left_m,
        "depth_right_m": det.depth_right_m,
    }


def _detection_from_json(obj: dict) -> Detection:
    return Detection(
        object_id=int(obj["object_id"]),
        obj_class=ObjectClass(obj["class"]),
        bbox=tuple(float(v) for v in obj["bbox"]),
        confidence=float(obj["confidence"]),
        depth_center_m=obj.get("depth_center_m"),
        depth_top_m=obj.get("depth_top_m"),
        depth_bottom_m=obj.get("depth_bottom_m"),
        depth_left_m=obj.get("depth_left_m"),
        depth_right_m=obj.get("depth_right_m"),
    )


def frame_to_json(frame: SceneFrame) -> dict:
    doc = {
        "schema": SCHEMA_VERSION,
        "frame_index": frame.frame_index,
        "timestamp_us": frame.timestamp_us,
        "ego_speed_mps": frame.ego_speed_mps,
        "ego_lat": frame.ego_lat,
        "ego_lon": frame.ego_lon,
        "ego_yaw_deg": frame.ego_yaw_deg,
        "detections": [_detection_to_json(d) for d in frame.detections],
    }
    if frame.collision:
        doc["collision"] = True
    return doc


def frame_from_json(doc: dict) -> SceneFrame:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema: {doc.get('schema')!r}")
    return SceneFrame(
        frame_index=int(doc["frame_index"]),
        timestamp_us=int(doc["timestamp_us"]),
        ego_speed_mps=float(doc["ego_speed_mps"]),
        ego_lat=float(doc["ego_lat"]),
        ego_lon=float(doc["ego_lon"]),
        ego_yaw_deg=float(doc["ego_yaw_deg"]),
        detections=tuple(_detection_from_json(d) for d in doc["detections"]),
        collision=bool(doc.get("collision", False)),
    )


def replay_log(path) -> Iterator[SceneFrame]:
    """Yield SceneFrames from a JSONL log in file order.

    Raises ParseError (with the 1-based line number) for malformed lines
    or invariant violations, and StreamOrderError for non-monotone
    timestamps.
    """
    last_ts = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                frame = frame_from_json(json.loads(line))
            except StreamOrderError:
                raise
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(line_no, str(exc)) from exc
            if last_ts is not None and frame.timestamp_us <= last_ts:
                raise StreamOrderError(
                    f"line {line_no}: timestamp {frame.timestamp_us} does not advance past {last_ts}"
                )
            last_ts = frame.timestamp_us
            yield frame


def write_log(frames: Iterable[SceneFrame], path) -> int:
    """Write frames as JSONL, one complete line per frame; returns the count.

    replay_log(write_log(frames)) reproduces the stream field for field.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(json.dumps(frame_to_json(frame)) + "\n")
            count += 1
    return count


# ---------------------------------------------------------------------------
# Scenario synthesis


SpeedProfile = tuple[tuple[float, float], ...]  # (time_s, speed_mps) knots


def profile_speed(profile: SpeedProfile, t: float) -> float:
    """Piecewise-linear speed at time t; endpoints are held outside the knots."""
    if t <= profile[0][0]:
        return profile[0][1]
    for (t0, v0), (t1, v1) in zip(profile, profile[1:]):
        if t <= t1:
            if t1 == t0:
                return v1
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    return profile[-1][1]


def profile_distance(profile: SpeedProfile, t: float) -> float:
    """Exact integral of the piecewise-linear speed profile over [0, t]."""
    if t <= 0:
        return 0.0
    total = 0.0
    prev_t, prev_v = profile[0]
    if t <= prev_t:
        return prev_v * t
    total += prev_v * prev_t  # held initial speed before the first knot
    for t1, v1 in profile[1:]:
        if t1 <= prev_t:
            prev_t, prev_v = t1, v1
            continue
        seg_end = min(t, t1)
        v_end = profile_speed(profile, seg_end)
        total += (prev_v + v_end) / 2.0 * (seg_end - prev_t)
        prev_t, prev_v = t1, v1
        if seg_end >= t:
            return total
    total += profile[-1][1] * (t - profile[-1][0])  # held final speed
    return total


def _validate_profile(profile: SpeedProfile, label: str):
    if not profile:
        raise ValueError(f"{label}: speed profile must have at least one knot")
    times = [t for t, _ in profile]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError(f"{label}: profile knot times must be non-decreasing")
    if any(v < 0 for _, v in profile):
        raise ValueError(f"{label}: speeds must be >= 0")


@dataclass(frozen=True)
class ActorSpec:
    """One scripted traffic participant ahead of the ego vehicle."""

    obj_class: ObjectClass
    initial_gap_m: float
    speed_profile: SpeedProfile
    lateral_offset_m: float = 0.0
    exit_s: float | None = None  # despawn time (object leaves the scene)

    def __post_init__(self):
        if not (self.initial_gap_m > 0):
            raise ValueError(f"initial_gap_m must be > 0, got {self.initial_gap_m}")
        _validate_profile(self.speed_profile, "actor")


@dataclass(frozen=True)
class ScenarioSpec:
    """Parametric traffic situation with ground-truth-known kinematics."""

    duration_s: float
    ego_profile: SpeedProfile
    actors: tuple[ActorSpec, ...] = ()
    fps: float = 20.0
    origin: GeoOrigin = field(default_factory=lambda: GeoOrigin(30.0, 31.0))

    def __post_init__(self):
        if not (self.duration_s > 0):
            raise ValueError(f"duration_s must be > 0, got {self.duration_s}")
        if not (self.fps > 0):
            raise ValueError(f"fps must be > 0, got {self.fps}")
        _validate_profile(self.ego_profile, "ego")

    def actor_gap(self, actor: ActorSpec, t: float) -> float:
        """Ground-truth gap at time t: gap0 + integral(actor - ego) speed."""
        return (
            actor.initial_gap_m
            + profile_distance(actor.speed_profile, t)
            - profile_distance(self.ego_profile, t)
        )


def _edge_offsets(obj_class: ObjectClass) -> tuple[float, float, float, float]:
    if obj_class is ObjectClass.CAR:
        return CAR_EDGE_DEPTH_OFFSETS_M
    return PEDESTRIAN_EDGE_DEPTH_OFFSETS_M


def _object_size(obj_class: ObjectClass) -> tuple[float, float, float]:
    if obj_class is ObjectClass.CAR:
        return CAR_SIZE_M
    return PEDESTRIAN_SIZE_M


def _synth_detection(
    actor_index: int, actor: ActorSpec, gap_m: float, intr: CameraIntrinsics
) -> Detection:
    """Project a class-sized cuboid at the given horizontal gap into a detection.

    Depth samples are emitted in optical-axis meters (gap / cos tilt) so the
    log looks like raw depth-stack output; the agent's ingest compensation
    recovers the horizontal gap exactly.
    """
    _, width, height = _object_size(actor.obj_class)  # (length, width, height)
    z_opt = gap_m / math.cos(math.radians(intr.tilt_deg))
    scale = intr.focal_px / z_opt
    u_c = intr.principal_u + actor.lateral_offset_m * scale
    v_c = intr.principal_v
    half_u = max(width / 2.0 * scale, 1.0)
    half_v = max(height / 2.0 * scale, 1.0)
    u_min = max(u_c - half_u, 0.0)
    u_max = min(u_c + half_u, 2.0 * intr.principal_u)
    v_min = max(v_c - half_v, 0.0)
    v_max = min(v_c + half_v, 2.0 * intr.principal_v)
    if u_max <= u_min:
        u_min, u_max = u_c - 1.0, u_c + 1.0
    if v_max <= v_min:
        v_min, v_max = v_c - 1.0, v_c + 1.0
    top, bottom, left, right = _edge_offsets(actor.obj_class)

    def edge(offset: float) -> float:
        # at close range the fixed offsets could cross zero; keep samples positive
        return max(z_opt + offset, 0.05 * z_opt)

    return Detection(
        object_id=actor_index + 1,
        obj_class=actor.obj_class,
        bbox=(u_min, v_min, u_max, v_max),
        confidence=0.9,
        depth_center_m=z_opt,
        depth_top_m=edge(top),
        depth_bottom_m=edge(bottom),
        depth_left_m=edge(left),
        depth_right_m=edge(right),
    )


def generate_scenario(spec: ScenarioSpec, intr: CameraIntrinsics) -> Iterator[SceneFrame]:
    """Synthesize SceneFrames for the spec at 1/fps steps, deterministically.

    If any actor's gap reaches zero the stream ends with a single marker
    frame (collision=True, no detections).
    """
    dt = 1.0 / spec.fps
    num_frames = int(round(spec.duration_s * spec.fps))
    for k in range(num_frames):
        t = k * dt
        ego_north_m = profile_distance(spec.ego_profile, t)
        lat, lon = local_to_geo(0.0, ego_north_m, spec.origin)
        detections = []
        collided = False
        for i, actor in enumerate(spec.actors):
            if actor.exit_s is not None and t >= actor.exit_s:
                continue
            gap = spec.actor_gap(actor, t)
            if gap <= 0:
                collided = True
                break
            detections.append(_synth_detection(i, actor, gap, intr))
        frame = SceneFrame(
            frame_index=k,
            timestamp_us=round(t * 1e6),
            ego_speed_mps=profile_speed(spec.ego_profile, t),
            ego_lat=lat,
            ego_lon=lon,
            ego_yaw_deg=0.0,
            detections=() if collided else tuple(detections),
            collision=collided,
        )
        yield frame
        if collided:
            return


def compensate_frame(frame: SceneFrame, intr: CameraIntrinsics) -> SceneFrame:
    """Project every depth sample in a frame onto the horizontal plane.

    Applied once at the agent's ingest boundary; all depths downstream of
    this call are horizontal-range meters.
    """
    factor = math.cos(math.radians(intr.tilt_deg))
    if factor == 1.0:
        return frame
    fixed = []
    for det in frame.detections:
        fixed.append(
            replace(
                det,
                depth_center_m=None if det.depth_center_m is None else det.depth_center_m * factor,
                depth_top_m=None if det.depth_top_m is None else det.depth_top_m * factor,
                depth_bottom_m=None if det.depth_bottom_m is None else det.depth_bottom_m * factor,
                depth_left_m=None if det.depth_left_m is None else det.depth_left_m * factor,
                depth_right_m=None if det.depth_right_m is None else det.depth_right_m * factor,
            )
        )
    return replace(frame, detections=tuple(fixed))


# ---------------------------------------------------------------------------
# Scenario spec files and built-ins


def spec_to_json(spec: ScenarioSpec) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "duration_s": spec.duration_s,
        "fps": spec.fps,
        "origin": {"lat0": spec.origin.lat0, "lon0": spec.origin.lon0},
        "ego": {"speed_profile": [list(k) for k in spec.ego_profile]},
        "actors": [
            {
                "class": a.obj_class.value,
                "initial_gap_m": a.initial_gap_m,
                "speed_profile": [list(k) for k in a.speed_profile],
                "lateral_offset_m": a.lateral_offset_m,
                "exit_s": a.exit_s,
            }
            for a in spec.actors
        ],
    }


def spec_from_json(doc: dict) -> ScenarioSpec:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema: {doc.get('schema')!r}")
    origin = doc.get("origin", {})
    return ScenarioSpec(
        duration_s=float(doc["duration_s"]),
        fps=float(doc.get("fps", 20.0)),
        origin=GeoOrigin(float(origin.get("lat0", 30.0)), float(origin.get("lon0", 31.0))),
        ego_profile=tuple((float(t), float(v)) for t, v in doc["ego"]["speed_profile"]),
        actors=tuple(
            ActorSpec(
                obj_class=ObjectClass(a["class"]),
                initial_gap_m=float(a["initial_gap_m"]),
                speed_profile=tuple((float(t), float(v)) for t, v in a["speed_profile"]),
                lateral_offset_m=float(a.get("lateral_offset_m", 0.0)),
                exit_s=None if a.get("exit_s") is None else float(a["exit_s"]),
            )
            for a in doc.get("actors", [])
        ),
    )


def builtin_scenarios() -> dict[str, ScenarioSpec]:
    """Canned scenarios used by demos, fixtures, and the acceptance suite."""
    return {
        # Preceding car paces the ego: constant 30 m gap, TTC stays infinite.
        "constant-gap": ScenarioSpec(
            duration_s=10.0,
            ego_profile=((0.0, 8.0),),
            actors=(ActorSpec(ObjectClass.CAR, 30.0, ((0.0, 8.0),)),),
        ),
        # Preceding car brakes from 8 m/s to rest over 8 s, then the ego
        # swerves at 7 s and the scene goes vacant before contact.
        "deceleration": ScenarioSpec(
            duration_s=9.0,
            ego_profile=((0.0, 8.0),),
            actors=(
                ActorSpec(
                    ObjectClass.CAR,
                    30.0,
                    ((0.0, 8.0), (8.0, 0.0)),
                    exit_s=7.0,
                ),
            ),
        ),
        # Pedestrian walking the same direction 18 m ahead of a slow ego.
        "pedestrian": ScenarioSpec(
            duration_s=8.0,
            ego_profile=((0.0, 3.0),),
            actors=(
                ActorSpec(ObjectClass.PEDESTRIAN, 18.0, ((0.0, 1.2),), lateral_offset_m=0.5, exit_s=7.5),
            ),
        ),
        # Nothing to detect; every frame should classify as safe.
        "vacant": ScenarioSpec(duration_s=5.0, ego_profile=((0.0, 8.0),)),
    }


def load_scenario_spec(source: str) -> ScenarioSpec:
    """Load a ScenarioSpec from a JSON file path or a builtin:<name> alias."""
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        table = builtin_scenarios()
        if name not in table:
            raise ValueError(f"unknown builtin scenario {name!r}; have {sorted(table)}")
        return table[name]
    with open(source, "r", encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))
