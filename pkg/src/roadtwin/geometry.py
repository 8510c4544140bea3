"""Camera and coordinate math shared by the vehicle agent and the twin.

Frame conventions used throughout the package:

  camera frame : x right, y down, z forward along the optical axis (meters)
  world frame  : x east, y north, z up (meters); yaw rotates about +z
  pixels       : u right, v down, origin at the top-left image corner

Angles are radians internally; degrees appear only at I/O boundaries
(configuration files, wire payloads, display strings).
"""

import math
from dataclasses import dataclass

import numpy as np

MEAN_EARTH_RADIUS_M = 6371000.0


class DegenerateDisparity(ValueError):
    """Disparity is unusable for depth (zero, negative, or non-finite)."""


class DegenerateGeometry(ValueError):
    """A geometric quantity is undefined for the given inputs."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole stereo parameters plus the mounting tilt of the optical axis.

    tilt_deg is the downward pitch of the camera; depth samples taken along
    the optical axis are projected onto the horizontal plane with
    :func:`tilt_compensate`.
    """

    focal_px: float
    baseline_m: float
    principal_u: float
    principal_v: float
    tilt_deg: float = 15.0

    def __post_init__(self):
        if not (self.focal_px > 0):
            raise ValueError(f"focal_px must be > 0, got {self.focal_px}")
        if not (self.baseline_m > 0):
            raise ValueError(f"baseline_m must be > 0, got {self.baseline_m}")
        if not (0 <= self.tilt_deg < 90):
            raise ValueError(f"tilt_deg must be in [0, 90), got {self.tilt_deg}")


@dataclass(frozen=True)
class EulerZXY:
    """Euler angles (radians) for the Z-X-Y transformation matrix."""

    roll_phi: float = 0.0
    pitch_theta: float = 0.0
    yaw_psi: float = 0.0

    def __post_init__(self):
        for name in ("roll_phi", "pitch_theta", "yaw_psi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class CameraPoint:
    """A point in the camera frame (meters, z forward)."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class WorldPoint:
    """A point in the twin/world frame (meters)."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class GeoOrigin:
    """Anchor of the local tangent plane used for geodetic conversion."""

    lat0: float
    lon0: float
    earth_radius_m: float = MEAN_EARTH_RADIUS_M

    def __post_init__(self):
        if abs(self.lat0) > 90:
            raise ValueError(f"lat0 out of range: {self.lat0}")
        if abs(self.lon0) > 180:
            raise ValueError(f"lon0 out of range: {self.lon0}")
        if not (self.earth_radius_m > 0):
            raise ValueError("earth_radius_m must be > 0")


def disparity_to_depth(d: float, intr: CameraIntrinsics) -> float:
    """Depth (m) along the optical axis from a stereo disparity (px).

    Raises DegenerateDisparity for non-positive or non-finite disparities,
    which signal an unusable stereo match.
    """
    if not (d > 0) or not math.isfinite(d):
        raise DegenerateDisparity(f"disparity must be finite and > 0, got {d}")
    return intr.focal_px * intr.baseline_m / d


def tilt_compensate(depth_m: float, intr: CameraIntrinsics) -> float:
    """Project an optical-axis depth onto the horizontal plane.

    With the camera pitched down by tilt_deg, the horizontal range to a
    point at optical-axis distance depth_m is depth_m * cos(tilt).
    """
    if not (depth_m > 0):
        raise ValueError(f"depth_m must be > 0, got {depth_m}")
    return depth_m * math.cos(math.radians(intr.tilt_deg))


def pixel_to_camera(u: float, v: float, depth_m: float, intr: CameraIntrinsics) -> CameraPoint:
    """Back-project a pixel at a known depth into the camera frame."""
    if not (depth_m > 0):
        raise ValueError(f"depth_m must be > 0, got {depth_m}")
    x = (u - intr.principal_u) * depth_m / intr.focal_px
    y = (v - intr.principal_v) * depth_m / intr.focal_px
    return CameraPoint(x, y, depth_m)


def camera_to_pixel(point: CameraPoint, intr: CameraIntrinsics) -> tuple[float, float]:
    """Pinhole projection, the inverse of :func:`pixel_to_camera`."""
    if not (point.z > 0):
        raise DegenerateGeometry(f"point must be in front of the camera, z={point.z}")
    u = point.x * intr.focal_px / point.z + intr.principal_u
    v = point.y * intr.focal_px / point.z + intr.principal_v
    return u, v


def rotation_zxy(angles: EulerZXY) -> np.ndarray:
    """The 3x3 Z-X-Y transformation matrix evaluated at (phi, theta, psi).

    Equivalent to Rz(psi) @ Ry(theta) @ Rx(phi); rows are written out
    explicitly so the entries match the documented matrix term by term.
    """
    cphi, sphi = math.cos(angles.roll_phi), math.sin(angles.roll_phi)
    cth, sth = math.cos(angles.pitch_theta), math.sin(angles.pitch_theta)
    cpsi, spsi = math.cos(angles.yaw_psi), math.sin(angles.yaw_psi)
    return np.array(
        [
            [cpsi * cth, cpsi * sth * sphi - spsi * cphi, cpsi * sth * cphi + spsi * sphi],
            [spsi * cth, spsi * sth * sphi + cpsi * cphi, spsi * sth * cphi - cpsi * sphi],
            [-sth, cth * sphi, cth * cphi],
        ],
        dtype=np.float64,
    )


def relative_to_world(
    ego_pos: WorldPoint,
    angles: EulerZXY,
    rel: CameraPoint,
    offset_sign_positive: bool = False,
) -> WorldPoint:
    """Place an ego-relative offset in the world frame.

    The default subtracts the rotated offset from the ego position, which
    puts a forward object behind the ego under identity rotation;
    offset_sign_positive=True flips the offset term for consumers that
    want forward objects ahead of the ego.
    """
    r = rotation_zxy(angles) @ np.array([rel.x, rel.y, rel.z], dtype=np.float64)
    if offset_sign_positive:
        return WorldPoint(ego_pos.x + r[0], ego_pos.y + r[1], ego_pos.z + r[2])
    return WorldPoint(ego_pos.x - r[0], ego_pos.y - r[1], ego_pos.z - r[2])


def geo_to_local(lat: float, lon: float, origin: GeoOrigin) -> WorldPoint:
    """Equirectangular tangent-plane projection of a geodetic fix (z = 0).

    Sub-centimeter error at the sub-kilometer scale this pipeline runs at,
    and trivially invertible (see :func:`local_to_geo`).
    """
    if abs(lat) > 90 or abs(lon) > 180:
        raise ValueError(f"geodetic input out of range: lat={lat}, lon={lon}")
    x = origin.earth_radius_m * math.radians(lon - origin.lon0) * math.cos(math.radians(origin.lat0))
    y = origin.earth_radius_m * math.radians(lat - origin.lat0)
    return WorldPoint(x, y, 0.0)


def local_to_geo(x: float, y: float, origin: GeoOrigin) -> tuple[float, float]:
    """Inverse of :func:`geo_to_local`; returns (lat, lon) in degrees."""
    lat = origin.lat0 + math.degrees(y / origin.earth_radius_m)
    lon = origin.lon0 + math.degrees(
        x / (origin.earth_radius_m * math.cos(math.radians(origin.lat0)))
    )
    return lat, lon
