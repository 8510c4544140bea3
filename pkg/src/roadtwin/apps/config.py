"""Configuration for the two executables.

Defaults are usable out of the box; a JSON config file (--config) can
override any field, and a handful of common settings are also exposed as
CLI flags (flags win over the file). Channel specs are comma-separated
key=value strings, e.g. "drop=0.02795,base=21,jitter=17.213,sigma=1.1418,seed=7",
or the alias "cellular"; "none" disables the simulated channel.
"""

import json
from dataclasses import dataclass, field, fields

from ..geometry import CameraIntrinsics, GeoOrigin
from ..protocol import ChannelModel, cellular_profile
from ..tracker import TrackerConfig

DEFAULT_INTRINSICS = CameraIntrinsics(
    focal_px=350.0, baseline_m=0.11989, principal_u=336.0, principal_v=188.0, tilt_deg=15.0
)
DEFAULT_ORIGIN = GeoOrigin(30.0, 31.0)


def parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {text!r}")
    return host, int(port)


def parse_channel_spec(spec: str) -> ChannelModel | None:
    """Parse a channel spec string; None means a perfect link."""
    spec = spec.strip()
    if spec in ("", "none", "off"):
        return None
    if spec.startswith("cellular"):
        seed = 0
        if ":" in spec:
            seed = int(spec.split(":", 1)[1])
        return cellular_profile(seed=seed)
    kwargs: dict = {}
    keymap = {
        "drop": "drop_probability",
        "base": "base_delay_ms",
        "jitter": "jitter_mean_ms",
        "sigma": "jitter_sigma",
        "seed": "seed",
        "reorder": "reorder_allowed",
    }
    for part in spec.split(","):
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in keymap:
            raise ValueError(f"unknown channel key {key!r} in {spec!r}")
        if key == "seed":
            kwargs[keymap[key]] = int(value)
        elif key == "reorder":
            kwargs[keymap[key]] = value.strip().lower() in ("1", "true", "yes")
        else:
            kwargs[keymap[key]] = float(value)
    return ChannelModel(**kwargs)


def _intrinsics_from_json(doc: dict) -> CameraIntrinsics:
    return CameraIntrinsics(
        focal_px=float(doc.get("focal_px", DEFAULT_INTRINSICS.focal_px)),
        baseline_m=float(doc.get("baseline_m", DEFAULT_INTRINSICS.baseline_m)),
        principal_u=float(doc.get("principal_u", DEFAULT_INTRINSICS.principal_u)),
        principal_v=float(doc.get("principal_v", DEFAULT_INTRINSICS.principal_v)),
        tilt_deg=float(doc.get("tilt_deg", DEFAULT_INTRINSICS.tilt_deg)),
    )


def _tracker_from_json(doc: dict) -> TrackerConfig:
    allowed = {f.name for f in fields(TrackerConfig)}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown tracker config keys: {sorted(unknown)}")
    return TrackerConfig(**doc)


@dataclass
class AgentConfig:
    source: str = "scenario:builtin:constant-gap"
    twin_addr: tuple[str, int] = ("127.0.0.1", 47800)
    loopback: bool = False
    channel_spec: str = "none"
    intrinsics: CameraIntrinsics = field(default_factory=lambda: DEFAULT_INTRINSICS)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    origin: GeoOrigin = field(default_factory=lambda: DEFAULT_ORIGIN)
    report_path: str | None = None
    realtime: bool = False
    max_frames: int | None = None
    quiet: bool = False
    use_color: bool = True

    @classmethod
    def from_file(cls, path: str) -> "AgentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        cfg = cls()
        if "source" in doc:
            cfg.source = str(doc["source"])
        if "twin_addr" in doc:
            cfg.twin_addr = parse_addr(doc["twin_addr"])
        if "loopback" in doc:
            cfg.loopback = bool(doc["loopback"])
        if "channel" in doc:
            cfg.channel_spec = str(doc["channel"])
        if "intrinsics" in doc:
            cfg.intrinsics = _intrinsics_from_json(doc["intrinsics"])
        if "tracker" in doc:
            cfg.tracker = _tracker_from_json(doc["tracker"])
        if "origin" in doc:
            cfg.origin = GeoOrigin(float(doc["origin"]["lat0"]), float(doc["origin"]["lon0"]))
        if "report_path" in doc:
            cfg.report_path = doc["report_path"]
        if "realtime" in doc:
            cfg.realtime = bool(doc["realtime"])
        return cfg


@dataclass
class ServerConfig:
    listen_addr: tuple[str, int] = ("0.0.0.0", 47800)
    http_addr: tuple[str, int] = ("127.0.0.1", 8400)
    origin: GeoOrigin = field(default_factory=lambda: DEFAULT_ORIGIN)
    thresholds: TrackerConfig = field(default_factory=TrackerConfig)
    entity_ttl_ms: float = 1000.0
    offset_sign_positive: bool = False
    snapshot_push_hz: float = 10.0

    @classmethod
    def from_file(cls, path: str) -> "ServerConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        cfg = cls()
        if "listen" in doc:
            cfg.listen_addr = parse_addr(doc["listen"])
        if "http" in doc:
            cfg.http_addr = parse_addr(doc["http"])
        if "origin" in doc:
            cfg.origin = GeoOrigin(float(doc["origin"]["lat0"]), float(doc["origin"]["lon0"]))
        if "thresholds" in doc:
            cfg.thresholds = _tracker_from_json(doc["thresholds"])
        if "entity_ttl_ms" in doc:
            cfg.entity_ttl_ms = float(doc["entity_ttl_ms"])
        if "offset_sign_positive" in doc:
            cfg.offset_sign_positive = bool(doc["offset_sign_positive"])
        return cfg
