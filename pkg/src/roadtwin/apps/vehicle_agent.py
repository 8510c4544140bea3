"""vehicle-agent: ingest -> safety tracker -> uplink, downlink -> dashboard.

Reads frames from a scene log or a synthesized scenario, runs the safety
tracker, prints one dashboard line per frame, uplinks telemetry for every
frame, and applies operator alerts from the downlink to the display.
--loopback runs an in-process twin over in-memory queues (optionally
through a simulated channel) instead of a UDP peer.
"""

import argparse
import json
import sys
import time

from ..protocol import (
    CLASS_CAR,
    CLASS_PEDESTRIAN,
    LoopbackLink,
    TelemetryMessage,
    TelemetryObject,
    UdpTransport,
    VehicleSession,
    as_f32,
)
from ..protocol.transport import wall_us
from ..scene import ObjectClass, SceneFrame, compensate_frame, generate_scenario, load_scenario_spec, replay_log
from ..tracker import ObjectTracker, SafetyReport, report_to_json
from .config import AgentConfig, parse_addr, parse_channel_spec
from .display import OnboardDisplay
from .runtime import TwinRuntime

_CLASS_CODES = {ObjectClass.CAR: CLASS_CAR, ObjectClass.PEDESTRIAN: CLASS_PEDESTRIAN}


def telemetry_from_report(frame: SceneFrame, report: SafetyReport) -> TelemetryMessage:
    """Build the uplink payload for one frame; floats pre-rounded to binary32."""
    objects = tuple(
        TelemetryObject(
            object_id=o.object_id,
            class_code=_CLASS_CODES[o.obj_class],
            rel_x=as_f32(o.rel.x),
            rel_y=as_f32(o.rel.y),
            rel_z=as_f32(o.rel.z),
            abs_speed_mps=as_f32(o.abs_speed_mps),
            yaw_deg=as_f32(float(o.yaw_deg)),
            ttc_s=as_f32(o.ttc_s),
            thw_s=as_f32(o.thw_s),
            state=int(o.state),
        )
        for o in report.objects
    )
    return TelemetryMessage(
        ego_lat=frame.ego_lat,
        ego_lon=frame.ego_lon,
        ego_yaw_deg=as_f32(frame.ego_yaw_deg),
        ego_speed_mps=as_f32(frame.ego_speed_mps),
        objects=objects,
    )


def open_source(source: str, intrinsics):
    """Frame iterator for a --source value: log:<path> or scenario:<path|builtin:name>."""
    kind, _, rest = source.partition(":")
    if kind == "log":
        return replay_log(rest)
    if kind == "scenario":
        return generate_scenario(load_scenario_spec(rest), intrinsics)
    raise ValueError(f"source must start with log: or scenario:, got {source!r}")


class VehicleAgent:
    """Drives the full on-vehicle pipeline; step() processes one frame."""

    def __init__(self, cfg: AgentConfig, clock_us=wall_us):
        self.cfg = cfg
        self.clock_us = clock_us
        self.tracker = ObjectTracker(cfg.tracker, cfg.intrinsics)
        self.display = OnboardDisplay(use_color=cfg.use_color)
        self.loop_twin: TwinRuntime | None = None
        if cfg.loopback:
            link = LoopbackLink(uplink=parse_channel_spec(cfg.channel_spec), clock_us=clock_us)
            self.loop_twin = TwinRuntime(
                link.twin, origin=cfg.origin, thresholds=cfg.tracker, clock_us=clock_us
            )
            transport, twin_addr = link.vehicle, link.twin.address
        else:
            transport, twin_addr = UdpTransport(), cfg.twin_addr
        self.session = VehicleSession(
            transport, twin_addr, clock_us=clock_us, on_warning=self._warn
        )
        self._report_fh = open(cfg.report_path, "w", encoding="utf-8") if cfg.report_path else None
        self.frames_done = 0
        self.state_counts = {"Safe": 0, "Hazardous": 0, "Dangerous": 0}
        self.last_telemetry: TelemetryMessage | None = None

    def _warn(self, message: str):
        print(f"warning: {message}", file=sys.stderr)

    def step(self, frame: SceneFrame) -> SafetyReport:
        report = self.tracker.update(compensate_frame(frame, self.cfg.intrinsics))
        self.display.update_report(report)
        self.last_telemetry = self.session.send_telemetry(telemetry_from_report(frame, report))
        self.session.tick()
        if self.loop_twin is not None:
            self.loop_twin.pump()
            self.loop_twin.send_pending_alerts(self.clock_us)
        now_s = self.clock_us() / 1e6
        for alert in self.session.poll():
            self.display.apply_operator(alert, now_s)
        if self._report_fh is not None:
            self._report_fh.write(json.dumps(report_to_json(report)) + "\n")
        self.frames_done += 1
        self.state_counts[self.display.effective_state(now_s).label] += 1
        return report

    def render(self, report: SafetyReport) -> str:
        return self.display.render_line(report, self.clock_us() / 1e6)

    def run(self, frames, out=sys.stdout) -> int:
        start_us = self.clock_us()
        first_frame_us: int | None = None
        self.session.start()
        try:
            for frame in frames:
                if self.cfg.max_frames is not None and self.frames_done >= self.cfg.max_frames:
                    break
                if self.cfg.realtime:
                    if first_frame_us is None:
                        first_frame_us = frame.timestamp_us
                    due_us = start_us + (frame.timestamp_us - first_frame_us)
                    lag_s = (due_us - self.clock_us()) / 1e6
                    if lag_s > 0:
                        time.sleep(lag_s)
                report = self.step(frame)
                if not self.cfg.quiet:
                    print(self.render(report), file=out)
                if frame.collision:
                    print("scenario ended with a collision marker", file=out)
                    break
        except KeyboardInterrupt:
            print("interrupted, flushing logs", file=out)
        finally:
            self.close()
        self.print_summary(out)
        return 0

    def print_summary(self, out=sys.stdout):
        parts = [f"frames={self.frames_done}"]
        parts += [f"{k.lower()}={v}" for k, v in self.state_counts.items()]
        if self.session.rtt_ms is not None:
            parts.append(f"rtt={self.session.rtt_ms:.1f}ms")
        if self.session.malformed_count:
            parts.append(f"malformed_downlink={self.session.malformed_count}")
        print("summary: " + " ".join(parts), file=out)

    def close(self):
        if self._report_fh is not None:
            self._report_fh.flush()
            self._report_fh.close()
            self._report_fh = None


def build_config(args) -> AgentConfig:
    cfg = AgentConfig.from_file(args.config) if args.config else AgentConfig()
    if args.source:
        cfg.source = args.source
    if args.twin:
        cfg.twin_addr = parse_addr(args.twin)
    if args.loopback:
        cfg.loopback = True
    if args.channel is not None:
        cfg.channel_spec = args.channel
    if args.report:
        cfg.report_path = args.report
    if args.realtime:
        cfg.realtime = True
    if args.max_frames is not None:
        cfg.max_frames = args.max_frames
    if args.quiet:
        cfg.quiet = True
    if args.no_color:
        cfg.use_color = False
    parse_channel_spec(cfg.channel_spec)  # validate early
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vehicle-agent",
        description="On-vehicle safety pipeline: scene source -> tracker -> telemetry uplink.",
    )
    parser.add_argument("--source", help="log:<path> or scenario:<path|builtin:name>")
    parser.add_argument("--twin", help="twin endpoint as host:port")
    parser.add_argument("--loopback", action="store_true", help="run an in-process twin")
    parser.add_argument("--channel", help="loopback channel spec (e.g. cellular, drop=0.03,...)")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--report", help="write per-frame safety reports to this JSONL file")
    parser.add_argument("--realtime", action="store_true", help="pace frames by their timestamps")
    parser.add_argument("--max-frames", type=int, default=None)
    parser.add_argument("--quiet", action="store_true", help="suppress per-frame dashboard lines")
    parser.add_argument("--no-color", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = build_config(args)
        frames = open_source(cfg.source, cfg.intrinsics)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        agent = VehicleAgent(cfg)
        return agent.run(frames)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime fault: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
