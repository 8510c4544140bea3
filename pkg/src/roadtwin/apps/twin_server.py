"""twin-server: protocol endpoint + entity store + operator HTTP/WebSocket API.

A UDP ingest thread feeds the entity store; FastAPI serves the operator
surface: GET /api/snapshot, GET /api/stats, POST /api/alert, and
WebSocket /ws/snapshots pushing the live scene at the configured rate.
"""

import argparse
import asyncio
import math
import sys
import threading
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from ..protocol import (
    OVERRIDE_DANGEROUS,
    OVERRIDE_HAZARDOUS,
    OVERRIDE_NONE,
    OVERRIDE_SAFE,
    SEVERITY_INFO,
    SEVERITY_RECALL,
    SEVERITY_WARNING,
    UdpTransport,
)
from ..protocol.transport import wall_us
from ..tracker import format_metric
from ..twin import Snapshot
from .config import ServerConfig, parse_addr
from .runtime import TwinRuntime

_SEVERITIES = {"info": SEVERITY_INFO, "warning": SEVERITY_WARNING, "recall": SEVERITY_RECALL}
_OVERRIDES = {
    "none": OVERRIDE_NONE,
    "safe": OVERRIDE_SAFE,
    "hazardous": OVERRIDE_HAZARDOUS,
    "dangerous": OVERRIDE_DANGEROUS,
}


def _metric_json(value: float):
    return None if math.isinf(value) or math.isnan(value) else value


def snapshot_to_json(snap: Snapshot) -> dict:
    """JSON-safe snapshot; infinite metrics become null plus display strings."""
    return {
        "taken_at_ms": snap.taken_at_ms,
        "ego": {
            "x": snap.ego.world_pos.x,
            "y": snap.ego.world_pos.y,
            "lat": snap.ego.lat,
            "lon": snap.ego.lon,
            "yaw_deg": snap.ego.yaw_deg,
            "speed_mps": snap.ego.speed_mps,
            "connected": snap.ego.connected,
        },
        "entities": [
            {
                "id": e.object_id,
                "class": e.obj_class.value,
                "x": e.world_pos.x,
                "y": e.world_pos.y,
                "z": e.world_pos.z,
                "rel_x": e.rel_x,
                "rel_y": e.rel_y,
                "rel_z": e.rel_z,
                "yaw_deg": e.yaw_deg,
                "abs_speed_mps": e.abs_speed_mps,
                "ttc_s": _metric_json(e.ttc_s),
                "thw_s": _metric_json(e.thw_s),
                "ttc": format_metric(e.ttc_s),
                "thw": format_metric(e.thw_s),
                "state": e.state.label,
                "stale": e.stale,
            }
            for e in snap.entities
        ],
        "stats": None
        if snap.stats is None
        else {
            "latency_min_ms": snap.stats.latency_min_ms,
            "latency_max_ms": snap.stats.latency_max_ms,
            "latency_mean_ms": snap.stats.latency_mean_ms,
            "latency_std_ms": snap.stats.latency_std_ms,
            "loss_rate": snap.stats.loss_rate,
            "sent_estimate": snap.stats.sent_estimate,
            "received": snap.stats.received,
        },
    }


class AlertBody(BaseModel):
    severity: str = Field(default="info")
    override: str = Field(default="none")
    text: str = Field(default="", max_length=2048)


def build_app(runtime: TwinRuntime, push_hz: float = 10.0) -> FastAPI:
    app = FastAPI(title="roadtwin twin-server")

    @app.get("/api/snapshot")
    def get_snapshot():
        return snapshot_to_json(runtime.store.snapshot(now_ms=wall_us() / 1000.0))

    @app.get("/api/stats")
    def get_stats():
        from ..protocol import NoData, compute_stats

        doc = {}
        try:
            stats = compute_stats(runtime.reception)
            doc = {
                "latency_min_ms": stats.latency_min_ms,
                "latency_max_ms": stats.latency_max_ms,
                "latency_mean_ms": stats.latency_mean_ms,
                "latency_std_ms": stats.latency_std_ms,
                "loss_rate": stats.loss_rate,
                "sent_estimate": stats.sent_estimate,
                "received": stats.received,
            }
        except NoData:
            pass
        doc.update(
            {
                "connected": runtime.session.connected(),
                "decode_errors": runtime.session.decode_errors,
                "stale_drops": runtime.stale_drops,
                "telemetry_count": runtime.session.telemetry_count,
            }
        )
        return doc

    @app.post("/api/alert")
    def post_alert(body: AlertBody):
        severity = _SEVERITIES.get(body.severity.lower())
        override = _OVERRIDES.get(body.override.lower())
        if severity is None or override is None:
            return {"ok": False, "error": f"bad severity/override: {body.severity}/{body.override}"}
        if len(body.text.encode("utf-8")) > 512:
            return {"ok": False, "error": "text exceeds 512 UTF-8 bytes"}
        msg = runtime.store.enqueue_operator_alert(severity, override, body.text)
        runtime.send_pending_alerts(wall_us)
        return {"ok": True, "seq": msg.seq}

    @app.websocket("/ws/snapshots")
    async def ws_snapshots(ws: WebSocket):
        await ws.accept()
        period = 1.0 / push_hz
        try:
            while True:
                await ws.send_json(snapshot_to_json(runtime.store.snapshot(now_ms=wall_us() / 1000.0)))
                await asyncio.sleep(period)
        except (WebSocketDisconnect, RuntimeError):
            return

    return app


class TwinServer:
    """Owns the ingest thread and the runtime; HTTP serving is separate."""

    def __init__(self, cfg: ServerConfig, stats_log_period_s: float = 10.0):
        self.cfg = cfg
        self.stats_log_period_s = stats_log_period_s
        self.transport = UdpTransport(bind_addr=cfg.listen_addr)
        self.runtime = TwinRuntime(
            self.transport,
            origin=cfg.origin,
            thresholds=cfg.thresholds,
            entity_ttl_ms=cfg.entity_ttl_ms,
            offset_sign_positive=cfg.offset_sign_positive,
        )
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def udp_addr(self):
        return self.transport.local_addr

    def start(self):
        self._thread = threading.Thread(target=self._ingest_loop, name="twin-ingest", daemon=True)
        self._thread.start()

    def _ingest_loop(self):
        from ..protocol import NoData, compute_stats

        last_expire = time.monotonic()
        last_stats_log = time.monotonic()
        while not self._stop.is_set():
            for data, addr, recv_ts in self.transport.poll(timeout_s=0.05):
                self.runtime.session.handle_datagram(data, addr, recv_ts)
            self.runtime.send_pending_alerts(wall_us)
            self.runtime.store.set_connected(self.runtime.session.connected())
            if time.monotonic() - last_expire > 0.25:
                self.runtime.store.expire(wall_us() / 1000.0)
                self.runtime.pump()
                last_expire = time.monotonic()
            if time.monotonic() - last_stats_log > self.stats_log_period_s:
                last_stats_log = time.monotonic()
                try:
                    stats = compute_stats(self.runtime.reception)
                except NoData:
                    continue
                print(
                    f"link: received {stats.received}/{stats.sent_estimate} "
                    f"loss {stats.loss_rate * 100:.2f}% latency "
                    f"{stats.latency_mean_ms:.1f}±{stats.latency_std_ms:.1f} ms "
                    f"[{stats.latency_min_ms:.1f}, {stats.latency_max_ms:.1f}]",
                    flush=True,
                )

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
        self.transport.close()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="twin-server",
        description="Digital-twin endpoint: telemetry ingest, entity store, operator API.",
    )
    parser.add_argument("--listen", default="0.0.0.0:47800", help="UDP ingest address host:port")
    parser.add_argument("--http", default="127.0.0.1:8400", help="HTTP/WebSocket API address host:port")
    parser.add_argument("--origin", help="tangent-plane origin as lat,lon")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--offset-sign", choices=["literal", "positive"], default=None,
                        help="world placement of relative offsets (default literal)")
    args = parser.parse_args(argv)

    try:
        cfg = ServerConfig.from_file(args.config) if args.config else ServerConfig()
        cfg.listen_addr = parse_addr(args.listen)
        cfg.http_addr = parse_addr(args.http)
        if args.origin:
            lat, lon = (float(v) for v in args.origin.split(","))
            from ..geometry import GeoOrigin

            cfg.origin = GeoOrigin(lat, lon)
        if args.offset_sign is not None:
            cfg.offset_sign_positive = args.offset_sign == "positive"
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        server = TwinServer(cfg)
        server.start()
        app = build_app(server.runtime, push_hz=cfg.snapshot_push_hz)
        import uvicorn

        print(f"twin-server: udp on {server.udp_addr}, http on {cfg.http_addr}")
        uvicorn.run(app, host=cfg.http_addr[0], port=cfg.http_addr[1], log_level="warning")
    except KeyboardInterrupt:
        pass
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime fault: {exc}", file=sys.stderr)
        return 2
    finally:
        try:
            server.stop()
        except UnboundLocalError:
            pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
