"""Entity store: spawn/update/remove lifecycle, seq gate, snapshots, alerts."""

import math
import random
import threading

import pytest

from roadtwin.geometry import CameraPoint, EulerZXY, GeoOrigin, geo_to_local, relative_to_world
from roadtwin.protocol import EncodeError, TelemetryMessage, TelemetryObject, as_f32
from roadtwin.tracker import SafetyState, TrackerConfig, classify
from roadtwin.twin import EntityStore, out_of_order_filter

ORIGIN = GeoOrigin(30.0, 31.0)


def obj(object_id, ttc=math.inf, thw=math.inf, rel=(0.0, 0.0, 20.0), speed=5.0):
    return TelemetryObject(
        object_id=object_id, class_code=1, rel_x=rel[0], rel_y=rel[1], rel_z=rel[2],
        abs_speed_mps=speed, yaw_deg=0.0, ttc_s=ttc, thw_s=thw, state=0,
    )


def telemetry(seq, objects, lat=30.0, lon=31.0, yaw=0.0, speed=8.0):
    return TelemetryMessage(
        seq=seq, timestamp_us=seq * 50_000, ego_lat=lat, ego_lon=lon,
        ego_yaw_deg=yaw, ego_speed_mps=speed, objects=tuple(objects),
    )


class TestOutOfOrderFilter:
    def test_forward_accepts(self):
        assert out_of_order_filter(10, 11)

    def test_backward_drops(self):
        assert not out_of_order_filter(11, 10)

    def test_duplicate_drops(self):
        assert not out_of_order_filter(10, 10)

    def test_wraparound_accepts(self):
        assert out_of_order_filter(2**32 - 1, 0)
        assert out_of_order_filter(2**32 - 5, 3)

    def test_half_window_boundary(self):
        assert out_of_order_filter(0, 2**31 - 1)
        assert not out_of_order_filter(0, 2**31)

    def test_first_message_always_accepted(self):
        assert out_of_order_filter(None, 12345)


class TestLifecycle:
    def test_spawn_then_update(self):
        store = EntityStore(origin=ORIGIN)
        diff = store.apply_telemetry(telemetry(0, [obj(1), obj(2)]), recv_ts_ms=0.0)
        assert diff.spawned == (1, 2) and diff.updated == () and diff.removed == ()
        diff = store.apply_telemetry(telemetry(1, [obj(1), obj(2)]), recv_ts_ms=50.0)
        assert diff.spawned == () and sorted(diff.updated) == [1, 2]

    def test_removal_after_ttl(self):
        store = EntityStore(origin=ORIGIN, entity_ttl_ms=1000.0)
        store.apply_telemetry(telemetry(0, [obj(1)]), recv_ts_ms=0.0)
        diff = store.apply_telemetry(telemetry(1, [obj(2)]), recv_ts_ms=500.0)
        assert diff.removed == ()
        diff = store.apply_telemetry(telemetry(2, [obj(2)]), recv_ts_ms=1400.0)
        assert diff.removed == (1,)
        assert store.entity_ids() == (2,)

    def test_diff_lists_disjoint(self):
        rng = random.Random(21)
        store = EntityStore(origin=ORIGIN, entity_ttl_ms=300.0)
        ts = 0.0
        for seq in range(200):
            ts += rng.uniform(10.0, 120.0)
            ids = rng.sample(range(1, 10), rng.randint(0, 4))
            diff = store.apply_telemetry(telemetry(seq, [obj(i) for i in ids]), recv_ts_ms=ts)
            sets = [set(diff.spawned), set(diff.updated), set(diff.removed)]
            assert sets[0] & sets[1] == set()
            assert sets[0] & sets[2] == set()
            assert sets[1] & sets[2] == set()

    def test_final_set_matches_last_seen_oracle(self):
        rng = random.Random(22)
        store = EntityStore(origin=ORIGIN, entity_ttl_ms=400.0)
        last_seen: dict[int, float] = {}
        ts = 0.0
        for seq in range(300):
            ts += rng.uniform(5.0, 90.0)
            ids = rng.sample(range(1, 14), rng.randint(0, 5))
            store.apply_telemetry(telemetry(seq, [obj(i) for i in ids]), recv_ts_ms=ts)
            for i in ids:
                last_seen[i] = ts
        expected = {i for i, seen in last_seen.items() if ts - seen <= 400.0}
        assert set(store.entity_ids()) == expected

    def test_replay_determinism(self):
        rng = random.Random(23)
        log = []
        ts = 0.0
        for seq in range(100):
            ts += rng.uniform(10.0, 100.0)
            ids = rng.sample(range(1, 8), rng.randint(0, 3))
            log.append((telemetry(seq, [obj(i) for i in ids]), ts))

        def run():
            store = EntityStore(origin=ORIGIN, entity_ttl_ms=500.0)
            for msg, recv in log:
                store.apply_telemetry(msg, recv)
            return store.snapshot(now_ms=ts)

        assert run() == run()

    def test_expire_pass_without_traffic(self):
        store = EntityStore(origin=ORIGIN, entity_ttl_ms=100.0)
        store.apply_telemetry(telemetry(0, [obj(1)]), recv_ts_ms=0.0)
        assert store.expire(now_ms=50.0).removed == ()
        assert store.expire(now_ms=101.0).removed == (1,)


class TestPlacementAndState:
    def test_world_position_matches_geometry_module(self):
        store = EntityStore(origin=ORIGIN)
        msg = telemetry(0, [obj(1, rel=(1.5, -0.25, 22.0))], lat=30.001, lon=31.002, yaw=30.0)
        store.apply_telemetry(msg, recv_ts_ms=0.0)
        entity = store.snapshot(now_ms=0.0).entities[0]
        ego = geo_to_local(30.001, 31.002, ORIGIN)
        expected = relative_to_world(ego, EulerZXY(0, 0, math.radians(30.0)), CameraPoint(1.5, -0.25, 22.0))
        assert entity.world_pos.x == pytest.approx(expected.x, abs=1e-6)
        assert entity.world_pos.y == pytest.approx(expected.y, abs=1e-6)
        assert entity.world_pos.z == pytest.approx(expected.z, abs=1e-6)

    def test_offset_sign_switch(self):
        store = EntityStore(origin=ORIGIN, offset_sign_positive=True)
        store.apply_telemetry(telemetry(0, [obj(1, rel=(0.0, 0.0, 10.0))]), recv_ts_ms=0.0)
        entity = store.snapshot(now_ms=0.0).entities[0]
        ego = geo_to_local(30.0, 31.0, ORIGIN)
        assert entity.world_pos.z == pytest.approx(ego.z + 10.0)

    def test_state_recomputed_from_metrics(self):
        store = EntityStore(origin=ORIGIN)
        msg = telemetry(0, [obj(1, ttc=2.0), obj(2, ttc=1.0), obj(3)])
        store.apply_telemetry(msg, recv_ts_ms=0.0)
        by_id = {e.object_id: e for e in store.snapshot(now_ms=0.0).entities}
        assert by_id[1].state is SafetyState.HAZARDOUS
        assert by_id[2].state is SafetyState.DANGEROUS
        assert by_id[3].state is SafetyState.SAFE

    def test_twin_state_matches_vehicle_state_through_f32(self):
        rng = random.Random(31)
        cfg = TrackerConfig()
        store = EntityStore(origin=ORIGIN, thresholds=cfg)
        for seq in range(500):
            ttc = math.inf if rng.random() < 0.3 else rng.uniform(0.2, 8.0)
            thw = math.inf if rng.random() < 0.3 else rng.uniform(0.1, 5.0)
            vehicle_state = classify(as_f32(ttc), as_f32(thw), cfg)
            msg = telemetry(seq, [obj(1, ttc=as_f32(ttc), thw=as_f32(thw))])
            store.apply_telemetry(msg, recv_ts_ms=float(seq))
            entity = store.snapshot(now_ms=float(seq)).entities[0]
            assert entity.state == vehicle_state

    def test_stale_marking_after_missed_period(self):
        store = EntityStore(origin=ORIGIN, stale_after_ms=150.0)
        store.apply_telemetry(telemetry(0, [obj(1)]), recv_ts_ms=0.0)
        assert not store.snapshot(now_ms=100.0).entities[0].stale
        assert store.snapshot(now_ms=200.0).entities[0].stale


class TestSnapshots:
    def test_ids_sorted_and_ego_only_when_empty(self):
        store = EntityStore(origin=ORIGIN)
        snap = store.snapshot(now_ms=0.0)
        assert snap.entities == ()
        store.apply_telemetry(telemetry(0, [obj(5), obj(2), obj(9)]), recv_ts_ms=0.0)
        assert [e.object_id for e in store.snapshot(now_ms=0.0).entities] == [2, 5, 9]

    def test_snapshot_never_tears(self):
        store = EntityStore(origin=ORIGIN, entity_ttl_ms=10_000.0)
        stop = threading.Event()
        errors = []

        def writer():
            seq = 0
            while not stop.is_set():
                speed = float(seq % 97)
                msg = telemetry(seq, [obj(i, speed=speed) for i in (1, 2, 3)])
                store.apply_telemetry(msg, recv_ts_ms=float(seq))
                seq += 1

        def reader():
            while not stop.is_set():
                snap = store.snapshot()
                speeds = {e.abs_speed_mps for e in snap.entities}
                if len(speeds) > 1:
                    errors.append(speeds)

        threads = [threading.Thread(target=writer)] + [threading.Thread(target=reader) for _ in range(3)]
        for t in threads:
            t.start()
        import time

        time.sleep(0.4)
        stop.set()
        for t in threads:
            t.join()
        assert errors == []


class TestAlertQueue:
    def test_stamps_sequential_and_bounded(self):
        store = EntityStore(origin=ORIGIN)
        for i in range(9):
            msg = store.enqueue_operator_alert(1, 0, f"alert {i}")
            assert msg.seq == i
        drained = store.drain_alerts()
        assert [m.text for m in drained] == [f"alert {i}" for i in range(1, 9)]
        assert store.drain_alerts() == []

    def test_oversize_text_rejected(self):
        store = EntityStore(origin=ORIGIN)
        with pytest.raises(EncodeError):
            store.enqueue_operator_alert(2, 3, "x" * 513)

    def test_seq_gate(self):
        store = EntityStore(origin=ORIGIN)
        assert store.accept_seq(0)
        assert store.accept_seq(1)
        assert not store.accept_seq(1)
        assert not store.accept_seq(0)
        assert store.accept_seq(5)
