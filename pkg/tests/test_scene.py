"""Scene ingest: log replay, JSONL round-trip, scenario kinematics."""

import json
import math

import pytest

from roadtwin.geometry import CameraIntrinsics
from roadtwin.scene import (
    ActorSpec,
    Detection,
    ObjectClass,
    ParseError,
    ScenarioSpec,
    SceneFrame,
    StreamOrderError,
    builtin_scenarios,
    compensate_frame,
    frame_to_json,
    generate_scenario,
    load_scenario_spec,
    profile_distance,
    profile_speed,
    replay_log,
    spec_from_json,
    spec_to_json,
    write_log,
)

INTR = CameraIntrinsics(350.0, 0.11989, 336.0, 188.0, tilt_deg=15.0)
FLAT = CameraIntrinsics(350.0, 0.11989, 336.0, 188.0, tilt_deg=0.0)


def make_frame(i, ts, dets=()):
    return SceneFrame(
        frame_index=i, timestamp_us=ts, ego_speed_mps=8.0, ego_lat=30.0, ego_lon=31.0,
        ego_yaw_deg=0.0, detections=tuple(dets),
    )


def make_detection(object_id=1, depth=20.0):
    return Detection(
        object_id=object_id, obj_class=ObjectClass.CAR, bbox=(300.0, 150.0, 380.0, 210.0),
        confidence=0.9, depth_center_m=depth, depth_top_m=depth + 0.2, depth_bottom_m=depth + 0.1,
        depth_left_m=depth + 0.5, depth_right_m=depth - 0.5,
    )


class TestProfiles:
    def test_speed_holds_endpoints(self):
        profile = ((1.0, 4.0), (3.0, 8.0))
        assert profile_speed(profile, 0.0) == 4.0
        assert profile_speed(profile, 2.0) == 6.0
        assert profile_speed(profile, 9.0) == 8.0

    def test_distance_exact_for_linear_ramp(self):
        profile = ((0.0, 8.0), (8.0, 0.0))  # decelerate 1 m/s^2
        # closed form: 8t - t^2/2
        for t in (0.0, 0.5, 1.0, 4.0, 7.9, 8.0):
            assert profile_distance(profile, t) == pytest.approx(8 * t - t * t / 2, abs=1e-12)
        # after stopping, distance stays put
        assert profile_distance(profile, 10.0) == pytest.approx(32.0, abs=1e-12)

    def test_distance_with_held_start(self):
        profile = ((1.0, 2.0), (2.0, 4.0))
        # held 2 m/s for 1 s, then ramp: 2 + integral(2 + 2(t-1)) over [1, 1.5]
        assert profile_distance(profile, 1.5) == pytest.approx(2 + 2 * 0.5 + 0.25 / 2 * 2, abs=1e-12)


class TestLogIO:
    def test_empty_file_empty_stream(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert list(replay_log(path)) == []

    def test_identity_replay_same_ids(self, tmp_path):
        frames = [make_frame(i, i * 50_000, [make_detection(1, 20.0 + i)]) for i in range(3)]
        path = tmp_path / "log.jsonl"
        write_log(frames, path)
        got = list(replay_log(path))
        assert len(got) == 3
        assert all(f.detections[0].object_id == 1 for f in got)

    def test_round_trip_field_identity(self, tmp_path):
        spec = builtin_scenarios()["deceleration"]
        frames = list(generate_scenario(spec, INTR))
        path = tmp_path / "rt.jsonl"
        assert write_log(frames, path) == len(frames)
        assert list(replay_log(path)) == frames

    def test_classes_preserved(self, tmp_path):
        frames = list(generate_scenario(builtin_scenarios()["pedestrian"], INTR))
        path = tmp_path / "ped.jsonl"
        write_log(frames, path)
        classes = {d.obj_class for f in replay_log(path) for d in f.detections}
        assert classes == {ObjectClass.PEDESTRIAN}

    def test_parse_error_carries_line_number(self, tmp_path):
        good = json.dumps(frame_to_json(make_frame(0, 0)))
        bad = json.dumps(
            {**frame_to_json(make_frame(1, 50_000)), "detections": [
                {"object_id": 1, "class": "Car", "bbox": [400, 150, 300, 210], "confidence": 0.9}
            ]}
        )
        path = tmp_path / "bad.jsonl"
        path.write_text(good + "\n" + bad + "\n")
        with pytest.raises(ParseError) as err:
            list(replay_log(path))
        assert err.value.line_no == 2

    def test_unparseable_json_is_parse_error(self, tmp_path):
        path = tmp_path / "garbage.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(ParseError) as err:
            list(replay_log(path))
        assert err.value.line_no == 1

    def test_non_monotone_timestamps(self, tmp_path):
        frames = [make_frame(0, 100), make_frame(1, 100)]
        path = tmp_path / "order.jsonl"
        with open(path, "w") as fh:
            for f in frames:
                fh.write(json.dumps(frame_to_json(f)) + "\n")
        with pytest.raises(StreamOrderError):
            list(replay_log(path))

    def test_replay_deterministic(self, tmp_path):
        path = tmp_path / "det.jsonl"
        write_log(generate_scenario(builtin_scenarios()["constant-gap"], INTR), path)
        assert list(replay_log(path)) == list(replay_log(path))


class TestGenerator:
    def test_constant_gap(self):
        spec = ScenarioSpec(
            duration_s=2.0, ego_profile=((0.0, 8.0),),
            actors=(ActorSpec(ObjectClass.CAR, 30.0, ((0.0, 8.0),)),),
        )
        frames = list(generate_scenario(spec, FLAT))
        assert len(frames) == 40
        for f in frames:
            assert f.detections[0].depth_center_m == pytest.approx(30.0, abs=1e-12)

    def test_closing_gap_hand_value(self):
        spec = ScenarioSpec(
            duration_s=2.0, ego_profile=((0.0, 8.0),),
            actors=(ActorSpec(ObjectClass.CAR, 30.0, ((0.0, 4.0),)),),
        )
        frames = list(generate_scenario(spec, FLAT))
        # gap(t) = 30 - 4t; frame 20 is t = 1.0 s
        assert frames[20].detections[0].depth_center_m == pytest.approx(26.0, abs=1e-12)

    def test_collision_marker_at_quadratic_root(self):
        spec = ScenarioSpec(
            duration_s=10.0, ego_profile=((0.0, 8.0),),
            actors=(ActorSpec(ObjectClass.CAR, 30.0, ((0.0, 8.0), (8.0, 0.0)),),),
        )
        frames = list(generate_scenario(spec, FLAT))
        assert frames[-1].collision
        assert not frames[-1].detections
        # numeric-integration oracle: first sample time with gap <= 0
        dt, gap, t, v_e, k = 0.05, 30.0, 0.0, 8.0, 0
        steps = 0
        while True:
            v_a = max(8.0 - t, 0.0)
            next_gap = gap + (v_a - v_e) * dt + 0.5 * (max(8.0 - (t + dt), 0.0) - v_a) * dt
            steps += 1
            t += dt
            gap = next_gap
            if gap <= 0:
                break
        # analytic root of 30 - t^2/2 at sample resolution
        analytic_frame = math.ceil(math.sqrt(60.0) / dt)
        assert frames[-1].frame_index == analytic_frame
        assert abs(steps - analytic_frame) <= 1

    def test_deterministic(self):
        spec = builtin_scenarios()["deceleration"]
        a = list(generate_scenario(spec, INTR))
        b = list(generate_scenario(spec, INTR))
        assert a == b

    def test_depth_affine_in_frame_index(self):
        spec = ScenarioSpec(
            duration_s=5.0, ego_profile=((0.0, 8.0),),
            actors=(ActorSpec(ObjectClass.CAR, 40.0, ((0.0, 5.0),)),),
        )
        frames = list(generate_scenario(spec, INTR))
        ks = [f.frame_index for f in frames]
        ds = [f.detections[0].depth_center_m for f in frames]
        n = len(ks)
        k_mean = sum(ks) / n
        d_mean = sum(ds) / n
        slope = sum((k - k_mean) * (d - d_mean) for k, d in zip(ks, ds)) / sum((k - k_mean) ** 2 for k in ks)
        intercept = d_mean - slope * k_mean
        residual = max(abs(d - (slope * k + intercept)) for k, d in zip(ks, ds))
        assert residual < 1e-9

    def test_exit_despawns_actor(self):
        spec = builtin_scenarios()["deceleration"]
        frames = list(generate_scenario(spec, INTR))
        by_t = {f.frame_index: f for f in frames}
        assert by_t[139].detections  # 6.95 s, actor still present
        assert not by_t[140].detections  # 7.0 s, actor exited
        assert not frames[-1].collision

    def test_bbox_valid_for_both_classes(self):
        for name in ("deceleration", "pedestrian"):
            for frame in generate_scenario(builtin_scenarios()[name], INTR):
                for det in frame.detections:
                    u0, v0, u1, v1 = det.bbox
                    assert u0 < u1 and v0 < v1

    def test_tilt_compensation_recovers_gap(self):
        spec = builtin_scenarios()["constant-gap"]
        frame = next(iter(generate_scenario(spec, INTR)))
        raw = frame.detections[0].depth_center_m
        assert raw == pytest.approx(30.0 / math.cos(math.radians(15.0)), rel=1e-12)
        fixed = compensate_frame(frame, INTR)
        assert fixed.detections[0].depth_center_m == pytest.approx(30.0, rel=1e-12)


class TestSpecFiles:
    def test_spec_round_trip(self):
        spec = builtin_scenarios()["deceleration"]
        assert spec_from_json(spec_to_json(spec)) == spec

    def test_load_builtin_and_file(self, tmp_path):
        spec = builtin_scenarios()["pedestrian"]
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec_to_json(spec)))
        assert load_scenario_spec(str(path)) == spec
        assert load_scenario_spec("builtin:pedestrian") == spec
        with pytest.raises(ValueError):
            load_scenario_spec("builtin:nope")

    def test_invariants(self):
        with pytest.raises(ValueError):
            ScenarioSpec(duration_s=0.0, ego_profile=((0.0, 1.0),))
        with pytest.raises(ValueError):
            ScenarioSpec(duration_s=1.0, fps=0.0, ego_profile=((0.0, 1.0),))
        with pytest.raises(ValueError):
            ActorSpec(ObjectClass.CAR, 0.0, ((0.0, 1.0),))
