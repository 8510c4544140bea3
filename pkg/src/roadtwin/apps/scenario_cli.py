"""scenario: synthesize deterministic fixtures from a scenario spec.

Writes three files into --out: the resolved spec (spec.json), the scene
log the detector/depth stack would have produced (scene.jsonl), and the
safety reports a default-configured agent computes from it
(expected_report.jsonl). The fixtures are deterministic, so downstream
tests can diff against them.
"""

import argparse
import json
import sys
from pathlib import Path

from ..scene import compensate_frame, generate_scenario, load_scenario_spec, spec_to_json, write_log
from ..tracker import ObjectTracker, report_to_json
from .config import DEFAULT_INTRINSICS


def run(spec_source: str, out_dir: str, intrinsics=DEFAULT_INTRINSICS) -> dict:
    spec = load_scenario_spec(spec_source)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    frames = list(generate_scenario(spec, intrinsics))
    write_log(frames, out / "scene.jsonl")

    tracker = ObjectTracker(intr=intrinsics)
    with open(out / "expected_report.jsonl", "w", encoding="utf-8") as fh:
        for frame in frames:
            report = tracker.update(compensate_frame(frame, intrinsics))
            fh.write(json.dumps(report_to_json(report)) + "\n")

    with open(out / "spec.json", "w", encoding="utf-8") as fh:
        json.dump(spec_to_json(spec), fh, indent=2)
        fh.write("\n")

    return {
        "frames": len(frames),
        "collision": any(f.collision for f in frames),
        "files": ["spec.json", "scene.jsonl", "expected_report.jsonl"],
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scenario",
        description="Write deterministic scene-log and report fixtures for a scenario spec.",
    )
    parser.add_argument("--spec", required=True, help="spec JSON path or builtin:<name>")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    try:
        summary = run(args.spec, args.out)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {summary['frames']} frames to {args.out} "
        f"({'collision marker' if summary['collision'] else 'no collision'})"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
