#!/usr/bin/env python3
"""Throughput comparison: compiled codec vs pure-Python fallback.

Builds a mixed corpus of realistic messages, then times encode, decode,
and a random-bytes rejection path for each implementation present.

    python benchmarks/bench_codec.py [--messages 20000] [--fuzz 200000]
"""

import argparse
import random
import time

from roadtwin.protocol import _codec_py
from roadtwin.protocol.errors import DecodeError
from roadtwin.protocol.messages import (
    HeartbeatMessage,
    OperatorMessage,
    TelemetryMessage,
    TelemetryObject,
    as_f32,
)

try:
    from roadtwin.protocol import _codec as _codec_c
except ImportError:
    _codec_c = None


def build_corpus(n: int) -> list:
    rng = random.Random(0xC0DEC)
    corpus = []
    for i in range(n):
        pick = i % 10
        if pick < 6:  # telemetry dominates the real link
            objects = tuple(
                TelemetryObject(
                    object_id=rng.randrange(1, 50),
                    class_code=rng.choice((1, 2)),
                    rel_x=as_f32(rng.uniform(-20, 20)),
                    rel_y=as_f32(rng.uniform(-2, 2)),
                    rel_z=as_f32(rng.uniform(1, 100)),
                    abs_speed_mps=as_f32(rng.uniform(0, 40)),
                    yaw_deg=as_f32(rng.choice((0.0, 90.0, 180.0, 270.0))),
                    ttc_s=as_f32(rng.uniform(0.3, 200)),
                    thw_s=as_f32(rng.uniform(0.1, 60)),
                    state=rng.randrange(3),
                )
                for _ in range(rng.randint(0, 4))
            )
            corpus.append(TelemetryMessage(
                seq=i, timestamp_us=i * 50_000, ego_lat=30.0 + i * 1e-7, ego_lon=31.0,
                ego_yaw_deg=0.0, ego_speed_mps=8.0, objects=objects,
            ))
        elif pick < 8:
            corpus.append(OperatorMessage(seq=i, timestamp_us=i, severity=1,
                                          state_override=0, text="road hazard ahead"))
        else:
            corpus.append(HeartbeatMessage(seq=i, timestamp_us=i))
    return corpus


def bench(label: str, fn, items) -> float:
    t0 = time.perf_counter()
    for item in items:
        fn(item)
    dt = time.perf_counter() - t0
    rate = len(items) / dt
    print(f"  {label:<26s} {dt * 1000:8.1f} ms  {rate / 1000:9.1f} k ops/s")
    return rate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--messages", type=int, default=20_000)
    parser.add_argument("--fuzz", type=int, default=200_000)
    args = parser.parse_args()

    corpus = build_corpus(args.messages)
    wire = [_codec_py.encode_message(m) for m in corpus]
    fuzz_rng = random.Random(7)
    garbage = [fuzz_rng.randbytes(fuzz_rng.randrange(0, 64)) for _ in range(args.fuzz)]

    impls = [("pure python", _codec_py)]
    if _codec_c is not None:
        impls.append(("cython", _codec_c))
    else:
        print("note: compiled codec not built; benchmarking the fallback only")

    rates: dict[str, dict[str, float]] = {}
    for name, impl in impls:
        print(f"{name}:")
        rates[name] = {
            "encode": bench("encode", impl.encode_message, corpus),
            "decode": bench("decode", impl.decode_message, wire),
        }

        def reject(data, _decode=impl.decode_message):
            try:
                _decode(data)
            except DecodeError:
                pass

        rates[name]["reject"] = bench("reject random bytes", reject, garbage)

    if len(rates) == 2:
        print("speedup (cython / pure python):")
        for op in ("encode", "decode", "reject"):
            print(f"  {op:<26s} {rates['cython'][op] / rates['pure python'][op]:6.2f}x")


if __name__ == "__main__":
    main()
