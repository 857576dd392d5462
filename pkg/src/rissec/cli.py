"""Command-line entry points: ``rissim`` and ``risbench``."""

from __future__ import annotations

import argparse
import sys

from rissec import bench, simnet
from rissec.errors import VectorGateFailed


def _csv_list(cast):
    def parse(text: str):
        try:
            return tuple(cast(x.strip()) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def rissim(argv=None) -> int:
    p = argparse.ArgumentParser(prog="rissim", description="Run a standard protocol scenario.")
    p.add_argument("--scenario", help="scenario name (see --list)")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--transcript", metavar="PATH", help="write the frame transcript as JSON lines")
    p.add_argument("--list", action="store_true", help="list scenario names and exit")
    args = p.parse_args(argv)

    if args.list:
        for name in simnet.SCENARIOS:
            print(name)
        return 0
    if args.scenario not in simnet.SCENARIOS:
        p.error(f"--scenario must be one of: {', '.join(simnet.SCENARIOS)}")

    t = simnet.run_scenario(simnet.build_scenario(args.scenario, args.seed))
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            fh.write(t.to_jsonl())
    for e in t.entries:
        event = e.event.label if e.event is not None else "-"
        print(f"{e.t_us:>8} us  #{e.index:<3} {e.direction} link{e.link} {e.verdict:<9} {len(e.frame):>4} B  {event}")
    print(f"final events: {t.final_events()}")
    print(f"expected:     {t.expected}")
    print("MATCH" if t.matched else "MISMATCH")
    return 0 if t.matched else 1


def risbench(argv=None) -> int:
    p = argparse.ArgumentParser(prog="risbench", description="Time the per-packet protection chain.")
    p.add_argument("--alg", type=_csv_list(str), default=bench.ALGORITHMS,
                   help=f"comma-separated subset of {','.join(bench.ALGORITHMS)}")
    p.add_argument("--sizes", type=_csv_list(int), default=bench.DEFAULT_SIZES, help="packet sizes in octets")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--radio-ms", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--digest-then-mac", action="store_true",
                   help="HMAC a digest of the packet instead of the packet itself")
    p.add_argument("--out", metavar="PATH", default="results.csv")
    p.add_argument("--json", action="store_true", help="also print the records as JSON")
    args = p.parse_args(argv)

    try:
        cfg = bench.BenchConfig(args.alg, tuple(sorted(args.sizes)), args.iters, args.warmup, args.radio_ms,
                                digest_then_mac=args.digest_then_mac, seed=args.seed)
    except ValueError as exc:
        p.error(str(exc))

    def progress(r):
        print(f"{r.algorithm:<20} {r.packet_size:>6} B  sender median {r.median_us:10.3f} us", file=sys.stderr)

    try:
        records = bench.run_bench(cfg, progress)
    except VectorGateFailed as exc:
        print(f"vector gate failed: {exc}", file=sys.stderr)
        return 2
    with open(args.out, "wb") as fh:
        fh.write(bench.emit_csv(records))
    if args.json:
        print(bench.emit_json(records))
    return 0


if __name__ == "__main__":
    sys.exit(rissim())
