"""Time the protection chain across packet sizes and print the sender medians.

A shorter run than the default harness; pass --full for the default config.

    python3 demos/benchmark_trend.py [--full]
"""

import sys

from rissec import bench

if "--full" in sys.argv:
    cfg = bench.BenchConfig()
else:
    cfg = bench.BenchConfig(packet_sizes=(64, 1024, 16384, 65536), iterations=200, warmup=20)

records = bench.run_bench(cfg)
table = bench.median_table(records)
sizes = cfg.packet_sizes

print(f"{'sender median (us)':<20}" + "".join(f"{s:>11}" for s in sizes) + "   spearman")
for alg, row in table.items():
    rho = bench.size_trend(records, alg)
    print(f"{alg:<20}" + "".join(f"{row[s] / 1000:>11.2f}" for s in sizes) + f"   {rho:8.3f}")

band = bench.hmac_band(records)
print("\nslowest/fastest HMAC per size:", {s: round(r, 2) for s, r in band.items()})

with open("bench_results.csv", "wb") as fh:
    fh.write(bench.emit_csv(records))
print("wrote bench_results.csv")
