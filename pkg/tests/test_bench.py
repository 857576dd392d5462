import csv
import io
import threading

import pytest

from rissec import bench
from rissec.bench import BenchConfig, BenchRecord
from rissec.errors import VectorGateFailed

SMALL = BenchConfig(packet_sizes=(64, 1024), iterations=100, warmup=5)


@pytest.fixture(scope="module")
def records():
    return bench.run_bench(SMALL)


def test_cardinality(records):
    assert len(records) == len(SMALL.algorithms) * len(SMALL.packet_sizes) * 3


def test_model_identity(records):
    by_key = {(r.algorithm, r.packet_size, r.phase): r for r in records}
    for alg in SMALL.algorithms:
        for size in SMALL.packet_sizes:
            s, r, e = (by_key[(alg, size, p)] for p in bench.PHASES)
            assert e.median_ns - (s.median_ns + r.median_ns) == 1_000_000
            assert e.median_us - (s.median_us + r.median_us) == pytest.approx(1000.0)


def test_timing_sanity(records):
    for r in records:
        assert r.median_ns > 0
        assert r.p10_ns <= r.median_ns <= r.p90_ns
        assert r.iters == 100


def test_csv_schema_and_round_trip(records):
    data = bench.emit_csv(records)
    lines = data.decode().splitlines()
    assert lines[0] == "algorithm,packet_size,phase,median_us,p10_us,p90_us,iters"
    assert len(lines) == len(records) + 1
    assert bench.read_csv(data) == sorted(records, key=lambda r: (r.algorithm, r.packet_size, r.phase))
    rows = list(csv.DictReader(io.StringIO(data.decode())))
    keys = [(r["algorithm"], int(r["packet_size"]), r["phase"]) for r in rows]
    assert keys == sorted(keys)


def test_csv_is_deterministic(records):
    assert bench.emit_csv(records) == bench.emit_csv(list(reversed(records)))


def test_csv_single_record():
    rec = BenchRecord("aes-cmac", 64, bench.SENDER, 1234, 1000, 2001, 100)
    data = bench.emit_csv([rec])
    assert data == b"algorithm,packet_size,phase,median_us,p10_us,p90_us,iters\naes-cmac,64,sender_protect,1.234,1.000,2.001,100\n"
    assert bench.read_csv(data) == [rec]


def test_csv_requires_records():
    with pytest.raises(ValueError):
        bench.emit_csv([])


def test_json(records):
    import json
    out = json.loads(bench.emit_json(records[:3]))
    assert {"algorithm", "packet_size", "phase", "median_us", "median_ns"} <= set(out[0])


@pytest.mark.parametrize("kwargs", [
    {"iterations": 99},
    {"packet_sizes": (256, 64)},
    {"packet_sizes": ()},
    {"algorithms": ("md5",)},
    {"radio_ms": -1},
    {"warmup": -1},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        BenchConfig(**kwargs)


def test_defaults():
    cfg = BenchConfig()
    assert cfg.packet_sizes == (64, 256, 1024, 4096, 16384, 65536)
    assert (cfg.iterations, cfg.warmup, cfg.radio_ms, cfg.radio_ns) == (1000, 100, 1.0, 1_000_000)
    assert cfg.algorithms == ("hmac-sha256", "hmac-sha384", "hmac-sha3-512", "aes-cmac", "snow3g")


@pytest.mark.parametrize("alg", bench.ALGORITHMS)
@pytest.mark.parametrize("dtm", [False, True])
def test_cell_tamper_check(alg, dtm):
    import numpy as np
    cell = bench._Cell(alg, 333, BenchConfig(digest_then_mac=dtm), np.random.default_rng(0))
    assert bench.check_cell(cell)


def test_tamper_check_failure_raises(monkeypatch):
    monkeypatch.setattr(bench, "check_cell", lambda cell: False)
    with pytest.raises(VectorGateFailed):
        bench.run_bench(BenchConfig(algorithms=("snow3g",), packet_sizes=(64,), iterations=100, warmup=0))


def test_vector_gate_failure_raises(monkeypatch):
    def broken():
        raise VectorGateFailed(["SHA-256 abc"])
    monkeypatch.setattr(bench.vectors, "run_vector_gate", broken)
    with pytest.raises(VectorGateFailed):
        bench.run_bench(SMALL)


def test_digest_then_mac_labels():
    cfg = BenchConfig(algorithms=("hmac-sha256", "aes-cmac"), packet_sizes=(64,), iterations=100, warmup=0,
                      digest_then_mac=True)
    algs = {r.algorithm for r in bench.run_bench(cfg)}
    assert algs == {"hmac-sha256+digest", "aes-cmac"}


def test_refuses_parallel_runs():
    started, release = threading.Event(), threading.Event()
    cfg = BenchConfig(algorithms=("snow3g",), packet_sizes=(64,), iterations=100, warmup=0)

    def slow_progress(_):
        started.set()
        release.wait(5)

    t = threading.Thread(target=bench.run_bench, args=(cfg, slow_progress))
    t.start()
    try:
        assert started.wait(30)
        with pytest.raises(RuntimeError):
            bench.run_bench(cfg)
    finally:
        release.set()
        t.join()


def test_trend_helpers():
    recs = [BenchRecord(a, s, bench.SENDER, s * k, s * k, s * k, 100)
            for a, k in (("hmac-sha256", 1), ("hmac-sha384", 2), ("aes-cmac", 5)) for s in (64, 256, 1024)]
    assert bench.size_trend(recs, "aes-cmac") == pytest.approx(1.0)
    assert bench.hmac_band(recs) == {64: 2.0, 256: 2.0, 1024: 2.0}
