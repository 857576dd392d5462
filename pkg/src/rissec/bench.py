"""Timing harness for the per-packet protection chain.

Each packet goes through::

    sender:    ciphertext = AES-CTR(payload); tag = MAC(ciphertext)
    radio:     fixed delay (modelled, not slept)
    receiver:  verify MAC(ciphertext) == tag; payload = AES-CTR(ciphertext)

The MAC is the algorithm under test; encryption is AES-128-CTR throughout.
Durations are measured in integer nanoseconds so that the modelled
end-to-end time is exactly ``sender + receiver + radio``.
"""

from __future__ import annotations

import csv
import io
import json
import threading
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from rissec.crypto import vectors
from rissec.crypto.aes import Aes128, ctr_iv
from rissec.crypto.hashing import HashAlg, HmacKey, verify_tag
from rissec.crypto.snow3g import snow3g_mac
from rissec.errors import VectorGateFailed

ALGORITHMS = ("hmac-sha256", "hmac-sha384", "hmac-sha3-512", "aes-cmac", "snow3g")
HMAC_ALGORITHMS = ALGORITHMS[:3]
SERIAL_ALGORITHMS = ("aes-cmac", "snow3g")
DEFAULT_SIZES = (64, 256, 1024, 4096, 16384, 65536)

SENDER = "sender_protect"
RECEIVER = "receiver_verify"
END_TO_END = "end_to_end_model"
PHASES = (SENDER, RECEIVER, END_TO_END)

CSV_HEADER = ("algorithm", "packet_size", "phase", "median_us", "p10_us", "p90_us", "iters")
DIGEST_SUFFIX = "+digest"

_HMAC_HASH = {"hmac-sha256": HashAlg.SHA256, "hmac-sha384": HashAlg.SHA384, "hmac-sha3-512": HashAlg.SHA3_512}

# one timing run at a time; parallel cells would corrupt each other's timings
_RUN_LOCK = threading.Lock()


@dataclass(frozen=True)
class BenchConfig:
    algorithms: tuple[str, ...] = ALGORITHMS
    packet_sizes: tuple[int, ...] = DEFAULT_SIZES
    iterations: int = 1000
    warmup: int = 100
    radio_ms: float = 1.0
    mac_len: int = 8
    digest_then_mac: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "packet_sizes", tuple(self.packet_sizes))
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown or not self.algorithms:
            raise ValueError(f"unknown algorithms {unknown}; choose from {', '.join(ALGORITHMS)}")
        if self.iterations < 100:
            raise ValueError("iterations must be at least 100")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")
        if not self.packet_sizes or list(self.packet_sizes) != sorted(self.packet_sizes):
            raise ValueError("packet sizes must be non-empty and sorted ascending")
        if self.packet_sizes[0] < 1:
            raise ValueError("packet sizes must be positive")
        if self.radio_ms < 0:
            raise ValueError("radio_ms must be non-negative")
        if not 4 <= self.mac_len <= 8:
            raise ValueError("mac_len must be 4..8 (the narrowest baseline tag is 64 bits)")

    @property
    def radio_ns(self) -> int:
        return round(self.radio_ms * 1_000_000)


@dataclass(frozen=True)
class BenchRecord:
    """One (algorithm, size, phase) cell. Times are integer nanoseconds."""

    algorithm: str
    packet_size: int
    phase: str
    median_ns: int
    p10_ns: int
    p90_ns: int
    iters: int

    @property
    def median_us(self) -> float:
        return self.median_ns / 1000

    @property
    def p10_us(self) -> float:
        return self.p10_ns / 1000

    @property
    def p90_us(self) -> float:
        return self.p90_ns / 1000

    def to_json(self) -> dict:
        out = asdict(self)
        out.update(median_us=self.median_us, p10_us=self.p10_us, p90_us=self.p90_us)
        return out


class _Cell:
    """Keys, buffers and MAC closure for one (algorithm, size) pair, built outside timing."""

    def __init__(self, algorithm: str, size: int, cfg: BenchConfig, rng: np.random.Generator):
        self.key = rng.bytes(16)
        self.payload = rng.bytes(size)
        self.aes = Aes128(self.key)
        self.iv = ctr_iv(1, 0)
        self.ct = np.empty(size, dtype=np.uint8)
        self.pt = np.empty(size, dtype=np.uint8)
        self.mac = _mac_function(algorithm, self.key, cfg.mac_len, cfg.digest_then_mac)
        self.tag = b""

    def sender(self):
        ct = self.aes.ctr(self.iv, self.payload, out=self.ct)
        self.tag = self.mac(ct)

    def receiver(self) -> bool:
        ok = verify_tag(self.mac(self.ct), self.tag)
        self.aes.ctr(self.iv, self.ct, out=self.pt)
        return ok


def _mac_function(algorithm: str, key: bytes, mac_len: int, digest_then_mac: bool):
    if algorithm in _HMAC_HASH:
        alg = _HMAC_HASH[algorithm]
        hk = HmacKey(alg, key)
        if digest_then_mac:
            return lambda data: hk.digest(alg.new(data).digest())[:mac_len]
        return lambda data: hk.digest(data)[:mac_len]
    if algorithm == "aes-cmac":
        a = Aes128(key)
        return lambda data: a.cmac(data, mac_len)
    if algorithm == "snow3g":
        return lambda data: snow3g_mac(key, 1, 0, data, mac_len=mac_len)
    raise ValueError(algorithm)


def _stats(samples: np.ndarray) -> tuple[int, int, int]:
    """Nearest-rank median, p10 and p90 of integer samples."""
    s = np.sort(samples)
    n = s.size

    def rank(q):
        return int(s[min(n - 1, max(0, int(np.ceil(q * n)) - 1))])

    return rank(0.5), rank(0.1), rank(0.9)


def _time(fn, iterations: int, warmup: int) -> np.ndarray:
    for _ in range(warmup):
        fn()
    clock = time.perf_counter_ns
    samples = np.empty(iterations, dtype=np.int64)
    for i in range(iterations):
        t0 = clock()
        fn()
        samples[i] = clock() - t0
    # a zero reading only means the timer resolution was too coarse
    np.maximum(samples, 1, out=samples)
    return samples


def check_cell(cell: _Cell) -> bool:
    """Untampered packet verifies, a one-bit flip does not, and decryption round-trips."""
    cell.sender()
    if not cell.receiver() or cell.pt.tobytes() != cell.payload:
        return False
    cell.ct[len(cell.payload) // 2] ^= 0x01
    tampered_ok = cell.receiver()
    cell.ct[len(cell.payload) // 2] ^= 0x01
    return not tampered_ok


def algorithm_label(algorithm: str, cfg: BenchConfig) -> str:
    if cfg.digest_then_mac and algorithm in HMAC_ALGORITHMS:
        return algorithm + DIGEST_SUFFIX
    return algorithm


def run_bench(cfg: BenchConfig = BenchConfig(), progress=None) -> list[BenchRecord]:
    """Time every (algorithm, size) cell; three records per cell.

    Raises VectorGateFailed if a primitive misses a published vector or a
    cell fails its tamper check. ``progress`` is called with each finished
    cell's sender record, if given.
    """
    if not _RUN_LOCK.acquire(blocking=False):
        raise RuntimeError("a benchmark is already running; cells must not run in parallel")
    try:
        vectors.warm_up()
        vectors.run_vector_gate()
        rng = np.random.default_rng(cfg.seed)
        records = []
        for algorithm in cfg.algorithms:
            label = algorithm_label(algorithm, cfg)
            for size in cfg.packet_sizes:
                cell = _Cell(algorithm, size, cfg, rng)
                if not check_cell(cell):
                    raise VectorGateFailed([f"{label} at {size} octets: tamper check failed"])
                s = _stats(_time(cell.sender, cfg.iterations, cfg.warmup))
                r = _stats(_time(cell.receiver, cfg.iterations, cfg.warmup))
                e = tuple(a + b + cfg.radio_ns for a, b in zip(s, r))
                cell_records = [BenchRecord(label, size, phase, *v, cfg.iterations)
                                for phase, v in ((SENDER, s), (RECEIVER, r), (END_TO_END, e))]
                records.extend(cell_records)
                if progress is not None:
                    progress(cell_records[0])
        return records
    finally:
        _RUN_LOCK.release()


def _fmt_us(ns: int) -> str:
    # exact decimal rendering of an integer ns count, independent of locale
    sign = "-" if ns < 0 else ""
    ns = abs(ns)
    return f"{sign}{ns // 1000}.{ns % 1000:03d}"


def _sort_key(r: BenchRecord):
    return r.algorithm, r.packet_size, r.phase


def emit_csv(records) -> bytes:
    records = sorted(records, key=_sort_key)
    if not records:
        raise ValueError("no records to write")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.algorithm, r.packet_size, r.phase, _fmt_us(r.median_ns), _fmt_us(r.p10_ns),
                    _fmt_us(r.p90_ns), r.iters])
    return buf.getvalue().encode("ascii")


def _parse_us(text: str) -> int:
    whole, _, frac = text.partition(".")
    sign = -1 if whole.startswith("-") else 1
    return sign * (abs(int(whole)) * 1000 + int((frac + "000")[:3]))


def read_csv(data: bytes) -> list[BenchRecord]:
    rows = csv.DictReader(io.StringIO(data.decode("ascii")))
    if tuple(rows.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected header {rows.fieldnames}")
    return [BenchRecord(row["algorithm"], int(row["packet_size"]), row["phase"], _parse_us(row["median_us"]),
                        _parse_us(row["p10_us"]), _parse_us(row["p90_us"]), int(row["iters"]))
            for row in rows]


def emit_json(records) -> str:
    return json.dumps([r.to_json() for r in sorted(records, key=_sort_key)], indent=2)


def median_table(records, phase: str = SENDER) -> dict[str, dict[int, int]]:
    """``{algorithm: {size: median_ns}}`` for one phase."""
    out: dict[str, dict[int, int]] = {}
    for r in records:
        if r.phase == phase:
            out.setdefault(r.algorithm, {})[r.packet_size] = r.median_ns
    return out


def size_trend(records, algorithm: str, phase: str = SENDER) -> float:
    """Spearman rank correlation between packet size and median time."""
    row = median_table(records, phase)[algorithm]
    sizes = sorted(row)
    if len(sizes) < 2:
        raise ValueError("need at least two sizes for a trend")
    rho = stats.spearmanr(sizes, [row[s] for s in sizes]).statistic
    return float(rho)


def hmac_band(records, phase: str = SENDER) -> dict[int, float]:
    """Per size, the ratio between the slowest and fastest HMAC median."""
    table = median_table(records, phase)
    names = [a for a in table if a.split(DIGEST_SUFFIX)[0] in HMAC_ALGORITHMS]
    sizes = sorted(set.intersection(*(set(table[a]) for a in names))) if names else []
    return {s: max(table[a][s] for a in names) / min(table[a][s] for a in names) for s in sizes}
