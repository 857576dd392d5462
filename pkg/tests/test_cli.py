import json

import pytest

from rissec import bench, cli, simnet
from rissec.errors import VectorGateFailed


def test_rissim_list(capsys):
    assert cli.rissim(["--list"]) == 0
    assert capsys.readouterr().out.split() == list(simnet.SCENARIOS)


def test_rissim_runs_and_writes_transcript(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert cli.rissim(["--scenario", "replay-command", "--seed", "18446744073709551615",
                       "--transcript", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert all(json.loads(x)["frame"] for x in lines)
    assert "MATCH" in capsys.readouterr().out


def test_rissim_mismatch_exit_code(monkeypatch):
    monkeypatch.setattr(simnet, "golden_events", lambda name: ["Authenticated"])
    assert cli.rissim(["--scenario", "happy"]) == 1


def test_rissim_rejects_bad_arguments():
    with pytest.raises(SystemExit):
        cli.rissim(["--scenario", "nope"])
    with pytest.raises(SystemExit):
        cli.rissim(["--scenario", "happy", "--seed", str(2**64)])


def test_risbench_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = cli.risbench(["--alg", "aes-cmac,snow3g", "--sizes", "128,64", "--iters", "100", "--warmup", "0",
                         "--radio-ms", "2", "--out", str(out), "--json"])
    assert code == 0
    records = bench.read_csv(out.read_bytes())
    assert len(records) == 2 * 2 * 3
    e2e = {(r.algorithm, r.packet_size): r for r in records if r.phase == bench.END_TO_END}
    s = {(r.algorithm, r.packet_size): r for r in records if r.phase == bench.SENDER}
    v = {(r.algorithm, r.packet_size): r for r in records if r.phase == bench.RECEIVER}
    for key in e2e:
        assert e2e[key].median_ns == s[key].median_ns + v[key].median_ns + 2_000_000
    assert json.loads(capsys.readouterr().out)[0]["algorithm"] == "aes-cmac"


def test_risbench_gate_failure_exit_2(tmp_path, monkeypatch):
    def broken():
        raise VectorGateFailed(["AES-128 FIPS-197"])
    monkeypatch.setattr(bench.vectors, "run_vector_gate", broken)
    assert cli.risbench(["--alg", "aes-cmac", "--sizes", "64", "--iters", "100",
                         "--out", str(tmp_path / "r.csv")]) == 2


def test_risbench_rejects_bad_config():
    with pytest.raises(SystemExit):
        cli.risbench(["--iters", "5"])
    with pytest.raises(SystemExit):
        cli.risbench(["--alg", "md5"])
