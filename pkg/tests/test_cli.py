import csv
import io
import subprocess
import sys

import pytest

from photonoc import cli
from photonoc.config import (PAPER_CONFIGS, ConfigError, SimConfig, load_config, load_matrix,
                             parse_kv_text)
from photonoc.kernel import DeadlockError
from photonoc.metrics import reports_csv
from photonoc.system import run


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def run_cli(capsys, *argv):
    code = cli.main(["-q", *argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_single_run_csv(capsys):
    code, out, _ = run_cli(capsys, "--network", "hmesh", "--memory", "ecm", "--requests", "2000")
    assert code == 0
    (row,) = rows(out)
    assert row["config"] == "HMesh/ECM"
    assert float(row["bandwidth_GBps"]) <= 960
    assert int(row["requests"]) == 2000


def test_cli_matches_library(capsys):
    code, out, _ = run_cli(capsys, "--network", "lmesh", "--workload", "tornado",
                           "--requests", "1500", "--seed", "4")
    lib = reports_csv([run(SimConfig(network="lmesh", workload="tornado", requests=1500, seed=4))])
    assert out == lib


def test_determinism_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.main(["-q", "--requests", "3000", "--seed", "9", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_histogram_file(tmp_path, capsys):
    h = tmp_path / "h.csv"
    assert cli.main(["-q", "--requests", "500", "--hist", str(h)]) == 0
    text = h.read_text()
    assert text.startswith("bucket_ns,count\n")
    assert sum(int(r["count"]) for r in rows(text)) == 500


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# base\nnetwork = lmesh\nmemory = ecm\nseed = 7\n")
    args = cli.build_parser().parse_args(["--config", str(cfg), "--seed", "3"])
    c = cli.config_from_args(args)
    assert (c.network, c.memory, c.seed) == ("lmesh", "ecm", 3)
    assert load_config(cfg).seed == 7


def test_config_parse_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_kv_text("network lmesh")
    with pytest.raises(ConfigError):
        parse_kv_text("colour = blue")
    with pytest.raises(ConfigError):
        parse_kv_text("requests = many")
    with pytest.raises(ConfigError):
        SimConfig(mshr=0)
    with pytest.raises(ConfigError):
        SimConfig(workload="zipf")


def test_sweep_five_configs(tmp_path, capsys):
    m = tmp_path / "m.txt"
    m.write_text("".join(f"network={n} memory={mem}\n" for n, mem in PAPER_CONFIGS))
    code, out, _ = run_cli(capsys, "--sweep", str(m), "--requests", "2000")
    assert code == 0
    table = rows(out)
    assert [r["config"] for r in table] == ["XBar/OCM", "HMesh/OCM", "LMesh/OCM",
                                            "HMesh/ECM", "LMesh/ECM"]
    assert table[-1]["speedup"] == "1.0000"
    assert float(table[0]["speedup"]) > 1


def test_single_config_sweep_is_its_own_baseline():
    reports, speedups, geo = cli.sweep([SimConfig(requests=500)])
    assert speedups == [1.0] and geo == []


def test_multi_workload_geomean(tmp_path, capsys):
    configs = [SimConfig(network=n, memory=m, workload=w, requests=800)
               for w in ("uniform", "hotspot", "tornado", "transpose") for n, m in PAPER_CONFIGS]
    with pytest.raises(ConfigError):
        cli.sweep(configs)
    reports, speedups, geo = cli.sweep(configs, multi_workload=True)
    assert len(reports) == 20
    assert [name for name, _ in geo] == ["XBar/OCM", "HMesh/OCM", "LMesh/OCM",
                                         "HMesh/ECM", "LMesh/ECM"]
    assert dict(geo)["LMesh/ECM"] == pytest.approx(1.0)
    text = cli.sweep_csv(reports, speedups, geo)
    assert text.count("geomean") == 5


def test_sweep_matrix_keys_override_flags(tmp_path):
    m = tmp_path / "m.txt"
    m.write_text("network=hmesh seed=2\nnetwork=xbar\n")
    configs = load_matrix(m, SimConfig(seed=5, memory="ecm"))
    assert [(c.network, c.seed, c.memory) for c in configs] == [("hmesh", 2, "ecm"),
                                                                ("xbar", 5, "ecm")]


def test_sweep_rejects_mismatched_request_counts():
    with pytest.raises(ConfigError):
        cli.sweep([SimConfig(requests=100), SimConfig(requests=200, network="lmesh")])


def test_exit_code_config_errors(tmp_path, capsys):
    assert run_cli(capsys, "--workload", "zipf")[0] == 1
    assert run_cli(capsys, "--workload", f"trace:{tmp_path / 'missing.txt'}")[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("T1 Q 0x40 +1\n")
    code, _, err = run_cli(capsys, "--workload", f"trace:{bad}")
    assert code == 1 and "line 1" in err
    assert run_cli(capsys, "--requests", "0")[0] == 1


def test_exit_code_deadlock(monkeypatch, capsys):
    def stuck(cfg):
        raise DeadlockError(123, "nothing moves")
    monkeypatch.setattr(cli, "run", stuck)
    code, _, err = run_cli(capsys)
    assert code == 2 and "deadlock" in err


def test_trace_workload(tmp_path, capsys):
    t = tmp_path / "t.txt.gz"
    import gzip
    t.write_bytes(gzip.compress(b"T17 R 0x0000000000A1C0 +120\nT17 W 0x40 +3\n"))
    code, out, _ = run_cli(capsys, "--workload", f"trace:{t}")
    assert code == 0
    assert rows(out)[0]["requests"] == "2"


def test_inventory_flag_subprocess():
    res = subprocess.run([sys.executable, "-m", "photonoc", "--inventory"],
                         capture_output=True, text=True, check=True)
    lines = res.stdout.splitlines()
    assert lines[1].split()[:3] == ["Memory", "128", "16"]
    assert "1024 K" in lines[2]
    assert lines[6].split()[:2] == ["Total", "388"]
