import csv
import io
import subprocess
import sys

import pytest

from hiercoll.cli import main, parse_size


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    lines = out.splitlines()
    assert lines[0].startswith("# hiercoll ") and " config " in lines[0]
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


@pytest.mark.parametrize("text,value", [("100MB", 1e8), ("1GB", 1e9), ("1.5gb", 1.5e9), ("512", 512.0),
                                        ("2e6", 2e6), ("64kB", 64e3)])
def test_parse_size(text, value):
    assert parse_size(text) == value


@pytest.mark.parametrize("text", ["", "MB", "-5MB", "0", "10XB"])
def test_parse_size_rejects(text):
    with pytest.raises(Exception):
        parse_size(text)


def test_sweep_single_point_gives_one_row_per_mode(capsys):
    code, out, _ = run(capsys, "sweep", "--topology", "2D-SW_SW", "--size", "100MB", "--cpc", "16")
    assert code == 0
    r = rows(out)
    assert [x["mode"] for x in r] == ["Baseline", "ThemisFIFO", "ThemisSCF", "Ideal"]
    assert float(r[0]["speedup_vs_baseline"]) == 1.0
    assert all(float(x["ideal_s"]) == pytest.approx(1e8 / (2000 * 1e9 / 8)) for x in r)
    assert float(r[3]["makespan_s"]) == pytest.approx(float(r[3]["ideal_s"]))


def test_full_sweep_shape(capsys):
    code, out, _ = run(capsys, "sweep", "--mode", "Baseline,ThemisFIFO,ThemisSCF", "--cpc", "8")
    assert code == 0
    assert len(rows(out)) == 6 * 4 * 3


def test_sensitivity(capsys):
    code, out, _ = run(capsys, "sensitivity", "--cpc", "1", "--cpc", "4", "--topology", "3D-SW_SW_SW_hetero",
                       "--mode", "ThemisSCF")
    r = rows(out)
    assert code == 0 and [int(x["cpc"]) for x in r] == [1, 4]
    assert all(0 < float(x["weighted_utilization"]) <= 1 for x in r)


def test_workload_ideal_has_mode_invariant_compute(capsys):
    code, out, _ = run(capsys, "workload", "--trace", "dlrm", "--topology", "3D-FC_Ring_SW", "--cpc", "16")
    r = rows(out)
    assert code == 0 and [x["mode"] for x in r] == ["Baseline", "ThemisFIFO", "ThemisSCF", "Ideal"]
    assert len({(x["fwd_compute_s"], x["bwd_compute_s"]) for x in r}) == 1
    ideal = r[3]
    assert float(ideal["exposed_dp_comm_s"]) + float(ideal["exposed_mp_comm_s"]) <= \
        float(r[0]["exposed_dp_comm_s"]) + float(r[0]["exposed_mp_comm_s"])
    assert float(r[0]["normalized_total"]) == 1.0


def test_oracle_fifo_finds_no_gain_on_worked_example(capsys):
    code, out, _ = run(capsys, "oracle", "--policy", "FIFO")
    r = {x["row"]: float(x["makespan_s"]) for x in rows(out)}
    assert code == 0 and r["optimal"] == r["themis"] == r["baseline"]


def test_oracle_on_worked_example(capsys):
    code, out, _ = run(capsys, "oracle")
    r = {x["row"]: x for x in rows(out)}
    assert code == 0 and int(r["space_size"]["makespan_s"]) == 16
    assert float(r["optimal"]["makespan_s"]) <= float(r["themis"]["makespan_s"]) < float(r["baseline"]["makespan_s"])
    assert r["themis"]["schedule"].split()[1].startswith("2-1")


def test_provision_current_platform(capsys):
    code, out, _ = run(capsys, "provision")
    verdicts = [x for x in rows(out) if x["scenario"] != "recommendation"]
    assert code == 0 and len(verdicts) == 1
    assert verdicts[0]["scenario"] == "OverProvisioned" and float(verdicts[0]["ratio"]) == pytest.approx(0.75)


def test_out_file_and_fingerprint_are_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["provision", "--topology", "3D-SW_SW_SW_homo", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert a.read_bytes() == b.read_bytes()
    other = tmp_path / "c.csv"
    main(["provision", "--topology", "3D-SW_SW_SW_hetero", "--out", str(other)])
    assert a.read_text().splitlines()[0] != other.read_text().splitlines()[0]


def test_topology_file(tmp_path, capsys):
    path = tmp_path / "t.json"
    path.write_text('{"dims": [{"size": 4, "kind": "switch", "bw_per_link_gbps": 400, "links_per_npu": 1, '
                    '"step_latency_ns": 0}, {"size": 4, "kind": "switch", "bw_per_link_gbps": 100, '
                    '"links_per_npu": 1, "step_latency_ns": 0}]}')
    code, out, _ = run(capsys, "provision", "--topology", str(path))
    assert code == 0 and rows(out)[1]["scenario"] == "JustEnough"


@pytest.mark.parametrize("argv,msg", [
    (["sweep", "--topology", "nope"], "not a preset"),
    (["sweep", "--mode", "Fast"], "unknown mode"),
    (["workload", "--trace", "missing_trace"], "missing_trace"),
    (["oracle", "--topology", "3D-SW_SW_SW_homo", "--cpc", "8", "--cap", "100"], "schedule space"),
    (["sweep", "--topology", "2D-SW_SW", "--concurrency", "0"], "concurrency"),
])
def test_errors_exit_nonzero_with_diagnostic(capsys, argv, msg):
    code, out, err = run(capsys, *argv)
    assert code != 0 and out == ""
    assert err.startswith(f"hiercoll {argv[0]}: error:") and msg in err


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--size"])
    assert exc.value.code != 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hiercoll", "provision"], capture_output=True, text=True, check=True)
    assert "OverProvisioned" in res.stdout
