import csv
import json
import socket
import subprocess
import sys
import time

import pytest

from kbist.cli import main
from kbist.dictionary import load_dictionary

KEY_HEX = "000102030405060708090a0b0c0d0e0f"


@pytest.fixture
def keyfile(tmp_path, monkeypatch):
    monkeypatch.delenv("KBIST_KEY_FILE", raising=False)
    p = tmp_path / "dev.key"
    p.write_text(KEY_HEX + "\n")
    return p


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_parse(capsys):
    code, out, _ = run(capsys, "parse", "c17")
    assert code == 0 and out.startswith("c17: 5 inputs, 2 outputs, 6 gates")


def test_parse_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "parse", str(tmp_path / "none.bench"))
    assert code == 1 and "none.bench" in err


def test_unknown_command(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


@pytest.mark.parametrize("seed", ["0", "xyz", "100000000"])
def test_bad_seed_is_usage_error(capsys, seed):
    with pytest.raises(SystemExit) as e:
        main(["coverage", "--bench", "c17", "--patterns", "4", "--seed", seed])
    assert e.value.code == 2


def test_coverage(capsys, tmp_path):
    code, out, _ = run(capsys, "coverage", "--bench", "c17", "--patterns", "32", "--seed", "ABCD")
    assert code == 0 and "/46 faults detected" in out
    pf = tmp_path / "p.txt"
    pf.write_text("\n".join(format(i, "05b") for i in range(32)) + "\n")
    code, out, _ = run(capsys, "coverage", "--bench", "c17", "--pattern-file", str(pf), "--list-undetected")
    assert code == 0 and "46/46" in out


def test_build_dict_missing_key(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("KBIST_KEY_FILE", raising=False)
    missing = tmp_path / "absent.key"
    code, _, err = run(capsys, "build-dict", "--bench", "c17", "--seeds", "1", "--patterns", "7",
                       "--key", str(missing))
    assert code == 1 and str(missing) in err


def test_build_and_golden(capsys, tmp_path, keyfile):
    out_path = tmp_path / "d.json"
    code, out, _ = run(capsys, "build-dict", "--bench", "c17", "--seeds", "ABCD,1", "--patterns", "7",
                       "--key", str(keyfile), "--out", str(out_path))
    assert code == 0 and "2 session(s)" in out
    d = load_dictionary(out_path)
    assert [k.seed for k in d.sessions] == [1, 0xABCD]
    assert KEY_HEX not in out_path.read_text()
    code, out, _ = run(capsys, "gen-golden", "--bench", "c17", "--seeds", "ABCD", "--patterns", "7",
                       "--key", str(keyfile))
    golden = json.loads(out)
    assert len(golden["entries"]) == 1
    sig = d.golden(d.session(0xABCD)).signature.hex()
    assert golden["entries"][0]["signature_hex"] == sig


def test_duplicate_seeds_rejected(capsys, keyfile):
    with pytest.raises(SystemExit) as e:
        main(["build-dict", "--bench", "c17", "--seeds", "1,01", "--patterns", "7", "--key", str(keyfile)])
    assert e.value.code == 2


def _soc(tmp_path, keyfile, capsys):
    run(capsys, "build-dict", "--bench", "c17", "--seeds", "ABCD", "--patterns", "7",
        "--key", str(keyfile), "--out", str(tmp_path / "c17.json"))
    soc = tmp_path / "soc.json"
    soc.write_text(json.dumps({"duts": {"c17": "iscas85:c17"}, "key_file": keyfile.name,
                               "dictionaries": {"c17": "c17.json"}}))
    return soc


def test_onchip_flow(capsys, tmp_path, keyfile):
    soc = _soc(tmp_path, keyfile, capsys)
    code, out, _ = run(capsys, "test-onchip", "--soc", str(soc), "--dut", "c17", "--seed", "ABCD")
    assert code == 0 and "FAULT_FREE" in out
    code, out, _ = run(capsys, "test-onchip", "--soc", str(soc), "--dut", "c17", "--seed", "ABCD",
                       "--inject-fault", "N22@sa0")
    assert code == 0 and "N22@sa0" in out
    code, _, err = run(capsys, "test-onchip", "--soc", str(soc), "--dut", "c17", "--seed", "1")
    assert code == 1 and "not in dictionary" in err


def test_analyze_row_and_csv(capsys, tmp_path, keyfile):
    out_csv = tmp_path / "r.csv"
    code, out, _ = run(capsys, "analyze", "--circuit", "c432", "--circuit", "c17", "--seed", "1",
                       "--key", str(keyfile), "--csv", str(out_csv))
    assert code == 0
    row = next(line for line in out.splitlines() if line.split()[:1] == ["c432"])
    assert row.split()[1:5] == ["7", "63", "441", "41.95"]
    with open(out_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["circuit", "po_count", "pattern_count", "response_bits",
                       "compaction_rate_pct", "aliasing_rate_pct"]
    assert rows[1][:5] == ["c432", "7", "63", "441", "41.95"]
    assert rows[1][5] == "0.00"
    assert rows[2][4] == "-1728.57"


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_and_agent_processes(capsys, tmp_path, keyfile):
    soc = _soc(tmp_path, keyfile, capsys)
    port = _free_port()
    tester = subprocess.Popen([sys.executable, "-m", "kbist", "serve-tester", "--dict", str(tmp_path / "c17.json"),
                               "--listen", f"127.0.0.1:{port}", "--max-sessions", "2"],
                              stdout=subprocess.PIPE, text=True)
    try:
        agent = [sys.executable, "-m", "kbist", "run-agent", "--soc", str(soc),
                 "--connect", f"127.0.0.1:{port}", "--retries", "20"]
        deadline = time.monotonic() + 20
        while True:
            ok = subprocess.run(agent, capture_output=True, text=True)
            if ok.returncode == 0 or time.monotonic() > deadline:
                break
            time.sleep(0.2)
        assert ok.returncode == 0 and ok.stdout.strip() == "FAULT_FREE"
        bad = subprocess.run(agent + ["--inject-fault", "N22@sa0"], capture_output=True, text=True)
        assert bad.returncode == 0 and "N22@sa0" in bad.stdout
        out, _ = tester.communicate(timeout=20)
    finally:
        tester.kill()
    assert tester.returncode == 0
    assert out.count("seed=0x0000abcd") == 2


def test_run_agent_no_tester(capsys, tmp_path, keyfile):
    soc = _soc(tmp_path, keyfile, capsys)
    code, _, err = run(capsys, "run-agent", "--soc", str(soc), "--connect", f"127.0.0.1:{_free_port()}")
    assert code == 1 and "session failed" in err
