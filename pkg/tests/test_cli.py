import json

import pytest

from aiot_aka.cli import main


def test_run_exit_zero_and_files(tmp_path, capsys):
    assert main(["run", "--scenario", "1", "--basis", "sqn", "--indicator", "1", "--seed", "7",
                 "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "verdict AMF ACCEPT" in out
    fps = [line.split()[-1] for line in out.splitlines() if line.startswith("k_af")]
    assert len(fps) == 3 and len(set(fps)) == 1
    assert (tmp_path / "run-s1-sqn-ascon-seed7.log").exists()


def test_run_deterministic(tmp_path):
    for d in ("a", "b"):
        main(["run", "--scenario", "3", "--basis", "plk", "--seed", "7", "--out", str(tmp_path / d)])
    name = "run-s3-plk-aes-seed7.log"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_invalid_basis_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--basis", "rsa"])
    assert exc.value.code == 2


def test_bad_data(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--data", "abcd", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert main(["run", "--indicator", "1", "--data", "abcd", "--out", str(tmp_path)]) == 0


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("AIOT_AKA_SEED", "99")
    main(["run", "--out", str(tmp_path)])
    assert (tmp_path / "run-s1-sqn-aes-seed99.log").exists()
    monkeypatch.setenv("AIOT_AKA_SEED", "nope")
    with pytest.raises(SystemExit) as exc:
        main(["run", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_run_with_attack_script_rejects(tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"step": 6, "action": "TAMPER", "args": {"offset": 3, "mask": 1}}]))
    assert main(["run", "--attack-script", str(script), "--out", str(tmp_path)]) == 1
    log = (tmp_path / "run-s1-sqn-aes-seed0.log").read_text()
    assert "# adversary TAMPER(3,0x01) at step 6" in log


def test_snapshot(tmp_path):
    snap = tmp_path / "udm.json"
    main(["run", "--out", str(tmp_path), "--snapshot", str(snap)])
    assert json.loads(snap.read_text())["insecure_test_fixture"] is True


def test_attack_pass_and_mutant_fail(tmp_path, capsys):
    assert main(["attack", "--basis", "sqn", "--indicator", "0", "--suite", "tamper,mitm",
                 "--scenario", "1", "--out", str(tmp_path)]) == 0
    assert main(["attack", "--basis", "sqn", "--indicator", "0", "--suite", "tamper,mitm",
                 "--scenario", "1", "--mutate", "skip-mac-verify", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert "FAIL tamper" in out and "FAIL mitm" in out
    assert (tmp_path / "attack-sqn-aes-skip-mac-verify-seed0.txt").exists()


def test_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        main(["attack", "--suite", "fuzz"])
    assert exc.value.code == 2


def test_bench_default_and_overrides(tmp_path, capsys):
    assert main(["bench", "--out", str(tmp_path)]) == 0
    csv = (tmp_path / "time_table.csv").read_text().splitlines()
    assert csv[1] == "5G AKA,3.5" and csv[9] == "Protocol (SQN & Ascon),0.02"
    for name in ("energy_table.csv", "energy_table.md", "time_table.md", "ledgers.csv"):
        assert (tmp_path / name).exists()
    main(["bench", "--clock", "8e6", "--out", str(tmp_path / "fast")])
    assert (tmp_path / "fast" / "time_table.csv").read_text().splitlines()[1] == "5G AKA,1.8"
    main(["bench", "--power", "50e-6", "--budget", "5.4e-5", "--out", str(tmp_path / "p")])
    row = (tmp_path / "p" / "energy_table.csv").read_text().splitlines()[1].split(",")
    assert row[1:] == ["17.5", "324.1"]


def test_bench_with_calibration_file(tmp_path):
    main(["calibration", "--out", str(tmp_path / "cal.json")])
    assert main(["bench", "--calibration", str(tmp_path / "cal.json"), "--unrounded",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "time_table.csv").read_text().splitlines()[1] == "5G AKA,3.551500"
