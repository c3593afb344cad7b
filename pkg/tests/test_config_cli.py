import csv
import subprocess
import sys

import pytest

from e2rc import config
from e2rc.cli import SCHEMAS, main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_and_resolve():
    raw = config.parse_text("# comment\nq = 64\nrates=8/16, 8/9  # trailing\n\n")
    assert raw == {"q": "64", "rates": "8/16, 8/9"}
    cfg = config.resolve(SCHEMAS["simulate"], raw)
    assert cfg["q"] == 64 and cfg["rates"] == ["8/16", "8/9"]
    assert cfg["max_iters"] == 100
    with pytest.raises(config.ConfigError, match="unknown"):
        config.resolve(SCHEMAS["lift"], {"qq": "3"})
    with pytest.raises(config.ConfigError):
        config.resolve(SCHEMAS["lift"], {"q": "abc"})
    with pytest.raises(config.ConfigError):
        config.parse_text("no equals sign")
    with pytest.raises(config.ConfigError):
        config.resolve(SCHEMAS["lift"], {"strict": "maybe"})


def test_dump_roundtrip():
    cfg = config.resolve(SCHEMAS["simulate"], {})
    again = config.resolve(SCHEMAS["simulate"], config.parse_text(config.dump(cfg)))
    assert again == cfg


def test_unknown_key_exits_nonzero(tmp_path, capsys):
    rc = main(["lift", "--out", str(tmp_path), "-s", "bogus=1"])
    assert rc == 1
    assert "unknown config keys: bogus" in capsys.readouterr().err


def test_missing_protograph_file(tmp_path):
    rc = main(["sr-classify", "--out", str(tmp_path), "-s",
               f"protograph={tmp_path / 'nope.proto'}"])
    assert rc == 1


def test_manifest_and_sr_classify(tmp_path, capsys):
    cfg_file = tmp_path / "job.cfg"
    cfg_file.write_text("protograph = fixture:protograph-1\n")
    rc = main(["sr-classify", "--config", str(cfg_file), "--out", str(tmp_path / "o"),
               "--seed", "5"])
    assert rc == 0
    man = (tmp_path / "o" / "manifest.txt").read_text()
    assert "command=sr-classify" in man and "seed=5" in man
    assert "protograph=fixture:protograph-1" in man
    assert "census 1-SR:4 2-SR:2 3-SR:1" in capsys.readouterr().out


def test_exit_curve_two_points(tmp_path):
    rc = main(["exit-curve", "--out", str(tmp_path), "-s", "points=2", "-s", "m=8"])
    assert rc == 0
    rows = read_csv(tmp_path / "exit_curve.csv")
    assert [float(r["i_a"]) for r in rows] == [0.0, 0.5]


def test_design_matches_singleton_joint(tmp_path):
    common = ["-s", "grid=300", "-s", "g_step=0.05", "-s", "d_v_max=8"]
    assert main(["design", "--out", str(tmp_path / "a"), "-s", "rate=8/16"] + common) == 0
    assert main(["design-joint", "--out", str(tmp_path / "b"), "-s", "rates=8/16"] + common) == 0
    for name in ("lambda.csv", "thresholds.csv", "design_summary.txt"):
        assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()


def test_proto_family_zero_stages(tmp_path):
    assert main(["proto-family", "--out", str(tmp_path), "-s", "stages=0"]) == 0
    rows = read_csv(tmp_path / "thresholds.csv")
    assert len(rows) == 1
    assert float(rows[0]["ebn0_db"]) == pytest.approx(3.27, abs=0.1)


def test_lift_and_simulate_smoke(tmp_path):
    assert main(["lift", "--out", str(tmp_path / "l"), "-s", "q=64"]) == 0
    assert (tmp_path / "l" / "code.alist").exists()
    rc = main(["simulate", "--out", str(tmp_path / "s"), "-s", "q=64", "-s", "rates=8/16,8/9",
               "-s", "ebn0=4,5", "-s", "max_frames=64", "-s", "min_frame_errors=1"])
    assert rc == 0
    rows = read_csv(tmp_path / "s" / "measured_thresholds.csv")
    assert [r["rate_label"] for r in rows] == ["8/16", "8/9"]
    assert len(read_csv(tmp_path / "s" / "sim_rate_1_2.csv")) == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "e2rc.cli", "sr-classify", "--out",
                          str(tmp_path)], capture_output=True, text=True, check=False)
    assert out.returncode == 0 and "census" in out.stdout
