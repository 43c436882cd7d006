import json

import numpy as np
import pytest

from bspdc.cli import main, parse_target

FAST = """\
[spectrum]
points = 1001
sfg_points = 801
[hom]
grid_points = 2001
points = 121
[tomography]
resamples = 50
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "fast.ini"
    path.write_text(FAST)
    return str(path)


def run(cfg, out, *args):
    return main([*args, "--config", cfg, "--out", str(out)])


def test_spectrum_and_flat_fwhm(tmp_path):
    path = tmp_path / "flat.ini"
    path.write_text("[dispersion]\nset = flat\n[spectrum]\nspan_ghz = 200\npoints = 8001\n")
    assert main(["spectrum", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "spectrum_summary.json").read_text())
    # dispersion-free crystal: dk L / 2 = n W L / c, half maximum at x = 1.39156
    n, length, c = 1.8, 10.35e-3, 299_792_458.0
    expect = 1.3915573782515103 * c / (np.pi * n * length)
    assert doc["signal_fwhm_ghz"] * 1e9 == pytest.approx(expect, rel=0.01)


def test_outputs_deterministic(cfg, tmp_path):
    for sub in ("a", "b"):
        assert run(cfg, tmp_path / sub, "fringes", "--seed", "7") == 0
    for name in ("fringe_H.csv", "fringes.json", "fringes_counts.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    first = (tmp_path / "a" / "fringe_H.csv").read_text().splitlines()[0]
    assert first.startswith("# config_hash=") and "seed=7" in first
    assert run(cfg, tmp_path / "c", "fringes", "--seed", "8") == 0
    assert ((tmp_path / "a" / "fringes_counts.jsonl").read_bytes()
            != (tmp_path / "c" / "fringes_counts.jsonl").read_bytes())


def test_json_format(cfg, tmp_path):
    assert run(cfg, tmp_path, "hom", "--format", "json") == 0
    doc = json.loads((tmp_path / "hom_trace.json").read_text())
    assert doc["columns"][0] == "delay_ps" and doc["meta"]["seed"] == 20201


def test_tomography_and_bell_round_trip(cfg, tmp_path):
    assert run(cfg, tmp_path / "t", "tomography") == 0
    counts = tmp_path / "t" / "tomography_counts.jsonl"
    assert run(cfg, tmp_path / "t2", "tomography", "--counts", str(counts),
               "--target", "phi:180") == 0
    a = json.loads((tmp_path / "t" / "tomography.json").read_text())
    b = json.loads((tmp_path / "t2" / "tomography.json").read_text())
    assert a["rho"] == b["rho"]
    assert a["fidelity"] > 0.99

    assert run(cfg, tmp_path / "b", "bell") == 0
    counts = tmp_path / "b" / "bell_counts.jsonl"
    assert run(cfg, tmp_path / "b2", "bell", "--counts", str(counts)) == 0
    doc = json.loads((tmp_path / "b2" / "chsh.json").read_text())
    assert doc["S"] > 2


def test_bell_needs_sixteen_records(cfg, tmp_path):
    assert run(cfg, tmp_path / "b", "bell") == 0
    lines = (tmp_path / "b" / "bell_counts.jsonl").read_text().splitlines()
    short = tmp_path / "short.jsonl"
    short.write_text("\n".join(lines[:15]) + "\n")
    assert run(cfg, tmp_path / "b2", "bell", "--counts", str(short)) == 3


def test_malformed_counts_exit_code(cfg, tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("# comment\n{oops\n")
    assert run(cfg, tmp_path / "o", "tomography", "--counts", str(bad)) == 3
    assert "bad.jsonl:2" in capsys.readouterr().err


def test_missing_dispersion_set_exit_code(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[dispersion]\nset = unobtainium\n")
    assert main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_unknown_key_exit_code(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[grating]\nlenght_mm = 3\n")
    assert main(["hom", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_no_phase_matching_exit_code(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[grating]\nperiod_um = 90\norder = 1\n")
    assert main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == 4


def test_seed_validation(cfg, tmp_path):
    with pytest.raises(SystemExit):
        run(cfg, tmp_path, "hom", "--seed", "-1")


def test_parse_target():
    assert parse_target("singlet") == pytest.approx(parse_target("phi:180"))
    with pytest.raises(ValueError):
        parse_target("bogus")


def test_reproduce(tmp_path):
    assert main(["reproduce", "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "comparison.json").read_text())["rows"]
    assert all(r["verdict"] != "FAIL" for r in rows)
    assert any(r["kind"] == "info" and "width" in r["quantity"] for r in rows)
