import json
import math
import subprocess
import sys
from collections import defaultdict

import pytest

from gevdetect import cli
from gevdetect.records import parameter_hash
from gevdetect.tracy_widom import table_csv

from conftest import read_csv, read_json, run_cli


def invoke(capsys, argv, workers=1):
    code = run_cli(argv, workers)
    out, err = capsys.readouterr()
    return code, out, err


def test_threshold_from_shape(capsys):
    code, out, err = invoke(capsys, ["threshold", "--n", "320", "--m", "160", "--N", "960"])
    assert code == 0
    data = json.loads(out)
    assert data["T"] == pytest.approx(3.4365, abs=5e-4)
    assert data["tau"] == pytest.approx(6.485685, abs=1e-6)
    assert data["b2"] == pytest.approx(data["T"] ** 2, rel=1e-10)
    assert data["atom_at_zero"] == pytest.approx(0.5)
    manifest = json.loads(err.strip().splitlines()[-1])
    assert manifest["command"] == "threshold"
    assert len(manifest["parameter_hash"]) == 16


def test_threshold_with_signals(capsys):
    code, out, _ = invoke(capsys, ["threshold", "--c", "2", "--c1", "0.3333333333333333", "--signals", "6,4,3"])
    assert code == 0
    assert json.loads(out)["k_eff"] == 2


def test_threshold_needs_ratios(capsys):
    code, _, err = invoke(capsys, ["threshold", "--c", "2"])
    assert code == 2
    assert "--c1" in err


@pytest.mark.parametrize("header", [False, True])
def test_detect_on_ones(capsys, tmp_path, header):
    path = tmp_path / "ones.csv"
    path.write_text(("eigenvalue\n" if header else "") + "1.0\n" * 20)
    argv = ["detect", "--eigs", str(path), "--n", "20", "--m", "40", "--N", "100", "--alpha", "0.05", "--mode", "jacobi"]
    code, out, _ = invoke(capsys, argv)
    assert code == 0
    report = json.loads(out)
    assert report["k_hat"] == 0
    assert report["steps"][0]["decision"] == "noise"


def test_detect_sorts_input(capsys, tmp_path):
    path = tmp_path / "eigs.csv"
    path.write_text("\n".join(["1.0"] * 18 + ["80.0", "1.0"]) + "\n")
    code, out, _ = invoke(capsys, ["detect", "--eigs", str(path), "--n", "20", "--m", "40", "--N", "100"])
    assert code == 0
    assert json.loads(out)["k_hat"] == 1


def test_detect_calibrated(capsys, tmp_path):
    path = tmp_path / "eigs.csv"
    path.write_text("\n".join(["50.0"] + ["1.0"] * 9) + "\n")
    argv = ["detect", "--eigs", str(path), "--n", "10", "--m", "20", "--N", "60", "--calibrate", "400", "--seed", "3"]
    code, out, _ = invoke(capsys, argv)
    assert code == 0
    assert json.loads(out)["k_hat"] == 1


def test_missing_file_exits_2_with_path(capsys, tmp_path):
    missing = tmp_path / "nope.csv"
    code, _, err = invoke(capsys, ["detect", "--eigs", str(missing), "--n", "2", "--m", "4", "--N", "10"])
    assert code == 2
    assert str(missing) in err


def test_bad_value_line_exits_2(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0\nabc\n")
    code, _, err = invoke(capsys, ["detect", "--eigs", str(path), "--n", "2", "--m", "4", "--N", "10"])
    assert code == 2
    assert "line 2" in err


def test_unknown_flag_exits_2(capsys):
    code, _, err = invoke(capsys, ["threshold", "--bogus", "1"])
    assert code == 2
    assert "usage" in err


def test_domain_error_exits_2(capsys):
    code, _, err = invoke(capsys, ["threshold", "--c", "2", "--c1", "1.5"])
    assert code == 2
    assert "error" in err


def test_internal_error_exits_1(capsys, monkeypatch):
    def boom(*_):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "tau_threshold", boom)
    code, _, err = invoke(capsys, ["threshold", "--c", "2", "--c1", "0.3"])
    assert code == 1
    assert "kaput" in err


def test_density_outputs(capsys, tmp_path):
    out = tmp_path / "dens.csv"
    code, stdout, _ = invoke(capsys, ["density", "--c", "2", "--c1", "0.3333333333333333", "--points", "64", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 64
    assert float(rows[0]["x"]) == pytest.approx(0.19052498068887458, rel=1e-12)
    meta = read_json(out.with_suffix(".json"))
    assert meta["atom_at_zero"] + meta["continuous_mass"] == pytest.approx(1.0, abs=1e-8)
    assert meta["parameter_hash"] == out.read_text().splitlines()[0].split("=")[1]


def test_tw_table(capsys, tmp_path):
    dest = tmp_path / "tw.csv"
    code, out, _ = invoke(capsys, ["tw-table", "--export", str(dest)])
    assert code == 0
    assert out == table_csv() == dest.read_text()


def test_oracle_g_threshold(capsys):
    code, out, _ = invoke(capsys, ["oracle", "g-threshold", "--c", "2", "--c1", "0.3333333333333333", "--atoms", "500"])
    assert code == 0
    data = json.loads(out)
    assert data["abs_error"] < 5e-2


def test_oracle_support_negative_range(capsys):
    argv = ["oracle", "support", "--c", "0.5", "--c1", "0.25", "--atoms", "200", "--search", "-1:20:4000"]
    code, out, _ = invoke(capsys, argv)
    assert code == 0
    data = json.loads(out)
    assert data["outside_support"][0][0] == -1.0


def test_range_flag_accepts_negative_start():
    args = cli.build_parser().parse_args(cli._glue_ranges(["simulate", "heatmap", "--n", "8", "--c1", "0.25", "--snr", "-5:15:3"]))
    assert args.snr == (-5.0, 15.0, 3)


def small_heatmap(out):
    return ["simulate", "heatmap", "--n", "12", "--N", "36", "--snr", "-2:10:3", "--c", "0.5:2:3",
            "--trials", "6", "--alpha", "0.05", "--seed", "5", "--out-dir", str(out)]


def test_heatmap_bytes_identical_across_runs(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert invoke(capsys, small_heatmap(a))[0] == 0
    assert invoke(capsys, small_heatmap(b), workers=3)[0] == 0
    for name in ("heatmap.csv", "heatmap.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = read_csv(a / "heatmap.csv")
    assert len(rows) == 9
    assert set(rows[0]) == {"snr_db", "c", "m", "c_actual", "probability", "theory_db", "known_noise_db", "skipped"}


def test_parameter_hash_changes_with_seed(capsys, tmp_path):
    invoke(capsys, small_heatmap(tmp_path / "a"))
    argv = small_heatmap(tmp_path / "b")
    argv[argv.index("--seed") + 1] = "6"
    invoke(capsys, argv)
    ha = read_json(tmp_path / "a" / "heatmap.json")["parameter_hash"]
    hb = read_json(tmp_path / "b" / "heatmap.json")["parameter_hash"]
    assert ha != hb


def test_parameter_hash_is_order_free():
    assert parameter_hash({"a": 1, "b": [1, 2]}) == parameter_hash({"b": [1, 2], "a": 1})


@pytest.mark.parametrize("kind,extra,stem", [
    ("spike", ["--lam", "6"], "spike"),
    ("cdf-compare", ["--lam", "6"], "cdf_compare"),
    ("edf", [], "edf"),
])
def test_simulate_outputs(capsys, tmp_path, kind, extra, stem):
    argv = ["simulate", kind, "--n", "10", "--m", "5", "--N", "30", "--trials", "8", "--seed", "1", "--out-dir", str(tmp_path)] + extra
    code, out, err = invoke(capsys, argv)
    assert code == 0
    assert len(read_csv(tmp_path / f"{stem}.csv")) == 8
    manifest = json.loads(err.strip().splitlines()[-1])
    assert str(tmp_path / f"{stem}.csv") in manifest["output_paths"]


def test_desk_heatmap_band_brackets_theory(desk_heatmap):
    rows = read_csv(desk_heatmap / "heatmap.csv")
    by_c = defaultdict(list)
    for r in rows:
        by_c[r["c"]].append((float(r["snr_db"]), float(r["probability"]), float(r["theory_db"])))
    step = 20 / 19
    for cells in by_c.values():
        theory = cells[0][2]
        last_light = max(s for s, p, _ in cells if p <= 0.06)
        first_dark = min((s for s, p, _ in cells if p >= 0.9), default=math.inf)
        # bracketing is judged at the grid's own resolution
        assert last_light - step <= theory <= first_dark


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gevdetect", "threshold", "--c", "0.25", "--c1", "0.1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["T"] == pytest.approx(1.744541902832854, rel=1e-12)
