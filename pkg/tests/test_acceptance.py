"""Acceptance gate. Each test records one line per criterion in the terminal summary."""
import math

import numpy as np
import pytest

from gevdetect.detector import detect
from gevdetect.experiments import experiment_edf
from gevdetect.phase import lambda_of_tprime, lambda_threshold, spike_to_tprime, spiked_limit, tau_threshold
from gevdetect.simulate import TrialConfig, map_trials
from gevdetect.spectra import AspectRatios, SystemShape, atom_at_zero, continuous_mass, support_endpoints
from gevdetect.stieltjes import RealInterval, g_threshold, inverse_mp_measure, support_scan
from gevdetect.tracy_widom import TABLE

from conftest import DESK_HEATMAP_ARGV, read_csv, read_json, record, run_cli
from test_tracy_widom import reference_rows

GRID = [AspectRatios(float(c), float(c1)) for c in np.linspace(0.1, 4.0, 20) for c1 in np.linspace(0.05, 0.9, 20)]
R_REF = AspectRatios(2.0, 1 / 3)

SPIKE_SHAPE = ["--n", "80", "--m", "40", "--N", "240"]
SPIKE_RUNS = {
    "spike_6": ["simulate", "spike", *SPIKE_SHAPE, "--lam", "6", "--trials", "200", "--seed", "1"],
    "spike_1.5": ["simulate", "spike", *SPIKE_SHAPE, "--lam", "1.5", "--trials", "200", "--seed", "1"],
    "cdf_6": ["simulate", "cdf-compare", *SPIKE_SHAPE, "--lam", "6", "--trials", "500", "--seed", "1"],
    "cdf_1.5": ["simulate", "cdf-compare", *SPIKE_SHAPE, "--lam", "1.5", "--trials", "500", "--seed", "1"],
}


def run_spike_suite(root, workers):
    for name, argv in SPIKE_RUNS.items():
        assert run_cli(argv + ["--out-dir", str(root / name)], workers) == 0
    return root


@pytest.fixture(scope="module")
def spike_outputs(tmp_path_factory):
    return run_spike_suite(tmp_path_factory.mktemp("spike_w1"), workers=1)


def test_criterion_1_threshold_anchor():
    T = lambda_threshold(R_REF)
    ok = abs(T - 3.4365) <= 5e-4
    record("1 threshold anchor", ok, f"T(2,1/3)={T:.7f} target 3.4365+-5e-4")
    assert ok


def test_criterion_2_edge_identities():
    worst = {"lambda(tau)-b2": 0.0, "t'(T)-tau": 0.0, "T^2-b2": 0.0}
    for r in GRID:
        b2 = support_endpoints(r).b2
        tau = tau_threshold(r)
        T = lambda_threshold(r)
        worst["lambda(tau)-b2"] = max(worst["lambda(tau)-b2"], abs(lambda_of_tprime(tau, r) - b2))
        worst["t'(T)-tau"] = max(worst["t'(T)-tau"], abs(spike_to_tprime(T, r.c1) - tau))
        worst["T^2-b2"] = max(worst["T^2-b2"], abs(T * T - b2))
    limits = {"lambda(tau)-b2": 1e-9, "t'(T)-tau": 1e-10, "T^2-b2": 1e-10}
    for key, lim in limits.items():
        record("2 edge identities", worst[key] <= lim, f"max |{key}|={worst[key]:.2e} <= {lim:.0e} on 20x20 grid")
    assert all(worst[k] <= lim for k, lim in limits.items())


def test_criterion_3_small_c1_reduction():
    worst_T = worst_lim = 0.0
    for c in (0.25, 1.0, 2.0):
        r = AspectRatios(c, 1e-10)
        worst_T = max(worst_T, abs(lambda_threshold(r) - (1 + math.sqrt(c))))
        for lam in (1.5 * (1 + math.sqrt(c)), 2 * (1 + math.sqrt(c))):
            worst_lim = max(worst_lim, abs(spiked_limit(lam, r) - lam * (1 + c / (lam - 1))))
    record("3 small-c1 reduction", worst_T <= 1e-4, f"max |T-(1+sqrt c)|={worst_T:.2e} <= 1e-4")
    record("3 small-c1 reduction", worst_lim <= 1e-5, f"max spiked_limit error={worst_lim:.2e} <= 1e-5")
    assert worst_T <= 1e-4 and worst_lim <= 1e-5


def test_criterion_4_density_law():
    worst = max(abs(atom_at_zero(r) + continuous_mass(support_endpoints(r).b2, r) - 1.0) for r in GRID)
    ks = float(np.median(experiment_edf(TrialConfig(SystemShape(400, 800, 1200), trials=20, seed=4))))
    record("4 density law", worst <= 1e-8, f"max |atom+mass-1|={worst:.2e} <= 1e-8")
    record("4 density law", ks < 0.05, f"median KS at (400,800,1200)={ks:.4f} < 0.05")
    assert worst <= 1e-8 and ks < 0.05


def test_criterion_5_spike_tracking(spike_outputs):
    m6 = read_json(spike_outputs / "spike_6" / "spike.json")["mean_top"]
    m15 = read_json(spike_outputs / "spike_1.5" / "spike.json")["mean_top"]
    ks6 = read_json(spike_outputs / "cdf_6" / "cdf_compare.json")["ks"]
    ks15 = read_json(spike_outputs / "cdf_1.5" / "cdf_compare.json")["ks"]
    checks = [
        (abs(m6 / 14.0 - 1) <= 0.03, f"lam=6 mean={m6:.3f} within 3% of 14.0"),
        (abs(m15 / 11.8095 - 1) <= 0.03, f"lam=1.5 mean={m15:.3f} within 3% of 11.8095"),
        (ks6 >= 0.9, f"lam=6 KS={ks6:.3f} >= 0.9"),
        (ks15 <= 0.15, f"lam=1.5 KS={ks15:.3f} <= 0.15"),
    ]
    for ok, detail in checks:
        record("5 spike tracking", ok, detail)
    assert all(ok for ok, _ in checks), "; ".join(d for ok, d in checks if not ok)


def test_criterion_6_oracle_agreement():
    H = inverse_mp_measure(R_REF.c1, 2000)
    tau = tau_threshold(R_REF)
    b2 = support_endpoints(R_REF).b2
    g = g_threshold(R_REF.c, H)
    gaps = support_scan(R_REF.c, H, RealInterval(0.0, 2.0 * b2))
    edge = gaps[-1].lo
    record("6 oracle agreement", abs(g - tau) <= 1e-2, f"g_threshold={g:.5f} vs tau={tau:.5f}")
    record("6 oracle agreement", abs(edge - b2) <= 1e-2, f"support_scan edge={edge:.5f} vs b2={b2:.5f}")
    assert abs(g - tau) <= 1e-2 and abs(edge - b2) <= 1e-2


def false_alarm(shape, seed, **kw):
    noise = "known" if kw.get("mode") == "wishart" else "estimated"
    cfg = TrialConfig(shape, trials=2000, seed=seed, noise=noise)
    return float(np.mean(map_trials(cfg, lambda v: detect(v, shape, 0.05, **kw).k_hat >= 1)))


def test_criterion_7_detector_calibration():
    cases = {
        "jacobi analytic (40,80,240)": false_alarm(SystemShape(40, 80, 240), 71),
        "jacobi calibrated (40,80,240)": false_alarm(SystemShape(40, 80, 240), 72, centering="calibrated"),
        "wishart real (50,100)": false_alarm(SystemShape(50, 100, 52), 73, mode="wishart"),
        "wishart complex (50,100)": false_alarm(SystemShape(50, 100, 52, "complex"), 74, mode="wishart"),
    }
    for name, rate in cases.items():
        record("7 detector calibration", 0.03 <= rate <= 0.08, f"{name} false alarm={rate:.4f} in [0.03,0.08]")
    assert all(0.03 <= rate <= 0.08 for rate in cases.values())


def test_criterion_8_desk_heatmap(desk_heatmap):
    rows = read_csv(desk_heatmap / "heatmap.csv")
    meta = read_json(desk_heatmap / "heatmap.json")
    T_minus_1 = {float(r["c"]): 10 ** (float(r["theory_db"]) / 10) for r in rows}
    dark = [r for r in rows if 10 ** (float(r["snr_db"]) / 10) >= 2 * T_minus_1[float(r["c"])]]
    light = [r for r in rows if 10 ** (float(r["snr_db"]) / 10) <= 0.25 * T_minus_1[float(r["c"])]]
    dark_min = min(float(r["probability"]) for r in dark)
    light_max = max(float(r["probability"]) for r in light)
    dark_miss = sum(float(r["probability"]) < 0.9 for r in dark)
    step = 20 / 19
    near = [abs(t - th) <= step for t, th in zip(meta["transition_db"], meta["theory_db"]) if t is not None]
    frac = sum(near) / len(meta["theory_db"])
    checks = [
        (dark_miss == 0, f"dark zone: {dark_miss}/{len(dark)} cells below 0.9 (min {dark_min:.2f})"),
        (light_max <= 0.06, f"light zone: max probability {light_max:.3f} <= 0.06 over {len(light)} cells"),
        (frac >= 0.8, f"50% contour within one cell of theory in {frac:.0%} of columns (need 80%)"),
    ]
    for ok, detail in checks:
        record("8 desk heatmap", ok, detail)
    assert all(ok for ok, _ in checks), "; ".join(d for ok, d in checks if not ok)


def test_criterion_9_table_fidelity():
    rows = reference_rows()
    got = list(zip(TABLE.p, TABLE.q_real, TABLE.q_complex))
    exact = sum(g == r for g, r in zip(got, rows)) if len(got) == len(rows) else 0
    ok = exact == 13 and len(got) == 13
    record("9 table fidelity", ok, f"{exact}/13 rows (26 quantiles) bit-exact")
    assert ok


def test_criterion_10_determinism(spike_outputs, desk_heatmap, tmp_path):
    again = run_spike_suite(tmp_path / "spike_w3", workers=3)
    spike_same = all(
        (spike_outputs / name / f).read_bytes() == (again / name / f).read_bytes()
        for name in SPIKE_RUNS
        for f in (p.name for p in (spike_outputs / name).glob("*.csv"))
    )
    out = tmp_path / "heatmap_w3"
    assert run_cli(DESK_HEATMAP_ARGV + ["--out-dir", str(out)], workers=3) == 0
    heat_same = (desk_heatmap / "heatmap.csv").read_bytes() == (out / "heatmap.csv").read_bytes()
    record("10 determinism", spike_same, "criterion 5 CSVs byte-identical with 1 vs 3 workers")
    record("10 determinism", heat_same, "criterion 8 CSV byte-identical with 1 vs 3 workers")
    assert spike_same and heat_same
