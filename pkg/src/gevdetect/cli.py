"""Command-line entry point.

Every command prints its run manifest (JSON) to stderr. Exit codes: 0 on
success, 2 on usage or domain errors and unreadable inputs, 1 otherwise.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from gevdetect import experiments as ex
from gevdetect.detector import detect
from gevdetect.phase import PopulationSpectrum, k_eff, lambda_of_tprime, lambda_threshold, spike_to_tprime, tau_threshold
from gevdetect.records import RunManifest, write_csv, write_json
from gevdetect.simulate import TrialConfig
from gevdetect.spectra import (
    AspectRatios,
    DomainError,
    EmpiricalSpectrum,
    SystemShape,
    atom_at_zero,
    continuous_mass,
    limit_density_grid,
    support_endpoints,
)
from gevdetect.stieltjes import RealInterval, g_threshold, inverse_mp_measure, spike_prediction, support_scan
from gevdetect.tracy_widom import table_csv


class UsageError(Exception):
    pass


def _range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:points, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:points, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ratios(args: argparse.Namespace) -> AspectRatios:
    if args.c is not None and args.c1 is not None:
        return AspectRatios(args.c, args.c1)
    if None not in (getattr(args, "n", None), getattr(args, "m", None), getattr(args, "N", None)):
        return SystemShape(args.n, args.m, args.N).ratios
    raise UsageError("give either --c and --c1 or --n, --m and --N")


def read_eigs(path: str) -> np.ndarray:
    """One value per line, optional header, any order."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = [(i, line.split(",")[0].strip()) for i, line in enumerate(lines)]
    rows = [(i, cell) for i, cell in rows if cell and not cell.startswith("#")]
    vals = []
    for j, (i, cell) in enumerate(rows):
        try:
            vals.append(float(cell))
        except ValueError:
            if j > 0:
                raise DomainError(f"{path}: line {i + 1} is not a number: {cell!r}") from None
    if not vals:
        raise DomainError(f"{path}: no eigenvalues found")
    return np.array(vals)


def _shape_args(p: argparse.ArgumentParser, *, N_required: bool = True) -> None:
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N", type=int, required=N_required)
    p.add_argument("--field", choices=("real", "complex"), default="real")


def _sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gevdetect", description="Generalized-eigenvalue signal detection toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="phase-transition thresholds and support edges")
    for flag, typ in (("--c", float), ("--c1", float), ("--n", int), ("--m", int), ("--N", int)):
        p.add_argument(flag, type=typ)
    p.add_argument("--signals", type=_floats, help="population eigenvalues for k_eff")

    p = sub.add_parser("density", help="limiting density on a grid")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--out", required=True)

    p = sub.add_parser("detect", help="estimate the number of signals from eigenvalues")
    p.add_argument("--eigs", required=True)
    _shape_args(p, N_required=False)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mode", choices=("jacobi", "wishart"), default="jacobi")
    p.add_argument("--calibrate", type=int, metavar="TRIALS")
    p.add_argument("--seed", type=int, default=0)

    sim = sub.add_parser("simulate", help="Monte Carlo experiments").add_subparsers(dest="experiment", required=True)
    p = sim.add_parser("spike")
    _shape_args(p)
    p.add_argument("--lam", type=float, help="signal eigenvalue; omit for noise only")
    _sim_args(p)
    p = sim.add_parser("cdf-compare")
    _shape_args(p)
    p.add_argument("--lam", type=float, required=True)
    _sim_args(p)
    p = sim.add_parser("edf")
    _shape_args(p)
    _sim_args(p)
    p = sim.add_parser("heatmap")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--c1", type=float)
    p.add_argument("--snr", type=_range, default=(-5.0, 15.0, 20))
    p.add_argument("--c", type=_range, default=(0.5, 4.0, 20))
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--mode", choices=("jacobi", "wishart"), default="jacobi")
    p.add_argument("--centering", choices=("analytic", "calibrated"), default="analytic")
    p.add_argument("--field", choices=("real", "complex"), default="real")
    _sim_args(p)
    p.set_defaults(trials=100)

    orc = sub.add_parser("oracle", help="numerical cross-checks of closed forms").add_subparsers(dest="check", required=True)
    for name in ("support", "g-threshold", "spike"):
        p = orc.add_parser(name)
        p.add_argument("--c", type=float, required=True)
        p.add_argument("--c1", type=float, required=True)
        p.add_argument("--atoms", type=int, default=2000)
        if name == "support":
            p.add_argument("--search", type=_range, help="lo:hi:grid_points")
        if name == "spike":
            p.add_argument("--lam", type=float, required=True)

    p = sub.add_parser("tw-table", help="Tracy-Widom percentile table")
    p.add_argument("--export")
    return parser


def _threshold(args, man: RunManifest) -> dict[str, Any]:
    r = _ratios(args)
    sup = support_endpoints(r)
    T = lambda_threshold(r)
    out = {
        "c": r.c,
        "c1": r.c1,
        "T": T,
        "tau": tau_threshold(r),
        "b1": sup.b1,
        "b2": sup.b2,
        "atom_at_zero": atom_at_zero(r),
        "k_eff_boundary": T,
        "k_eff_boundary_db": 10.0 * math.log10(T - 1.0),
    }
    if args.signals:
        out["k_eff"] = k_eff(args.signals, r)
    return out


def _density(args, man: RunManifest) -> dict[str, Any]:
    r = AspectRatios(args.c, args.c1)
    if args.points < 2:
        raise DomainError("--points must be at least 2")
    sup = support_endpoints(r)
    x = np.linspace(sup.b1, sup.b2, args.points)
    dens = limit_density_grid(x, r)
    path = Path(args.out)
    write_csv(path, ("x", "density"), zip(x.tolist(), dens.tolist()), man.parameter_hash)
    meta = {"c": r.c, "c1": r.c1, "b1": sup.b1, "b2": sup.b2, "atom_at_zero": atom_at_zero(r), "continuous_mass": continuous_mass(sup.b2, r)}
    jpath = write_json(path.with_suffix(".json"), meta, man.parameter_hash)
    man.output_paths += [str(path), str(jpath)]
    return meta


def _detect(args, man: RunManifest) -> dict[str, Any]:
    eigs = read_eigs(args.eigs)
    N = args.N
    if N is None:
        if args.mode == "jacobi":
            raise UsageError("--N is required in jacobi mode")
        N = args.n + 2  # unused by the known-noise statistic
    shape = SystemShape(args.n, args.m, N, args.field)
    spec = EmpiricalSpectrum.from_unsorted(eigs)
    centering = "analytic"
    trials = 2000
    if args.calibrate is not None:
        centering, trials = "calibrated", args.calibrate
    report = detect(spec, shape, args.alpha, args.mode, centering, trials, seed=args.seed)
    return report.to_dict()


def _write_pair(args, man: RunManifest, stem: str, columns, rows, meta: dict[str, Any]) -> None:
    out = Path(args.out_dir)
    csv_path = write_csv(out / f"{stem}.csv", columns, rows, man.parameter_hash)
    json_path = write_json(out / f"{stem}.json", meta, man.parameter_hash)
    man.output_paths += [str(csv_path), str(json_path)]


def _config(args, lam: float | None, *, seed_offset: int = 0) -> TrialConfig:
    shape = SystemShape(args.n, args.m, args.N, args.field)
    pop = PopulationSpectrum((lam,) if lam is not None else (), args.n)
    return TrialConfig(shape, pop, args.trials, args.seed, stream=seed_offset)


def _simulate(args, man: RunManifest) -> dict[str, Any]:
    kind = args.experiment
    if kind == "spike":
        res = ex.experiment_spike(_config(args, args.lam))
        meta = {"mean_top": res.mean_top, "sd_top": res.sd_top, "predicted": res.predicted, "trials": args.trials}
        _write_pair(args, man, "spike", ("trial", "top_eigenvalue"), enumerate(res.top.tolist()), meta)
        return meta
    if kind == "cdf-compare":
        res = ex.experiment_cdf_compare(_config(args, args.lam), _config(args, None, seed_offset=1))
        rows = zip(range(args.trials), ((i + 1) / args.trials for i in range(args.trials)), res.signal_top.tolist(), res.null_top.tolist())
        meta = {"ks": res.ks, "trials": args.trials}
        _write_pair(args, man, "cdf_compare", ("rank", "ecdf", "signal_top", "null_top"), rows, meta)
        return meta
    if kind == "edf":
        ks = ex.experiment_edf(_config(args, None))
        meta = {"median_ks": float(np.median(ks)), "max_ks": float(np.max(ks)), "trials": args.trials}
        _write_pair(args, man, "edf", ("trial", "ks"), enumerate(ks.tolist()), meta)
        return meta
    if kind == "heatmap":
        if args.N is None:
            if args.c1 is None:
                raise UsageError("give --N or --c1")
            args.N = int(round(args.n / args.c1))
        c1 = args.c1 if args.c1 is not None else args.n / args.N
        grid = ex.HeatmapGrid(args.snr, args.c, c1, args.alpha)
        base = SystemShape(args.n, max(args.n, 2), args.N, args.field)
        res = ex.experiment_heatmap(grid, base, args.trials, args.seed, args.alpha, args.mode, args.centering)
        rows = []
        for j, c in enumerate(res.c_nominal.tolist()):
            for i, s in enumerate(res.snr_db.tolist()):
                skipped = int(res.m[j] <= 1)
                rows.append((s, c, int(res.m[j]), float(res.c_actual[j]), float(res.probability[i, j]), float(res.theory_db[j]), float(res.known_noise_db[j]), skipped))
        meta = {
            "n": res.n,
            "N": res.N,
            "alpha": res.alpha,
            "trials": args.trials,
            "c": res.c_nominal,
            "m": res.m,
            "theory_db": res.theory_db,
            "known_noise_db": res.known_noise_db,
            "transition_db": [ex.empirical_transition(res.snr_db, res.probability[:, j]) for j in range(res.c_nominal.size)],
        }
        cols = ("snr_db", "c", "m", "c_actual", "probability", "theory_db", "known_noise_db", "skipped")
        _write_pair(args, man, "heatmap", cols, rows, meta)
        return {"cells": len(rows), "outputs": man.output_paths}
    raise UsageError(f"unknown experiment {kind!r}")


def _oracle(args, man: RunManifest) -> dict[str, Any]:
    r = AspectRatios(args.c, args.c1)
    H = inverse_mp_measure(r.c1, args.atoms)
    if args.check == "g-threshold":
        got = g_threshold(r.c, H)
        want = tau_threshold(r)
        return {"g_threshold": got, "closed_form": want, "abs_error": abs(got - want)}
    if args.check == "spike":
        tp = spike_to_tprime(args.lam, r.c1)
        got = spike_prediction(tp, r.c, H)
        want = lambda_of_tprime(tp, r)
        return {"t_prime": tp, "oracle": got, "closed_form": want, "abs_error": abs(got - want)}
    sup = support_endpoints(r)
    if args.search is None:
        search, pts = RealInterval(0.0, 2.0 * sup.b2), 100_000
    else:
        lo, hi, pts = args.search
        search = RealInterval(lo, hi)
    intervals = support_scan(r.c, H, search, pts)
    return {
        "outside_support": [[float(iv.lo), float(iv.hi)] for iv in intervals],
        "closed_form_support": [sup.b1, sup.b2],
        "atom_at_zero": atom_at_zero(r),
    }


def _tw_table(args, man: RunManifest) -> str:
    text = table_csv()
    if args.export:
        Path(args.export).write_text(text)
        man.output_paths.append(args.export)
    return text


def _params(args: argparse.Namespace) -> dict[str, Any]:
    # output locations do not change results, so they stay out of the hash
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "out", "out_dir", "export")}


_RANGE_FLAGS = ("--snr", "--c", "--search")


def _glue_ranges(argv: Sequence[str]) -> list[str]:
    # argparse reads "-5:15:20" as an option; bind it to its flag explicitly
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _RANGE_FLAGS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and ":" in nxt:
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_ranges(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "threshold": _threshold,
        "density": _density,
        "detect": _detect,
        "simulate": _simulate,
        "oracle": _oracle,
        "tw-table": _tw_table,
    }
    command = " ".join(x for x in (args.command, getattr(args, "experiment", None), getattr(args, "check", None)) if x)
    man = RunManifest(command, _params(args), getattr(args, "seed", None))
    try:
        out = handlers[args.command](args, man)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gevdetect: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, FileNotFoundError) as exc:
        print(f"gevdetect: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"gevdetect: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if isinstance(out, str):
        sys.stdout.write(out)
    else:
        print(json.dumps(out, indent=2, sort_keys=True, default=_default))
    print(man.to_json(), file=sys.stderr)
    return 0


def _default(x: Any) -> Any:
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def main() -> None:
    sys.exit(run())
