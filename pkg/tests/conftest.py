import json
import os
from pathlib import Path

import pytest

from gevdetect import cli

ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}

DESK_HEATMAP_ARGV = [
    "simulate", "heatmap", "--n", "64", "--c1", "0.3333", "--snr", "-5:15:20", "--c", "0.5:4:20",
    "--trials", "100", "--alpha", "0.01", "--seed", "42",
]


def record(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        parts = ACCEPTANCE[key]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(f"{'ok' if ok else 'MISS'}: {d}" for ok, d in parts)
        terminalreporter.write_line(f"[{verdict}] criterion {key} | {details}")


def run_cli(argv, workers=1, capsys=None):
    """Run the CLI in-process with a given worker count; returns (code, stdout, stderr)."""
    old = os.environ.get("GEVDETECT_WORKERS")
    os.environ["GEVDETECT_WORKERS"] = str(workers)
    try:
        code = cli.run(list(argv))
    finally:
        if old is None:
            os.environ.pop("GEVDETECT_WORKERS", None)
        else:
            os.environ["GEVDETECT_WORKERS"] = old
    return code


@pytest.fixture(scope="session")
def desk_heatmap(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("heatmap_w1")
    assert run_cli(DESK_HEATMAP_ARGV + ["--out-dir", str(out)], workers=1) == 0
    return out


def read_csv(path: Path):
    import csv

    lines = path.read_text().splitlines()
    assert lines[0].startswith("# parameter_hash=")
    return list(csv.DictReader(lines[1:]))


def read_json(path: Path) -> dict:
    return json.loads(path.read_text())
