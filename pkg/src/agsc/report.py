"""Collect stage outputs into one plot-ready report directory."""

from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path

from . import __version__
from .config import atomic_write, read_manifest, sha256_file
from .errors import DataError

TABLE_COLUMNS = ["Language", "Model", "Structure", "Word variant", "% Neurons for TE", "% Neurons for Max. NIE"]
REPORT_DIR = "report"
MANIFEST_FILE = "manifest.json"


def _rows(path: Path) -> list[dict]:
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _seed(path: Path) -> str:
    first = path.read_text(encoding="utf-8").splitlines()[0]
    return first.split()[1].split("=", 1)[1] if first.startswith("# seed=") else ""


def build_report(run_dir) -> Path:
    """Write ``report/`` inside ``run_dir``; identical inputs give identical bytes."""
    run_dir = Path(run_dir)
    sparsity = run_dir / "sparsity.csv"
    missing = [name for name in ("sparsity.csv", "curves", "contours", "effects") if not (run_dir / name).exists()]
    if missing:
        raise DataError(f"{run_dir}: missing stage outputs {missing}")
    out = run_dir / REPORT_DIR
    if out.exists():
        shutil.rmtree(out)
    out.mkdir()
    seed = _seed(sparsity)
    head = f"# seed={seed} version={__version__}\n"

    rows = _rows(sparsity)
    simple = [r for r in rows if r["structure"] == "simple"] or rows
    lines = [",".join(f'"{c}"' if "," in c else c for c in TABLE_COLUMNS)]
    for r in simple:
        lines.append(",".join([r["language"], r["model"], r["structure"], r["word_variant"],
                               f"{float(r['pct_to_te']):.1f}", f"{float(r['pct_to_max']):.1f}"]))
    atomic_write(out / "sparsity_table.csv", head + "\n".join(lines) + "\n")
    shutil.copyfile(sparsity, out / "sparsity_metrics.csv")
    for sub in ("curves", "contours", "overlap"):
        src = run_dir / sub
        if src.is_dir():
            shutil.copytree(src, out / sub)

    files = sorted(p for p in out.rglob("*") if p.is_file())
    index = {
        "seed": seed,
        "version": __version__,
        "files": {str(p.relative_to(out)): sha256_file(p) for p in files},
    }
    atomic_write(out / "index.json", json.dumps(index, indent=1, sort_keys=True) + "\n")
    _register(run_dir, out)
    return out


def _register(run_dir: Path, out: Path) -> None:
    """Add the report files to the run manifest, when there is one."""
    path = run_dir / MANIFEST_FILE
    if not path.is_file():
        return
    doc = read_manifest(path)
    outputs = {k: v for k, v in doc.get("outputs", {}).items() if not k.startswith(REPORT_DIR + "/")}
    for p in sorted(q for q in out.rglob("*") if q.is_file()):
        outputs[str(p.relative_to(run_dir))] = sha256_file(p)
    doc["outputs"] = outputs
    doc.setdefault("stages", {})["report"] = {"status": "ok"}
    atomic_write(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")
