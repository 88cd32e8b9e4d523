"""Run manifests, CSV tables and the consolidated report."""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "RunManifest",
    "format_number",
    "write_csv",
    "read_csv",
    "file_hash",
    "fit_loglog_slope",
    "build_report",
]

MANIFEST_SUFFIX = ".manifest.json"


def format_number(v) -> str:
    """Scientific notation with 9 significant digits; ints and strings as is."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.8e}"
    return str(v)


def write_csv(path, rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns or (rows[0].keys() if rows else []))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_number(r[c]) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def file_hash(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import numpy, scipy, sklearn  # noqa: E401
    from . import __version__
    out = {"microct": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__,
           "scikit-learn": sklearn.__version__, "python": platform.python_version()}
    try:
        import pyamg
        out["pyamg"] = pyamg.__version__
    except ImportError:  # pragma: no cover
        pass
    return out


class RunManifest:
    """JSON record of one CLI run.

    Written once when the run starts (outputs listed, no hashes) and
    rewritten on completion with the wall time and a hash per output.
    """

    def __init__(self, path, command: str, flags: dict, inputs: Iterable = (), outputs: Iterable = ()):
        self.path = Path(path)
        self.command = command
        self.flags = flags
        self.inputs = [Path(p) for p in inputs]
        self.outputs = [Path(p) for p in outputs]
        self._t0 = time.perf_counter()
        self.status = "running"
        self.wall_time = None

    def to_dict(self) -> dict:
        done = self.status == "completed"
        return {
            "command": self.command,
            "flags": self.flags,
            "inputs": {str(p): file_hash(p) for p in self.inputs if p.is_file()},
            "versions": _versions(),
            "status": self.status,
            "wall_time_s": self.wall_time,
            "outputs": {str(p.name): (file_hash(p) if done and p.is_file() else None) for p in self.outputs},
        }

    def write(self) -> Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return self.path

    def start(self) -> "RunManifest":
        self.write()
        return self

    def complete(self) -> Path:
        missing = [str(p) for p in self.outputs if not p.is_file()]
        if missing:
            raise RuntimeError(f"declared outputs were not written: {missing}")
        self.wall_time = time.perf_counter() - self._t0
        self.status = "completed"
        return self.write()


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, float)
    y = np.abs(np.asarray(y, float))
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


_ERROR_COLUMNS = ("abs_error", "rel_error")


def _table_csv(run_dir: Path, manifest: dict) -> Optional[Path]:
    for name in manifest.get("outputs", {}):
        if name.endswith(".csv"):
            return run_dir / name
    return None


def build_report(run_dirs: Sequence, out_dir) -> dict:
    """Merge every completed run under ``run_dirs`` into report.md and report.csv.

    Runs with a ``lambda`` column are grouped by command; each run adds one
    error column labelled by its grid and a log-log slope for it.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifests, skipped = [], []
    for d in run_dirs:
        d = Path(d)
        found = sorted(d.glob("*" + MANIFEST_SUFFIX)) if d.is_dir() else []
        if d.is_dir() and not found and any(d.iterdir()):
            skipped.append(str(d))
        for m in found:
            try:
                data = json.loads(m.read_text())
            except (OSError, json.JSONDecodeError):
                skipped.append(str(m))
                continue
            if data.get("status") != "completed":
                skipped.append(str(m))
                continue
            manifests.append((m, data))
        if not d.is_dir():
            skipped.append(str(d))

    groups: dict = {}
    for m, data in manifests:
        csv_path = _table_csv(m.parent, data)
        if csv_path is None or not csv_path.is_file():
            continue
        rows = read_csv(csv_path)
        if not rows or "lambda" not in rows[0]:
            continue
        err = next((c for c in _ERROR_COLUMNS if c in rows[0]), None)
        if err is None:
            continue
        grid = data.get("flags", {}).get("grid")
        label = f"{err} (grid={grid})" if grid is not None else f"{err} ({m.stem})"
        col = {float(r["lambda"]): float(r[err]) for r in rows}
        groups.setdefault(data["command"], []).append((label, col))

    flat_rows = []
    lines = ["# microct report", ""]
    for command in sorted(groups):
        cols = groups[command]
        lams = sorted({lam for _, col in cols for lam in col})
        lines += [f"## {command}", "", "| lambda | " + " | ".join(lab for lab, _ in cols) + " |",
                  "|---" * (len(cols) + 1) + "|"]
        for lam in lams:
            cells = [format_number(col[lam]) if lam in col else "" for _, col in cols]
            lines.append(f"| {format_number(lam)} | " + " | ".join(cells) + " |")
            for (lab, col) in cols:
                if lam in col:
                    flat_rows.append({"command": command, "column": lab, "lambda": lam, "value": col[lam]})
        slopes = [fit_loglog_slope(list(col), list(col.values())) for _, col in cols]
        lines.append("| slope | " + " | ".join(format_number(s) for s in slopes) + " |")
        lines.append("")
    if skipped:
        lines += ["## skipped", ""] + [f"- {s}" for s in skipped] + [""]
    md = out_dir / "report.md"
    md.write_text("\n".join(lines) + "\n")
    table = write_csv(out_dir / "report.csv", flat_rows, ["command", "column", "lambda", "value"])
    return {"markdown": md, "csv": table, "runs": len(manifests), "skipped": skipped}
