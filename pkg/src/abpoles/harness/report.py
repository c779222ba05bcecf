"""Deterministic CSV/JSON reports for the experiments.

Floats are written with ``repr`` (shortest round-trip decimal), keys are sorted,
and wall-clock timings are dropped so that identical configs give identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..eigensolve import RESIDUAL_TOL, SIMPLE_GAP
from ..energy import EXTRAP_TOL, QUAD_TOL
from .oracle import ZERO_TOL

TABLE_COLUMNS = ("epsilon", "lambda_eps", "delta_lambda", "E_eps", "L_eps", "predicted", "ratio")
LONG_COLUMNS = ("series", "x_name", "x", "value")
VOLATILE_KEYS = frozenset({"seconds"})


class ReportError(OSError):
    pass


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    target: str = ""
    note: str = ""

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number} {self.name}: {vals} (target: {self.target})"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": bool(self.passed),
                "measured": self.measured, "target": self.target, "note": self.note}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def tolerances(config=None) -> dict:
    out = {
        "simple_gap": SIMPLE_GAP,
        "eigen_residual": RESIDUAL_TOL,
        "quadrature": QUAD_TOL,
        "truncation_change": EXTRAP_TOL,
        "bessel_zero": ZERO_TOL,
    }
    if config is not None:
        out["tol_eigen"] = config.tol_eigen
    return out


def clean(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to None, timings dropped."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "to_dict"):
        return clean(obj.to_dict())
    return obj


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportError(f"cannot write report file {path}: {exc.strerror or exc}") from exc
    return path


def table_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(TABLE_COLUMNS)
    for r in rows:
        r = r if isinstance(r, dict) else vars(r)
        wr.writerow([_cell(r[c]) for c in TABLE_COLUMNS])
    return buf.getvalue()


def long_csv(series: dict) -> str:
    """``series`` maps a name to ``(x_name, xs, values)``; one output line per point."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(LONG_COLUMNS)
    for name in sorted(series):
        x_name, xs, ys = series[name]
        for x, y in zip(xs, ys):
            wr.writerow([name, x_name, _cell(float(x)), _cell(float(y))])
    return buf.getvalue()


def table_series(rows) -> dict:
    names = ("lambda_eps", "lambda_0", "delta_lambda", "E_eps", "L_eps", "predicted", "ratio",
             "precise_ratio", "E_scaled", "L_scaled", "grad_gap_scaled")
    rows = [r if isinstance(r, dict) else vars(r) for r in rows]
    eps = [r["epsilon"] for r in rows]
    return {n: ("epsilon", eps, [r[n] for r in rows]) for n in names if rows and n in rows[0]}


def summary_json(summary: dict) -> str:
    return json.dumps(clean(summary), sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_report(out_dir, rows=(), results=None, criteria=(), config=None, series=None, name="report") -> dict:
    """Write ``<name>_table.csv``, ``<name>_long.csv`` and ``<name>_summary.json`` into ``out_dir``.

    ``rows`` are convergence rows (objects or dicts with the table columns),
    ``results`` any JSON-able experiment payload, ``criteria`` a list of
    :class:`Criterion`.  Returns the written paths by kind.
    """
    out = Path(out_dir)
    rows = list(rows)
    if series is None:
        series = table_series(rows)
    crit = [c.to_dict() for c in criteria]
    summary = {
        "config": config.to_dict() if config is not None else None,
        "config_hash": config.config_hash() if config is not None else None,
        "tolerances": tolerances(config),
        "criteria": crit,
        "n_criteria": len(crit),
        "n_passed": sum(c["passed"] for c in crit),
        "results": results,
    }
    paths = {
        "table": _write(out / f"{name}_table.csv", table_csv(rows)),
        "long": _write(out / f"{name}_long.csv", long_csv(series)),
        "summary": _write(out / f"{name}_summary.json", summary_json(summary)),
    }
    return paths


def report_hash(paths: dict) -> str:
    h = hashlib.sha256()
    for kind in sorted(paths):
        h.update(Path(paths[kind]).read_bytes())
    return h.hexdigest()
