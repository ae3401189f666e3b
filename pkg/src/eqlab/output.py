"""Serialization of result rows: CSV, JSON mirror, optional plot data.

Floats are written with 17 significant digits so equal runs produce
byte-identical files and values round-trip exactly. Whenever a row
carries both a volume and an entropy, the entropy must equal
log(volume); serialization enforces this invariant.
"""

from __future__ import annotations

import json
import math
import subprocess
from pathlib import Path

import eqlab
from eqlab.runner import ResultRow, RunResult

_EQ_DE_TOL = 1e-12


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def version_stamp() -> str:
    """git describe of the source tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return f"eqlab {eqlab.__version__} ({out.stdout.strip()})"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"eqlab {eqlab.__version__}"


def _check_entropy_invariant(row: ResultRow):
    if row.volume is not None and row.entropy is not None:
        if "general-density" in row.flags:
            return
        if abs(row.entropy - math.log(row.volume)) > _EQ_DE_TOL * max(1.0, abs(row.entropy)):
            raise ValueError(
                f"row violates entropy == log(volume): {row.entropy!r} vs log({row.volume!r})")


def rows_to_csv(rows: list, path: Path) -> Path:
    point_width = max((len(r.point) for r in rows), default=0)
    header = (["scenario", "economy_id"]
              + [f"point_{i}" for i in range(point_width)]
              + ["count", "sup_mean_curvature", "volume", "entropy",
                 "gauss_dispersion", "flags"])
    lines = [",".join(header)]
    for row in rows:
        _check_entropy_invariant(row)
        point = [_fmt(p) for p in row.point] + [""] * (point_width - len(row.point))
        cells = ([row.scenario, row.economy_id] + point
                 + [_fmt(row.count), _fmt(row.sup_mean_curvature), _fmt(row.volume),
                    _fmt(row.entropy), _fmt(row.gauss_dispersion), ";".join(row.flags)])
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _row_dict(row: ResultRow) -> dict:
    return {
        "scenario": row.scenario,
        "economy_id": row.economy_id,
        "point": [float(p) for p in row.point],
        "count": row.count,
        "sup_mean_curvature": row.sup_mean_curvature,
        "volume": row.volume,
        "entropy": row.entropy,
        "gauss_dispersion": row.gauss_dispersion,
        "flags": list(row.flags),
    }


def row_from_dict(obj: dict) -> ResultRow:
    return ResultRow(
        scenario=obj["scenario"],
        economy_id=obj["economy_id"],
        point=tuple(obj["point"]),
        count=obj["count"],
        sup_mean_curvature=obj["sup_mean_curvature"],
        volume=obj["volume"],
        entropy=obj["entropy"],
        gauss_dispersion=obj["gauss_dispersion"],
        flags=tuple(obj["flags"]),
    )


def rows_to_json(result: RunResult, config_echo: dict, path: Path) -> Path:
    for row in result.rows:
        _check_entropy_invariant(row)
    payload = {
        "version": version_stamp(),
        "config": config_echo,
        "summary": result.summary,
        "rows": [_row_dict(r) for r in result.rows],
        "failures": result.failures,
        "total_points": result.total_points,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def rows_to_plot(rows: list, path: Path) -> Path:
    """Scatter series: equilibrium count (x) against sup mean curvature (y)."""
    lines = ["x,y"]
    for row in rows:
        if row.count is not None and row.sup_mean_curvature is not None:
            lines.append(f"{_fmt(row.count)},{_fmt(row.sup_mean_curvature)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def emit(result: RunResult, config_echo: dict, out_dir, scenario: str,
         fmt: str = "both", plot_data: bool = False) -> list:
    """Write result files into out_dir; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not result.rows:
        raise ValueError("refusing to emit an empty row set")
    written = []
    if fmt in ("csv", "both"):
        written.append(rows_to_csv(result.rows, out_dir / f"{scenario}.csv"))
    if fmt in ("json", "both"):
        written.append(rows_to_json(result, config_echo, out_dir / f"{scenario}.json"))
    if plot_data:
        written.append(rows_to_plot(result.rows, out_dir / f"{scenario}_plot.csv"))
    return written
