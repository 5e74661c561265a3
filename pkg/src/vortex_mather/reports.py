"""
Writers for run artifacts: CSV tables, JSON summaries and archives, and
gnuplot scripts that read the CSVs.

Nothing here stamps the time, so identical runs give identical files.
"""

import json
import logging
import math
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import pandas as pd

from vortex_mather.config import config_hash
from vortex_mather.schemas import RunConfig

logger = logging.getLogger(__name__)

PACKAGE_NAME = "vortex-mather"
FALLBACK_VERSION = "0.1.0"

TWIST_SUMMARY_CSV = "twist_summary.csv"
ORBIT_CSV = "orbit.csv"
HULL_CSV = "hull.csv"
GENERATING_CSV = "generating_samples.csv"


def tool_version() -> str:
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return FALLBACK_VERSION


def to_jsonable(value):
    """numpy scalars and arrays to plain Python; non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def write_csv(frame: pd.DataFrame, path: Path, index: bool = False) -> Path:
    frame.to_csv(path, index=index, lineterminator="\n", encoding="utf-8", float_format="%.17g")
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def write_json(payload: dict, path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(to_jsonable(payload), sort_keys=True, indent=2))
        f.write("\n")
    logger.info("wrote %s", path)
    return path


def write_summary(out_dir: Path, command: str, config: RunConfig, results: dict) -> Path:
    """summary_<command>.json with the config hash and tool version embedded."""
    payload = {
        "command": command,
        "config_hash": config_hash(config),
        "version": tool_version(),
        "results": results,
    }
    return write_json(payload, Path(out_dir) / f"summary_{command}.json")


# ── gnuplot scripts ──────────────────────────────────────────────────


def twist_decay_script(csv_name: str = TWIST_SUMMARY_CSV) -> str:
    return "\n".join([
        "# sup over theta0 of |dG/dr0 - 2| against r0",
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'r0'",
        "set ylabel 'sup |dG/dr0 - 2|'",
        "set key off",
        f"plot '{csv_name}' using 1:2 skip 1 with linespoints pt 7",
        "",
    ])


def orbit_portrait_script(csv_name: str = ORBIT_CSV) -> str:
    return "\n".join([
        "# periodic orbit in (theta mod 2 pi, r)",
        "set datafile separator ','",
        "set xrange [0:2*pi]",
        "set xlabel 'theta mod 2 pi'",
        "set ylabel 'r'",
        "set key off",
        f"plot '{csv_name}' using (($2) - 2*pi*floor(($2)/(2*pi))):3 skip 1 with points pt 7",
        "",
    ])


def hull_functions_script(csv_name: str = HULL_CSV) -> str:
    return "\n".join([
        "# hull functions phi(xi) - xi and eta(xi)",
        "set datafile separator ','",
        "set xrange [0:2*pi]",
        "set xlabel 'xi'",
        "set multiplot layout 2,1",
        "set ylabel 'phi(xi) - xi'",
        f"plot '{csv_name}' using 1:($2 - $1) skip 1 with steps notitle",
        "set ylabel 'eta(xi)'",
        f"plot '{csv_name}' using 1:3 skip 1 with points pt 7 notitle",
        "unset multiplot",
        "",
    ])


PLOT_SCRIPTS = {
    "twist_decay.gp": twist_decay_script,
    "orbit_portrait.gp": orbit_portrait_script,
    "hull_functions.gp": hull_functions_script,
}


def write_plot_scripts(out_dir: Path) -> list[Path]:
    """Write every gnuplot script next to the CSVs it reads; missing CSVs are only logged."""
    out_dir = Path(out_dir)
    written = []
    for name, build in PLOT_SCRIPTS.items():
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(build())
        written.append(path)
    for csv_name in (TWIST_SUMMARY_CSV, ORBIT_CSV, HULL_CSV):
        if not (out_dir / csv_name).exists():
            logger.warning("%s not found in %s; run the matching command before plotting", csv_name, out_dir)
    return written
