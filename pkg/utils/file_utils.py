import csv
import io
import json
import logging
import math
import os
import re
from typing import Any, Iterable, Tuple

import numpy as np

logger = logging.getLogger(__name__)

_FLOAT_MARK = "\u0000f:"


def safe_filename(filename):
    # Replace invalid characters with underscores
    safe_name = re.sub(r'[^\w\-\.]', '_', filename)

    # Ensure the filename isn't too long
    if len(safe_name) > 255:
        name, ext = os.path.splitext(safe_name)
        safe_name = name[:255-len(ext)] + ext

    return safe_name


def spin_filename(prefix: str, spin_label: str, extension: str) -> str:
    """spectrum + '0,1/2' -> spectrum_0_half.csv"""
    slug = spin_label.replace("1/2", "half").replace(",", "_")
    return safe_filename(f"{prefix}_{slug}.{extension}")


def format_float(value: float) -> str:
    value = float(value)
    if value == 0.0:
        return "0"
    if not math.isfinite(value):
        return "null"
    return format(value, ".17g")


def _mark_floats(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return _FLOAT_MARK + format_float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): _mark_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_mark_floats(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_mark_floats(v) for v in value.tolist()]
    return value


def dumps_deterministic(payload: Any) -> str:
    """JSON with insertion-ordered keys, indent=2 and every float at 17 significant digits"""
    text = json.dumps(_mark_floats(payload), indent=2, ensure_ascii=False)
    return re.sub(r'"\\u0000f:([^"]*)"', r"\1", text) + "\n"


def write_json(payload: Any, directory: str, filename: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, safe_filename(filename))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_deterministic(payload))
    logger.info(f"Wrote {path}")
    return path


def spectrum_csv_text(rows: Iterable[Tuple[float, int]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["eigenvalue", "multiplicity"])
    for value, multiplicity in rows:
        writer.writerow([format_float(value), int(multiplicity)])
    return buffer.getvalue()


def write_csv(rows: Iterable[Tuple[float, int]], directory: str, filename: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, safe_filename(filename))
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(spectrum_csv_text(rows))
    logger.info(f"Wrote {path}")
    return path
