import json
import math
import os
from typing import Any, Dict

import numpy as np


def plain_value(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [plain_value(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [plain_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): plain_value(v) for k, v in value.items()}
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    return str(value)


def format_report(report: Dict[str, Any]) -> str:
    """key = value lines in insertion order."""
    plain = plain_value(report)
    width = max((len(k) for k in plain), default=0)
    return "".join(f"{key.ljust(width)} = {_format(value)}\n" for key, value in plain.items())


def write_report(report: Dict[str, Any], directory: str, stem: str = "report") -> Dict[str, str]:
    os.makedirs(directory, exist_ok=True)
    text_path = os.path.join(directory, f"{stem}.txt")
    json_path = os.path.join(directory, f"{stem}.json")
    with open(text_path, "w", encoding="utf-8") as f:
        f.write(format_report(report))
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(plain_value(report), f, indent=2, sort_keys=False)
        f.write("\n")
    return {"text": text_path, "json": json_path}
