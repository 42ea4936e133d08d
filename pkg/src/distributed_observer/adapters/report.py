"""JSON report writing for synthesis artifacts, certificate reports and summaries."""

import json
import math
from pathlib import Path
from typing import Any, Dict

import numpy as np

from distributed_observer.ports.interfaces import IReportWriter


def to_jsonable(obj: Any) -> Any:
    """numpy values -> plain lists/floats; non-finite floats -> None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


class JsonReportWriter(IReportWriter):
    def write(self, record: Dict[str, Any], path: str) -> str:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            json.dump(to_jsonable(record), f, indent=2)
            f.write("\n")
        return str(out)
