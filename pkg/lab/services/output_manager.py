"""
Output Manager - writes CSV and JSON artifacts with fixed-precision numbers
so identical runs produce byte-identical files
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from config.settings import settings

logger = logging.getLogger(__name__)


class OutputManager:
    """Owns one output directory and the file names written into it"""

    FILE_NAMES = {
        "trajectory": "trajectory.csv",
        "certificate": "certificate.json",
        "measure": "measure.json",
        "snapshots": "snapshots.csv",
        "field": "field.csv",
        "telegraph": "telegraph.json",
        "diagnostics": "diagnostics.csv",
        "kernel": "kernel.json",
        "memory": "memory.json",
    }

    def __init__(self, out_dir: Path, digits: Optional[int] = None):
        self.out_dir = Path(out_dir)
        self.digits = digits or settings.float_digits
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, artifact: str) -> Path:
        return self.out_dir / self.FILE_NAMES[artifact]

    def write_csv(self, artifact: str, frame: pd.DataFrame) -> Path:
        path = self.path_for(artifact)
        frame.to_csv(path, index=False, float_format=f"%.{self.digits}g", lineterminator="\n")
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def write_json(self, artifact: str, payload: Any) -> Path:
        path = self.path_for(artifact)
        path.write_text(dumps(payload, self.digits) + "\n")
        logger.info(f"Wrote {path}")
        return path


def _plain(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return _plain(obj.model_dump(by_alias=True))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _encode(obj: Any, digits: int, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = f"{obj:.{digits}g}"
        if "." not in text and "e" not in text and "inf" not in text:
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, digits, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, digits, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload: Any, digits: int = 17) -> str:
    """JSON text with floats at ``digits`` significant digits; non-finite values become null"""
    return _encode(_plain(payload), digits, 0)
