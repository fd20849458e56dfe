"""Deterministic JSON run reports."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

FORMAT_VERSION = 1
SIGNIFICANT_DIGITS = 12


def _normalize(obj: Any) -> Any:
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        # round-trips through a 12-significant-digit decimal
        x = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_normalize(v) for v in obj]
    if hasattr(obj, "as_dict"):
        return _normalize(obj.as_dict())
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_normalize(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


@dataclass
class RunReport:
    command: str
    config: dict
    seed: int | None = None
    warnings: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    provenance: Any = None

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "format_version": FORMAT_VERSION,
            "metrics": self.metrics,
            "provenance": self.provenance,
            "seed": self.seed,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return dumps(self.as_dict())
