"""Small result containers shared by the numerical self-checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class CheckReport:
    """Outcome of one numerical identity check.

    Attributes
    ----------
    name : str
        Short identifier of the check.
    passed : bool
        Whether every residual is within ``tol``.
    max_residual : float
        Largest residual over the samples (``nan`` if nothing was evaluated).
    tol : float
        Threshold used for ``passed``.
    residuals : list of float
        Per-sample residuals.
    details : dict
        Free-form extra data (JSON-friendly values only).
    """

    name: str
    passed: bool
    max_residual: float
    tol: float
    residuals: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @classmethod
    def from_residuals(cls, name: str, residuals, tol: float, **details) -> "CheckReport":
        r = [float(v) for v in np.ravel(np.asarray(residuals, dtype=float))]
        worst = max(r) if r else float("nan")
        ok = bool(r) and all(np.isfinite(r)) and worst <= tol
        return cls(name, ok, worst, tol, r, dict(details))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_residual": _jsonable(self.max_residual),
            "tol": self.tol,
            "residuals": [_jsonable(v) for v in self.residuals],
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(v):
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v
