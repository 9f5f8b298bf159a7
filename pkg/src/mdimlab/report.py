"""Report containers shared by the check and estimation routines."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

HOLDS = "holds"
FAILS = "fails"
WEAKENED = "weakened-check-holds"
EVIDENCE = "evidence-only"
INCONCLUSIVE = "inconclusive"
SKIPPED = "skipped"


def compare_bounds(left_hi: float, left_lo: float, right_lo: float, right_hi: float,
                   tol: float = 0.0) -> str:
    """Status of ``left <= right`` when both sides are only known as brackets.

    ``certified`` uses the upper end of the left side against the lower end
    of the right side, ``violated`` the opposite ends.
    """
    if left_hi <= right_lo + tol:
        return "certified"
    if left_lo > right_hi + tol:
        return "violated"
    return "undetermined"


@dataclass
class VerificationReport:
    claim: str
    rows: list[dict[str, Any]] = field(default_factory=list)
    verdict: str = INCONCLUSIVE
    tolerances: dict[str, float] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict in (HOLDS, WEAKENED, EVIDENCE)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def verdict_from_statuses(statuses: list[str], weakened: bool = False) -> str:
    if any(s == "violated" for s in statuses):
        return FAILS
    if statuses and all(s == "certified" for s in statuses):
        return WEAKENED if weakened else HOLDS
    return INCONCLUSIVE


@dataclass
class DimensionEstimate:
    """A quantity tabulated over a decreasing scale grid and its growth against ``log(1/eps)``.

    ``values`` are the unnormalized numerators (``S``, ``inf h``, ``R`` ...),
    ``ratios`` are ``value / log(1/eps)``.  ``slope`` is the least-squares
    slope of ``values`` against ``log(1/eps)`` and ``residual`` the largest
    absolute deviation from that line.  Optional ``lower``/``upper`` carry
    bracket ends of the numerators.
    """

    label: str
    eps_grid: list[float]
    values: list[float]
    ratios: list[float]
    slope: float
    intercept: float
    residual: float
    ratio_last: float
    lower: list[float] | None = None
    upper: list[float] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def mean_ratio(self) -> float:
        return float(sum(self.ratios) / len(self.ratios)) if self.ratios else float("nan")

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for i, (e, v, r) in enumerate(zip(self.eps_grid, self.values, self.ratios)):
            row = {"eps": e, "value": v, "ratio": r}
            if self.lower is not None:
                row["lower"] = self.lower[i]
                row["upper"] = self.upper[i]
            out.append(row)
        return out


def fit_dimension(label: str, eps_grid, values, lower=None, upper=None) -> DimensionEstimate:
    """Least-squares line of ``values`` against ``log(1/eps)``."""

    eps = np.asarray(eps_grid, dtype=float)
    if eps.size < 2 or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_grid must be strictly decreasing with at least two points")
    if np.any(eps >= 1) or np.any(eps <= 0):
        raise ValueError("eps_grid must lie in (0, 1)")
    x = np.log(1.0 / eps)
    y = np.asarray(values, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    ratios = (y / x).tolist()
    return DimensionEstimate(label, eps.tolist(), y.tolist(), ratios, float(slope), float(intercept),
                             resid, ratios[-1],
                             None if lower is None else [float(v) for v in lower],
                             None if upper is None else [float(v) for v in upper])
