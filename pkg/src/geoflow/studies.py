"""Step-size ladders and fitted convergence orders."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

ROUNDOFF_FLOOR = 1e-12


def fit_order(steps: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of ``log(residual)`` against ``log(step)``."""
    steps = np.asarray(steps, dtype=float)
    res = np.asarray(residuals, dtype=float)
    if steps.size < 2:
        raise ValueError("need at least two steps to fit an order")
    res = np.maximum(res, np.finfo(float).tiny)
    return float(np.polyfit(np.log(steps), np.log(res), 1)[0])


@dataclass
class ConvergenceStudy:
    label: str
    steps: list
    residuals: list
    order: float
    classification: str

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        lines = [f"{self.label}", f"{'step':>12}  {'residual':>12}"]
        lines += [f"{h:>12.4e}  {r:>12.4e}" for h, r in zip(self.steps, self.residuals)]
        lines.append(f"fitted order: {self.order:.3f} ({self.classification})")
        return "\n".join(lines) + "\n"


def classify(residuals, order: float, floor: float = ROUNDOFF_FLOOR) -> str:
    if max(residuals) <= floor:
        return "roundoff floor"
    if abs(order) <= 0.5:
        return "non-vanishing limit"
    return f"converging at order {order:.2f}"


def convergence_study(residual: Callable[[float], float], steps: Sequence[float], label: str = "") -> ConvergenceStudy:
    """Evaluate ``residual(step)`` on a ladder of at least three steps and fit the order."""
    steps = [float(h) for h in steps]
    if len(steps) < 3:
        raise ValueError("a convergence study needs at least 3 steps")
    if any(h <= 0 for h in steps):
        raise ValueError("steps must be positive")
    res = [float(residual(h)) for h in steps]
    order = fit_order(steps, res)
    return ConvergenceStudy(label, steps, res, order, classify(res, order))
