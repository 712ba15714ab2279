"""Convergence bookkeeping shared by the iterative drivers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

__all__ = ["ConvergenceReport", "Outcome"]


class Outcome(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    BLOWUP = "blowup"


@dataclass
class ConvergenceReport:
    """Per-iteration residuals and their ratios.

    ``ratio_history[k] = residual_history[k] / residual_history[k-1]``;
    the first entry has no predecessor and is recorded as NaN.
    """

    residual_history: list[float] = field(default_factory=list)
    ratio_history: list[float] = field(default_factory=list)
    outcome: Outcome = Outcome.MAX_ITER

    @property
    def iterates(self) -> int:
        return len(self.residual_history)

    def record(self, residual: float) -> None:
        if self.residual_history and self.residual_history[-1] > 0:
            self.ratio_history.append(residual / self.residual_history[-1])
        else:
            self.ratio_history.append(math.nan)
        self.residual_history.append(residual)

    def write_csv(self, path) -> None:
        """Log as `iter,residual,ratio` rows."""
        with open(path, "w") as fh:
            fh.write("iter,residual,ratio\n")
            for k, (res, rat) in enumerate(zip(self.residual_history, self.ratio_history)):
                fh.write(f"{k},{res:.17g},{rat:.17g}\n")
