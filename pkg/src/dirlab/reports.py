"""Shared result record for inequality checks.

Every check in this package reduces to "is lhs <= rhs, given this constant",
possibly over many samples. The report keeps the binding sample so failures
are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = ["InequalityReport", "compare", "merge"]


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    constant_used: float
    passed: bool
    samples: int = 1
    detail: str = ""

    def __str__(self) -> str:
        tag = "pass" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} "
                f"margin={self.margin:.3g} C={self.constant_used:.6g} "
                f"samples={self.samples}" + (f" ({self.detail})" if self.detail else ""))


def compare(name: str, lhs: float, rhs: float, *, constant: float = math.nan,
            rel_tol: float = 1e-9, samples: int = 1, detail: str = "") -> InequalityReport:
    """Build a report for the claim lhs <= rhs.

    Tolerance is relative to 1 + |lhs| + |rhs| so checks behave the same for
    tiny and huge energies.
    """
    scale = 1.0 + abs(lhs) + abs(rhs)
    margin = rhs - lhs
    passed = bool(lhs <= rhs + rel_tol * scale)
    return InequalityReport(name=name, lhs=float(lhs), rhs=float(rhs), margin=float(margin),
                            constant_used=float(constant), passed=passed,
                            samples=samples, detail=detail)


def merge(name: str, reports: list[InequalityReport]) -> InequalityReport:
    """Aggregate sub-reports, keeping the worst (smallest-margin) sample."""
    if not reports:
        return InequalityReport(name, 0.0, 0.0, 0.0, math.nan, True, 0, "no samples")
    worst = min(reports, key=lambda r: r.margin)
    total = sum(r.samples for r in reports)
    passed = all(r.passed for r in reports)
    return replace(worst, name=name, passed=passed, samples=total)
