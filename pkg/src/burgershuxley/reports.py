"""Self-contained experiment reports.

Each experiment emits one ExperimentReport holding every number it
produced, tagged with provenance (empirical / analytic-bound / fitted), the
one-sided comparisons it asserts, and a verdict recomputable from the
stored values: bound-respected iff empirical <= bound + 3*SE in every
comparison.  The bounds under test are not tight, so "bound-respected" is
the strongest claim a report ever makes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

VERDICTS = ("bound-respected", "bound-violated", "inconclusive")


@dataclass(frozen=True)
class Comparison:
    """One asserted inequality: empirical <= bound within 3 standard errors."""

    name: str
    empirical: float
    bound: float
    standard_error: float = 0.0

    @property
    def margin(self) -> float:
        return self.bound + 3.0 * self.standard_error - self.empirical

    @property
    def respected(self) -> bool:
        return bool(self.margin >= 0.0)


@dataclass
class ExperimentReport:
    name: str
    theorem_ref: str
    parameter_snapshot: dict
    sample_count: int
    comparisons: list[Comparison] = field(default_factory=list)
    fitted: dict = field(default_factory=dict)
    extra_empirical: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    inconclusive_reason: str | None = None

    @property
    def verdict(self) -> str:
        if self.inconclusive_reason is not None:
            return "inconclusive"
        if all(c.respected for c in self.comparisons):
            return "bound-respected"
        return "bound-violated"

    def to_dict(self) -> dict:
        def num(x, provenance):
            if isinstance(x, (list, tuple, np.ndarray)):
                return {"value": [float(v) for v in np.asarray(x).ravel()],
                        "provenance": provenance}
            return {"value": float(x), "provenance": provenance}

        return {
            "name": self.name,
            "theorem_ref": self.theorem_ref,
            "parameter_snapshot": _plain(self.parameter_snapshot),
            "sample_count": int(self.sample_count),
            "verdict": self.verdict,
            "comparisons": [
                {
                    "name": c.name,
                    "empirical": num(c.empirical, "empirical"),
                    "bound": num(c.bound, "analytic-bound"),
                    "standard_error": num(c.standard_error, "empirical"),
                    "margin": num(c.margin, "empirical"),
                    "respected": c.respected,
                }
                for c in self.comparisons
            ],
            "fitted": {k: num(v, "fitted") for k, v in self.fitted.items()},
            "empirical": {k: num(v, "empirical") for k, v in self.extra_empirical.items()},
            "notes": list(self.notes),
            "inconclusive_reason": self.inconclusive_reason,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, **kw)


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_summary_csv(reports: list[ExperimentReport], path) -> None:
    """Flat one-row-per-report summary of verdicts and worst margins."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["name", "verdict", "sample_count", "n_comparisons",
                    "worst_margin", "worst_comparison"])
        for r in reports:
            if r.comparisons:
                worst = min(r.comparisons, key=lambda c: c.margin)
                w.writerow([r.name, r.verdict, r.sample_count,
                            len(r.comparisons), f"{worst.margin:.6g}", worst.name])
            else:
                w.writerow([r.name, r.verdict, r.sample_count, 0, "", ""])


def mc_mean_se(samples: np.ndarray, axis=0) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean and standard error along an axis."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[axis]
    mean = np.mean(samples, axis=axis)
    se = np.std(samples, axis=axis, ddof=1) / np.sqrt(n)
    return mean, se