"""Cohort tables: per-method summaries, margin likelihood, method comparison and chart data."""

from __future__ import annotations

import enum
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..core import StatisticsError
from .metrics import SpecimenReport, all_deviations
from .statistics import CohortSummary, WilcoxonResult, describe, wilcoxon_rank_sum

DEFAULT_THRESHOLDS = (1.0, 3.0, 5.0)
METRICS = ("distance_deviation", "roll_deviation", "pitch_deviation", "max_deviation")


@dataclass(frozen=True)
class MarginTable:
    thresholds: tuple[float, ...]
    # method -> percent of planes with distance deviation strictly below each threshold
    percentages: Mapping[str, tuple[float, ...]]
    counts: Mapping[str, int] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        columns = [f"<{t:g} mm" for t in self.thresholds]
        frame = pd.DataFrame.from_dict(dict(self.percentages), orient="index", columns=columns)
        frame.index.name = "method"
        frame.insert(0, "n", [self.counts.get(method, 0) for method in frame.index])
        return frame.sort_index()


def margin_table(
    deviations: Mapping[str, Sequence[float]], thresholds: Sequence[float] = DEFAULT_THRESHOLDS
) -> MarginTable:
    """Share of planes per method whose distance deviation is strictly below each threshold."""
    ordered = tuple(sorted(float(t) for t in thresholds))
    if not deviations:
        raise StatisticsError("margin table needs at least one method")
    percentages: dict[str, tuple[float, ...]] = {}
    counts: dict[str, int] = {}
    for method, values in deviations.items():
        array = np.asarray(values, dtype=np.float64)
        if array.size == 0:
            raise StatisticsError(f"no deviations for {method}")
        percentages[method] = tuple(100.0 * float(np.mean(array < t)) for t in ordered)
        counts[method] = int(array.size)
    return MarginTable(ordered, percentages, counts)


def metric_values(reports: Sequence[SpecimenReport], metric: str) -> list[float]:
    """Raw values of one metric; max_deviation is per specimen, the rest per plane."""
    if metric == "max_deviation":
        return [report.max_deviation for report in reports if report.deviations]
    values = (getattr(d, metric) for d in all_deviations(reports))
    return [float(v) for v in values if v is not None]


@dataclass(frozen=True)
class MethodSummary:
    method: str
    metrics: Mapping[str, CohortSummary]


def summarize_method(reports: Sequence[SpecimenReport], method: str = "") -> MethodSummary:
    name = method or (reports[0].method.value if reports else "")
    return MethodSummary(name, {metric: describe(metric_values(reports, metric)) for metric in METRICS})


@dataclass(frozen=True)
class MetricComparison:
    test: WilcoxonResult
    significant: bool
    # percent reduction of the second method's mean achieved by the first
    reduction_percent: float | None


@dataclass(frozen=True)
class Comparison:
    first: MethodSummary
    second: MethodSummary
    metrics: Mapping[str, MetricComparison]
    margins: MarginTable
    alpha: float


def compare_methods(
    first: Sequence[SpecimenReport],
    second: Sequence[SpecimenReport],
    alpha: float = 0.05,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    names: tuple[str, str] | None = None,
) -> Comparison:
    """Summaries of both methods, a rank-sum test per metric and the margin table."""
    first_summary = summarize_method(first, names[0] if names else "")
    second_summary = summarize_method(second, names[1] if names else "")
    if first_summary.method == second_summary.method:
        second_summary = MethodSummary(f"{second_summary.method}-b", second_summary.metrics)
    compared = {}
    for metric in METRICS:
        test = wilcoxon_rank_sum(metric_values(first, metric), metric_values(second, metric))
        base = second_summary.metrics[metric].mean
        reduction = None if base == 0 else 100.0 * (base - first_summary.metrics[metric].mean) / base
        compared[metric] = MetricComparison(test, test.p_value < alpha, reduction)
    margins = margin_table(
        {
            first_summary.method: metric_values(first, "distance_deviation"),
            second_summary.method: metric_values(second, "distance_deviation"),
        },
        thresholds,
    )
    return Comparison(first_summary, second_summary, compared, margins, alpha)


class ChartCategory(str, enum.Enum):
    WITHIN = "within-tolerance"
    EXCEEDS = "exceeds-tolerance"
    INTRALESIONAL = "intralesional"


def classify(signed_mm: float, tolerance_mm: float, involvement_mm: float) -> ChartCategory:
    if signed_mm < -involvement_mm:
        return ChartCategory.INTRALESIONAL
    if abs(signed_mm) < tolerance_mm:
        return ChartCategory.WITHIN
    return ChartCategory.EXCEEDS


def deviation_chart(
    reports: Sequence[SpecimenReport], tolerance_mm: float = 3.0, involvement_mm: float = 5.0
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Signed deviation per plane with its category, and counts per method and category."""
    rows = [
        {
            "method": report.method.value,
            "specimen": report.specimen_id,
            "side": report.side,
            "label": deviation.label,
            "signed_mm": deviation.signed_deviation,
            "category": classify(deviation.signed_deviation, tolerance_mm, involvement_mm).value,
        }
        for report in reports
        for deviation in report.deviations
    ]
    columns = ["method", "specimen", "side", "label", "signed_mm", "category"]
    chart = pd.DataFrame(rows, columns=columns)
    categories = [category.value for category in ChartCategory]
    counts = (
        chart.groupby(["method", "category"]).size().unstack(fill_value=0).reindex(columns=categories, fill_value=0)
        if not chart.empty
        else pd.DataFrame(columns=categories)
    )
    counts = counts.astype(int)
    totals = counts.sum(axis=1)
    for category in categories:
        counts[f"{category}_percent"] = 100.0 * counts[category] / totals
    return chart, counts.sort_index()
