"""Post-operative measurement suite, cohort statistics and report files."""

from .heatmap import heatmap_field, plane_gap_along_normal
from .metrics import (
    PlaneDeviation,
    SpecimenReport,
    all_deviations,
    deviations,
    evaluate_results,
    evaluate_trial,
    extract_resected_plane,
)
from .report import (
    SummaryDocument,
    chart_bytes,
    margin_table_bytes,
    metrics_csv_bytes,
    metrics_frame,
    summary_bytes,
    summary_document,
    write_heatmap_ply,
    write_margin_table,
    write_metrics_csv,
    write_summary_json,
)
from .statistics import CohortSummary, WilcoxonMethod, WilcoxonResult, describe, wilcoxon_rank_sum
from .tables import (
    ChartCategory,
    Comparison,
    MarginTable,
    MethodSummary,
    classify,
    compare_methods,
    deviation_chart,
    margin_table,
    metric_values,
    summarize_method,
)

__all__ = [
    "ChartCategory",
    "CohortSummary",
    "Comparison",
    "MarginTable",
    "MethodSummary",
    "PlaneDeviation",
    "SpecimenReport",
    "SummaryDocument",
    "WilcoxonMethod",
    "WilcoxonResult",
    "all_deviations",
    "chart_bytes",
    "classify",
    "compare_methods",
    "describe",
    "deviation_chart",
    "deviations",
    "evaluate_results",
    "evaluate_trial",
    "extract_resected_plane",
    "heatmap_field",
    "margin_table",
    "margin_table_bytes",
    "metric_values",
    "metrics_csv_bytes",
    "metrics_frame",
    "plane_gap_along_normal",
    "summarize_method",
    "summary_bytes",
    "summary_document",
    "wilcoxon_rank_sum",
    "write_heatmap_ply",
    "write_margin_table",
    "write_metrics_csv",
    "write_summary_json",
]
