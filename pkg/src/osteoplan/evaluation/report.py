"""Report files: metrics CSV, summary JSON, margin table, chart data and heatmap PLY.

Every builder returns bytes so the CLI can stage outputs and write them
atomically; the write_* helpers are the direct-to-disk variants.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import orjson
import pandas as pd
from pydantic import BaseModel

from ..core import write_atomic
from ..geometry import TriangleMesh, ply_bytes
from .metrics import SpecimenReport
from .statistics import CohortSummary
from .tables import Comparison, MarginTable, MethodSummary

SCHEMA_VERSION = "1.0"
METRICS_COLUMNS = ["specimen", "side", "label", "mp_mm", "mr_mm", "dd_mm", "signed_mm", "roll_deg", "pitch_deg"]
FLOAT_FORMAT = "%.6f"


class StatsBlock(BaseModel):
    mean: float
    sd: float
    max: float
    min: float
    n: int
    p_value: float | None = None


class MethodBlock(BaseModel):
    method: str
    dd: StatsBlock
    rd: StatsBlock
    pd: StatsBlock
    md: StatsBlock


class RankSumBlock(BaseModel):
    statistic: float
    p_value: float
    method: str
    n1: int
    n2: int
    significant: bool
    reduction_percent: float | None


class SummaryDocument(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: str = "summary"
    alpha: float | None = None
    methods: list[MethodBlock]
    tests: dict[str, RankSumBlock] = {}
    margin_table: dict[str, list[float]] = {}
    thresholds_mm: list[float] = []
    findings: list[str] = []


SHORT_NAMES = {"distance_deviation": "dd", "roll_deviation": "rd", "pitch_deviation": "pd", "max_deviation": "md"}


def _block(summary: CohortSummary, p_value: float | None = None) -> StatsBlock:
    return StatsBlock(**summary.to_dict(), p_value=p_value)


def _method_block(summary: MethodSummary, p_values: dict[str, float] | None = None) -> MethodBlock:
    p_values = p_values or {}
    return MethodBlock(
        method=summary.method,
        **{SHORT_NAMES[name]: _block(stats, p_values.get(name)) for name, stats in summary.metrics.items()},
    )


def metrics_frame(reports: Sequence[SpecimenReport]) -> pd.DataFrame:
    rows = [
        {
            "specimen": report.specimen_id,
            "side": report.side,
            "label": d.label,
            "mp_mm": d.mp,
            "mr_mm": d.mr,
            "dd_mm": d.distance_deviation,
            "signed_mm": d.signed_deviation,
            "roll_deg": d.roll_deviation,
            "pitch_deg": d.pitch_deviation,
        }
        for report in sorted(reports, key=lambda r: (r.specimen_id, r.side))
        for d in report.deviations
    ]
    return pd.DataFrame(rows, columns=METRICS_COLUMNS)


def metrics_csv_bytes(reports: Sequence[SpecimenReport]) -> bytes:
    return metrics_frame(reports).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n").encode()


def summary_document(
    summaries: Sequence[MethodSummary],
    comparison: Comparison | None = None,
    margins: MarginTable | None = None,
    findings: Sequence[str] = (),
) -> SummaryDocument:
    if comparison is not None:
        p_values = {name: item.test.p_value for name, item in comparison.metrics.items()}
        methods = [_method_block(comparison.first, p_values), _method_block(comparison.second, p_values)]
        tests = {
            SHORT_NAMES[name]: RankSumBlock(
                statistic=item.test.statistic,
                p_value=item.test.p_value,
                method=item.test.method.value,
                n1=item.test.n1,
                n2=item.test.n2,
                significant=item.significant,
                reduction_percent=item.reduction_percent,
            )
            for name, item in comparison.metrics.items()
        }
        margins = comparison.margins
        alpha: float | None = comparison.alpha
    else:
        methods = [_method_block(summary) for summary in summaries]
        tests = {}
        alpha = None
    return SummaryDocument(
        alpha=alpha,
        methods=methods,
        tests=tests,
        margin_table={} if margins is None else {k: list(v) for k, v in sorted(margins.percentages.items())},
        thresholds_mm=[] if margins is None else list(margins.thresholds),
        findings=list(findings),
    )


def summary_bytes(document: SummaryDocument) -> bytes:
    return orjson.dumps(document.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)


def margin_table_bytes(table: MarginTable) -> bytes:
    return table.to_frame().to_csv(float_format=FLOAT_FORMAT, lineterminator="\n").encode()


def chart_bytes(chart: pd.DataFrame) -> bytes:
    return chart.to_csv(index=chart.index.name is not None, float_format=FLOAT_FORMAT, lineterminator="\n").encode()


def write_metrics_csv(reports: Sequence[SpecimenReport], path: str | Path) -> None:
    write_atomic(Path(path), metrics_csv_bytes(reports))


def write_summary_json(document: SummaryDocument, path: str | Path) -> None:
    write_atomic(Path(path), summary_bytes(document))


def write_margin_table(table: MarginTable, path: str | Path) -> None:
    write_atomic(Path(path), margin_table_bytes(table))


def write_heatmap_ply(mesh: TriangleMesh, path: str | Path) -> None:
    write_atomic(Path(path), ply_bytes(mesh))
