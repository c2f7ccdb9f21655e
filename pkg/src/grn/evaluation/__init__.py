from .metrics import (
    asd,
    class_defined,
    dsc,
    extract_surface,
    hd95,
    image_diagonal,
    iou,
)
from .report import (
    METRIC_NAMES,
    ClassMetrics,
    MetricReport,
    PairedTestResult,
    aggregate,
    compare_reports,
    evaluate_pair,
    paired_t_test,
    per_image_overall,
    t_confidence_interval,
    write_report_csv,
    write_report_json,
)

__all__ = [
    "METRIC_NAMES",
    "ClassMetrics",
    "MetricReport",
    "PairedTestResult",
    "aggregate",
    "asd",
    "class_defined",
    "compare_reports",
    "dsc",
    "evaluate_pair",
    "extract_surface",
    "hd95",
    "image_diagonal",
    "iou",
    "paired_t_test",
    "per_image_overall",
    "t_confidence_interval",
    "write_report_csv",
    "write_report_json",
]
