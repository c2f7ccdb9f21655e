"""Per-image metric evaluation, aggregation with confidence intervals, and
paired significance testing."""

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from ..errors import ConfigError
from ..utils import write_json
from .metrics import asd, class_defined, dsc, hd95, iou

log = logging.getLogger(__name__)

METRIC_NAMES = ("dsc", "iou", "hd95", "asd")


@dataclass
class ClassMetrics:
    """All four metrics for every class of one (prediction, truth) pair."""

    dsc: tuple
    iou: tuple
    hd95: tuple
    asd: tuple
    defined: tuple
    image_id: str = None

    @property
    def class_count(self):
        return len(self.defined)


def evaluate_pair(pred_mask, gt_mask, class_count, image_id=None):
    pred_mask = np.asarray(pred_mask)
    gt_mask = np.asarray(gt_mask)
    if pred_mask.shape != gt_mask.shape:
        raise ConfigError(
            f"prediction shape {pred_mask.shape} does not match ground truth "
            f"{gt_mask.shape}"
        )
    for name, mask in (("prediction", pred_mask), ("ground truth", gt_mask)):
        if int(mask.max()) >= class_count:
            raise ConfigError(
                f"{name} mask holds class {int(mask.max())} but class_count is "
                f"{class_count}"
            )
    values = {name: [] for name in METRIC_NAMES}
    defined = []
    for c in range(class_count):
        defined.append(class_defined(pred_mask, gt_mask, c))
        values["dsc"].append(dsc(pred_mask, gt_mask, c))
        values["iou"].append(iou(pred_mask, gt_mask, c))
        values["hd95"].append(hd95(pred_mask, gt_mask, c))
        values["asd"].append(asd(pred_mask, gt_mask, c))
    return ClassMetrics(
        dsc=tuple(values["dsc"]),
        iou=tuple(values["iou"]),
        hd95=tuple(values["hd95"]),
        asd=tuple(values["asd"]),
        defined=tuple(defined),
        image_id=image_id,
    )


def t_confidence_interval(values, confidence=0.95):
    """Student-t interval (lo, hi) over the sample; None when n < 2."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < 2:
        return None
    mean = float(values.mean())
    half_width = float(
        stats.t.ppf(0.5 + confidence / 2.0, n - 1) * values.std(ddof=1) / math.sqrt(n)
    )
    return (mean - half_width, mean + half_width)


class PairedTestResult(NamedTuple):
    t: float
    p: float
    degenerate: bool


def paired_t_test(values_a, values_b):
    """Two-sided paired t-test on elementwise differences.

    Zero-variance differences are degenerate: all-zero gives (t=0, p=1);
    constant nonzero gives p=0 with t at signed infinity. Both carry the
    degeneracy flag since the statistic's denominator vanishes.
    """
    a = np.asarray(values_a, dtype=np.float64)
    b = np.asarray(values_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigError(
            f"paired test needs two equal-length 1-D samples, got shapes "
            f"{a.shape} and {b.shape}"
        )
    n = len(a)
    if n < 2:
        raise ConfigError(f"paired test needs n >= 2, got {n}")
    diff = a - b
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return PairedTestResult(t=0.0, p=1.0, degenerate=True)
        return PairedTestResult(t=math.copysign(math.inf, mean), p=0.0, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stats.t.sf(abs(t), n - 1))
    return PairedTestResult(t=t, p=p, degenerate=False)


@dataclass
class MetricReport:
    """Aggregated metrics: per-class means with CIs and the overall summary.

    per_class maps class_id to {metric: {"mean", "ci", "n"}}; overall maps
    metric to the same triple. The overall mean is the mean of the included
    per-class means; its CI is computed over per-image overall values (for a
    complete panel the two centers coincide exactly).
    """

    class_count: int
    exclude_background: bool
    n_images: int
    per_class: dict
    overall: dict
    per_image: list = field(default_factory=list, repr=False)

    def summary_dict(self, **meta):
        out = dict(meta)
        out.update({
            "class_count": self.class_count,
            "exclude_background": self.exclude_background,
            "n_images": self.n_images,
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "overall": self.overall,
        })
        return out


def _included_classes(class_count, exclude_background):
    return list(range(1, class_count)) if exclude_background else list(range(class_count))


def per_image_overall(metrics, metric_name, classes):
    """Mean of a metric over the defined included classes of one image, or
    None when no included class is defined."""
    values = [getattr(metrics, metric_name)[c] for c in classes if metrics.defined[c]]
    if not values:
        return None
    return float(np.mean(values))


def aggregate(per_image_metrics, exclude_background=True):
    per_image_metrics = list(per_image_metrics)
    if not per_image_metrics:
        raise ConfigError("aggregate needs at least one evaluated image")
    class_count = per_image_metrics[0].class_count
    if any(m.class_count != class_count for m in per_image_metrics):
        raise ConfigError("mixed class counts in the evaluated images")

    classes = _included_classes(class_count, exclude_background)
    per_class = {}
    for c in classes:
        per_class[c] = {}
        for name in METRIC_NAMES:
            values = [
                getattr(m, name)[c] for m in per_image_metrics if m.defined[c]
            ]
            per_class[c][name] = {
                "mean": float(np.mean(values)) if values else None,
                "ci": t_confidence_interval(values),
                "n": len(values),
            }

    overall = {}
    for name in METRIC_NAMES:
        class_means = [
            per_class[c][name]["mean"] for c in classes
            if per_class[c][name]["mean"] is not None
        ]
        image_values = [
            v for m in per_image_metrics
            for v in [per_image_overall(m, name, classes)]
            if v is not None
        ]
        overall[name] = {
            "mean": float(np.mean(class_means)) if class_means else None,
            "ci": t_confidence_interval(image_values),
            "n": len(image_values),
        }

    return MetricReport(
        class_count=class_count,
        exclude_background=exclude_background,
        n_images=len(per_image_metrics),
        per_class=per_class,
        overall=overall,
        per_image=per_image_metrics,
    )


def compare_reports(report, reference):
    """Paired two-sided t-tests on per-image overall values, per metric.

    Images are paired by position, so both reports must evaluate the same
    ordered set. Returns {metric: {"t", "p", "degenerate"}}.
    """
    if report.n_images != reference.n_images:
        raise ConfigError(
            f"cannot pair reports over {report.n_images} and "
            f"{reference.n_images} images"
        )
    classes = _included_classes(report.class_count, report.exclude_background)
    ref_classes = _included_classes(reference.class_count, reference.exclude_background)
    out = {}
    for name in METRIC_NAMES:
        a, b = [], []
        for m_a, m_b in zip(report.per_image, reference.per_image):
            v_a = per_image_overall(m_a, name, classes)
            v_b = per_image_overall(m_b, name, ref_classes)
            if v_a is not None and v_b is not None:
                a.append(v_a)
                b.append(v_b)
        if len(a) >= 2:
            result = paired_t_test(a, b)
            out[name] = {"t": result.t, "p": result.p, "degenerate": result.degenerate}
        else:
            out[name] = {"t": None, "p": None, "degenerate": True}
    return out


def write_report_csv(report, path):
    """One row per image and class: identity, the four metrics, defined flag."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "class_id", "dsc", "iou", "hd95", "asd", "defined"])
        for idx, m in enumerate(report.per_image):
            image_id = m.image_id if m.image_id is not None else str(idx)
            for c in range(report.class_count):
                writer.writerow([
                    image_id, c,
                    f"{m.dsc[c]:.6f}", f"{m.iou[c]:.6f}",
                    f"{m.hd95[c]:.6f}", f"{m.asd[c]:.6f}",
                    int(m.defined[c]),
                ])
    log.info("wrote per-image metrics to %s", path)
    return path


def write_report_json(report, path, reference=None, **meta):
    summary = report.summary_dict(**meta)
    if reference is not None:
        summary["paired_t_vs_reference"] = compare_reports(report, reference)
    write_json(path, summary)
    log.info("wrote metric summary to %s", path)
    return path
