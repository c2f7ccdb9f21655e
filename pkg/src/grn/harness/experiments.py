"""Experiment orchestration: label-fraction sweeps, the ablation grid, and
report consolidation."""

import csv
import json
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ..errors import ConfigError
from ..utils import write_json
from .runs import evaluate_checkpoint_cell, prepare_dataset, run_cell

log = logging.getLogger(__name__)

ABLATION_ROWS = (
    "supervised",
    "supervised_img_aug",
    "gan_aug_baseline",
    "grn_sel",
    "grn_sel_sge",
    "grn_sel_no_seg_feedback",
    "grn_sel_negated_seg_feedback",
    "grn_sel_freeze_segmentor_for_LG",
)


def _fraction_tag(fraction):
    return f"f{fraction:.4f}".rstrip("0").rstrip(".")


def run_sweep(experiment, hook=None):
    """Train and evaluate every (method, fraction, seed) cell, then emit
    sweep.csv and a DSC-vs-fraction plot with per-method median lines."""
    out_dir = Path(experiment.out_dir)
    manifest = prepare_dataset(experiment)
    rows = []
    for method in experiment.methods:
        for fraction in experiment.label_fractions:
            for seed in experiment.seeds:
                cell_dir = (
                    out_dir / "sweep" / method / _fraction_tag(fraction) / f"s{seed}"
                )
                record = run_cell(
                    experiment, manifest, method, "none", fraction, seed, cell_dir,
                    eval_split="test", use_sge=experiment.eval_sge, hook=hook,
                )
                rows.append({
                    "method": method,
                    "fraction": fraction,
                    "seed": seed,
                    "dsc": record.overall_dsc,
                    "out_dir": record.out_dir,
                })

    csv_path = out_dir / "sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "fraction", "seed", "dsc", "out_dir"])
        for row in rows:
            writer.writerow([
                row["method"], f"{row['fraction']:.4f}", row["seed"],
                f"{row['dsc']:.6f}" if row["dsc"] is not None else "",
                row["out_dir"],
            ])

    plot_path = out_dir / "sweep.png"
    _plot_sweep(rows, experiment, plot_path)
    log.info("sweep complete: %d cells, table %s, plot %s", len(rows), csv_path, plot_path)
    return rows, csv_path, plot_path


def _median_by(rows, method, fraction):
    values = [
        r["dsc"] for r in rows
        if r["method"] == method and r["fraction"] == fraction and r["dsc"] is not None
    ]
    return float(np.median(values)) if values else None


def _plot_sweep(rows, experiment, plot_path):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for method in experiment.methods:
        xs, ys = [], []
        for fraction in sorted(set(experiment.label_fractions)):
            median = _median_by(rows, method, fraction)
            if median is not None:
                xs.append(fraction)
                ys.append(median)
        if xs:
            ax.plot(xs, ys, marker="o", label=method)
    reference = _median_by(rows, "supervised", 1.0)
    if reference is not None:
        ax.axhline(
            reference, linestyle=":", color="gray",
            label="supervised @ 100% labels",
        )
    ax.set_xlabel("labeled fraction of training scans")
    ax.set_ylabel("overall DSC (%)")
    ax.set_title("segmentation performance vs labeled fraction")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(plot_path, dpi=120)
    plt.close(fig)


def run_ablation(experiment, hook=None):
    """Run the eight-variant grid at one labeled fraction.

    Seven trainings per seed; the SGE row re-evaluates the trained coupled
    model with enhancement on instead of retraining. Emits ablate.csv (median
    DSC over seeds and delta vs the supervised row) and ablate.json.
    """
    out_dir = Path(experiment.out_dir)
    manifest = prepare_dataset(experiment)
    fraction = experiment.label_fractions[0]
    if len(experiment.label_fractions) > 1:
        log.info(
            "ablation grid runs at a single fraction; using %.4f", fraction
        )

    trained_variants = (
        ("supervised", "supervised", "none"),
        ("supervised_img_aug", "supervised_img_aug", "none"),
        ("gan_aug_baseline", "gan_aug_baseline", "none"),
        ("grn_sel", "grn_sel", "none"),
        ("grn_sel_no_seg_feedback", "grn_sel", "no_seg_feedback"),
        ("grn_sel_negated_seg_feedback", "grn_sel", "negated_seg_feedback"),
        ("grn_sel_freeze_segmentor_for_LG", "grn_sel", "freeze_segmentor_for_LG"),
    )

    per_seed = {name: {} for name in ABLATION_ROWS}
    for seed in experiment.seeds:
        grn_sel_record = None
        for name, mode, ablation in trained_variants:
            cell_dir = out_dir / "ablate" / name / f"s{seed}"
            record = run_cell(
                experiment, manifest, mode, ablation, fraction, seed, cell_dir,
                eval_split="test", use_sge=False, hook=hook,
            )
            per_seed[name][seed] = record.overall_dsc
            if name == "grn_sel":
                grn_sel_record = record
        sge_dir = out_dir / "ablate" / "grn_sel_sge" / f"s{seed}"
        sge_metrics = sge_dir / "metrics.json"
        if sge_metrics.exists():
            overall = json.loads(sge_metrics.read_text())["overall"]["dsc"]["mean"]
        else:
            report = evaluate_checkpoint_cell(
                grn_sel_record.checkpoint_path, experiment, manifest, sge_dir,
                eval_split="test", use_sge=True,
                meta={"mode": "grn_sel", "ablation": "none", "fraction": fraction, "seed": seed},
            )
            overall = report.overall["dsc"]["mean"]
        per_seed["grn_sel_sge"][seed] = overall

    medians = {
        name: float(np.median([v for v in per_seed[name].values() if v is not None]))
        for name in ABLATION_ROWS
    }
    reference = medians["supervised"]
    table = [
        {
            "variant": name,
            "dsc": medians[name],
            "delta_vs_supervised": medians[name] - reference,
            "per_seed": {str(s): per_seed[name][s] for s in experiment.seeds},
        }
        for name in ABLATION_ROWS
    ]

    csv_path = out_dir / "ablate.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "dsc", "delta_vs_supervised"])
        for row in table:
            writer.writerow([
                row["variant"], f"{row['dsc']:.6f}",
                f"{row['delta_vs_supervised']:.6f}",
            ])
    write_json(out_dir / "ablate.json", {"fraction": fraction, "rows": table})
    log.info("ablation grid complete: %d rows, table %s", len(table), csv_path)
    return table, csv_path


def consolidate_reports(root):
    """Collect every metrics.json under a directory into one summary table."""
    root = Path(root)
    if not root.exists():
        raise ConfigError(f"no such directory: {root}")
    entries = []
    for path in sorted(root.rglob("metrics.json")):
        raw = json.loads(path.read_text())
        overall = raw.get("overall", {})
        entries.append({
            "path": str(path.relative_to(root)),
            "mode": raw.get("mode"),
            "ablation": raw.get("ablation"),
            "fraction": raw.get("fraction"),
            "seed": raw.get("seed"),
            "eval_split": raw.get("eval_split"),
            "use_sge": raw.get("use_sge"),
            "dsc": (overall.get("dsc") or {}).get("mean"),
            "iou": (overall.get("iou") or {}).get("mean"),
            "hd95": (overall.get("hd95") or {}).get("mean"),
            "asd": (overall.get("asd") or {}).get("mean"),
        })
    summary_path = root / "report.json"
    write_json(summary_path, {"n_reports": len(entries), "reports": entries})
    return entries, summary_path
