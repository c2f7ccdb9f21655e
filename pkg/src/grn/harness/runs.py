"""Single-run execution: dataset preparation, one training cell, evaluation,
and the on-disk run record that makes grids resumable."""

import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from ..data import (
    ImageSample,
    generate_phantom,
    load_manifest,
    load_samples,
    load_split_override,
    select_labeled_fraction,
    split_by_patient,
)
from ..errors import ConfigError, DataError
from ..evaluation import aggregate, evaluate_pair, write_report_csv, write_report_json
from ..inference import predict
from ..models import load_checkpoint, save_checkpoint
from ..trainer import run_trainer
from ..utils import code_version_hash, config_hash, write_json
from .config import build_train_config, resolve_dataset_path, resolved_train_dict

log = logging.getLogger(__name__)

RUN_RECORD_NAME = "run_record.json"


@dataclass
class RunRecord:
    config_hash: str
    code_version: str
    out_dir: str
    checkpoint_path: str
    history_path: str
    metrics_json: str
    metrics_csv: str
    seconds: float
    mode: str
    ablation: str
    fraction: float
    seed: int
    eval_split: str
    use_sge: bool
    overall_dsc: float

    def files(self):
        return [self.checkpoint_path, self.history_path, self.metrics_json, self.metrics_csv]


def prepare_dataset(experiment):
    """Load the configured manifest, generating the phantom set if asked.

    Phantom generation is cached: a spec hash is stored next to the files and
    the set is regenerated only when the spec changes.
    """
    if experiment.dataset is not None:
        return load_manifest(resolve_dataset_path(experiment.dataset))
    spec = experiment.phantom
    target = Path(spec.dir) if spec.dir else Path(experiment.out_dir) / "phantom"
    spec_dict = {
        "scans": spec.scans,
        "slices_per_scan": spec.slices_per_scan,
        **asdict(spec.config),
    }
    spec_hash = config_hash(spec_dict)
    stamp = target / "phantom_spec.json"
    if stamp.exists() and (target / "manifest.json").exists():
        if json.loads(stamp.read_text()).get("hash") == spec_hash:
            log.info("reusing phantom dataset at %s", target)
            return load_manifest(target)
    manifest = generate_phantom(spec.config, spec.scans, spec.slices_per_scan, target)
    write_json(stamp, {"hash": spec_hash, "spec": spec_dict})
    return manifest


def make_split(experiment, manifest):
    if experiment.split.override:
        split = load_split_override(experiment.split.override, manifest)
    else:
        split = split_by_patient(
            manifest, experiment.split.fractions(), experiment.split.seed
        )
    assert_split_disjoint(split, manifest)
    return split


def assert_split_disjoint(split, manifest):
    """No patient may appear in more than one of train/validation/test."""
    seen = {}
    for entry in manifest.entries:
        patient = entry.meta.patient_id
        role = split.role_by_patient[patient]
        if seen.setdefault(patient, role) != role:
            raise DataError(
                f"patient {patient!r} assigned to both {seen[patient]} and {role}"
            )


def evaluate_bundle(bundle, samples, class_count, use_sge=False):
    """Predict every labeled sample and aggregate the metric report."""
    if not samples:
        raise DataError("nothing to evaluate: empty sample list")
    per_image = []
    for sample in samples:
        mask = predict(bundle, sample.image, use_sge=use_sge)
        image_id = f"{sample.meta.scan_id}/{sample.meta.slice_index:03d}"
        per_image.append(
            evaluate_pair(mask, sample.mask, class_count, image_id=image_id)
        )
    return aggregate(per_image)


def cell_config_dict(experiment, mode, ablation, fraction, seed, eval_split, use_sge):
    """Everything that determines a cell's results, for hashing and snapshots."""
    train_config = build_train_config(experiment, mode, ablation, seed)
    dataset_id = experiment.dataset
    if dataset_id is None:
        dataset_id = {
            "phantom": {
                "scans": experiment.phantom.scans,
                "slices_per_scan": experiment.phantom.slices_per_scan,
                **asdict(experiment.phantom.config),
            }
        }
    return {
        "dataset": dataset_id,
        "split": asdict(experiment.split),
        "mode": mode,
        "ablation": ablation,
        "fraction": fraction,
        "seed": seed,
        "eval_split": eval_split,
        "use_sge": use_sge,
        "train": resolved_train_dict(train_config),
    }


def load_cached_record(cell_dir, expected_hash):
    record_path = Path(cell_dir) / RUN_RECORD_NAME
    if not record_path.exists():
        return None
    raw = json.loads(record_path.read_text())
    if raw.get("config_hash") != expected_hash:
        return None
    record = RunRecord(**raw)
    if not all(Path(p).exists() for p in record.files()):
        return None
    if record.code_version != code_version_hash():
        log.warning(
            "reusing cached run at %s despite a code change (config hash matches)",
            cell_dir,
        )
    return record


def run_cell(experiment, manifest, mode, ablation, fraction, seed, cell_dir,
             eval_split="test", use_sge=False, hook=None):
    """Train one configuration and evaluate it on the requested split.

    Re-invocation with the same resolved config reuses the completed run on
    disk instead of retraining.
    """
    cell_dir = Path(cell_dir)
    resolved = cell_config_dict(experiment, mode, ablation, fraction, seed, eval_split, use_sge)
    resolved_hash = config_hash(resolved)
    cached = load_cached_record(cell_dir, resolved_hash)
    if cached is not None:
        log.info("skipping completed run %s (config hash %s)", cell_dir, resolved_hash[:12])
        return cached

    cell_dir.mkdir(parents=True, exist_ok=True)
    write_json(cell_dir / "resolved_config.json", resolved)

    split = make_split(experiment, manifest)
    train_entries = split.entries(manifest, "train")
    labeled_entries, unlabeled_entries = select_labeled_fraction(
        split, train_entries, fraction, seed
    )
    labeled = load_samples(manifest, labeled_entries)
    validation = load_samples(manifest, split.entries(manifest, "validation"))
    unlabeled = None
    if mode == "grn_ssl":
        unlabeled = [
            ImageSample(s.meta, s.image)
            for s in load_samples(manifest, unlabeled_entries)
        ]
        if not unlabeled:
            raise DataError(
                "semi-supervised run has no unlabeled scans (labeled fraction too high)"
            )

    train_config = build_train_config(experiment, mode, ablation, seed)
    start = time.perf_counter()
    bundle, history = run_trainer(
        train_config, labeled, validation, unlabeled_set=unlabeled, hook=hook
    )
    seconds = time.perf_counter() - start

    history_path = cell_dir / "history.jsonl"
    history.write_jsonl(history_path)
    checkpoint_path = cell_dir / "checkpoint.pt"
    save_checkpoint(bundle, checkpoint_path)

    eval_samples = load_samples(manifest, split.entries(manifest, eval_split))
    report = evaluate_bundle(bundle, eval_samples, manifest.class_count, use_sge=use_sge)
    metrics_json = cell_dir / "metrics.json"
    metrics_csv = cell_dir / "metrics.csv"
    write_report_json(
        report, metrics_json,
        mode=mode, ablation=ablation, fraction=fraction, seed=seed,
        eval_split=eval_split, use_sge=use_sge,
    )
    write_report_csv(report, metrics_csv)

    record = RunRecord(
        config_hash=resolved_hash,
        code_version=code_version_hash(),
        out_dir=str(cell_dir),
        checkpoint_path=str(checkpoint_path),
        history_path=str(history_path),
        metrics_json=str(metrics_json),
        metrics_csv=str(metrics_csv),
        seconds=seconds,
        mode=mode,
        ablation=ablation,
        fraction=fraction,
        seed=seed,
        eval_split=eval_split,
        use_sge=use_sge,
        overall_dsc=report.overall["dsc"]["mean"],
    )
    for path in record.files():
        if not Path(path).exists():
            raise DataError(f"run artifact missing at record-write time: {path}")
    write_json(cell_dir / RUN_RECORD_NAME, asdict(record))
    log.info(
        "run %s done in %.1f s: overall DSC %.2f",
        cell_dir, seconds, record.overall_dsc if record.overall_dsc is not None else float("nan"),
    )
    return record


def evaluate_checkpoint_cell(checkpoint_path, experiment, manifest, out_dir,
                             eval_split="test", use_sge=False, meta=None):
    """Evaluation-only cell: load a checkpoint and score it on a split."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = load_checkpoint(
        checkpoint_path, expect_class_count=manifest.class_count
    )
    split = make_split(experiment, manifest)
    samples = load_samples(manifest, split.entries(manifest, eval_split))
    report = evaluate_bundle(bundle, samples, manifest.class_count, use_sge=use_sge)
    write_report_json(
        report, out_dir / "metrics.json",
        eval_split=eval_split, use_sge=use_sge, **(meta or {}),
    )
    write_report_csv(report, out_dir / "metrics.csv")
    return report
