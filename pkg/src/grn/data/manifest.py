"""Dataset manifest: a JSON index of image/mask PNG pairs with patient/scan identity.

Format of manifest.json:

    {"class_count": 7,
     "entries": [{"patient_id": "pat000", "scan_id": "scan000", "slice_index": 0,
                  "image": "images/scan000_slice000.png",
                  "mask": "masks/scan000_slice000.png"}, ...]}

Paths are relative to the manifest file; "mask" may be null for unlabeled entries.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError
from .pngio import read_grayscale
from .samples import ImageSample, LabeledSample, SampleMeta, normalize

MAX_CLASS_COUNT = 7


@dataclass
class ManifestEntry:
    meta: SampleMeta
    image_path: Path
    mask_path: Path = None

    @property
    def labeled(self):
        return self.mask_path is not None


@dataclass
class DatasetManifest:
    root: Path
    class_count: int
    entries: list = field(default_factory=list)

    def labeled_entries(self):
        return [e for e in self.entries if e.labeled]

    def patient_ids(self):
        return sorted({e.meta.patient_id for e in self.entries})

    def scan_ids(self):
        return sorted({e.meta.scan_id for e in self.entries})


def load_manifest(root_path):
    """Load and validate manifest.json under root_path (or the file itself)."""
    root = Path(root_path)
    index = root if root.is_file() else root / "manifest.json"
    if not index.exists():
        raise DataError(f"manifest index not found: {index}")
    base = index.parent
    try:
        raw = json.loads(index.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{index}: invalid JSON ({exc})")

    if not isinstance(raw, dict) or "class_count" not in raw or "entries" not in raw:
        raise DataError(f"{index}: expected object with class_count and entries")
    class_count = raw["class_count"]
    if not isinstance(class_count, int) or not 2 <= class_count <= MAX_CLASS_COUNT:
        raise DataError(
            f"{index}: class_count must be an integer in [2, {MAX_CLASS_COUNT}], got {class_count}"
        )

    entries = []
    seen = set()
    for i, rec in enumerate(raw["entries"]):
        try:
            meta = SampleMeta(rec["patient_id"], rec["scan_id"], int(rec["slice_index"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{index}: entry {i} malformed: {exc}")
        if meta.key() in seen:
            raise DataError(f"{index}: duplicate entry identity {meta}")
        seen.add(meta.key())
        image_path = (base / rec["image"]).resolve()
        mask_path = (base / rec["mask"]).resolve() if rec.get("mask") else None
        _validate_entry_files(meta, image_path, mask_path, class_count)
        entries.append(ManifestEntry(meta, image_path, mask_path))
    return DatasetManifest(root=base, class_count=class_count, entries=entries)


def _validate_entry_files(meta, image_path, mask_path, class_count):
    img, _ = read_grayscale(image_path)
    if mask_path is None:
        return
    try:
        mask, _ = read_grayscale(mask_path)
    except DataError as exc:
        raise DataError(f"entry {meta}: {exc}")
    if mask.shape != img.shape:
        raise DataError(
            f"entry {meta}: mask shape {mask.shape} != image shape {img.shape}"
        )
    if mask.size and mask.max() >= class_count:
        raise DataError(
            f"entry {meta}: mask value {mask.max()} >= class_count {class_count}"
        )


def write_manifest(out_dir, class_count, records):
    """Write manifest.json. records: dicts with patient_id/scan_id/slice_index/image/mask."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"class_count": class_count, "entries": list(records)}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def load_samples(manifest, entries=None):
    """Decode manifest entries into in-memory samples (normalized images)."""
    out = []
    for e in entries if entries is not None else manifest.entries:
        raw, depth = read_grayscale(e.image_path)
        image = normalize(raw, depth)
        if e.labeled:
            mask, _ = read_grayscale(e.mask_path)
            out.append(LabeledSample(e.meta, image, mask=mask.astype(np.int64)))
        else:
            out.append(ImageSample(e.meta, image))
    return out
