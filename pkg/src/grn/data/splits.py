"""Patient-level splitting and scan-level labeled-fraction selection."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError

ROLES = ("train", "validation", "test")


@dataclass
class SplitAssignment:
    role_by_patient: dict
    labeled_scan_ids: set = field(default_factory=set)

    def patients(self, role):
        return sorted(p for p, r in self.role_by_patient.items() if r == role)

    def entries(self, manifest, role):
        return [e for e in manifest.entries if self.role_by_patient[e.meta.patient_id] == role]


def split_by_patient(manifest, fractions, seed):
    """Shuffle patients with a seeded RNG and partition them train/validation/test.

    Counts come from largest-remainder apportionment of fractions over the patient
    count; any nonzero-fraction split that would round to zero patients steals one
    from the largest split.
    """
    if len(fractions) != 3:
        raise ConfigError(f"need 3 split fractions (train, validation, test), got {len(fractions)}")
    fractions = [float(f) for f in fractions]
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must be >= 0 and sum to 1, got {fractions}")
    patients = sorted({e.meta.patient_id for e in manifest.entries})
    nonzero = sum(1 for f in fractions if f > 0)
    if len(patients) < nonzero:
        raise DataError(
            f"{len(patients)} patients cannot fill {nonzero} non-empty splits"
        )

    order = list(np.random.default_rng(seed).permutation(patients))
    counts = _apportion(len(patients), fractions)
    roles = {}
    start = 0
    for role, count in zip(ROLES, counts):
        for p in order[start:start + count]:
            roles[str(p)] = role
        start += count
    return SplitAssignment(role_by_patient=roles)


def _apportion(total, fractions):
    floors = [int(np.floor(f * total)) for f in fractions]
    remainders = [f * total - fl for f, fl in zip(fractions, floors)]
    short = total - sum(floors)
    for i in sorted(range(3), key=lambda i: -remainders[i])[:short]:
        floors[i] += 1
    # every split with a nonzero fraction must end up non-empty
    for i in range(3):
        while fractions[i] > 0 and floors[i] == 0:
            donor = max(range(3), key=lambda j: floors[j])
            floors[donor] -= 1
            floors[i] += 1
    return floors


def load_split_override(path, manifest):
    """Load an explicit {patient_id: role} split file; overrides seeded splitting."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"split override file not found: {path}")
    raw = json.loads(path.read_text())
    if not isinstance(raw, dict):
        raise DataError(f"{path}: expected an object mapping patient_id to role")
    patients = set(manifest.patient_ids())
    roles = {}
    for patient, role in raw.items():
        if role not in ROLES:
            raise DataError(f"{path}: unknown role {role!r} for patient {patient!r}")
        if patient not in patients:
            raise DataError(f"{path}: patient {patient!r} not present in the manifest")
        roles[patient] = role
    missing = patients - set(roles)
    if missing:
        raise DataError(f"{path}: no role assigned for patients {sorted(missing)}")
    return SplitAssignment(role_by_patient=roles)


def select_labeled_fraction(split, train_entries, fraction, seed):
    """Choose labeled scans at scan granularity: k = max(1, round(fraction * scan_count)).

    All slices of a chosen scan become labeled; a scan is never split between the
    labeled and unlabeled pools. Returns (labeled_entries, unlabeled_entries) and
    records the chosen scan ids on the split.
    """
    if not 0 < fraction <= 1:
        raise ConfigError(f"labeled fraction must be in (0, 1], got {fraction}")
    if not train_entries:
        raise DataError("no training entries to select labeled scans from")
    scans = sorted({e.meta.scan_id for e in train_entries})
    k = max(1, int(np.floor(fraction * len(scans) + 0.5)))  # round half up
    k = min(k, len(scans))
    chosen = set(np.random.default_rng(seed).permutation(scans)[:k].tolist())
    labeled = [e for e in train_entries if e.meta.scan_id in chosen]
    unlabeled = [e for e in train_entries if e.meta.scan_id not in chosen]
    split.labeled_scan_ids = chosen
    return labeled, unlabeled
