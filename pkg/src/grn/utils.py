"""Hashing, canonical JSON, and other small helpers used by the harness."""

import hashlib
import json
from pathlib import Path


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace variance, for hashing and snapshots."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    """sha256 of the canonical JSON form of a (resolved) config dict."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def code_version_hash() -> str:
    """Content hash over this package's source files (stable stand-in for a VCS revision)."""
    pkg_dir = Path(__file__).resolve().parent
    h = hashlib.sha256()
    for f in sorted(pkg_dir.rglob("*.py")):
        h.update(str(f.relative_to(pkg_dir)).encode("utf-8"))
        h.update(f.read_bytes())
    return h.hexdigest()


def write_json(path, obj, indent=2):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=indent, sort_keys=True)
        f.write("\n")


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True))
            f.write("\n")
