from .batching import batch_iterator
from .manifest import (
    MAX_CLASS_COUNT,
    DatasetManifest,
    ManifestEntry,
    load_manifest,
    load_samples,
    write_manifest,
)
from .phantom import PhantomConfig, generate_phantom
from .pngio import read_grayscale, write_grayscale, write_rgb
from .samples import ImageSample, LabeledSample, SampleMeta, denormalize, normalize
from .splits import (
    ROLES,
    SplitAssignment,
    load_split_override,
    select_labeled_fraction,
    split_by_patient,
)

__all__ = [
    "MAX_CLASS_COUNT",
    "ROLES",
    "DatasetManifest",
    "ImageSample",
    "LabeledSample",
    "ManifestEntry",
    "PhantomConfig",
    "SampleMeta",
    "SplitAssignment",
    "batch_iterator",
    "denormalize",
    "generate_phantom",
    "load_manifest",
    "load_samples",
    "load_split_override",
    "normalize",
    "read_grayscale",
    "select_labeled_fraction",
    "split_by_patient",
    "write_grayscale",
    "write_manifest",
    "write_rgb",
]
