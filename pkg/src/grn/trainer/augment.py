"""Classic image-space augmentation for the supervised baseline.

Applies horizontal flips, small rotations, and intensity scaling to a
labeled sample. Rotation uses bilinear interpolation for the image and
nearest-neighbour for the mask so class ids stay integral.
"""

import numpy as np
from scipy import ndimage

from ..data.samples import LabeledSample


def augment_sample(sample, params, rng):
    image = sample.image
    mask = sample.mask

    if rng.random() < params.flip_prob:
        image = image[:, ::-1]
        mask = mask[:, ::-1]

    if params.rotation_deg > 0.0:
        angle = rng.uniform(-params.rotation_deg, params.rotation_deg)
        image = ndimage.rotate(
            image, angle, reshape=False, order=1, mode="nearest"
        )
        mask = ndimage.rotate(
            mask, angle, reshape=False, order=0, mode="nearest"
        )

    if params.intensity_scale > 0.0:
        scale = 1.0 + rng.uniform(-params.intensity_scale, params.intensity_scale)
        # Scale in [0, 1] display coordinates so dark regions stay dark.
        image = ((image + 1.0) * 0.5 * scale) * 2.0 - 1.0

    image = np.clip(image, -1.0, 1.0).astype(np.float32)
    mask = np.ascontiguousarray(mask)
    return LabeledSample(meta=sample.meta, image=np.ascontiguousarray(image), mask=mask)


def augment_batch(samples, params, rng):
    return [augment_sample(s, params, rng) for s in samples]
