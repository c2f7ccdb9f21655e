"""Differentiable training losses for the generator/segmentor/discriminator system.

All functions are pure given their tensor inputs and reduce by means, so loss
magnitudes do not depend on batch size. Dice is computed on softmax probabilities
over all classes (background included); evaluation-time metrics are a separate
concern and exclude background.
"""

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ConfigError

DICE_SMOOTH = 1e-5


@dataclass
class LossWeights:
    lambda_adv: float = 1.0
    lambda_seg: float = 100.0
    lambda_l1: float = 100.0
    lambda_cus: float = 1.0

    def __post_init__(self):
        for name in ("lambda_adv", "lambda_seg", "lambda_l1", "lambda_cus"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {v}")
            setattr(self, name, v)


@dataclass
class MixCoefficientSampler:
    """Draws interpolation coefficients in [0, 1].

    distribution "uniform" is Uniform(0, 1); "beta" is Beta(alpha, alpha). One draw
    per batch by default; per_sample=True draws one coefficient per batch element.
    """

    distribution: str = "uniform"
    alpha: float = 0.75
    seed: int = 0
    per_sample: bool = False

    def __post_init__(self):
        if self.distribution not in ("uniform", "beta"):
            raise ConfigError(f"unknown mix distribution {self.distribution!r}")
        if self.distribution == "beta" and self.alpha <= 0:
            raise ConfigError(f"beta distribution needs alpha > 0, got {self.alpha}")
        self._rng = np.random.default_rng(self.seed)

    def draw(self, rng, batch_size=1):
        """Draw from an externally supplied RNG (used by trainers for replayability)."""
        size = batch_size if self.per_sample else None
        if self.distribution == "uniform":
            lam = rng.uniform(0.0, 1.0, size=size)
        else:
            lam = rng.beta(self.alpha, self.alpha, size=size)
        return lam if self.per_sample else float(lam)

    def sample(self, batch_size=1):
        return self.draw(self._rng, batch_size)


def dice_loss(logits, mask):
    """Soft dice loss: softmax over channels, one-hot mask, per-class dice with
    eps smoothing, 1 - mean over all classes."""
    if logits.dim() != 4:
        raise ConfigError(f"logits must be BxCxHxW, got shape {tuple(logits.shape)}")
    if mask.shape != (logits.shape[0],) + logits.shape[2:]:
        raise ConfigError(
            f"mask shape {tuple(mask.shape)} does not match logits {tuple(logits.shape)}"
        )
    n_classes = logits.shape[1]
    if int(mask.max()) >= n_classes:
        raise ConfigError(f"mask value {int(mask.max())} >= class count {n_classes}")
    probs = torch.softmax(logits, dim=1)
    onehot = F.one_hot(mask.long(), n_classes).permute(0, 3, 1, 2).to(probs.dtype)
    dims = (0, 2, 3)
    intersect = (probs * onehot).sum(dims)
    denom = probs.sum(dims) + onehot.sum(dims)
    dice = (2.0 * intersect + DICE_SMOOTH) / (denom + DICE_SMOOTH)
    return 1.0 - dice.mean()


def per_image_dice_loss(logits, mask):
    """Dice loss per batch element (no reduction over the batch); used for validation."""
    n_classes = logits.shape[1]
    probs = torch.softmax(logits, dim=1)
    onehot = F.one_hot(mask.long(), n_classes).permute(0, 3, 1, 2).to(probs.dtype)
    dims = (2, 3)
    intersect = (probs * onehot).sum(dims)
    denom = probs.sum(dims) + onehot.sum(dims)
    dice = (2.0 * intersect + DICE_SMOOTH) / (denom + DICE_SMOOTH)
    return 1.0 - dice.mean(dim=1)


def adversarial_mse(patch_map, target_label):
    """Mean over all patch scores of (score - target)^2, target in {0, 1}."""
    target = torch.full_like(patch_map, float(target_label))
    return F.mse_loss(patch_map, target)


def l1_recon(recon, original):
    return F.l1_loss(recon, original)


def mix(a, b, lam):
    """Elementwise lam*a + (1-lam)*b. lam is a scalar or a per-sample 1-D tensor."""
    if a.shape != b.shape:
        raise ConfigError(f"mix shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    lam_t = torch.as_tensor(lam, dtype=a.dtype, device=a.device)
    if lam_t.min() < 0 or lam_t.max() > 1:
        raise ConfigError(f"mix coefficient must lie in [0, 1], got {lam}")
    if lam_t.dim() == 1:
        lam_t = lam_t.reshape(-1, *([1] * (a.dim() - 1)))
    return lam_t * a + (1.0 - lam_t) * b


def ict_loss(seg_outputs_of, batch_images, partner_permutation, lam):
    """Interpolation-consistency loss over one batch.

    seg_outputs_of maps an image batch to class-probability maps. The prediction on
    the mixed images must match the mix of the individual predictions:
    MSE(maps(mix(x, x[perm], lam)), mix(maps(x), maps(x[perm]), lam)).
    """
    batch = batch_images.shape[0]
    if batch < 2:
        raise ConfigError(f"ICT needs a batch of >= 2 to form pairs, got {batch}")
    perm = torch.as_tensor(partner_permutation, dtype=torch.long, device=batch_images.device)
    if sorted(perm.tolist()) != list(range(batch)):
        raise ConfigError("partner_permutation is not a permutation of batch indices")
    partners = batch_images[perm]
    maps_a = seg_outputs_of(batch_images)
    maps_b = seg_outputs_of(partners)
    maps_mixed = seg_outputs_of(mix(batch_images, partners, lam))
    return F.mse_loss(maps_mixed, mix(maps_a, maps_b, lam))


def generator_loss_sel(d_score_fake, seg_logits_fake, mask, recon, original, w):
    """Weighted sum: adversarial (vs real label) + dice on the reconstructed branch + L1."""
    return (
        w.lambda_adv * adversarial_mse(d_score_fake, 1)
        + w.lambda_seg * dice_loss(seg_logits_fake, mask)
        + w.lambda_l1 * l1_recon(recon, original)
    )


def generator_loss_ssl_sup(seg_logits_fake, mask, recon, original, w):
    """Supervised-phase generator loss: dice + L1, no adversarial term."""
    return (
        w.lambda_seg * dice_loss(seg_logits_fake, mask)
        + w.lambda_l1 * l1_recon(recon, original)
    )


def generator_loss_ssl_unsup(d_score_fake, ict_value_fake_branch, recon, original, w):
    """Unsupervised-phase generator loss: adversarial + consistency (precomputed) + L1.

    The consistency term is passed in as a scalar tensor; the trainer computes it on
    the reconstructed branch with the same coefficient draw it later applies for the
    segmentor update.
    """
    return (
        w.lambda_adv * adversarial_mse(d_score_fake, 1)
        + w.lambda_cus * ict_value_fake_branch
        + w.lambda_l1 * l1_recon(recon, original)
    )


def segmentor_loss_paired(seg_logits_real, seg_logits_fake, mask):
    """Mean of dice on the original branch and dice on the reconstructed branch."""
    return 0.5 * (dice_loss(seg_logits_real, mask) + dice_loss(seg_logits_fake, mask))


def segmentor_loss_ssl_unsup(ict_value_fake_branch, ict_value_real_branch):
    return 0.5 * (ict_value_fake_branch + ict_value_real_branch)


def discriminator_loss(d_score_real, d_score_fake):
    """Mean of real-vs-1 and fake-vs-0 MSE terms."""
    return 0.5 * (adversarial_mse(d_score_real, 1) + adversarial_mse(d_score_fake, 0))
