"""Training loops.

Four trainers share one epoch driver (validation, best-epoch tracking, early
stopping). The coupled loop updates the discriminator, then the generator,
then the segmentor within each iteration; the segmentor steps exactly once,
on the gradient accumulated from both the generator objective and its own.

Hook events (for instrumentation and tests): a hook is a callable
``hook(event_name, bundle)`` invoked at "after_d_backward", "d_step",
"after_g_backward", "g_step", "after_s_backward", "s_step"; the two-phase
semi-supervised loop suffixes the generator/segmentor events with "_sup" and
"_unsup".
"""

import copy
import logging

import numpy as np
import torch

from ..data.batching import batch_iterator
from ..data.samples import LabeledSample
from ..errors import ConfigError, DataError, TrainingDivergedError
from ..losses import (
    MixCoefficientSampler,
    adversarial_mse,
    dice_loss,
    discriminator_loss,
    generator_loss_sel,
    generator_loss_ssl_sup,
    generator_loss_ssl_unsup,
    ict_loss,
    l1_recon,
    per_image_dice_loss,
    segmentor_loss_paired,
    segmentor_loss_ssl_unsup,
)
from ..models import build_bundle
from .augment import augment_batch
from .history import TrainHistory

log = logging.getLogger(__name__)


def collate_images(samples, device="cpu"):
    arr = np.stack([s.image for s in samples]).astype(np.float32)
    return torch.from_numpy(arr).unsqueeze(1).to(device)


def collate_masks(samples, device="cpu"):
    arr = np.stack([s.mask for s in samples]).astype(np.int64)
    return torch.from_numpy(arr).to(device)


def _set_requires_grad(net, flag):
    for p in net.parameters():
        p.requires_grad_(flag)


def _emit(hook, name, bundle):
    if hook is not None:
        hook(name, bundle)


def _zero_all_grads(bundle):
    for opt in bundle.optimizers.values():
        opt.zero_grad(set_to_none=True)


def sel_iteration(bundle, config, samples, hook=None):
    """One coupled iteration: D step, G step, then a single S step.

    The generator objective back-propagates through the segmentor, so after
    its backward pass the segmentor's gradient buffers already hold the
    feedback contribution; the segmentor loss then adds its own gradients and
    the segmentor steps once on the sum. Ablations rewire only this coupling.
    """
    w = config.weights
    images = collate_images(samples, bundle.device)
    masks = collate_masks(samples, bundle.device)
    gen, seg, disc = bundle.generator, bundle.segmentor, bundle.discriminator
    opts = bundle.optimizers

    _zero_all_grads(bundle)
    fake = gen(images)

    # Discriminator update. The reconstruction enters detached, so the
    # generator receives no gradient from this step.
    loss_d = discriminator_loss(disc(images), disc(fake.detach()))
    loss_d.backward()
    _emit(hook, "after_d_backward", bundle)
    opts["discriminator"].step()
    _emit(hook, "d_step", bundle)

    # Generator update. The freshly stepped discriminator scores the
    # reconstruction; it participates in the graph but does not learn here.
    _set_requires_grad(disc, False)
    if config.ablation == "none":
        loss_g = generator_loss_sel(disc(fake), seg(fake), masks, fake, images, w)
        # This backward leaves the feedback gradients sitting in the
        # segmentor's buffers; the segmentor loss below accumulates onto them.
        loss_g.backward()
    elif config.ablation == "no_seg_feedback":
        loss_g = w.lambda_adv * adversarial_mse(disc(fake), 1) + w.lambda_l1 * l1_recon(
            fake, images
        )
        loss_g.backward()
    elif config.ablation == "negated_seg_feedback":
        # Only the sign of the segmentation term flips; the coupling stays,
        # so the flipped gradients land in the segmentor's buffers exactly
        # like the default feedback does.
        loss_g = (
            w.lambda_adv * adversarial_mse(disc(fake), 1)
            - w.lambda_seg * dice_loss(seg(fake), masks)
            + w.lambda_l1 * l1_recon(fake, images)
        )
        loss_g.backward()
    else:
        # freeze_segmentor_for_LG: segmentor parameters are constants for this
        # term. Gradient still flows through the segmentor's activations into
        # the generator; the parameter buffers stay untouched, so the
        # segmentor's own update is unaffected.
        _set_requires_grad(seg, False)
        loss_g = generator_loss_sel(disc(fake), seg(fake), masks, fake, images, w)
        loss_g.backward()
        _set_requires_grad(seg, True)
    _set_requires_grad(disc, True)
    _emit(hook, "after_g_backward", bundle)
    opts["generator"].step()
    _emit(hook, "g_step", bundle)

    # Segmentor update on the accumulated gradient. The reconstruction branch
    # is recomputed on the detached reconstruction: the generator has already
    # stepped in place, so its old graph cannot be walked again, but the
    # reconstruction values and the segmentor parameters are unchanged, so the
    # term and its segmentor gradients are identical.
    seg_real = seg(images)
    seg_fake = seg(fake.detach())
    loss_s = segmentor_loss_paired(seg_real, seg_fake, masks)
    loss_s.backward()
    _emit(hook, "after_s_backward", bundle)
    opts["segmentor"].step()
    _emit(hook, "s_step", bundle)

    return {
        "L_D": float(loss_d.item()),
        "L_G": float(loss_g.item()),
        "L_S": float(loss_s.item()),
    }


def ssl_iteration(bundle, config, labeled_samples, unlabeled_samples, sampler, rng, hook=None):
    """One two-phase iteration: supervised pass on a labeled batch, then an
    unsupervised pass on an unlabeled batch.

    A single coefficient draw and partner permutation serve both consistency
    branches of the unsupervised phase (lam first, then the permutation). A
    one-element unlabeled batch cannot form pairs; its consistency terms are
    exact zeros and everything else proceeds.
    """
    w = config.weights
    gen, seg, disc = bundle.generator, bundle.segmentor, bundle.discriminator
    opts = bundle.optimizers
    x_l = collate_images(labeled_samples, bundle.device)
    y_l = collate_masks(labeled_samples, bundle.device)
    x_u = collate_images(unlabeled_samples, bundle.device)

    _zero_all_grads(bundle)

    # Phase 1 (supervised): no adversarial term, no discriminator.
    fake_l = gen(x_l)
    loss_g_sup = generator_loss_ssl_sup(seg(fake_l), y_l, fake_l, x_l, w)
    loss_g_sup.backward()
    _emit(hook, "after_g_backward_sup", bundle)
    opts["generator"].step()
    _emit(hook, "g_step_sup", bundle)

    # The reconstruction branch is recomputed on the detached reconstruction
    # (the generator just stepped in place, so its old graph is unusable; the
    # values and the segmentor gradients are unchanged). The segmentor buffers
    # still hold the feedback gradients, so this backward accumulates.
    seg_real_l = seg(x_l)
    seg_fake_l = seg(fake_l.detach())
    loss_s_sup = segmentor_loss_paired(seg_real_l, seg_fake_l, y_l)
    loss_s_sup.backward()
    _emit(hook, "after_s_backward_sup", bundle)
    opts["segmentor"].step()
    _emit(hook, "s_step_sup", bundle)

    # Phase 2 (unsupervised).
    batch_u = x_u.shape[0]
    lam = sampler.draw(rng, batch_u)
    perm = rng.permutation(batch_u)

    fake_u = gen(x_u)
    loss_d = discriminator_loss(disc(x_u), disc(fake_u.detach()))
    loss_d.backward()
    _emit(hook, "after_d_backward", bundle)
    opts["discriminator"].step()
    _emit(hook, "d_step", bundle)

    opts["generator"].zero_grad(set_to_none=True)
    opts["segmentor"].zero_grad(set_to_none=True)
    _set_requires_grad(disc, False)

    def probs_of(imgs):
        return torch.softmax(seg(imgs), dim=1)

    if batch_u >= 2:
        ict_fake = ict_loss(probs_of, fake_u, perm, lam)
    else:
        ict_fake = probs_of(fake_u).sum() * 0.0
    loss_g_unsup = generator_loss_ssl_unsup(disc(fake_u), ict_fake, fake_u, x_u, w)
    loss_g_unsup.backward()
    _set_requires_grad(disc, True)
    _emit(hook, "after_g_backward_unsup", bundle)
    opts["generator"].step()
    _emit(hook, "g_step_unsup", bundle)

    # Same recomputation as the supervised phase: the consistency term on the
    # reconstructions is rebuilt on detached images with the same draw, which
    # reproduces the value and the segmentor gradients without touching the
    # generator's already-stepped graph.
    fake_u_const = fake_u.detach()
    if batch_u >= 2:
        ict_fake_s = ict_loss(probs_of, fake_u_const, perm, lam)
        ict_real = ict_loss(probs_of, x_u, perm, lam)
    else:
        ict_fake_s = probs_of(fake_u_const).sum() * 0.0
        ict_real = probs_of(x_u).sum() * 0.0
    loss_s_unsup = segmentor_loss_ssl_unsup(ict_fake_s, ict_real)
    loss_s_unsup.backward()
    _emit(hook, "after_s_backward_unsup", bundle)
    opts["segmentor"].step()
    _emit(hook, "s_step_unsup", bundle)

    return {
        "L_G_sup": float(loss_g_sup.item()),
        "L_S_sup": float(loss_s_sup.item()),
        "L_D": float(loss_d.item()),
        "L_G_unsup": float(loss_g_unsup.item()),
        "L_S_unsup": float(loss_s_unsup.item()),
    }


def supervised_iteration(bundle, samples, hook=None):
    images = collate_images(samples, bundle.device)
    masks = collate_masks(samples, bundle.device)
    opt = bundle.optimizers["segmentor"]
    opt.zero_grad(set_to_none=True)
    loss = dice_loss(bundle.segmentor(images), masks)
    loss.backward()
    _emit(hook, "after_s_backward", bundle)
    opt.step()
    _emit(hook, "s_step", bundle)
    return {"L_S": float(loss.item())}


def gan_pretrain_iteration(bundle, config, samples, hook=None):
    """Plain reconstruction-GAN iteration (no segmentation feedback)."""
    w = config.weights
    images = collate_images(samples, bundle.device)
    opts = bundle.optimizers

    opts["discriminator"].zero_grad(set_to_none=True)
    opts["generator"].zero_grad(set_to_none=True)

    fake = bundle.generator(images)
    loss_d = discriminator_loss(
        bundle.discriminator(images), bundle.discriminator(fake.detach())
    )
    loss_d.backward()
    _emit(hook, "after_d_backward", bundle)
    opts["discriminator"].step()
    _emit(hook, "d_step", bundle)

    _set_requires_grad(bundle.discriminator, False)
    loss_g = (
        w.lambda_adv * adversarial_mse(bundle.discriminator(fake), 1)
        + w.lambda_l1 * l1_recon(fake, images)
    )
    loss_g.backward()
    _set_requires_grad(bundle.discriminator, True)
    _emit(hook, "after_g_backward", bundle)
    opts["generator"].step()
    _emit(hook, "g_step", bundle)

    return {"L_D": float(loss_d.item()), "L_G": float(loss_g.item())}


def validate(bundle, validation_set, use_sge=False, batch_size=8):
    """Mean per-image dice loss over the validation set, no updates.

    With use_sge=True the images pass through the generator first, so the
    reported loss is that of the enhanced pipeline.
    """
    validation_set = list(validation_set)
    if not validation_set:
        raise DataError("validation set is empty")
    bundle.eval_mode()
    losses = []
    with torch.no_grad():
        for batch in batch_iterator(validation_set, batch_size):
            images = collate_images(batch, bundle.device)
            masks = collate_masks(batch, bundle.device)
            if use_sge:
                images = bundle.generator(images)
            losses.append(per_image_dice_loss(bundle.segmentor(images), masks))
    return float(torch.cat(losses).mean().item())


def _validation_pair(bundle, validation_set, batch_size):
    return (
        validate(bundle, validation_set, use_sge=False, batch_size=batch_size),
        validate(bundle, validation_set, use_sge=True, batch_size=batch_size),
    )


def _check_finite(losses, epoch, iteration):
    if not all(np.isfinite(v) for v in losses.values()):
        raise TrainingDivergedError(
            f"non-finite loss at epoch {epoch} iteration {iteration}: {losses}",
            epoch=epoch,
            iteration=iteration,
            losses=losses,
        )


def _snapshot(bundle):
    return {
        "models": {
            name: copy.deepcopy(net.state_dict())
            for name, net in bundle.networks().items()
        },
        "optimizers": {
            name: copy.deepcopy(opt.state_dict())
            for name, opt in bundle.optimizers.items()
        },
    }


def _restore(bundle, snap):
    for name, net in bundle.networks().items():
        net.load_state_dict(snap["models"][name])
    for name, opt in bundle.optimizers.items():
        opt.load_state_dict(snap["optimizers"][name])


def _run_epochs(bundle, config, run_epoch, validation_set, history):
    """Epoch driver: train, validate, track the best epoch, stop early.

    Improvement means strictly lower selection loss; ties keep the earlier
    epoch. Training halts once `patience` consecutive epochs fail to improve
    (patience 0 disables the check). The bundle is restored to its best-epoch
    state before returning; with max_epochs 0 that is the initialization.
    """
    best_loss = float("inf")
    best_snap = _snapshot(bundle)
    best_epoch = 0
    bad_epochs = 0
    stop_reason = "max_epochs"

    for epoch in range(1, config.max_epochs + 1):
        bundle.train_mode()
        run_epoch(epoch)
        val_plain, val_sge = _validation_pair(bundle, validation_set, config.eval_batch_size)
        if not (np.isfinite(val_plain) and np.isfinite(val_sge)):
            raise TrainingDivergedError(
                f"non-finite validation loss at epoch {epoch}: "
                f"plain={val_plain} sge={val_sge}",
                epoch=epoch,
            )
        selection = val_sge if config.sge_for_selection else val_plain
        if selection < best_loss:
            best_loss = selection
            best_epoch = epoch
            best_snap = _snapshot(bundle)
            bad_epochs = 0
        else:
            bad_epochs += 1
        history.record_epoch(epoch, val_plain, val_sge, best_epoch)
        log.info(
            "epoch=%d val_dice_loss=%.6f val_dice_loss_sge=%.6f best_epoch=%d",
            epoch, val_plain, val_sge, best_epoch,
        )
        if config.patience > 0 and bad_epochs >= config.patience:
            stop_reason = "early_stop"
            break

    _restore(bundle, best_snap)
    history.best_epoch = best_epoch
    history.stop_reason = stop_reason
    log.info("training done: best_epoch=%d stop_reason=%s", best_epoch, stop_reason)
    return bundle, history


def _build_from_config(config, identity_generator=False):
    return build_bundle(
        segmentor_config=config.segmentor,
        generator_config=None if identity_generator else config.generator,
        discriminator_config=config.discriminator,
        learning_rate=config.learning_rate,
        adam_betas=config.adam_betas,
        seed=config.seed,
        device=config.device,
    )


def train_grn_sel(config, labeled_set, validation_set, bundle=None, hook=None):
    if config.mode != "grn_sel":
        raise ConfigError(f"train_grn_sel needs mode grn_sel, got {config.mode!r}")
    labeled_set = list(labeled_set)
    if not labeled_set:
        raise DataError("labeled set is empty")
    if bundle is None:
        bundle = _build_from_config(config)
    history = TrainHistory(mode=config.mode)

    def run_epoch(epoch):
        batches = batch_iterator(
            labeled_set, config.batch_size, shuffle=True, seed=(config.seed, 101, epoch)
        )
        for it, batch in enumerate(batches, start=1):
            losses = sel_iteration(bundle, config, batch, hook)
            _check_finite(losses, epoch, it)
            history.record_iteration(epoch, it, losses)
            log.info(
                "epoch=%d iter=%d L_D=%.4f L_G=%.4f L_S=%.4f",
                epoch, it, losses["L_D"], losses["L_G"], losses["L_S"],
            )

    return _run_epochs(bundle, config, run_epoch, validation_set, history)


def train_grn_ssl(config, labeled_set, unlabeled_set, validation_set, bundle=None, hook=None):
    if config.mode != "grn_ssl":
        raise ConfigError(f"train_grn_ssl needs mode grn_ssl, got {config.mode!r}")
    labeled_set = list(labeled_set)
    unlabeled_set = list(unlabeled_set)
    if not labeled_set or not unlabeled_set:
        raise DataError("semi-supervised training needs non-empty labeled and unlabeled sets")
    if config.batch_size < 2:
        raise ConfigError(
            f"semi-supervised training needs batch_size >= 2 to form consistency "
            f"pairs, got {config.batch_size}"
        )
    if bundle is None:
        bundle = _build_from_config(config)
    sampler = MixCoefficientSampler(
        distribution=config.mix_distribution,
        alpha=config.mix_alpha,
        seed=config.seed,
        per_sample=config.mix_per_sample,
    )
    history = TrainHistory(mode=config.mode)

    def run_epoch(epoch):
        # The unlabeled pool drives the epoch; the labeled iterator cycles so
        # every unlabeled batch is paired with a full labeled batch.
        labeled_stream = batch_iterator(
            labeled_set, config.batch_size, shuffle=True,
            seed=(config.seed, 102, epoch), cycle=True,
        )
        unlabeled_batches = batch_iterator(
            unlabeled_set, config.batch_size, shuffle=True, seed=(config.seed, 103, epoch)
        )
        for it, (batch_u, batch_l) in enumerate(zip(unlabeled_batches, labeled_stream), start=1):
            rng = np.random.default_rng([config.seed, 202, epoch, it])
            losses = ssl_iteration(bundle, config, batch_l, batch_u, sampler, rng, hook)
            _check_finite(losses, epoch, it)
            history.record_iteration(epoch, it, losses)
            log.info(
                "epoch=%d iter=%d phase=sup L_G=%.4f L_S=%.4f",
                epoch, it, losses["L_G_sup"], losses["L_S_sup"],
            )
            log.info(
                "epoch=%d iter=%d phase=unsup L_D=%.4f L_G=%.4f L_S=%.4f",
                epoch, it, losses["L_D"], losses["L_G_unsup"], losses["L_S_unsup"],
            )

    return _run_epochs(bundle, config, run_epoch, validation_set, history)


def train_supervised_baseline(config, labeled_set, validation_set, bundle=None, hook=None):
    if config.mode not in ("supervised", "supervised_img_aug"):
        raise ConfigError(
            f"train_supervised_baseline needs mode supervised or supervised_img_aug, "
            f"got {config.mode!r}"
        )
    labeled_set = list(labeled_set)
    if not labeled_set:
        raise DataError("labeled set is empty")
    if bundle is None:
        bundle = _build_from_config(config, identity_generator=True)
    history = TrainHistory(mode=config.mode)

    def run_epoch(epoch):
        batches = batch_iterator(
            labeled_set, config.batch_size, shuffle=True, seed=(config.seed, 101, epoch)
        )
        for it, batch in enumerate(batches, start=1):
            if config.mode == "supervised_img_aug":
                rng = np.random.default_rng([config.seed, 301, epoch, it])
                batch = augment_batch(batch, config.augment, rng)
            losses = supervised_iteration(bundle, batch, hook)
            _check_finite(losses, epoch, it)
            history.record_iteration(epoch, it, losses)
            log.info("epoch=%d iter=%d L_S=%.4f", epoch, it, losses["L_S"])

    return _run_epochs(bundle, config, run_epoch, validation_set, history)


def reconstruct_dataset(bundle, labeled_set, batch_size=8):
    """Labeled samples with generator reconstructions in place of the images."""
    out = []
    bundle.generator.eval()
    with torch.no_grad():
        for batch in batch_iterator(list(labeled_set), batch_size):
            images = collate_images(batch, bundle.device)
            recon = bundle.generator(images).clamp(-1.0, 1.0).cpu().numpy()
            for sample, rec in zip(batch, recon):
                out.append(
                    LabeledSample(
                        meta=sample.meta,
                        image=np.ascontiguousarray(rec[0]),
                        mask=sample.mask,
                    )
                )
    return out


def train_gan_aug_baseline(config, labeled_set, validation_set, bundle=None, hook=None):
    """Stage 1 pre-trains a reconstruction GAN; stage 2 freezes the generator
    and trains the segmentor on originals plus reconstructions."""
    if config.mode != "gan_aug_baseline":
        raise ConfigError(
            f"train_gan_aug_baseline needs mode gan_aug_baseline, got {config.mode!r}"
        )
    labeled_set = list(labeled_set)
    if not labeled_set:
        raise DataError("labeled set is empty")
    if bundle is None:
        bundle = _build_from_config(config)
    history = TrainHistory(mode=config.mode)

    pretrain_epochs = (
        config.gan_pretrain_epochs
        if config.gan_pretrain_epochs is not None
        else config.max_epochs
    )
    for epoch in range(1, pretrain_epochs + 1):
        bundle.train_mode()
        batches = batch_iterator(
            labeled_set, config.batch_size, shuffle=True, seed=(config.seed, 110, epoch)
        )
        for it, batch in enumerate(batches, start=1):
            losses = gan_pretrain_iteration(bundle, config, batch, hook)
            _check_finite(losses, epoch, it)
            history.record_iteration(epoch, it, losses, phase="gan_pretrain")
            log.info(
                "epoch=%d iter=%d phase=gan_pretrain L_D=%.4f L_G=%.4f",
                epoch, it, losses["L_D"], losses["L_G"],
            )

    _set_requires_grad(bundle.generator, False)
    joint_set = labeled_set + reconstruct_dataset(bundle, labeled_set, config.eval_batch_size)
    log.info("joint dataset for the segmentor stage: %d samples", len(joint_set))

    def run_epoch(epoch):
        batches = batch_iterator(
            joint_set, config.batch_size, shuffle=True, seed=(config.seed, 111, epoch)
        )
        for it, batch in enumerate(batches, start=1):
            losses = supervised_iteration(bundle, batch, hook)
            _check_finite(losses, epoch, it)
            history.record_iteration(epoch, it, losses)
            log.info("epoch=%d iter=%d L_S=%.4f", epoch, it, losses["L_S"])

    return _run_epochs(bundle, config, run_epoch, validation_set, history)


def run_trainer(config, labeled_set, validation_set, unlabeled_set=None, bundle=None, hook=None):
    """Dispatch to the trainer matching config.mode."""
    if config.mode == "grn_sel":
        return train_grn_sel(config, labeled_set, validation_set, bundle=bundle, hook=hook)
    if config.mode == "grn_ssl":
        if unlabeled_set is None:
            raise ConfigError("mode grn_ssl needs an unlabeled set")
        return train_grn_ssl(
            config, labeled_set, unlabeled_set, validation_set, bundle=bundle, hook=hook
        )
    if config.mode in ("supervised", "supervised_img_aug"):
        return train_supervised_baseline(
            config, labeled_set, validation_set, bundle=bundle, hook=hook
        )
    return train_gan_aug_baseline(config, labeled_set, validation_set, bundle=bundle, hook=hook)
