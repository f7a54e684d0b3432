"""Mean-teacher training with error reflection and multi-scale puzzle mixing."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, final

import numpy as np
import torch
from numpy.typing import NDArray

from src.config.settings import parse_config, serialize_config
from src.errors import CheckpointError, DataError, DivergenceError
from src.evaluation.metrics import aggregate, evaluate_case
from src.losses.objectives import guidance_loss, seg_loss, total_loss
from src.losses.ssim import ssim_loss
from src.metadata.checkpoint import load_checkpoint, restore_module, save_checkpoint
from src.models.config import TrainConfig
from src.models.dataset import BatchPair, DatasetIndex, LabeledPair
from src.models.layout import MixLayout
from src.models.losses import LossValues
from src.models.report import MetricsReport
from src.networks.ema import create_teacher, ema_update
from src.networks.unet import DualHeadUNet, argmax_labels
from src.parsers.image_loader import load_image, load_sample
from src.processors.puzzle import identity_layout, inverse_mix, make_layout, mix, mix_labels
from src.processors.reflection import (
    decouple,
    error_map,
    guidance_mask,
    guided_regions,
    softmax_unreliable_mask,
    unreliable_mask,
)
from src.processors.sketch import build_reflection_input
from src.progress.tracker import TrainingTracker
from src.selectors.ablation import PipelineVariant, ablation_mode

POLY_POWER = 0.9


@dataclass
class LabeledSample:
    """In-memory labeled case."""

    case: str
    image: NDArray[np.float32]
    mask: NDArray[np.int64]


@dataclass
class TrainingData:
    """Images of one split loaded into memory at the configured size.

    ``labeled_images`` is ``(N, C, H, W)``, ``labeled_masks`` ``(N, H, W)``
    and ``unlabeled_images`` ``(M, C, H, W)``; M may be 0.
    """

    labeled_images: NDArray[np.float32]
    labeled_masks: NDArray[np.int64]
    unlabeled_images: NDArray[np.float32]
    validation: list[LabeledSample] = field(default_factory=list)


@dataclass
class TrainState:
    """Everything that determines how training continues."""

    iteration: int
    student: DualHeadUNet
    teacher: DualHeadUNet
    optimizer: torch.optim.SGD
    sampling_rng: np.random.Generator
    layout_rng: np.random.Generator
    best_dice: float = -math.inf
    last_layout: MixLayout | None = None


def load_cases(pairs: list[LabeledPair], cfg: TrainConfig) -> list[LabeledSample]:
    """Load image/mask pairs at ``cfg.image_size``.

    Raises:
        DataError: If a file is unreadable or a mask holds classes above ``k_fg``
    """
    cases: list[LabeledSample] = []
    for p in pairs:
        image, mask = load_sample(p.image, p.mask, cfg.image_size, cfg.in_channels, cfg.k_fg)
        assert mask is not None
        cases.append(LabeledSample(case=p.image.stem, image=image, mask=mask))
    return cases


def load_training_data(index: DatasetIndex, cfg: TrainConfig) -> TrainingData:
    """Load every image of a split at ``cfg.image_size``.

    Raises:
        DataError: If a file is unreadable or the labeled side is empty
    """
    if not index.labeled:
        raise DataError(f"No labeled images in {index.root}")
    size, channels = cfg.image_size, cfg.in_channels

    labeled = load_cases(index.labeled, cfg)
    if index.unlabeled:
        unlabeled_images = np.stack([load_image(p, size, channels) for p in index.unlabeled])
    else:
        unlabeled_images = np.zeros((0, channels, size, size), dtype=np.float32)

    return TrainingData(
        labeled_images=np.stack([c.image for c in labeled]),
        labeled_masks=np.stack([c.mask for c in labeled]),
        unlabeled_images=unlabeled_images,
        validation=load_cases(index.validation, cfg),
    )


def build_network(cfg: TrainConfig) -> DualHeadUNet:
    return DualHeadUNet(
        in_channels=cfg.in_channels, num_classes=cfg.k_tot, widths=cfg.widths
    ).to(cfg.device)


def create_state(cfg: TrainConfig) -> TrainState:
    """Fresh training state; weights and both rng streams derive from ``cfg.seed``."""
    _ = torch.manual_seed(cfg.seed)
    student = build_network(cfg)
    teacher = create_teacher(student)
    assert isinstance(teacher, DualHeadUNet)
    optimizer = torch.optim.SGD(
        student.parameters(),
        lr=cfg.lr,
        momentum=cfg.momentum,
        weight_decay=cfg.weight_decay,
    )
    sampling_seed, layout_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    return TrainState(
        iteration=0,
        student=student,
        teacher=teacher,
        optimizer=optimizer,
        sampling_rng=np.random.default_rng(sampling_seed),
        layout_rng=np.random.default_rng(layout_seed),
    )


def learning_rate(cfg: TrainConfig, iteration: int) -> float:
    """Learning rate for an iteration under the configured schedule.

    The poly schedule reaches 0 at ``max_iters`` and stays there.
    """
    if cfg.lr_schedule == "constant":
        return cfg.lr
    return cfg.lr * max(0.0, 1.0 - iteration / cfg.max_iters) ** POLY_POWER


def sample_batch(
    data: TrainingData, state: TrainState, cfg: TrainConfig, labeled_only: bool = False
) -> BatchPair:
    """Draw ``batch_size`` labeled and unlabeled images from the sampling stream.

    The unlabeled side is left out when ``labeled_only`` is set or there are no
    unlabeled images.
    """
    rng = state.sampling_rng
    li = rng.integers(0, len(data.labeled_images), size=cfg.batch_size)
    unlabeled = None
    if len(data.unlabeled_images) and not labeled_only:
        ui = rng.integers(0, len(data.unlabeled_images), size=cfg.batch_size)
        unlabeled = torch.from_numpy(data.unlabeled_images[ui]).to(cfg.device)
    return BatchPair(
        labeled_image=torch.from_numpy(data.labeled_images[li]).to(cfg.device),
        labels=torch.from_numpy(data.labeled_masks[li]).to(cfg.device),
        unlabeled_image=unlabeled,
    )


def _sketch_batch(
    xu: torch.Tensor, pseudo: torch.Tensor, cfg: TrainConfig, variant: PipelineVariant
) -> torch.Tensor:
    images = xu.detach().cpu().numpy()
    labels = pseudo.cpu().numpy()
    sketches = [
        build_reflection_input(img, pl, cfg.sketch_params, aux_sketch=variant.aux_sketch)
        for img, pl in zip(images, labels)
    ]
    return torch.from_numpy(np.stack(sketches)).to(xu.device)


def train_step(
    state: TrainState,
    batch: BatchPair,
    cfg: TrainConfig,
    capture: dict[str, NDArray[np.float32]] | None = None,
) -> tuple[TrainState, LossValues]:
    """Run one full training iteration and advance the state.

    Args:
        state: Current training state, updated in place
        batch: Labeled and unlabeled images for this iteration
        cfg: Validated training configuration
        capture: When given, receives the first sample's pseudo-label, sketch,
            reconstruction and masks

    Returns:
        The advanced state and the loss components of this iteration

    Raises:
        ValueError: If a labeled-only batch is used with an SSL variant
        DivergenceError: If a loss component is not finite
    """
    variant = ablation_mode(cfg)
    student, teacher = state.student, state.teacher
    _ = student.train()
    _ = teacher.eval()

    xl, yl, xu = batch.labeled_image, batch.labels, batch.unlabeled_image
    zero = xl.new_zeros(())
    l_rec = zero
    l_g = zero

    if xu is None:
        if variant.reflection or variant.mixing:
            raise ValueError(
                f"Variant {variant.name!r} needs unlabeled images; labeled-only batches "
                "require disable_ers and disable_mms"
            )
        state.last_layout = None
        l_a = seg_loss(student.segment(xl), yl)
        l_b = l_a
    else:
        # (1) pseudo-labels from one teacher pass on the raw unlabeled image
        with torch.no_grad():
            pt = teacher.segment(xu)
            pseudo = argmax_labels(pt)
        if capture is not None:
            capture["pseudo_label"] = pseudo[0].float().cpu().numpy()

        # (2)-(3) reconstruction from the merged sketch
        proxy = None
        if variant.reconstruct:
            sketch = _sketch_batch(xu, pseudo, cfg, variant)
            proxy = student.reconstruct(sketch)
            l_rec = ssim_loss(proxy, xu, cfg.ssim_params)
            if capture is not None:
                capture["sketch"] = sketch[0, 0].cpu().numpy()
                capture["proxy"] = proxy[0].detach().mean(0).cpu().numpy()

        # (4) puzzle mixing and supervision of both mixed images
        h, w = xl.shape[-2:]
        if variant.mixing:
            n = variant.fixed_n or int(state.layout_rng.choice(cfg.n_choices))
            layout = make_layout(h, w, n, state.layout_rng)
        else:
            layout = identity_layout(h, w)
        state.last_layout = layout
        xa, xb = mix(xl, xu, layout)
        ya, yb = mix_labels(yl, pseudo, layout)
        pa = student.segment(xa)
        pb = student.segment(xb)
        l_a = seg_loss(pa, ya)
        l_b = seg_loss(pb, yb)

        # (5) guidance correction on the unreliable region
        if variant.guide:
            ps = inverse_mix(pa, pb, layout)
            if variant.unreliable_source == "error_map" and proxy is not None:
                em = error_map(proxy.detach(), xu)
                ur = unreliable_mask(em)
            else:
                em = None
                ur = softmax_unreliable_mask(pt, cfg.s1_confidence)
            ps_ur, pt_ur = decouple(ps, pt, ur)
            g = guidance_mask(ps_ur, pt_ur)
            teacher_mc, student_lc = guided_regions(ps_ur, pt_ur, g)
            l_g = guidance_loss(student_lc, teacher_mc)
            if capture is not None:
                if em is not None:
                    capture["error_map"] = em[0].detach().cpu().numpy()
                capture["unreliable"] = ur[0].cpu().numpy()
                capture["guidance"] = g[0].cpu().numpy()

    # (6) one backward pass over the weighted total, SGD step on the student
    lr = learning_rate(cfg, state.iteration)
    try:
        loss = total_loss(l_a, l_b, l_rec, l_g, variant.weights)
    except DivergenceError as e:
        e.snapshot.update(
            iteration=state.iteration,
            lr=lr,
            layout=state.last_layout.encode() if state.last_layout else None,
            variant=variant.name,
        )
        raise

    for group in state.optimizer.param_groups:
        group["lr"] = lr
    state.optimizer.zero_grad(set_to_none=True)
    loss.backward()
    state.optimizer.step()

    # (7) teacher follows the student
    ema_update(teacher, student, cfg.ema_lambda)
    state.iteration += 1

    losses = LossValues.assemble(
        float(l_a.detach()),
        float(l_b.detach()),
        float(l_rec.detach()),
        float(l_g.detach()),
        variant.weights,
    )
    return state, losses


@torch.no_grad()
def predict_mask(model: DualHeadUNet, image: NDArray[np.float32], device: str = "cpu") -> NDArray[np.int64]:
    """Label mask predicted for one ``(C, H, W)`` image in inference mode."""
    _ = model.eval()
    batch = torch.from_numpy(np.ascontiguousarray(image))[None].to(device)
    return argmax_labels(model.segment(batch))[0].cpu().numpy().astype(np.int64)


def evaluate_model(
    model: DualHeadUNet, cases: list[LabeledSample], k_fg: int, device: str = "cpu"
) -> MetricsReport:
    """Metrics of a model's predictions over labeled cases.

    Raises:
        DataError: If there are no cases
    """
    if not cases:
        raise DataError("Evaluation set is empty")
    results = [
        evaluate_case(predict_mask(model, c.image, device), c.mask, k_fg, case=c.case)
        for c in cases
    ]
    return aggregate(results, k_fg)


def validate(state: TrainState, val_set: list[LabeledSample], cfg: TrainConfig) -> MetricsReport:
    """Evaluate the student and update the best mean-Dice tracking.

    Raises:
        DataError: If the validation set is empty
    """
    report = evaluate_model(state.student, val_set, cfg.k_fg, cfg.device)
    state.best_dice = max(state.best_dice, report.mean_dice)
    return report


def state_payload(state: TrainState, cfg: TrainConfig) -> dict[str, Any]:
    """Checkpoint payload holding weights, optimizer and every rng stream."""
    return {
        "config": serialize_config(cfg),
        "iteration": state.iteration,
        "best_dice": state.best_dice,
        "student": state.student.state_dict(),
        "teacher": state.teacher.state_dict(),
        "optimizer": state.optimizer.state_dict(),
        "rng": {
            "sampling": json.dumps(state.sampling_rng.bit_generator.state),
            "layout": json.dumps(state.layout_rng.bit_generator.state),
            "torch": torch.get_rng_state(),
        },
    }


def restore_state(state: TrainState, payload: dict[str, Any]) -> TrainState:
    """Load a checkpoint payload into a state built from the same config.

    Raises:
        CheckpointError: If tensors or rng records do not match
    """
    restore_module(state.student, payload["student"], "student")
    restore_module(state.teacher, payload["teacher"], "teacher")
    try:
        state.optimizer.load_state_dict(payload["optimizer"])
        state.sampling_rng.bit_generator.state = json.loads(payload["rng"]["sampling"])
        state.layout_rng.bit_generator.state = json.loads(payload["rng"]["layout"])
        torch.set_rng_state(payload["rng"]["torch"])
        state.iteration = int(payload["iteration"])
        state.best_dice = float(payload["best_dice"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Checkpoint training state is incomplete: {e}") from e
    return state


def model_from_checkpoint(path: Path, use_teacher: bool = False) -> tuple[DualHeadUNet, TrainConfig]:
    """Rebuild the student (or teacher) network stored in a checkpoint.

    Raises:
        CheckpointError: If the file is missing, of another version or mismatched
    """
    payload = load_checkpoint(path)
    try:
        cfg = parse_config(payload["config"])
    except KeyError as e:
        raise CheckpointError(f"Checkpoint {path} has no config") from e
    model = build_network(cfg)
    label = "teacher" if use_teacher else "student"
    if label not in payload:
        raise CheckpointError(f"Checkpoint {path} has no {label} weights")
    restore_module(model, payload[label], label)
    _ = model.eval()
    return model, cfg


@final
class ReflectionTrainer:
    """Runs training to ``max_iters`` with periodic validation and checkpoints."""

    def __init__(
        self,
        cfg: TrainConfig,
        data: TrainingData,
        out_dir: Path | None = None,
        tracker: TrainingTracker | None = None,
    ) -> None:
        """Initialize the trainer.

        Args:
            cfg: Validated training configuration
            data: In-memory training split
            out_dir: Run directory for logs and checkpoints; None keeps everything in memory
            tracker: Progress tracker; a quiet stderr tracker is created if None

        Raises:
            DataError: If the selected variant needs unlabeled images and there are none
        """
        self.cfg = cfg
        self.data = data
        self.out_dir = out_dir
        self.tracker = tracker or TrainingTracker(out_dir=out_dir)
        self.variant = ablation_mode(cfg)
        if (self.variant.reflection or self.variant.mixing) and not len(data.unlabeled_images):
            raise DataError(f"Variant {self.variant.name!r} needs unlabeled images, found none")
        self.state = create_state(cfg)
        self.last_report: MetricsReport | None = None

    @property
    def checkpoint_dir(self) -> Path | None:
        return self.out_dir / "checkpoints" if self.out_dir else None

    def resume(self, path: Path) -> None:
        """Continue from a checkpoint written by this trainer.

        Raises:
            CheckpointError: If the checkpoint was written with another config
        """
        payload = load_checkpoint(path)
        if "config" not in payload:
            raise CheckpointError(f"Checkpoint {path} has no config")
        if parse_config(payload["config"]) != self.cfg:
            raise CheckpointError(f"Checkpoint {path} was written with a different config")
        _ = restore_state(self.state, payload)
        self.tracker.display_info(f"Resumed from {path} at iteration {self.state.iteration}")

    def save(self, name: str) -> Path | None:
        if self.checkpoint_dir is None:
            return None
        path = self.checkpoint_dir / name
        save_checkpoint(path, state_payload(self.state, self.cfg))
        return path

    def run(self) -> MetricsReport | None:
        """Train to ``max_iters`` and return the final validation report.

        Raises:
            DivergenceError: If the loss becomes non-finite; a snapshot is
                written to ``divergence.json`` in the run directory first
        """
        cfg = self.cfg
        state = self.state
        self.tracker.open_log(resume=state.iteration > 0)
        if not self.data.validation:
            self.tracker.display_warning("No validation cases; best checkpoint tracking disabled")
        self.tracker.display_info(
            f"Training variant {self.variant.name!r} for {cfg.max_iters} iterations"
        )

        labeled_only = not (self.variant.reflection or self.variant.mixing)
        try:
            with self.tracker.track_training(cfg.max_iters, state.iteration) as progress:
                while state.iteration < cfg.max_iters:
                    iteration = state.iteration
                    lr = learning_rate(cfg, iteration)
                    capture: dict[str, NDArray[np.float32]] | None = (
                        {} if self.tracker.debug_dumps and iteration % cfg.log_interval == 0 else None
                    )
                    batch = sample_batch(self.data, state, cfg, labeled_only)
                    _, losses = train_step(state, batch, cfg, capture)

                    n = state.last_layout.n if state.last_layout else 1
                    self.tracker.record(iteration, losses, lr, n)
                    progress.update(losses)
                    for name, array in (capture or {}).items():
                        self.tracker.dump_debug(iteration, name, array)

                    if state.iteration % cfg.val_interval == 0:
                        self._validate()
                    if state.iteration % cfg.checkpoint_interval == 0:
                        _ = self.save("latest.pt")
        except DivergenceError as e:
            self._write_divergence(e)
            raise
        finally:
            self.tracker.close_log()

        _ = self.save("latest.pt")
        if self.data.validation and (
            self.last_report is None or state.iteration % cfg.val_interval != 0
        ):
            self._validate()
        return self.last_report

    def _validate(self) -> None:
        if not self.data.validation:
            return
        previous = self.state.best_dice
        report = validate(self.state, self.data.validation, self.cfg)
        self.last_report = report
        if report.mean_dice > previous:
            path = self.save("best.pt")
            if path is not None:
                self.tracker.display_success(
                    f"Iteration {self.state.iteration}: mean Dice {report.mean_dice:.2f} (best)"
                )

    def _write_divergence(self, error: DivergenceError) -> None:
        self.tracker.display_error("Training diverged", error)
        if self.out_dir is None:
            return
        path = self.out_dir / "divergence.json"
        try:
            with path.open("w", encoding="utf-8") as f:
                json.dump(error.snapshot, f, indent=2, ensure_ascii=False, default=str)
        except OSError as e:
            self.tracker.display_warning(f"Could not write {path}: {e}")
