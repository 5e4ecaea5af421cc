"""Joint full-batch optimization of the image, class, and conditioner nets.

The loss is mean squared reconstruction error, plus beta times the
cross-entropy between predicted and ground-truth class distributions, plus
a rectified penalty that pushes the four modulation parameters toward
non-negative values. All parameter sets update together with Adam under a
step-decayed learning rate.
"""

from __future__ import annotations

import contextlib
import math
import time
from dataclasses import dataclass

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    def threadpool_limits(*args, **kwargs):
        return contextlib.nullcontext()

from . import tensor as tc
from .config import RunConfig
from .fields import ClassField, ImageField
from .metrics import psnr_from_rmse
from .models import ActivationParams, ModelSet, build_models
from .sampling import make_grid
from .tensor import Tape, Tensor

EPS_LOG = 1e-12


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class LossConfig:
    beta: float = 1.0
    lambda_neg: float = 1.0
    epochs: int = 1000
    lr0: float = 1e-4
    lr_gamma: float = 0.1
    lr_steps: int | None = None

    def validate(self) -> None:
        if self.beta < 0 or self.lambda_neg < 0:
            raise ValueError("beta and lambda_neg must be non-negative")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if not 0.0 < self.lr_gamma <= 1.0:
            raise ValueError("lr_gamma must lie in (0, 1]")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    def steps(self) -> int:
        if self.lr_steps is not None and self.lr_steps >= 1:
            return self.lr_steps
        return max(1, self.epochs // 3)


def lr_at(epoch: int, cfg: LossConfig) -> float:
    """Step decay: lr0 * gamma^(epoch // step_interval)."""
    return cfg.lr0 * cfg.lr_gamma ** (epoch // cfg.steps())


class Adam:
    """Standard bias-corrected Adam over a fixed parameter list."""

    def __init__(self, params: list[Tensor], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        for p in params:
            if not p.requires_grad or p.grad is None:
                raise ValueError("Adam needs parameters with gradient accumulators")
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in params]
        self.u = [np.zeros_like(p.data) for p in params]
        self.t = 0

    def step(self, lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, u in zip(self.params, self.m, self.u):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            u *= self.beta2
            u += (1.0 - self.beta2) * (g * g)
            p.data -= lr * (m / bc1) / (np.sqrt(u / bc2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def loss_terms(
    pred: Tensor,
    target: Tensor,
    class_pred: Tensor | None,
    class_true: Tensor | None,
    params: ActivationParams | None,
) -> tuple[Tensor, Tensor | None, Tensor | None]:
    """The three loss components as scalar tensors: (mse, ce, penalty).

    ce is the per-coordinate cross-entropy -sum_i true_i * log(pred_i),
    averaged over coordinates, with probabilities clamped at EPS_LOG so a
    confident miss stays finite. penalty averages relu(-x) over all four
    modulation blocks. Components without inputs come back as None.
    """
    mse = tc.mean_all(tc.square(tc.sub(pred, target)))
    ce = None
    if class_pred is not None and class_true is not None:
        picked = tc.mul(class_true, tc.log(tc.clamp_min(class_pred, EPS_LOG)))
        ce = tc.scale(tc.sum_all(picked), -1.0 / class_pred.rows)
    penalty = None
    if params is not None:
        neg_sum = tc.add(
            tc.add(tc.relu(tc.neg(params.amplitude)), tc.relu(tc.neg(params.frequency))),
            tc.add(tc.relu(tc.neg(params.phase)), tc.relu(tc.neg(params.shift))),
        )
        penalty = tc.mean_all(neg_sum)
    return mse, ce, penalty


def compute_loss(
    pred: Tensor,
    target: Tensor,
    class_pred: Tensor | None,
    class_true: Tensor | None,
    params: ActivationParams | None,
    cfg: LossConfig,
) -> Tensor:
    """Scalar training loss: mse + beta * ce + lambda_neg * penalty."""
    mse, ce, penalty = loss_terms(pred, target, class_pred, class_true, params)
    total = mse
    if ce is not None:
        total = tc.add(total, tc.scale(ce, cfg.beta))
    if penalty is not None:
        total = tc.add(total, tc.scale(penalty, cfg.lambda_neg))
    return total


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    mse: float
    ce: float
    penalty: float
    psnr: float
    lr: float
    seconds: float

    CSV_HEADER = ("epoch", "loss", "mse", "ce", "penalty", "psnr", "lr", "seconds")

    def csv_row(self) -> list[str]:
        return [str(self.epoch)] + [
            repr(v) for v in (self.loss, self.mse, self.ce, self.penalty,
                              self.psnr, self.lr, self.seconds)
        ]


@dataclass
class TrainResult:
    models: ModelSet
    log: list[EpochRecord]
    fitted: ImageField
    fitted_mask: ClassField | None


def _check_finite(epoch: int, lr: float, values: dict[str, float]) -> None:
    bad = [name for name, v in values.items() if not math.isfinite(v)]
    if bad:
        detail = ", ".join(f"{k}={values[k]!r}" for k in values)
        raise TrainingDiverged(
            f"non-finite loss at epoch {epoch} (lr={lr:g}): "
            f"offending term(s) {bad}; {detail}"
        )


def train(image: ImageField, mask: ClassField | None, cfg: RunConfig,
          models: ModelSet | None = None) -> TrainResult:
    """Fit the configured model to one image (optionally with its mask).

    Runs the per-epoch cycle: class probabilities from the class net, the
    modulation parameters from the conditioner, intensities from the image
    net, then one joint Adam update of every parameter set. Returns the
    trained networks, the per-epoch log, and the final fitted image.
    ``models`` overrides the seeded construction, for callers that need
    hand-built networks.
    """
    cfg.validate()
    if cfg.model == "seco" and mask is None:
        raise ValueError("model kind 'seco' requires a segmentation mask")
    if mask is not None and (mask.height, mask.width) != (image.height, image.width):
        raise ValueError("image and mask must share the pixel grid")

    class_count = mask.class_count if mask is not None else max(cfg.classes, 1)
    if models is None:
        models = build_models(cfg, class_count, cfg.seed)
    epochs = cfg.resolved_epochs()
    lcfg = LossConfig(cfg.beta, cfg.lambda_neg, epochs, cfg.lr0, cfg.lr_gamma,
                      cfg.resolved_lr_steps(epochs))
    lcfg.validate()

    grid = make_grid(image.height, image.width)
    coords = grid.coords
    target = image.flat()
    probs_true = mask.probs if mask is not None else None
    data_range = float(target.max())
    if data_range <= 0:
        data_range = 1.0

    trainable = list(models.image_net.parameters())
    if models.class_net is not None:
        trainable += models.class_net.parameters()
    if models.conditioner is not None and not cfg.freeze_conditioner:
        trainable += models.conditioner.parameters()
    opt = Adam(trainable)

    tc.tune_allocator()
    batch_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xB47C]))
    n = grid.n
    full_coords, full_target = Tensor(coords), Tensor(target)
    full_true = Tensor(probs_true) if probs_true is not None else None
    log: list[EpochRecord] = []
    t0 = time.perf_counter()

    # The compiled activation kernels parallelize internally; keeping BLAS on
    # one thread avoids pool contention that dominates at this problem size.
    with threadpool_limits(limits=1, user_api="blas"):
        for epoch in range(epochs):
            lr = lr_at(epoch, lcfg)
            if cfg.batch > 0 and cfg.batch < n:
                order = batch_rng.permutation(n)
                chunks = [order[i:i + cfg.batch] for i in range(0, n, cfg.batch)]
            else:
                chunks = [None]

            sums = {"loss": 0.0, "mse": 0.0, "ce": 0.0, "penalty": 0.0}
            for idx in chunks:
                if idx is None:
                    coords_t, target_t, true_t = full_coords, full_target, full_true
                else:
                    coords_t, target_t = Tensor(coords[idx]), Tensor(target[idx])
                    true_t = (Tensor(probs_true[idx])
                              if probs_true is not None else None)
                with Tape() as tape:
                    pred, class_pred, act = models.forward(coords_t)
                    mse_t, ce_t, pen_t = loss_terms(pred, target_t, class_pred,
                                                    true_t, act)
                    total = mse_t
                    if ce_t is not None:
                        total = tc.add(total, tc.scale(ce_t, lcfg.beta))
                    if pen_t is not None:
                        total = tc.add(total, tc.scale(pen_t, lcfg.lambda_neg))
                    tape.backward(total)
                weight = coords_t.rows / n
                terms = {
                    "loss": total.item(),
                    "mse": mse_t.item(),
                    "ce": ce_t.item() if ce_t is not None else 0.0,
                    "penalty": pen_t.item() if pen_t is not None else 0.0,
                }
                _check_finite(epoch, lr, terms)
                for key, value in terms.items():
                    sums[key] += weight * value
                opt.step(lr)
                for p in models.parameters():
                    p.zero_grad()

            train_psnr = psnr_from_rmse(math.sqrt(sums["mse"]), data_range)
            log.append(EpochRecord(epoch, sums["loss"], sums["mse"], sums["ce"],
                                   sums["penalty"], train_psnr, lr,
                                   time.perf_counter() - t0))

    pred_col, probs_pred = models.predict(grid)
    models.trained_shape = (image.height, image.width)
    fitted = ImageField.from_flat(pred_col, image.height, image.width)
    fitted_mask = (ClassField(image.height, image.width, probs_pred)
                   if probs_pred is not None else None)
    return TrainResult(models, log, fitted, fitted_mask)


def time_to_psnr(log: list[EpochRecord], threshold: float) -> tuple[bool, float, int]:
    """First epoch whose training PSNR reaches the threshold.

    Returns (reached, seconds, epoch); an unreached threshold is data, not
    an error, and comes back as (False, nan, -1).
    """
    for rec in log:
        if rec.psnr >= threshold:
            return True, rec.seconds, rec.epoch
    return False, math.nan, -1
