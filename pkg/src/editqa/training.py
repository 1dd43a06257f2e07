"""Losses, the two-stage schedule, the k-fold protocol, and checkpointing.

Stage 1 is linear probing: every backbone is frozen and only the regression
heads and the temporal adapter learn. Stage 2 additionally unfreezes the
visual-quality backbones and the relevance encoders; the vision-language
backbones stay frozen unless explicitly requested. One Adam optimizer and
one cosine schedule span both stages.
"""

from __future__ import annotations

import hashlib
import json
import random
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import torch

from . import correlation
from .errors import UserInputError
from .manifest import EditTriplet, FoldSplit, make_folds
from .mos import MosTable
from .qa.config import ModelConfig
from .qa.model import EditQaModel, clip_to_tensor
from .video import VideoClip, VideoDecoder, standardize_clip


def plcc_loss(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """(1 - Pearson r) / 2, in [0, 1]; a constant prediction scores 0.5."""
    if pred.shape != gt.shape or pred.ndim != 1:
        raise UserInputError(f"expected equal-length vectors, got {pred.shape} vs {gt.shape}")
    if pred.numel() < 2:
        raise UserInputError("PLCC loss needs at least 2 samples")
    gc = gt - gt.mean()
    gn = torch.linalg.vector_norm(gc)
    if float(gn) == 0.0:
        raise UserInputError("PLCC loss undefined for constant targets")
    pc = pred - pred.mean()
    pn = torch.linalg.vector_norm(pc)
    if float(pn.detach()) == 0.0:
        # Collapsed prediction: define r = 0 -> loss 0.5, without the exploding
        # gradient a bare epsilon guard would produce.
        return pred.sum() * 0.0 + 0.5
    r = (pc * gc).sum() / (pn * gn)
    return (1.0 - r) / 2.0


def rank_loss(pred: torch.Tensor, gt: torch.Tensor,
              margin: float = 0.0) -> torch.Tensor:
    """Pairwise hinge over all (i, j) with gt_i > gt_j; 0 when no such pairs."""
    if pred.shape != gt.shape or pred.ndim != 1:
        raise UserInputError(f"expected equal-length vectors, got {pred.shape} vs {gt.shape}")
    ordered = gt.unsqueeze(1) > gt.unsqueeze(0)  # ordered[i, j]: gt_i > gt_j
    if not bool(ordered.any()):
        return pred.new_zeros(())
    violation = pred.unsqueeze(0) - pred.unsqueeze(1) + margin  # pred_j - pred_i
    return torch.clamp(violation, min=0.0)[ordered].mean()


def total_loss(pred: torch.Tensor, gt: torch.Tensor, alpha: float = 0.3,
               margin: float = 0.0) -> torch.Tensor:
    """Correlation loss plus alpha-weighted rank loss."""
    return plcc_loss(pred, gt) + alpha * rank_loss(pred, gt, margin=margin)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 8
    stage1_epochs: int = 40
    stage2_epochs: int = 20
    alpha: float = 0.3
    rank_margin: float = 0.0
    seed: int = 0
    unfreeze_vl: bool = False

    def __post_init__(self):
        if self.alpha < 0:
            raise UserInputError("alpha must be non-negative")
        if self.batch_size < 2:
            raise UserInputError("batch_size must be >= 2 (PLCC needs 2 samples)")
        if self.stage1_epochs < 0 or self.stage2_epochs < 0:
            raise UserInputError("epoch counts must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)

    def canonical_hash(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        try:
            return cls(**data)
        except TypeError as exc:
            raise UserInputError(f"bad train config: {exc}")

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UserInputError(f"cannot read train config {path}: {exc}")


@dataclass(frozen=True)
class TrainingExample:
    """One supervised item: clips, prompt, and its MOS target."""

    triplet_id: str
    source: VideoClip
    edited: VideoClip
    prompt: str
    target: float


def load_examples(triplets: Sequence[EditTriplet], mos: MosTable,
                  decoder: VideoDecoder) -> list[TrainingExample]:
    """Decodes and standardizes every triplet; MOS must cover the manifest."""
    missing = sorted(t.triplet_id for t in triplets if t.triplet_id not in mos)
    if missing:
        raise UserInputError(f"MOS table is missing triplet(s): {missing[:10]}"
                             f"{'...' if len(missing) > 10 else ''}")
    examples = []
    for t in triplets:
        examples.append(TrainingExample(
            triplet_id=t.triplet_id,
            source=standardize_clip(decoder.decode(t.source_path)),
            edited=standardize_clip(decoder.decode(t.edited_path)),
            prompt=t.prompt,
            target=mos.mos_of(t.triplet_id)))
    return examples


def _forward_scores(model: EditQaModel, batch: Sequence[TrainingExample]
                    ) -> torch.Tensor:
    """Final scores for a batch; clips of equal shape are stacked, else looped."""
    shapes = {(ex.source.frames.shape, ex.edited.frames.shape) for ex in batch}
    needs_source = model.relevance is not None
    if len(shapes) == 1:
        source = (torch.stack([clip_to_tensor(ex.source) for ex in batch])
                  if needs_source else None)
        edited = torch.stack([clip_to_tensor(ex.edited) for ex in batch])
        return model(source, edited, [ex.prompt for ex in batch])["final"]
    scores = []
    for ex in batch:
        src = clip_to_tensor(ex.source).unsqueeze(0) if needs_source else None
        out = model(src, clip_to_tensor(ex.edited).unsqueeze(0), [ex.prompt])
        scores.append(out["final"][0])
    return torch.stack(scores)


@dataclass
class TrainState:
    """Optimizer/schedule state shared by the two stages."""

    optimizer: torch.optim.Optimizer
    scheduler: torch.optim.lr_scheduler.LRScheduler
    epochs_done: int = 0


def make_train_state(model: EditQaModel, config: TrainConfig) -> TrainState:
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    total = max(1, config.stage1_epochs + config.stage2_epochs)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=total)
    return TrainState(optimizer=optimizer, scheduler=scheduler)


def _apply_freezing(model: EditQaModel, stage: int, config: TrainConfig) -> None:
    groups = model.param_groups()
    trainable = {"adapter", "heads"}
    if stage == 2:
        trainable |= {"quality_backbones", "relevance_encoders"}
        if config.unfreeze_vl:
            trainable |= {"vl_backbone"}
    for name, params in groups.items():
        for p in params:
            p.requires_grad_(name in trainable)


def _run_stage(model: EditQaModel, examples: Sequence[TrainingExample],
               config: TrainConfig, stage: int, epochs: int, state: TrainState,
               log: Callable[[dict], None] | None = None) -> list[dict]:
    if not examples:
        raise UserInputError("training set is empty")
    _apply_freezing(model, stage, config)
    model.train()
    rng = random.Random(config.seed * 1_000_003 + stage)
    history = []
    for epoch in range(epochs):
        order = list(range(len(examples)))
        rng.shuffle(order)
        epoch_losses, epoch_plcc, epoch_rank = [], [], []
        for start in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[start:start + config.batch_size]]
            targets = torch.tensor([ex.target for ex in batch], dtype=torch.float32)
            if len(batch) < 2:
                warnings.warn("skipping batch of size 1 (PLCC undefined)")
                continue
            if float(targets.std()) == 0.0:
                warnings.warn("skipping batch with constant targets (PLCC undefined)")
                continue
            preds = _forward_scores(model, batch)
            loss_p = plcc_loss(preds, targets)
            loss_r = rank_loss(preds, targets, margin=config.rank_margin)
            loss = loss_p + config.alpha * loss_r
            state.optimizer.zero_grad()
            loss.backward()
            state.optimizer.step()
            epoch_losses.append(float(loss.detach()))
            epoch_plcc.append(float(loss_p.detach()))
            epoch_rank.append(float(loss_r.detach()))
        with warnings.catch_warnings():
            # An epoch whose every batch was skipped trips torch's
            # step-order nag; the schedule still has to advance.
            warnings.filterwarnings("ignore", message=".*before `optimizer.step")
            state.scheduler.step()
        state.epochs_done += 1
        entry = {
            "epoch": state.epochs_done,
            "stage": stage,
            "loss": float(np.mean(epoch_losses)) if epoch_losses else None,
            "plcc_loss": float(np.mean(epoch_plcc)) if epoch_plcc else None,
            "rank_loss": float(np.mean(epoch_rank)) if epoch_rank else None,
            "lr": float(state.optimizer.param_groups[0]["lr"]),
        }
        history.append(entry)
        if log is not None:
            log(entry)
    return history


def train_stage1(model: EditQaModel, examples: Sequence[TrainingExample],
                 config: TrainConfig, state: TrainState | None = None,
                 log: Callable[[dict], None] | None = None) -> TrainState:
    """Linear probing: backbones frozen, heads and temporal adapter learn."""
    state = state or make_train_state(model, config)
    _run_stage(model, examples, config, stage=1, epochs=config.stage1_epochs,
               state=state, log=log)
    return state


def train_stage2(model: EditQaModel, examples: Sequence[TrainingExample],
                 config: TrainConfig, state: TrainState | None = None,
                 log: Callable[[dict], None] | None = None) -> TrainState:
    """Unfreezes visual-quality backbones and relevance encoders; VL stays frozen."""
    if state is None:
        state = make_train_state(model, config)
        for _ in range(config.stage1_epochs):  # resume the cosine curve at stage-1 end
            state.scheduler.step()
        state.epochs_done = config.stage1_epochs
    _run_stage(model, examples, config, stage=2, epochs=config.stage2_epochs,
               state=state, log=log)
    return state


def train_two_stage(model: EditQaModel, examples: Sequence[TrainingExample],
                    config: TrainConfig,
                    log: Callable[[dict], None] | None = None) -> TrainState:
    state = train_stage1(model, examples, config, log=log)
    train_stage2(model, examples, config, state=state, log=log)
    return state


def predict(model: EditQaModel, examples: Sequence[TrainingExample]
            ) -> dict[str, float]:
    """Final scores per triplet id; inference only."""
    model.eval()
    out: dict[str, float] = {}
    with torch.no_grad():
        for ex in examples:
            src = ex.source if model.relevance is not None else None
            out[ex.triplet_id] = model.predict_pair(src, ex.edited, ex.prompt).final
    return out


def parameter_checksum(params: Sequence[torch.nn.Parameter]) -> str:
    """Bit-level fingerprint of a parameter group."""
    digest = hashlib.sha256()
    for p in params:
        digest.update(p.detach().cpu().numpy().tobytes())
    return digest.hexdigest()


# -- checkpointing -----------------------------------------------------------

CHECKPOINT_FORMAT = "editqa-checkpoint-v1"


def save_checkpoint(path: str | Path, model: EditQaModel, state: TrainState,
                    stage: int, train_config: TrainConfig) -> None:
    torch.save({
        "format": CHECKPOINT_FORMAT,
        "model_config_hash": model.config.canonical_hash(),
        "model_config": model.config.as_dict(),
        "train_config": train_config.as_dict(),
        "stage": stage,
        "epochs_done": state.epochs_done,
        "model_state": model.state_dict(),
        "optimizer_state": state.optimizer.state_dict(),
        "scheduler_state": state.scheduler.state_dict(),
    }, str(path))


def load_checkpoint(path: str | Path, model: EditQaModel,
                    train_config: TrainConfig) -> tuple[TrainState, int]:
    """Restores model and optimizer state; refuses config-hash mismatches."""
    try:
        payload = torch.load(str(path), map_location="cpu", weights_only=False)
    except Exception as exc:
        raise UserInputError(f"cannot read checkpoint {path}: {exc}")
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise UserInputError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    if payload["model_config_hash"] != model.config.canonical_hash():
        raise UserInputError(
            f"checkpoint {path} was trained with a different model config "
            f"(hash {payload['model_config_hash'][:12]}..., expected "
            f"{model.config.canonical_hash()[:12]}...)")
    model.load_state_dict(payload["model_state"])
    state = make_train_state(model, train_config)
    state.optimizer.load_state_dict(payload["optimizer_state"])
    state.scheduler.load_state_dict(payload["scheduler_state"])
    state.epochs_done = int(payload["epochs_done"])
    return state, int(payload["stage"])


# -- k-fold protocol ---------------------------------------------------------

@dataclass(frozen=True)
class FoldResult:
    """Held-out evaluation of one fold, plus the training ids for leakage audits."""

    fold_index: int
    predictions: dict[str, float]
    train_triplet_ids: tuple[str, ...]
    report: correlation.CorrelationReport

    def as_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "predictions": dict(sorted(self.predictions.items())),
            "train_triplet_ids": sorted(self.train_triplet_ids),
            "report": self.report.as_dict(),
        }


@dataclass(frozen=True)
class CrossValidationResult:
    folds: tuple[FoldResult, ...]
    summary: dict

    def as_dict(self) -> dict:
        return {"folds": [f.as_dict() for f in self.folds], "summary": self.summary}


def _fold_summary(folds: Sequence[FoldResult]) -> dict:
    metrics = ("srocc", "plcc", "krcc", "rmse")
    values = {m: [getattr(f.report, m) for f in folds] for m in metrics}
    return {
        "k": len(folds),
        "mean": {m: float(np.mean(values[m])) for m in metrics},
        "median": {m: float(np.median(values[m])) for m in metrics},
    }


def run_kfold(triplets: Sequence[EditTriplet], mos: MosTable,
              model_config: ModelConfig, train_config: TrainConfig,
              k: int = 10, decoder: VideoDecoder | None = None,
              examples: Sequence[TrainingExample] | None = None,
              folds: FoldSplit | None = None,
              log: Callable[[dict], None] | None = None) -> CrossValidationResult:
    """Train on k-1 folds, evaluate the held-out fold, for every fold.

    Folds are split by source video, so a model never sees any triplet whose
    source appears in its held-out fold.
    """
    missing_mos = sorted(t.triplet_id for t in triplets if t.triplet_id not in mos)
    if missing_mos:
        raise UserInputError(f"MOS table is missing triplet(s): {missing_mos[:10]}"
                             f"{'...' if len(missing_mos) > 10 else ''}")
    if examples is None:
        if decoder is None:
            raise UserInputError("run_kfold needs either examples or a decoder")
        examples = load_examples(triplets, mos, decoder)
    by_id = {ex.triplet_id: ex for ex in examples}
    missing = sorted(t.triplet_id for t in triplets if t.triplet_id not in by_id)
    if missing:
        raise UserInputError(f"no training example for triplet(s): {missing[:10]}")
    split = folds or make_folds(list(triplets), k, train_config.seed)
    results = []
    for fold in range(split.k):
        train_triplets, held_triplets = split.split(list(triplets), fold)
        if not train_triplets or not held_triplets:
            raise UserInputError(f"fold {fold} has an empty train or test side")
        torch.manual_seed(train_config.seed * 7919 + fold)
        model = EditQaModel(model_config)
        fold_log = None
        if log is not None:
            fold_log = lambda entry, _fold=fold: log({"fold": _fold, **entry})
        train_two_stage(model, [by_id[t.triplet_id] for t in train_triplets],
                        train_config, log=fold_log)
        predictions = predict(model, [by_id[t.triplet_id] for t in held_triplets])
        report = correlation.correlate_report(
            predictions, {tid: mos.mos_of(tid) for tid in predictions})
        results.append(FoldResult(
            fold_index=fold,
            predictions=predictions,
            train_triplet_ids=tuple(t.triplet_id for t in train_triplets),
            report=report))
    return CrossValidationResult(folds=tuple(results), summary=_fold_summary(results))


def run_10fold(triplets: Sequence[EditTriplet], mos: MosTable,
               model_config: ModelConfig, train_config: TrainConfig,
               **kwargs) -> CrossValidationResult:
    """The standard 10-fold protocol."""
    return run_kfold(triplets, mos, model_config, train_config, k=10, **kwargs)
