"""Experiment configuration: strict JSON with documented defaults.

Unknown keys are rejected by name rather than silently ignored, since a
typoed hyperparameter that falls back to its default is the main
operational hazard of config-driven experiments.

Sections and defaults:
  synth     classes=200, items_per_class=12, base_dim=64, teacher_dim=64,
            n_teachers=3, noise_sigma=0.4, expert_noise_sigma=0.15,
            anisotropy_log_range=5.0, seed=0
  whitening n_c=null (meaning teacher_dim), eps_rel=1e-6, enabled=true
  fusion    strategy="mean", seed=null, per_batch_rand=false
  train     tau_s=0.05, tau_t=0.05, lr0=1e-3, lr_min=0.0, weight_decay=1e-6,
            steps=500, batch_pairs=64, adam_beta1=0.9, adam_beta2=0.999,
            adam_eps=1e-8, loss="kl", reverse_kl=false, n_s=null,
            teachers=null (meaning all), seed=0
  eval      ks=[10], holdout_per_class=2
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import errors
from .distill import TrainConfig
from .fusion import FusionStrategy
from .synthgen import SynthConfig

_SYNTH_DEFAULTS = {
    "classes": 200,
    "items_per_class": 12,
    "base_dim": 64,
    "teacher_dim": 64,
    "n_teachers": 3,
    "noise_sigma": 0.4,
    "expert_noise_sigma": 0.15,
    "anisotropy_log_range": 5.0,
    "seed": 0,
}

_WHITENING_DEFAULTS = {"n_c": None, "eps_rel": 1e-6, "enabled": True}

_FUSION_DEFAULTS = {"strategy": "mean", "seed": None, "per_batch_rand": False}

_TRAIN_DEFAULTS = {
    "tau_s": 0.05,
    "tau_t": 0.05,
    "lr0": 1e-3,
    "lr_min": 0.0,
    "weight_decay": 1e-6,
    "steps": 500,
    "batch_pairs": 64,
    "adam_beta1": 0.9,
    "adam_beta2": 0.999,
    "adam_eps": 1e-8,
    "loss": "kl",
    "reverse_kl": False,
    "n_s": None,
    "teachers": None,
    "seed": 0,
}

_EVAL_DEFAULTS = {"ks": [10], "holdout_per_class": 2}

_SECTIONS = ("synth", "whitening", "fusion", "train", "eval")


@dataclass(frozen=True)
class WhiteningOptions:
    n_c: int | None
    eps_rel: float
    enabled: bool


@dataclass(frozen=True)
class EvalOptions:
    ks: tuple
    holdout_per_class: int


@dataclass(frozen=True)
class ExperimentConfig:
    synth: SynthConfig
    whitening: WhiteningOptions
    train: TrainConfig
    eval: EvalOptions
    teacher_subset: tuple | None

    @property
    def n_c(self) -> int:
        """Whitening output dimension, defaulting to the teacher dimension."""
        return self.whitening.n_c if self.whitening.n_c is not None else self.synth.teacher_dim


def _merged(section: str, given: dict, defaults: dict) -> dict:
    if not isinstance(given, dict):
        raise errors.BadConfig(f"section {section!r} must be an object")
    for key in given:
        if key not in defaults:
            raise errors.BadConfigKey(f"{section}.{key}")
    out = dict(defaults)
    out.update(given)
    return out


def parse_config(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise errors.BadConfig("config root must be a JSON object")
    for key in doc:
        if key not in _SECTIONS:
            raise errors.BadConfigKey(key)

    synth = SynthConfig(**_merged("synth", doc.get("synth", {}), _SYNTH_DEFAULTS))
    wh = _merged("whitening", doc.get("whitening", {}), _WHITENING_DEFAULTS)
    whitening = WhiteningOptions(
        n_c=None if wh["n_c"] is None else int(wh["n_c"]),
        eps_rel=float(wh["eps_rel"]),
        enabled=bool(wh["enabled"]),
    )
    fu = _merged("fusion", doc.get("fusion", {}), _FUSION_DEFAULTS)
    strategy = FusionStrategy(
        variant=fu["strategy"],
        seed=None if fu["seed"] is None else int(fu["seed"]),
        per_batch=bool(fu["per_batch_rand"]),
    )
    tr = _merged("train", doc.get("train", {}), _TRAIN_DEFAULTS)
    subset = tr.pop("teachers")
    if subset is not None:
        subset = tuple(int(i) for i in subset)
        if len(subset) == 0:
            raise errors.BadConfig("train.teachers must be null or a nonempty list")
    loss_kind = tr.pop("loss")
    train = TrainConfig(strategy=strategy, loss_kind=loss_kind, **tr)
    ev = _merged("eval", doc.get("eval", {}), _EVAL_DEFAULTS)
    ks = tuple(int(k) for k in ev["ks"])
    if any(k < 1 for k in ks):
        raise errors.BadConfig("eval.ks entries must be >= 1")
    holdout = int(ev["holdout_per_class"])
    if holdout < 0 or holdout >= synth.items_per_class:
        raise errors.BadConfig(
            "eval.holdout_per_class must be in [0, items_per_class)"
        )
    return ExperimentConfig(
        synth=synth,
        whitening=whitening,
        train=train,
        eval=EvalOptions(ks=ks, holdout_per_class=holdout),
        teacher_subset=subset,
    )


def load_config(path) -> ExperimentConfig:
    """Parse a JSON config file strictly."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise errors.BadConfig(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
