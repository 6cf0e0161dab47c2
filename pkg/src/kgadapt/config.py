"""Pipeline configuration: YAML key-value file with CLI overrides.

Validation collects every violation instead of stopping at the first.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import yaml

from .model import ModelConfig


@dataclass
class PhraseConfig:
    min_frequency: int = 3
    min_quality: float = 0.5
    max_len: int = 4


@dataclass
class ClusterConfig:
    k: int = 10
    sample_size: int = 400
    top_n: int = 5


@dataclass
class ClassifierConfig:
    epochs: int = 200
    lr: float = 1.0
    l2: float = 1e-4
    confidence_floor: float = 0.0


@dataclass
class StageTrainConfig:
    epochs: int = 20
    lr: float = 1e-3
    batch_size: int = 32


@dataclass
class FinetuneConfig(StageTrainConfig):
    epochs: int = 15
    batch_size: int = 16
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    learning_rates: list[float] = field(default_factory=lambda: [1e-3])
    task: str = "classification"


@dataclass
class DistillConfig:
    embedding_dim: int = 64
    window_widths: list[int] = field(default_factory=lambda: [2, 3, 4])
    filters_per_width: int = 32
    soft_target_weight: float = 0.9
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 32


@dataclass
class SynthConfig:
    num_relations: int = 5
    phrases_per_relation: int = 4
    sentences: int = 2000
    noise_rate: float = 0.2
    unknown_rate: float = 0.1
    tuples_per_relation: int = 4
    train_size: int = 60
    test_size: int = 300
    matching_pairs: int = 200
    unlabeled_size: int = 200


@dataclass
class BenchConfig:
    repetitions: int = 5
    examples: int = 50


@dataclass
class TasksConfig:
    """Dataset paths; empty strings fall back to the synth stage outputs."""
    classification_train: str = ""
    classification_test: str = ""
    matching_train: str = ""
    matching_test: str = ""
    unlabeled: str = ""


@dataclass
class ModelSection:
    backbone_layers: int = 4
    hidden: int = 64
    heads: int = 4
    adapter_layers: int = 3
    adapter_hidden: int = 32
    adapter_heads: int = 4
    taps: list[int] = field(default_factory=list)
    max_len: int = 64
    use_adapter: bool = True

    def to_model_config(self) -> ModelConfig:
        return ModelConfig(
            backbone_layers=self.backbone_layers, hidden=self.hidden,
            heads=self.heads, adapter_layers=self.adapter_layers,
            adapter_hidden=self.adapter_hidden,
            adapter_heads=self.adapter_heads, taps=tuple(self.taps),
            max_len=self.max_len, use_adapter=self.use_adapter)


@dataclass
class PipelineConfig:
    workdir: str = "work"
    seed: int = 0
    corpus_path: str = ""
    corpus_format: str = "plain-lines"
    export_mode: str = "nary"
    phrases: PhraseConfig = field(default_factory=PhraseConfig)
    clustering: ClusterConfig = field(default_factory=ClusterConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    model: ModelSection = field(default_factory=ModelSection)
    pretrain: StageTrainConfig = field(default_factory=StageTrainConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    distill: DistillConfig = field(default_factory=DistillConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    tasks: TasksConfig = field(default_factory=TasksConfig)

    def validate(self) -> list[str]:
        """All violations, not just the first."""
        errors = []
        if self.export_mode not in ("binary-only", "nary"):
            errors.append(f"export_mode must be binary-only or nary, "
                          f"got {self.export_mode!r}")
        if self.corpus_format not in ("plain-lines", "jsonl"):
            errors.append(f"unknown corpus_format {self.corpus_format!r}")
        if self.phrases.min_frequency < 1:
            errors.append("phrases.min_frequency must be >= 1")
        if not 0.0 <= self.phrases.min_quality <= 1.0:
            errors.append("phrases.min_quality must be in [0, 1]")
        if not 1 <= self.phrases.max_len <= 5:
            errors.append("phrases.max_len must be in [1, 5]")
        if self.clustering.k < 1:
            errors.append("clustering.k must be >= 1")
        if self.clustering.sample_size < self.clustering.k:
            errors.append("clustering.sample_size must be >= clustering.k")
        if not 0.0 <= self.distill.soft_target_weight <= 1.0:
            errors.append("distill.soft_target_weight must be in [0, 1]")
        if self.finetune.task not in ("classification", "matching"):
            errors.append("finetune.task must be classification or matching")
        if not self.finetune.seeds:
            errors.append("finetune.seeds must be non-empty")
        if not self.finetune.learning_rates:
            errors.append("finetune.learning_rates must be non-empty")
        try:
            self.model.to_model_config()
        except ValueError as exc:
            errors.append(f"model: {exc}")
        return errors

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_SECTIONS = {
    "phrases": PhraseConfig,
    "clustering": ClusterConfig,
    "classifier": ClassifierConfig,
    "model": ModelSection,
    "pretrain": StageTrainConfig,
    "finetune": FinetuneConfig,
    "distill": DistillConfig,
    "synth": SynthConfig,
    "bench": BenchConfig,
    "tasks": TasksConfig,
}


class ConfigError(ValueError):
    pass


def _build_section(cls, data: dict, name: str):
    allowed = set(cls.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(
            f"unknown keys in section {name!r}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> PipelineConfig:
    data = dict(data or {})
    kwargs = {}
    for key, cls in _SECTIONS.items():
        section = data.pop(key, {}) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"section {key!r} must be a mapping")
        kwargs[key] = _build_section(cls, section, key)
    allowed = {"workdir", "seed", "corpus_path", "corpus_format",
               "export_mode"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    return PipelineConfig(**data, **kwargs)


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    raw = yaml.safe_load(Path(path).read_text()) or {}
    if overrides:
        for dotted, value in overrides.items():
            node = raw
            *parents, leaf = dotted.split(".")
            for part in parents:
                node = node.setdefault(part, {})
            node[leaf] = value
    config = config_from_dict(raw)
    errors = config.validate()
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return config
