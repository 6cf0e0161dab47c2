"""Knowledge-infused encoder: frozen-backbone adapter pretraining on
relation extraction, then frozen-adapter task fine-tuning.

Forward chain: the backbone encoder keeps every layer output; each adapter
block takes the previous adapter output (a zero tensor for the first
block) plus a down-projection of the backbone output at its tap layer, and
runs one encoder layer at the adapter width. Fusion concatenates the final
backbone and adapter states per token. Pooling concatenates the [CLS]
state with the mean of the entity-start states; the [PLC] placeholder is
pooled only when a sentence has no real entities, so zero-entity inputs
still produce a well-defined sentence vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import torch
from torch import nn

from . import nn as knn
from .matching import PhraseMatcher
from .corpus import Sentence
from .vocab import Vocabulary, PAD_ID, CLS_ID, SEP_ID, PLC_ID


@dataclass
class ModelConfig:
    backbone_layers: int = 4
    hidden: int = 64
    heads: int = 4
    adapter_layers: int = 3
    adapter_hidden: int = 32
    adapter_heads: int = 4
    taps: tuple[int, ...] = ()
    use_adapter: bool = True
    max_len: int = 64

    def __post_init__(self):
        if not self.taps:
            self.taps = default_taps(self.backbone_layers)
            self.adapter_layers = len(self.taps)
        self.taps = tuple(self.taps)
        if self.use_adapter:
            if len(self.taps) != self.adapter_layers:
                raise ValueError("need exactly one tap per adapter layer")
            if list(self.taps) != sorted(set(self.taps)):
                raise ValueError("taps must be strictly increasing")
            if self.taps and not (0 <= self.taps[0]
                                  and self.taps[-1] < self.backbone_layers):
                raise ValueError("taps must lie in [0, backbone_layers)")
            if self.adapter_hidden % self.adapter_heads != 0:
                raise ValueError("adapter_hidden not divisible by adapter_heads")
        if self.hidden % self.heads != 0:
            raise ValueError("hidden not divisible by heads")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["taps"] = list(self.taps)
        return d


def default_taps(n_backbone_layers: int, n_taps: int = 3) -> tuple[int, ...]:
    """Proportional tap placement: first, middle and last backbone layer."""
    if n_backbone_layers < 1:
        return ()
    taps = {0, -(-n_backbone_layers // 2) - 1, n_backbone_layers - 1}
    return tuple(sorted(taps))[:n_taps]


@dataclass(frozen=True)
class EncodedSentence:
    ids: tuple[int, ...]
    entity_starts: tuple[int, ...]  # always begins with the [PLC] position 1


def encode_input(tokens, entity_starts, vocab: Vocabulary,
                 max_len: int) -> EncodedSentence:
    """[CLS] [PLC] tokens... [SEP], truncated; entity starts shifted by 2.

    Mentions whose shifted start falls beyond the truncation boundary are
    dropped; the [PLC] entry is always retained.
    """
    keep = min(len(tokens), max_len - 3)
    ids = [CLS_ID, PLC_ID] + vocab.encode(tokens[:keep]) + [SEP_ID]
    starts = [1] + [s + 2 for s in entity_starts if s < keep]
    return EncodedSentence(ids=tuple(ids), entity_starts=tuple(starts))


def encode_pair(tokens1, starts1, tokens2, starts2, vocab: Vocabulary,
                max_len: int) -> EncodedSentence:
    """[CLS] [PLC] q1 [SEP] q2 [SEP] with mentions from both questions."""
    budget = max_len - 4
    keep1 = min(len(tokens1), budget)
    keep2 = min(len(tokens2), budget - keep1)
    ids = ([CLS_ID, PLC_ID] + vocab.encode(tokens1[:keep1]) + [SEP_ID]
           + vocab.encode(tokens2[:keep2]) + [SEP_ID])
    offset2 = 3 + keep1
    starts = ([1]
              + [s + 2 for s in starts1 if s < keep1]
              + [s + offset2 for s in starts2 if s < keep2])
    return EncodedSentence(ids=tuple(ids), entity_starts=tuple(starts))


class AdapterBlock(nn.Module):

    def __init__(self, hidden: int, adapter_hidden: int, adapter_heads: int):
        super().__init__()
        self.down = nn.Linear(hidden, adapter_hidden, dtype=knn.DTYPE)
        self.layer = knn.EncoderLayer(adapter_hidden, adapter_heads)


class KnowledgeAdapterModel(nn.Module):
    """Backbone encoder + adapter stack + fusion/pooling + projection head.

    Parameters partition exactly into the ``backbone.``, ``adapter.`` and
    ``head.`` name prefixes, which is what the freezing contracts and
    checkpoint manifests rely on.
    """

    def __init__(self, config: ModelConfig, vocab_size: int, seed: int = 0):
        super().__init__()
        self.config = config
        gen = knn.manual_seed(seed)
        self.backbone = knn.Encoder(
            vocab_size, config.hidden, config.heads, config.backbone_layers)
        knn.init_module(self.backbone, gen)
        if config.use_adapter:
            self.adapter = nn.ModuleList(
                AdapterBlock(config.hidden, config.adapter_hidden,
                             config.adapter_heads)
                for _ in range(config.adapter_layers))
            knn.init_module(self.adapter, gen)
        else:
            self.adapter = nn.ModuleList()
        self.head = nn.Linear(self.pooled_dim, 2, dtype=knn.DTYPE)
        knn.init_module(self.head, gen)
        self.n_classes = 2

    @property
    def fused_dim(self) -> int:
        if self.config.use_adapter:
            return self.config.hidden + self.config.adapter_hidden
        return self.config.hidden

    @property
    def pooled_dim(self) -> int:
        return 2 * self.fused_dim

    def new_head(self, n_classes: int, seed: int = 0) -> None:
        self.head = nn.Linear(self.pooled_dim, n_classes, dtype=knn.DTYPE)
        knn.init_module(self.head, knn.manual_seed(seed))
        self.n_classes = n_classes

    def fuse(self, ids: torch.Tensor,
             pad_mask: torch.Tensor | None = None) -> torch.Tensor:
        """Per-token fusion of final backbone and final adapter states."""
        outputs = self.backbone(ids, pad_mask)
        final_backbone = outputs[-1]
        if not self.config.use_adapter:
            return final_backbone
        state = torch.zeros(
            ids.shape[0], ids.shape[1], self.config.adapter_hidden,
            dtype=knn.DTYPE)
        for tap, block in zip(self.config.taps, self.adapter):
            state = block.layer(state + block.down(outputs[tap]), pad_mask)
        return torch.cat([final_backbone, state], dim=-1)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor,
                pool_weights: torch.Tensor) -> torch.Tensor:
        """Logits; softmax is applied by the loss / by predict."""
        fused = self.fuse(ids, pad_mask)
        cls_state = fused[:, 0, :]
        entity_state = torch.einsum("bt,btd->bd", pool_weights, fused)
        return self.head(torch.cat([cls_state, entity_state], dim=-1))

    def backbone_parameters(self):
        return self.backbone.parameters()

    def adapter_parameters(self):
        return self.adapter.parameters()

    def head_parameters(self):
        return self.head.parameters()


def collate(encoded: list[EncodedSentence]) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pad a batch; build the entity-pooling weight matrix.

    Real entities are averaged; the [PLC] entry at position 1 carries the
    full weight only when it is the sole entry.
    """
    if any(not e.entity_starts or e.entity_starts[0] != 1 for e in encoded):
        raise ValueError("entity_starts must begin with the [PLC] position 1")
    max_t = max(len(e.ids) for e in encoded)
    ids = torch.full((len(encoded), max_t), PAD_ID, dtype=torch.long)
    pad_mask = torch.zeros((len(encoded), max_t), dtype=torch.bool)
    weights = torch.zeros((len(encoded), max_t), dtype=knn.DTYPE)
    for b, enc in enumerate(encoded):
        t = len(enc.ids)
        ids[b, :t] = torch.tensor(enc.ids, dtype=torch.long)
        pad_mask[b, :t] = True
        real = enc.entity_starts[1:]
        if real:
            for pos in real:
                weights[b, pos] += 1.0 / len(real)
        else:
            weights[b, 1] = 1.0
    return ids, pad_mask, weights


@dataclass
class TrainConfig:
    epochs: int = 20
    lr: float = 1e-3
    batch_size: int = 16
    seed: int = 0


def _one_hot(indices: list[int], n_classes: int) -> torch.Tensor:
    target = torch.zeros(len(indices), n_classes, dtype=knn.DTYPE)
    target[torch.arange(len(indices)), indices] = 1.0
    return target


def _train(model: KnowledgeAdapterModel, encoded: list[EncodedSentence],
           class_indices: list[int], trainable, cfg: TrainConfig) -> list[dict]:
    optimizer = knn.make_optimizer(trainable, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    n = len(encoded)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss, correct = 0.0, 0
        for lo in range(0, n, cfg.batch_size):
            batch_idx = order[lo:lo + cfg.batch_size]
            ids, pad_mask, weights = collate([encoded[i] for i in batch_idx])
            targets = _one_hot([class_indices[i] for i in batch_idx],
                               model.n_classes)
            logits = model(ids, pad_mask, weights)
            loss = knn.cross_entropy(logits, targets)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(batch_idx)
            correct += int((logits.argmax(dim=-1)
                            == targets.argmax(dim=-1)).sum())
        history.append({"epoch": epoch, "loss": epoch_loss / n,
                        "accuracy": correct / n})
    return history


def _set_requires_grad(params, value: bool) -> None:
    for p in params:
        p.requires_grad_(value)


def pretrain_adapter(model: KnowledgeAdapterModel, examples,
                     vocab: Vocabulary, relations: list[str],
                     cfg: TrainConfig) -> list[dict]:
    """Relation-extraction pretraining: only the adapter stack and the
    relation head update; the backbone stays bitwise frozen."""
    if not model.config.use_adapter:
        raise ValueError("model was built without an adapter")
    if not examples:
        raise ValueError("empty pretraining export")
    relation_index = {r: i for i, r in enumerate(relations)}
    for ex in examples:
        if ex.relation not in relation_index:
            raise ValueError(f"unknown relation in export: {ex.relation!r}")
    encoded = [encode_input(ex.tokens, ex.entity_starts, vocab,
                            model.config.max_len) for ex in examples]
    class_indices = [relation_index[ex.relation] for ex in examples]
    model.new_head(len(relations), seed=cfg.seed)
    _set_requires_grad(model.backbone_parameters(), False)
    _set_requires_grad(model.adapter_parameters(), True)
    _set_requires_grad(model.head_parameters(), True)
    trainable = list(model.adapter_parameters()) + list(model.head_parameters())
    history = _train(model, encoded, class_indices, trainable, cfg)
    _set_requires_grad(model.backbone_parameters(), True)
    return history


def _encode_classification(examples, matcher: PhraseMatcher,
                           vocab: Vocabulary, max_len: int):
    encoded = []
    for tokens, _label in examples:
        sent = Sentence(id=-1, raw=" ".join(tokens), tokens=tuple(tokens))
        starts = [m.start for m in matcher.find_mentions(sent)]
        encoded.append(encode_input(tokens, starts, vocab, max_len))
    return encoded


def _encode_matching(examples, matcher: PhraseMatcher, vocab: Vocabulary,
                     max_len: int):
    encoded = []
    for tokens1, tokens2, _s in examples:
        s1 = Sentence(id=-1, raw="", tokens=tuple(tokens1))
        s2 = Sentence(id=-1, raw="", tokens=tuple(tokens2))
        starts1 = [m.start for m in matcher.find_mentions(s1)]
        starts2 = [m.start for m in matcher.find_mentions(s2)]
        encoded.append(encode_pair(tokens1, starts1, tokens2, starts2,
                                   vocab, max_len))
    return encoded


def finetune(model: KnowledgeAdapterModel, examples, task: str,
             classes: list[str], matcher: PhraseMatcher, vocab: Vocabulary,
             cfg: TrainConfig) -> list[dict]:
    """Task fine-tuning: adapter bitwise frozen, backbone plus a fresh
    head update. The same entity pooling is used as in pretraining.

    ``task`` is ``classification`` ((tokens, label) examples, ``classes``
    includes UNKNOWN) or ``matching`` ((tokens1, tokens2, s) examples,
    two classes).
    """
    if task == "classification":
        class_index = {c: i for i, c in enumerate(classes)}
        for _tokens, label in examples:
            if label not in class_index:
                raise ValueError(f"label {label!r} not in class map")
        encoded = _encode_classification(examples, matcher, vocab,
                                         model.config.max_len)
        class_indices = [class_index[label] for _t, label in examples]
        model.new_head(len(classes), seed=cfg.seed)
    elif task == "matching":
        encoded = _encode_matching(examples, matcher, vocab,
                                   model.config.max_len)
        class_indices = [int(s) for _a, _b, s in examples]
        model.new_head(2, seed=cfg.seed)
    else:
        raise ValueError(f"unknown task: {task!r}")
    _set_requires_grad(model.adapter_parameters(), False)
    _set_requires_grad(model.backbone_parameters(), True)
    _set_requires_grad(model.head_parameters(), True)
    trainable = (list(model.backbone_parameters())
                 + list(model.head_parameters()))
    history = _train(model, encoded, class_indices, trainable, cfg)
    _set_requires_grad(model.adapter_parameters(), True)
    return history


@torch.no_grad()
def predict(model: KnowledgeAdapterModel,
            encoded: list[EncodedSentence]) -> tuple[list[int], torch.Tensor]:
    """Argmax label indices plus softmax-normalized logits per example."""
    ids, pad_mask, weights = collate(encoded)
    logits = model(ids, pad_mask, weights)
    probs = torch.softmax(logits, dim=-1)
    return [int(i) for i in probs.argmax(dim=-1)], probs


def confidence_stats(probs: torch.Tensor) -> dict[str, float]:
    """Dataset-level confidence report: mean max probability and mean
    variance of the normalized logits."""
    return {
        "mean_max_prob": float(probs.max(dim=-1).values.mean()),
        "mean_variance": float(probs.var(dim=-1, unbiased=False).mean()),
    }
