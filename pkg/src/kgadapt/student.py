"""Teacher-to-student distillation into a small convolutional classifier.

The student embeds tokens, applies one bank of 1-D convolutions of several
window widths, max-pools each filter over time, concatenates and projects.
Training minimizes lambda * C(p, q) + (1 - lambda) * C(g, q) where p is
the teacher distribution, g the one-hot golden (or pseudo) label and q the
student softmax.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from . import nn as knn
from .vocab import Vocabulary, PAD_ID


@dataclass
class StudentConfig:
    embedding_dim: int = 64
    window_widths: tuple[int, ...] = (2, 3, 4)
    filters_per_width: int = 32
    n_classes: int = 2
    soft_target_weight: float = 0.9  # lambda

    def __post_init__(self):
        if not 0.0 <= self.soft_target_weight <= 1.0:
            raise ValueError("soft_target_weight must be in [0, 1]")

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["window_widths"] = list(self.window_widths)
        return d


@dataclass
class DistillExample:
    tokens: tuple[str, ...]
    label: int
    teacher_probs: np.ndarray
    origin: str  # "golden" or "pseudo"


class TextCNN(nn.Module):

    def __init__(self, config: StudentConfig, vocab_size: int, seed: int = 0):
        super().__init__()
        if vocab_size <= 0:
            raise ValueError("empty vocabulary")
        self.config = config
        self.embedding = nn.Embedding(
            vocab_size, config.embedding_dim, padding_idx=PAD_ID,
            dtype=knn.DTYPE)
        self.convs = nn.ModuleList(
            nn.Conv1d(config.embedding_dim, config.filters_per_width, width,
                      dtype=knn.DTYPE)
            for width in config.window_widths)
        self.projection = nn.Linear(
            config.filters_per_width * len(config.window_widths),
            config.n_classes, dtype=knn.DTYPE)
        gen = knn.manual_seed(seed)
        for m in self.modules():
            if isinstance(m, (nn.Linear, nn.Conv1d, nn.Embedding)):
                with torch.no_grad():
                    m.weight.normal_(0.0, knn.INIT_STD, generator=gen)
                    if getattr(m, "bias", None) is not None:
                        m.bias.zero_()
        with torch.no_grad():
            self.embedding.weight[PAD_ID].zero_()

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        # ids: (B, T); sequences shorter than the widest window must be
        # padded by the caller (see collate_tokens).
        x = self.embedding(ids).transpose(1, 2)  # (B, E, T)
        pooled = [torch.relu(conv(x)).max(dim=-1).values for conv in self.convs]
        return self.projection(torch.cat(pooled, dim=-1))

    def parameter_count(self, exclude_embedding: bool = True) -> int:
        exclude = ("embedding.",) if exclude_embedding else ()
        return knn.count_parameters(self, exclude_prefixes=exclude)


def collate_tokens(token_seqs, vocab: Vocabulary, min_len: int) -> torch.Tensor:
    """Pad a batch of token sequences to a common length >= min_len."""
    max_t = max(max((len(t) for t in token_seqs), default=0), min_len)
    ids = torch.full((len(token_seqs), max_t), PAD_ID, dtype=torch.long)
    for b, tokens in enumerate(token_seqs):
        enc = vocab.encode(tokens)
        ids[b, :len(enc)] = torch.tensor(enc, dtype=torch.long)
    return ids


def distill_loss(teacher_probs: torch.Tensor, student_logits: torch.Tensor,
                 golden: torch.Tensor, soft_target_weight: float) -> torch.Tensor:
    """Convex combination of soft-target and hard-target cross-entropy."""
    lam = soft_target_weight
    if not 0.0 <= lam <= 1.0:
        raise ValueError("soft_target_weight must be in [0, 1]")
    return (lam * knn.cross_entropy(student_logits, teacher_probs)
            + (1.0 - lam) * knn.cross_entropy(student_logits, golden))


def pseudo_label(teacher_predict, unlabeled_token_seqs) -> list[DistillExample]:
    """Label every unlabeled sequence with the teacher distribution and its
    argmax; nothing is filtered.

    ``teacher_predict`` maps a list of token sequences to an (N, C) array
    of class probabilities.
    """
    if not unlabeled_token_seqs:
        return []
    probs = np.asarray(teacher_predict(unlabeled_token_seqs))
    return [
        DistillExample(tokens=tuple(tokens), label=int(p.argmax()),
                       teacher_probs=p, origin="pseudo")
        for tokens, p in zip(unlabeled_token_seqs, probs)
    ]


@dataclass
class DistillTrainConfig:
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 32
    seed: int = 0


def train_student(student: TextCNN, examples: list[DistillExample],
                  vocab: Vocabulary, cfg: DistillTrainConfig) -> list[dict]:
    """Train on the union of golden and pseudo-labeled examples."""
    lam = student.config.soft_target_weight
    min_len = max(student.config.window_widths)
    optimizer = knn.make_optimizer(student.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    n = len(examples)
    n_classes = student.config.n_classes
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            batch = [examples[i] for i in order[lo:lo + cfg.batch_size]]
            ids = collate_tokens([ex.tokens for ex in batch], vocab, min_len)
            teacher = torch.tensor(
                np.stack([ex.teacher_probs for ex in batch]), dtype=knn.DTYPE)
            golden = torch.zeros(len(batch), n_classes, dtype=knn.DTYPE)
            golden[torch.arange(len(batch)),
                   torch.tensor([ex.label for ex in batch])] = 1.0
            logits = student(ids)
            loss = distill_loss(teacher, logits, golden, lam)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(batch)
        history.append({"epoch": epoch, "loss": epoch_loss / n})
    return history


@torch.no_grad()
def student_predict(student: TextCNN, token_seqs, vocab: Vocabulary,
                    batch_size: int = 64) -> np.ndarray:
    """Class probabilities for a list of token sequences."""
    min_len = max(student.config.window_widths)
    chunks = []
    for lo in range(0, len(token_seqs), batch_size):
        ids = collate_tokens(token_seqs[lo:lo + batch_size], vocab, min_len)
        chunks.append(torch.softmax(student(ids), dim=-1).numpy())
    return np.concatenate(chunks, axis=0)
