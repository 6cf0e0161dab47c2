"""Transformer encoder building blocks and training utilities.

Everything runs in double precision on CPU by default so that
finite-difference gradient checks are meaningful; runs are deterministic
given an explicit seed. The encoder returns the output of every layer, not
just the last, because downstream adapter blocks tap intermediate layers.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import torch
from torch import nn

DTYPE = torch.float64
INIT_STD = 0.02
MAX_POSITIONS = 256

torch.set_num_threads(1)


def manual_seed(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(int(seed))
    return gen


def init_module(module: nn.Module, gen: torch.Generator) -> None:
    """BERT-style init: N(0, 0.02^2) weights, zero biases, identity LN."""
    for m in module.modules():
        if isinstance(m, nn.Linear):
            with torch.no_grad():
                m.weight.normal_(0.0, INIT_STD, generator=gen)
                if m.bias is not None:
                    m.bias.zero_()
        elif isinstance(m, nn.Embedding):
            with torch.no_grad():
                m.weight.normal_(0.0, INIT_STD, generator=gen)
        elif isinstance(m, nn.LayerNorm):
            with torch.no_grad():
                m.weight.fill_(1.0)
                m.bias.zero_()


class MultiHeadSelfAttention(nn.Module):

    def __init__(self, hidden: int, heads: int):
        super().__init__()
        if hidden % heads != 0:
            raise ValueError(f"hidden {hidden} not divisible by heads {heads}")
        self.hidden = hidden
        self.heads = heads
        self.head_dim = hidden // heads
        self.qkv = nn.Linear(hidden, 3 * hidden, dtype=DTYPE)
        self.out = nn.Linear(hidden, hidden, dtype=DTYPE)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor | None = None):
        # x: (B, T, H); pad_mask: (B, T) with True at real tokens
        b, t, h = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        shape = (b, t, self.heads, self.head_dim)
        q = q.view(shape).transpose(1, 2)
        k = k.view(shape).transpose(1, 2)
        v = v.view(shape).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if pad_mask is not None:
            scores = scores.masked_fill(
                ~pad_mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        if pad_mask is not None:
            # Pad query rows see only -inf scores; zero them out so no NaN
            # propagates (their outputs are never pooled or attended to).
            attn = torch.nan_to_num(attn, nan=0.0)
        ctx = (attn @ v).transpose(1, 2).reshape(b, t, h)
        return self.out(ctx)


class EncoderLayer(nn.Module):
    """Post-LN transformer encoder layer with a 4x feed-forward."""

    def __init__(self, hidden: int, heads: int):
        super().__init__()
        self.attention = MultiHeadSelfAttention(hidden, heads)
        self.ln1 = nn.LayerNorm(hidden, dtype=DTYPE)
        self.ff1 = nn.Linear(hidden, 4 * hidden, dtype=DTYPE)
        self.ff2 = nn.Linear(4 * hidden, hidden, dtype=DTYPE)
        self.ln2 = nn.LayerNorm(hidden, dtype=DTYPE)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor | None = None):
        x = self.ln1(x + self.attention(x, pad_mask))
        x = self.ln2(x + self.ff2(torch.nn.functional.gelu(self.ff1(x))))
        return x


class Encoder(nn.Module):
    """Token + learned position embeddings, then a stack of encoder layers."""

    def __init__(self, vocab_size: int, hidden: int, heads: int,
                 n_layers: int, max_positions: int = MAX_POSITIONS):
        super().__init__()
        self.token_embedding = nn.Embedding(vocab_size, hidden, dtype=DTYPE)
        self.position_embedding = nn.Embedding(max_positions, hidden, dtype=DTYPE)
        self.layers = nn.ModuleList(
            EncoderLayer(hidden, heads) for _ in range(n_layers))

    def embed(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        return self.token_embedding(ids) + self.position_embedding(positions)

    def forward(self, ids: torch.Tensor,
                pad_mask: torch.Tensor | None = None) -> list[torch.Tensor]:
        """All per-layer hidden states; [embedding] for an empty stack."""
        x = self.embed(ids)
        if not self.layers:
            return [x]
        outputs = []
        for layer in self.layers:
            x = layer(x, pad_mask)
            outputs.append(x)
        return outputs


def cross_entropy(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """C(p, softmax(logits)) = -sum p_i ln q_i; one-hot and soft targets
    share this code path. Batched inputs are averaged."""
    if target.shape != logits.shape:
        raise ValueError(
            f"target shape {tuple(target.shape)} != logits {tuple(logits.shape)}")
    if bool((target < 0).any()):
        raise ValueError("target distribution has negative entries")
    sums = target.sum(dim=-1)
    if bool((sums - 1.0).abs().max() > 1e-6):
        raise ValueError("target rows must sum to 1 within 1e-6")
    loss = -(target * torch.log_softmax(logits, dim=-1)).sum(dim=-1)
    return loss.mean()


def make_optimizer(parameters, lr: float) -> torch.optim.Optimizer:
    """Adaptive-moment optimizer with bias correction (Adam, eps=1e-8)."""
    return torch.optim.Adam(parameters, lr=lr, eps=1e-8)


def parameter_checksum(module: nn.Module, prefix: str = "") -> bytes:
    """Bitwise digest of all parameters whose name starts with ``prefix``."""
    import hashlib
    digest = hashlib.sha256()
    for name, param in sorted(module.named_parameters()):
        if name.startswith(prefix):
            digest.update(name.encode())
            digest.update(param.detach().numpy().tobytes())
    return digest.digest()


def count_parameters(module: nn.Module, exclude_prefixes=()) -> int:
    return sum(
        p.numel() for name, p in module.named_parameters()
        if not any(name.startswith(pre) for pre in exclude_prefixes))


def save_checkpoint(module: nn.Module, config: dict, path: str | Path) -> None:
    """Manifest (config, names, shapes, dtype) plus little-endian blobs."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    params = []
    with (path / "params.bin").open("wb") as fh:
        for name, param in sorted(module.named_parameters()):
            arr = param.detach().numpy().astype("<f8")
            params.append({"name": name, "shape": list(arr.shape),
                           "dtype": "<f8"})
            fh.write(arr.tobytes())
    manifest = {"config": config, "params": params, "precision": "float64"}
    (path / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True))


def load_checkpoint(module: nn.Module, config: dict, path: str | Path) -> dict:
    """Load parameters in place; reject config or shape mismatches."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest["config"] != config:
        raise ValueError(
            f"checkpoint config mismatch: {manifest['config']} != {config}")
    named = dict(module.named_parameters())
    expected = sorted(named)
    stored = [p["name"] for p in manifest["params"]]
    if stored != expected:
        raise ValueError("checkpoint parameter names do not match model")
    with (path / "params.bin").open("rb") as fh:
        for meta in manifest["params"]:
            shape = tuple(meta["shape"])
            param = named[meta["name"]]
            if tuple(param.shape) != shape:
                raise ValueError(
                    f"shape mismatch for {meta['name']}: "
                    f"{tuple(param.shape)} != {shape}")
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
            with torch.no_grad():
                param.copy_(torch.from_numpy(arr.copy()))
    return manifest
