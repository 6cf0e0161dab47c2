import math

import numpy as np
import pytest
import torch

from kgadapt import nn as knn


def finite_diff_check(module, inputs, eps=1e-5, tol=1e-4, directions=3):
    """Directional-derivative check: for random unit directions d over each
    parameter, compare grad . d against the central difference of the loss.
    Max relative error must stay within ``tol``."""
    def loss_value():
        out = module(*inputs)
        t = out if isinstance(out, torch.Tensor) else out[-1]
        return (t ** 2).sum()

    module.zero_grad()
    loss_value().backward()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _name, param in module.named_parameters():
        flat = param.detach().view(-1)
        grad = param.grad.view(-1).numpy()
        for _ in range(directions):
            d = rng.normal(size=flat.numel())
            d /= np.linalg.norm(d)
            ag = float(grad @ d)
            step = torch.tensor(d * eps, dtype=flat.dtype)
            with torch.no_grad():
                flat += step
                up = float(loss_value().detach())
                flat -= 2 * step
                down = float(loss_value().detach())
                flat += step
            fd = (up - down) / (2 * eps)
            rel = abs(ag - fd) / max(abs(ag), abs(fd), 1e-8)
            worst = max(worst, rel)
    assert worst <= tol, worst
    return worst


def widen_init(module, seed, std=0.5):
    """Non-degenerate weights for gradient checks. At BERT init scale the
    true derivatives through LayerNorm are ~1e-9 and finite differences
    are pure rounding noise, so the check needs larger weights."""
    gen = knn.manual_seed(seed)
    with torch.no_grad():
        for p in module.parameters():
            p.normal_(0.0, std, generator=gen)


def test_encoder_layer_gradients():
    layer = knn.EncoderLayer(hidden=8, heads=2)
    widen_init(layer, 0)
    x = torch.randn(2, 5, 8, dtype=knn.DTYPE,
                    generator=knn.manual_seed(1))
    finite_diff_check(layer, (x,))


def test_encoder_gradients_with_mask():
    enc = knn.Encoder(vocab_size=11, hidden=8, heads=2, n_layers=2)
    widen_init(enc, 0)
    ids = torch.tensor([[2, 5, 6, 0, 0], [2, 7, 8, 9, 3]])
    mask = ids != 0

    class Wrapped(torch.nn.Module):
        def __init__(self):
            super().__init__()
            self.enc = enc

        def forward(self):
            # only unmasked positions contribute, so pad rows cannot
            # poison the check with their zeroed attention rows
            out = self.enc(ids, mask)[-1]
            return out[mask]

    finite_diff_check(Wrapped(), ())


def np_layer_forward(layer, x):
    """Straight-line numpy re-implementation of EncoderLayer.forward."""
    def lin(m, v):
        return v @ m.weight.detach().numpy().T + m.bias.detach().numpy()

    def layernorm(m, v):
        mu = v.mean(-1, keepdims=True)
        var = v.var(-1, keepdims=True)
        return ((v - mu) / np.sqrt(var + m.eps)
                * m.weight.detach().numpy() + m.bias.detach().numpy())

    b, t, h = x.shape
    heads = layer.attention.heads
    hd = layer.attention.head_dim
    qkv = lin(layer.attention.qkv, x)
    q, k, v = np.split(qkv, 3, axis=-1)

    def split(a):
        return a.reshape(b, t, heads, hd).transpose(0, 2, 1, 3)

    q, k, v = split(q), split(k), split(v)
    scores = q @ k.transpose(0, 1, 3, 2) / math.sqrt(hd)
    scores -= scores.max(-1, keepdims=True)
    attn = np.exp(scores)
    attn /= attn.sum(-1, keepdims=True)
    ctx = (attn @ v).transpose(0, 2, 1, 3).reshape(b, t, h)
    attn_out = lin(layer.attention.out, ctx)
    x1 = layernorm(layer.ln1, x + attn_out)
    gelu = 0.5 * lin(layer.ff1, x1) * (
        1 + np.vectorize(math.erf)(lin(layer.ff1, x1) / math.sqrt(2)))
    return layernorm(layer.ln2, x1 + lin(layer.ff2, gelu))


def test_encoder_layer_forward_matches_numpy_oracle():
    layer = knn.EncoderLayer(hidden=8, heads=2)
    knn.init_module(layer, knn.manual_seed(3))
    x = torch.randn(2, 4, 8, dtype=knn.DTYPE, generator=knn.manual_seed(4))
    with torch.no_grad():
        got = layer(x).numpy()
    want = np_layer_forward(layer, x.numpy())
    assert np.abs(got - want).max() < 1e-10


def test_encoder_returns_all_layers():
    enc = knn.Encoder(vocab_size=9, hidden=8, heads=2, n_layers=3)
    ids = torch.tensor([[2, 5, 3]])
    outs = enc(ids)
    assert len(outs) == 3
    assert all(o.shape == (1, 3, 8) for o in outs)


def test_masked_positions_do_not_affect_real_ones():
    enc = knn.Encoder(vocab_size=9, hidden=8, heads=2, n_layers=2)
    knn.init_module(enc, knn.manual_seed(0))
    ids_a = torch.tensor([[2, 5, 6, 0]])
    ids_b = torch.tensor([[2, 5, 6, 7]])
    mask = torch.tensor([[True, True, True, False]])
    with torch.no_grad():
        out_a = enc(ids_a, mask)[-1][:, :3]
        out_b = enc(ids_b, mask)[-1][:, :3]
    assert torch.equal(out_a, out_b)


def test_cross_entropy_value_and_validation():
    logits = torch.tensor([[1.0, 2.0, 0.5]], dtype=knn.DTYPE)
    target = torch.tensor([[0.0, 1.0, 0.0]], dtype=knn.DTYPE)
    want = -float(torch.log_softmax(logits, -1)[0, 1])
    assert float(knn.cross_entropy(logits, target)) == pytest.approx(
        want, abs=1e-12)
    with pytest.raises(ValueError):
        knn.cross_entropy(logits, target[:, :2])
    with pytest.raises(ValueError):
        knn.cross_entropy(logits, torch.tensor([[1.5, -0.5, 0.0]],
                                               dtype=knn.DTYPE))
    with pytest.raises(ValueError):
        knn.cross_entropy(logits, torch.tensor([[0.2, 0.2, 0.2]],
                                               dtype=knn.DTYPE))


def test_cross_entropy_batch_mean():
    logits = torch.zeros(4, 3, dtype=knn.DTYPE)
    target = torch.eye(3, dtype=knn.DTYPE)[[0, 1, 2, 0]]
    assert float(knn.cross_entropy(logits, target)) == pytest.approx(
        math.log(3), abs=1e-12)


def test_parameter_checksum_detects_change():
    layer = knn.EncoderLayer(hidden=8, heads=2)
    before = knn.parameter_checksum(layer)
    assert before == knn.parameter_checksum(layer)
    with torch.no_grad():
        layer.ff1.weight[0, 0] += 1.0
    assert before != knn.parameter_checksum(layer)


def test_count_parameters_exclusion():
    enc = knn.Encoder(vocab_size=10, hidden=8, heads=2, n_layers=1)
    total = knn.count_parameters(enc)
    no_embed = knn.count_parameters(
        enc, exclude_prefixes=("token_embedding.", "position_embedding."))
    embed = 10 * 8 + knn.MAX_POSITIONS * 8
    assert total - no_embed == embed


def test_checkpoint_roundtrip_and_rejection(tmp_path):
    layer = knn.EncoderLayer(hidden=8, heads=2)
    knn.init_module(layer, knn.manual_seed(1))
    cfg = {"hidden": 8, "heads": 2}
    knn.save_checkpoint(layer, cfg, tmp_path / "ck")
    other = knn.EncoderLayer(hidden=8, heads=2)
    knn.init_module(other, knn.manual_seed(2))
    assert knn.parameter_checksum(other) != knn.parameter_checksum(layer)
    knn.load_checkpoint(other, cfg, tmp_path / "ck")
    assert knn.parameter_checksum(other) == knn.parameter_checksum(layer)
    with pytest.raises(ValueError, match="config"):
        knn.load_checkpoint(other, {"hidden": 16}, tmp_path / "ck")
    wrong = knn.EncoderLayer(hidden=4, heads=2)
    with pytest.raises(ValueError):
        knn.load_checkpoint(wrong, cfg, tmp_path / "ck")


def test_init_deterministic_per_seed():
    a = knn.EncoderLayer(hidden=8, heads=2)
    b = knn.EncoderLayer(hidden=8, heads=2)
    knn.init_module(a, knn.manual_seed(5))
    knn.init_module(b, knn.manual_seed(5))
    assert knn.parameter_checksum(a) == knn.parameter_checksum(b)
