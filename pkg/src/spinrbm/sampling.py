"""Block Gibbs kernels and the belief-generation approximate sampler.

All randomness flows through numpy Generators backed by the Philox
counter-based bit generator, so every sampler is reproducible from
(seed, inputs) and independent streams are cheap to derive.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import check_spins, hidden_field, visible_field


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    k_gibbs: int = 0

    def __post_init__(self):
        if self.k_gibbs < 0:
            raise ValueError("k_gibbs must be >= 0")


def make_rng(seed, *stream):
    """Deterministic Generator for a (seed, stream...) key.

    Philox keys are 128-bit; the stream ids are folded into the upper word
    so distinct lanes never share a counter sequence.
    """
    key = int(seed) & 0xFFFFFFFFFFFFFFFF
    for part in stream:
        key = (key * 0x9E3779B97F4A7C15 + int(part) + 1) & ((1 << 128) - 1)
    return np.random.Generator(np.random.Philox(key=key))


def sample_hidden(model, v_batch, rng):
    """Draw h ~ p(h|v) for each row: h_i = +1 w.p. sigma(2 phi_i)."""
    phi = hidden_field(model, np.atleast_2d(np.asarray(v_batch)))
    u = rng.random(phi.shape)
    return kernels.draw_spins(phi, u)


def sample_visible(model, h_batch, rng):
    """Draw v ~ p(v|h) for each row: v_j = +1 w.p. sigma(2 (b + W h)_j)."""
    field = visible_field(model, np.atleast_2d(np.asarray(h_batch)))
    u = rng.random(field.shape)
    return kernels.draw_spins(field, u)


def gibbs_steps(model, v0, k, rng):
    """k full block-Gibbs sweeps (h|v then v|h); k=0 returns v0 unchanged."""
    if k < 0:
        raise ValueError("k must be >= 0")
    v = check_spins(np.atleast_2d(np.asarray(v0)), model.n_v, "v0")
    for _ in range(k):
        h = sample_hidden(model, v, rng)
        v = sample_visible(model, h, rng)
    return v


def sample_phi(model, stats, batch, rng):
    """Draw hidden fields phi = W^T Q z, z ~ N(0, I), one row per sample.

    The implied law is N(0, W^T Sigma W) since Q Q^T = Sigma; the product
    W^T Sigma W is never formed.
    """
    if stats is None or stats.Q is None:
        raise ValueError("data statistics with a covariance factor Q required")
    Q = stats.Q
    if Q.shape[0] != model.n_v:
        raise ValueError(
            f"Q rows {Q.shape[0]} do not match model n_v {model.n_v}")
    z = rng.standard_normal((batch, Q.shape[1]))
    return (z @ Q.T) @ model.W


def belief_generate(model, stats, batch, rng, refine_k=0):
    """Approximate model samples in one backward pass.

    Step 1: phi ~ N(0, W^T Sigma W) via the stored square root Q.
    Step 2: h_i = +1 w.p. sigma(2 phi_i).
    Step 3: v ~ p(v|h).
    Then refine_k optional Gibbs sweeps (0 during CD-0 training).
    """
    if batch < 1:
        raise ValueError("batch must be >= 1")
    phi = sample_phi(model, stats, batch, rng)
    h = kernels.draw_spins(phi, rng.random(phi.shape))
    v = sample_visible(model, h, rng)
    if refine_k:
        v = gibbs_steps(model, v, refine_k, rng)
    return v
