"""Energy coefficient and one-step reconstruction error.

Reconstruction error definition (logged with every metrics CSV): sample
h ~ p(h|v) once per row, read back the mean field v_hat = tanh(b + W h),
and report mean |v - v_hat| / 2, which lies in [0, 1].
"""

from dataclasses import dataclass

import numpy as np

from .model import check_spins, visible_mean
from .sampling import belief_generate, gibbs_steps, sample_hidden

RECON_ERROR_DEFINITION = (
    "recon_error = mean(|v - tanh(b + W h)|) / 2 with h ~ p(h|v), one draw"
)


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    energy_coefficient: float
    recon_error: float
    wall_ms: int


def _mean_cross_distance(x, y):
    """Mean Euclidean distance over all ordered pairs (V-statistic form:
    within-batch calls include the zero i=j terms)."""
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    n_v = x.shape[1]
    # for spins, ||a - b||^2 = 2 (n_v - a.b); exact in float64
    sq = 2.0 * (n_v - x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    return float(np.sqrt(sq).mean())


def energy_coefficient(x, y):
    """Normalized energy distance between two spin batches.

    (2 d_xy - d_xx - d_yy) / (2 d_xy) with d the all-pairs mean distances;
    0 for indistinguishable batches, 1 at maximal separation.  Returns 0
    when d_xy = 0 (both batches concentrated on one identical point).
    """
    x = np.atleast_2d(check_spins(x, name="x"))
    y = np.atleast_2d(check_spins(y, name="y"))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"unit count mismatch: {x.shape[1]} vs {y.shape[1]}")
    d_xy = _mean_cross_distance(x, y)
    if d_xy == 0.0:
        return 0.0
    d_xx = _mean_cross_distance(x, x)
    d_yy = _mean_cross_distance(y, y)
    return (2.0 * d_xy - d_xx - d_yy) / (2.0 * d_xy)


def recon_error(model, batch, rng):
    """One-step reconstruction error in [0, 1] (definition in module docstring)."""
    batch = np.atleast_2d(check_spins(batch, model.n_v, "batch"))
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    h = sample_hidden(model, batch, rng)
    v_hat = visible_mean(model, h)
    return float(np.abs(batch - v_hat).mean() / 2.0)


def recon_error_vs_steps(model, stats, batch_size, steps, rng):
    """Reconstruction error of belief-generated samples after k Gibbs sweeps,
    for each k in steps (sorted ascending).  The chain is advanced
    incrementally; each evaluation uses its own derived stream so the chain
    itself is unaffected by the measurement."""
    steps = list(steps)
    if steps != sorted(steps) or any(k < 0 for k in steps):
        raise ValueError("steps must be sorted ascending and nonnegative")
    v = belief_generate(model, stats, batch_size, rng, refine_k=0)
    out = []
    done = 0
    for k in steps:
        v = gibbs_steps(model, v, k - done, rng)
        done = k
        eval_rng = np.random.Generator(np.random.Philox(key=rng.integers(1 << 62)))
        out.append((k, recon_error(model, v, eval_rng)))
    return out
