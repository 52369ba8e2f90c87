"""Monte Carlo integration of the joint delay density over a union of polytopes.

Samples live in the box [0, t_int]^d. The VEGAS variant keeps one adaptive
grid per dimension; each pass draws from the current grid, accumulates the
per-bin second moments and then rebins. Every (pass, partition) pair gets its
own Philox stream keyed by the seed, and partial sums are reduced in
partition order, so results depend on the partition count but not on thread
scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .analysis import SampleDomain
from .stochastic import JointDensity

DEFAULT_BINS = 50
DEFAULT_PASSES = 5
DEFAULT_PARTITIONS = 4
ALPHA = 1.5  # grid damping exponent
CHUNK = 1 << 16


@dataclass(frozen=True)
class IntegrationResult:
    p_max: float
    e_stat: float
    e_inf: float
    samples_used: int
    seed: int
    integrator: str = "vegas"
    passes: int = DEFAULT_PASSES
    partitions: int = DEFAULT_PARTITIONS

    def to_dict(self) -> dict:
        return asdict(self)


def truncation_error(j: JointDensity, t_int: float) -> float:
    """Mass of the joint density outside [0, t_int]^d."""
    if t_int <= 0:
        return 1.0
    s = 0.0
    for f in j.factors:
        sf = float(f.sf(t_int))
        if sf >= 1.0:
            return 1.0
        s += math.log1p(-sf)
    return max(0.0, -math.expm1(s))


def partition_count() -> int:
    env = os.environ.get("RAR_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"RAR_THREADS must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ValueError("RAR_THREADS must be a positive integer")
        return n
    return DEFAULT_PARTITIONS


def _stream(seed: int, pass_idx: int, part: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(pass_idx, part))
    return np.random.Generator(np.random.Philox(ss))


class _Integrand:
    def __init__(self, domain: SampleDomain, density: JointDensity, tol: float = 1e-9):
        self.density = density
        self.pieces = domain.float_pieces()
        self.tol = tol

    def __call__(self, x: np.ndarray) -> np.ndarray:
        hit = np.zeros(x.shape[0], dtype=bool)
        for A, b in self.pieces:
            if A.shape[0] == 0:
                hit[:] = True
                break
            todo = ~hit
            if not todo.any():
                break
            hit[todo] = np.all(x[todo] @ A.T <= b + self.tol, axis=1)
        out = np.zeros(x.shape[0])
        if hit.any():
            out[hit] = self.density(x[hit])
        return out


def _counts(n: int, parts: int):
    base, extra = divmod(n, parts)
    return [base + (1 if p < extra else 0) for p in range(parts)]


def _vegas_chunk(f, edges, n, rng, bins):
    d = edges.shape[0]
    s1 = 0.0
    s2 = 0.0
    hist = np.zeros((d, bins))
    done = 0
    widths = np.diff(edges, axis=1)
    while done < n:
        m = min(CHUNK, n - done)
        u = rng.random((m, d)) * bins
        idx = np.minimum(u.astype(np.int64), bins - 1)
        frac = u - idx
        rows = np.arange(d)[None, :]
        w = widths[rows, idx]
        x = edges[rows, idx] + frac * w
        jac = np.prod(w * bins, axis=1)
        fx = f(x) * jac
        s1 += float(fx.sum())
        s2 += float((fx * fx).sum())
        f2 = fx * fx
        for k in range(d):
            hist[k] += np.bincount(idx[:, k], weights=f2, minlength=bins)
        done += m
    return s1, s2, hist


def _rebin(edges, hist, bins):
    d = edges.shape[0]
    new = edges.copy()
    for k in range(d):
        h = hist[k].copy()
        if h.sum() <= 0:
            continue
        sm = h.copy()
        sm[0] = (h[0] + h[1]) / 2 if bins > 1 else h[0]
        sm[-1] = (h[-2] + h[-1]) / 2 if bins > 1 else h[-1]
        if bins > 2:
            sm[1:-1] = (h[:-2] + h[1:-1] + h[2:]) / 3
        sm /= sm.sum()
        r = np.zeros(bins)
        pos = sm > 0
        r[pos] = ((sm[pos] - 1.0) / np.log(sm[pos])) ** ALPHA
        # bins with zero weight still get a sliver so the grid stays a bijection
        floor = r[pos].min() * 1e-3 if pos.any() else 1.0
        r = np.maximum(r, floor)
        cum = np.concatenate([[0.0], np.cumsum(r)])
        targets = np.linspace(0.0, cum[-1], bins + 1)
        new[k] = np.interp(targets, cum, edges[k])
        new[k, 0], new[k, -1] = edges[k, 0], edges[k, -1]
    return new


def _initial_grid(density: JointDensity, t_int: float, bins: int, mix: float = 0.1):
    """Per-dimension edges equalizing a blend of the factor marginal and the uniform law.

    Starting from the marginals makes the first pass an importance sampler for
    the density itself; the uniform share keeps every region reachable.
    """
    fine = np.linspace(0.0, t_int, 20001)
    targets = np.linspace(0.0, 1.0, bins + 1)
    edges = np.empty((density.dim, bins + 1))
    for k, f in enumerate(density.factors):
        c = np.asarray(f.cdf(fine), dtype=float)
        c = c - c[0]
        h = (1.0 - mix) * (c / c[-1] if c[-1] > 0 else fine / t_int) + mix * fine / t_int
        edges[k] = np.interp(targets, h, fine)
        edges[k, 0], edges[k, -1] = 0.0, t_int
    return edges


def _combine(estimates, variances):
    """Equal-weight mean of the pass estimates.

    Each pass samples on a grid fixed before it starts, so every estimate is
    unbiased on its own. Inverse-variance weights are not used: for a
    nonnegative integrand a low estimate tends to come with a low variance
    estimate, and weighting by it pulls the combination down.
    """
    est = np.asarray(estimates, dtype=float)
    var = np.asarray(variances, dtype=float)
    k = len(est)
    return float(est.mean()), float(math.sqrt(max(var.sum(), 0.0)) / k)


def integrate_union(
    domain: SampleDomain,
    density: JointDensity,
    t_int: float,
    n_samples: int = 100_000,
    seed: int = 0,
    passes: int = DEFAULT_PASSES,
    integrator: str = "vegas",
    partitions: Optional[int] = None,
    bins: int = DEFAULT_BINS,
) -> IntegrationResult:
    """Estimate the density mass of ``domain`` clipped to [0, t_int]^d."""
    if integrator not in ("vegas", "plain"):
        raise ValueError(f"unknown integrator {integrator!r}")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    parts = partitions if partitions is not None else partition_count()
    e_inf = truncation_error(density, t_int)
    meta = dict(seed=seed, integrator=integrator, passes=passes, partitions=parts)
    if not domain.pieces:
        return IntegrationResult(0.0, 0.0, e_inf, 0, **meta)
    d = domain.dim
    if d != density.dim:
        raise ValueError(f"domain dimension {d} differs from density dimension {density.dim}")
    if d == 0:
        return IntegrationResult(1.0, 0.0, 0.0, 0, **meta)
    f = _Integrand(domain, density)
    t_int = float(t_int)
    npass = 1 if integrator == "plain" else max(1, passes)
    if integrator == "vegas":
        edges = _initial_grid(density, t_int, bins)
    else:
        edges = np.tile(np.linspace(0.0, t_int, bins + 1), (d, 1))
    per_pass = _counts(n_samples, npass)
    estimates, variances = [], []
    workers = min(parts, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for p in range(npass):
            n = per_pass[p]
            sizes = _counts(n, parts)
            futures = [
                pool.submit(_vegas_chunk, f, edges, sizes[q], _stream(seed, p, q), bins)
                for q in range(parts)
            ]
            s1 = s2 = 0.0
            hist = np.zeros((d, bins))
            for fut in futures:  # fixed reduction order
                a, b, h = fut.result()
                s1 += a
                s2 += b
                hist += h
            mean = s1 / n
            var = max(s2 / n - mean * mean, 0.0) / max(n - 1, 1)
            estimates.append(mean)
            variances.append(var)
            if integrator == "vegas" and p + 1 < npass:
                edges = _rebin(edges, hist, bins)
    p_hat, e_stat = _combine(estimates, variances)
    p_hat = min(max(p_hat, 0.0), 1.0)
    return IntegrationResult(p_hat, e_stat, e_inf, int(sum(per_pass)), **meta)
