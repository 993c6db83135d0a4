"""Quenched-disorder Monte Carlo: replicate orchestration and estimators.

Seeding contract
----------------
Every random draw comes from a substream derived as

    SeedSequence(master_seed, spawn_key=(replicate_index, role))

with roles 0 = shared coupling, 1 = first replica copy, 2 = second replica
copy, 3 = bootstrap resampling.  Results are therefore bit-identical for a
given master seed, independent of worker count: replicate outputs are
written into an array slot keyed by replicate index and reduced in index
order with numpy's pairwise summation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPSD, OutOfDomain, TooFewReplicates
from .interpolation import product_overlap_batch, DisorderTriple, _states
from .kernels import CouplingMatrix, free_energy_exact
from .model import ModelSpec, beta_critical, main_lemma_bound, scaled_spec, talagrand_rhs
from .oracles import overlap_matrix, talagrand_lhs_rademacher

ROLE_SHARED = 0
ROLE_COPY1 = 1
ROLE_COPY2 = 2
ROLE_BOOTSTRAP = 3

DEFAULT_MASTER_SEED = 0x5EED  # 24301
BOOTSTRAP_RESAMPLES = 1000
THREADS_ENV = "MSKVAR_THREADS"


def disorder_stream(master_seed: int, replicate_index: int, role: int) -> np.random.Generator:
    """The documented substream for one (replicate, role) slot."""
    key = np.random.SeedSequence(master_seed, spawn_key=(replicate_index, role))
    return np.random.default_rng(key)


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument, else MSKVAR_THREADS, else min(8, cpu count)."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _map_indexed(fn, count: int, threads: int):
    """fn(i) for i in range(count), results ordered by index regardless of
    scheduling; workers share no mutable state."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


@dataclass(frozen=True)
class McConfig:
    replicates: int
    master_seed: int = DEFAULT_MASTER_SEED
    quadrature_nodes: int = 16
    t_grid: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise TooFewReplicates("need at least one replicate")
        if self.quadrature_nodes < 2:
            raise OutOfDomain("need at least two quadrature nodes")
        if self.t_grid is not None:
            grid = tuple(float(t) for t in self.t_grid)
            if len(grid) < 2 or any(not 0.0 <= t <= 1.0 for t in grid):
                raise OutOfDomain("t_grid entries must lie in [0, 1]")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise OutOfDomain("t_grid must be strictly increasing")
            object.__setattr__(self, "t_grid", grid)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n: int
    seed: int


def sample_disorder(spec: ModelSpec, stream: np.random.Generator) -> CouplingMatrix:
    """One full coupling array: independent centered Gaussians with the
    species-pair variances, all (i, j) slots including the diagonal."""
    sp = spec.layout.species
    std = np.sqrt(spec.delta2[np.ix_(sp, sp)])
    return CouplingMatrix(g=stream.standard_normal((spec.n, spec.n)) * std, spec=spec)


def sample_triple(spec: ModelSpec, master_seed: int, replicate_index: int) -> DisorderTriple:
    return DisorderTriple(
        g=sample_disorder(spec, disorder_stream(master_seed, replicate_index, ROLE_SHARED)),
        g1=sample_disorder(spec, disorder_stream(master_seed, replicate_index, ROLE_COPY1)),
        g2=sample_disorder(spec, disorder_stream(master_seed, replicate_index, ROLE_COPY2)),
    )


def _free_energy_samples(spec: ModelSpec, beta: float, mc: McConfig, threads: int,
                         index_base: int = 0) -> np.ndarray:
    def one(i: int) -> float:
        g = sample_disorder(spec, disorder_stream(mc.master_seed, index_base + i, ROLE_SHARED))
        return free_energy_exact(g, beta)

    return np.array(_map_indexed(one, mc.replicates, threads))


def variance_direct(spec: ModelSpec, beta: float, mc: McConfig,
                    threads: int | None = None, index_base: int = 0) -> Estimate:
    """Sample variance of the exact free energy over disorder replicates,
    with a bootstrap standard error."""
    if mc.replicates < 2:
        raise TooFewReplicates("variance needs at least two replicates")
    threads = resolve_threads(threads)
    fe = _free_energy_samples(spec, beta, mc, threads, index_base)
    var = float(fe.var(ddof=1))
    boot_rng = disorder_stream(mc.master_seed, index_base, ROLE_BOOTSTRAP)
    idx = boot_rng.integers(0, mc.replicates, size=(BOOTSTRAP_RESAMPLES, mc.replicates))
    boot = fe[idx].var(axis=1, ddof=1)
    return Estimate(value=var, stderr=float(boot.std(ddof=1)), n=mc.replicates,
                    seed=mc.master_seed)


def _quadrature(mc: McConfig) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights integrating over [0, 1]: Gauss-Legendre by default,
    composite trapezoid on an explicit t_grid."""
    if mc.t_grid is not None:
        t = np.asarray(mc.t_grid)
        w = np.zeros_like(t)
        w[:-1] += np.diff(t) / 2.0
        w[1:] += np.diff(t) / 2.0
        return t, w
    x, w = np.polynomial.legendre.leggauss(mc.quadrature_nodes)
    return (x + 1.0) / 2.0, w / 2.0


_OVERLAP_BLOCK = 64


def _overlap_block_values(spec: ModelSpec, beta: float, t: float, master_seed: int,
                          indices: range) -> np.ndarray:
    """Exact per-triple coupled-replica overlap for a block of replicates.

    Same math as product_overlap_batch, evaluated for a whole block of
    disorder triples with batched einsums; each triple still comes from its
    own (replicate, role) substream.
    """
    n = spec.n
    states = _states(n)
    sp = spec.layout.species
    std = np.sqrt(spec.delta2[np.ix_(sp, sp)])
    w_mat = spec.delta2[np.ix_(sp, sp)]

    stacks = [
        np.stack([
            disorder_stream(master_seed, i, role).standard_normal((n, n)) * std
            for i in indices
        ])
        for role in (ROLE_SHARED, ROLE_COPY1, ROLE_COPY2)
    ]
    # e[b, m] = states[m] . stack[b] . states[m] / sqrt(n), via batched matmul
    energies = [
        ((states @ stack) * states[None, :, :]).sum(axis=2) / math.sqrt(n)
        for stack in stacks
    ]
    wt, wo = math.sqrt(t), math.sqrt(1.0 - t)

    def two_point(logw: np.ndarray) -> np.ndarray:
        p = np.exp(logw - logw.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        return states.T @ (p[:, :, None] * states[None, :, :])

    c1 = two_point(beta * (wt * energies[0] + wo * energies[1]))
    c2 = two_point(beta * (wt * energies[0] + wo * energies[2]))
    return (c1 * c2 * w_mat[None, :, :]).sum(axis=(1, 2)) / n ** 2


def mean_overlap_at(spec: ModelSpec, beta: float, t: float, mc: McConfig,
                    threads: int | None = None, index_base: int = 0) -> Estimate:
    """Disorder mean of the coupled-replica overlap at mixing t (no tilt):
    plain mean and standard error over exact per-triple values."""
    threads = resolve_threads(threads)
    blocks = [
        range(index_base + lo, index_base + min(lo + _OVERLAP_BLOCK, mc.replicates))
        for lo in range(0, mc.replicates, _OVERLAP_BLOCK)
    ]

    def one(b: int) -> np.ndarray:
        return _overlap_block_values(spec, beta, t, mc.master_seed, blocks[b])

    vals = np.concatenate(_map_indexed(one, len(blocks), threads))
    se = float(vals.std(ddof=1) / math.sqrt(mc.replicates)) if mc.replicates > 1 else 0.0
    return Estimate(value=float(vals.mean()), stderr=se, n=mc.replicates, seed=mc.master_seed)


def variance_via_identity(spec: ModelSpec, beta: float, mc: McConfig,
                          threads: int | None = None) -> Estimate:
    """Free-energy variance through the interpolation identity
    beta^2 N integral_0^1 E<R>_t dt.

    Each quadrature node gets its own independent block of disorder
    triples (global replicate index = node * replicates + r), so node
    standard errors are independent and combine as a weighted RMS.
    """
    if mc.replicates < 2:
        raise TooFewReplicates("identity estimator needs at least two replicates")
    nodes, weights = _quadrature(mc)
    scale = beta ** 2 * spec.n
    means = np.empty(len(nodes))
    ses = np.empty(len(nodes))
    for q, t in enumerate(nodes):
        est = mean_overlap_at(spec, beta, float(t), mc, threads,
                              index_base=q * mc.replicates)
        means[q] = est.value
        ses[q] = est.stderr
    value = scale * float(weights @ means)
    stderr = scale * float(np.sqrt(np.sum((weights * ses) ** 2)))
    return Estimate(value=value, stderr=stderr, n=mc.replicates, seed=mc.master_seed)


@dataclass(frozen=True)
class LemmaRow:
    t: float
    estimate: float
    stderr: float
    bound: float
    margin: float
    passed: bool


def main_lemma_check(spec: ModelSpec, beta: float, t_values, mc: McConfig,
                     threads: int | None = None) -> list[LemmaRow]:
    """Estimated mean coupled-replica overlap vs its closed-form ceiling,
    one row per mixing value; passes when margin >= -5 stderr."""
    if not spec.profile.psd:
        raise NotPSD("lemma check needs a positive semi-definite profile")
    rows = []
    for j, t in enumerate(t_values):
        bound = main_lemma_bound(spec, beta, float(t))  # raises OutOfDomain per t
        est = mean_overlap_at(spec, beta, float(t), mc, threads,
                              index_base=j * mc.replicates)
        margin = bound - est.value
        rows.append(LemmaRow(t=float(t), estimate=est.value, stderr=est.stderr,
                             bound=bound, margin=margin,
                             passed=margin >= -5.0 * est.stderr))
    return rows


@dataclass(frozen=True)
class TalagrandRow:
    x: float
    estimate: float
    stderr: float
    oracle: float
    rhs: float
    mc_matches_oracle: bool
    oracle_below_rhs: bool


def talagrand_check(spec: ModelSpec, x_values, mc: McConfig,
                    threads: int | None = None) -> list[TalagrandRow]:
    """Tilted-overlap exponential moment at full decoupling, three ways.

    Per x: (a) disorder MC of the exact pair-Gibbs mean of exp(x N R) at
    t = 0 (measure at beta = beta_c; the disorder average is
    temperature-independent), (b) the exact sign-enumeration oracle,
    (c) the closed-form ceiling.  Requires a PSD profile.
    """
    if not spec.profile.psd:
        raise NotPSD("exponential-moment check needs a positive semi-definite profile")
    bc = beta_critical(spec)
    x_values = [float(x) for x in x_values]
    for x in x_values:
        if not 0.0 < x < bc ** 2:
            raise OutOfDomain(f"x = {x} must lie in (0, beta_c^2 = {bc ** 2})")

    n = spec.n
    states = _states(n)
    r_mat = overlap_matrix(spec, states, states)
    threads = resolve_threads(threads)

    def softmaxes(i: int) -> tuple[np.ndarray, np.ndarray]:
        triple = sample_triple(spec, mc.master_seed, i)
        out = []
        for coupling in (triple.g1.g, triple.g2.g):
            e = ((states @ coupling) * states).sum(axis=1) / math.sqrt(n)
            w = np.exp(bc * (e - e.max()))
            out.append(w / w.sum())
        return out[0], out[1]

    gibbs = _map_indexed(softmaxes, mc.replicates, threads)

    rows = []
    for x in x_values:
        tilted = np.exp(x * n * r_mat)
        vals = np.array([p @ tilted @ q for p, q in gibbs])
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        oracle = talagrand_lhs_rademacher(spec, x)
        rhs = talagrand_rhs(spec, x)
        rows.append(TalagrandRow(
            x=x, estimate=mean, stderr=se, oracle=oracle, rhs=rhs,
            mc_matches_oracle=abs(mean - oracle) <= 5.0 * max(se, 1e-300),
            oracle_below_rhs=oracle <= rhs * (1.0 + 1e-12)))
    return rows


@dataclass(frozen=True)
class ScalingRow:
    n: int
    beta: float
    var: float
    stderr: float
    var_over_log2: float
    var_over_bound: float


def scaling_experiment(spec: ModelSpec, n_grid, mc: McConfig, mode: str = "critical",
                       alpha: float | None = None, d: float | None = None,
                       threads: int | None = None) -> list[ScalingRow]:
    """Free-energy variance across system sizes, normalized by the expected
    growth envelope.

    critical: beta = beta_c(N); envelope log^2 N + 1.
    approach: beta = sqrt(beta_c^2 + d N^-alpha); envelope log^2 N + N^(1-alpha).
    """
    if mode not in ("critical", "approach"):
        raise OutOfDomain(f"unknown mode {mode!r}")
    if mode == "approach":
        if alpha is None or d is None or alpha <= 0 or d <= 0:
            raise OutOfDomain("approach mode needs alpha > 0 and d > 0")
    rows = []
    for row_idx, n in enumerate(n_grid):
        n = int(n)
        sub = scaled_spec(spec, n)
        bc = beta_critical(sub)
        beta = bc if mode == "critical" else math.sqrt(bc ** 2 + d * n ** -alpha)
        est = variance_direct(sub, beta, mc, threads, index_base=row_idx * mc.replicates)
        log2 = math.log(n) ** 2
        envelope = log2 + (1.0 if mode == "critical" else n ** (1.0 - alpha))
        rows.append(ScalingRow(n=n, beta=float(beta), var=est.value, stderr=est.stderr,
                               var_over_log2=est.value / log2,
                               var_over_bound=est.value / envelope))
    return rows


def bounded_ratio(rows: list[ScalingRow], factor: float = 2.0) -> bool:
    """True when the normalized column stays within `factor` of its minimum."""
    vals = [r.var_over_bound for r in rows]
    return max(vals) <= factor * min(vals)
