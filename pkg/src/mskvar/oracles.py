"""Independent brute-force and closed-form checks for the fast kernels.

Nothing in this module shares code paths with the Gray-code sweeps: states
are enumerated in plain binary order and every energy is recomputed from
scratch, so agreement between a kernel and its oracle is meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPSD, OutOfDomain, TooLarge
from .interpolation import DisorderTriple, InterpolationPoint, _mixed_couplings
from .kernels import as_spins
from .model import ModelSpec, beta_critical

NAIVE_N_MAX = 14
TILTED_NAIVE_N_MAX = 7
DOUBLE_PAIR_N_MAX = 5
RADEMACHER_N_MAX = 20


def _binary_states(n: int) -> np.ndarray:
    m = np.arange(1 << n, dtype=np.int64)
    bits = (m[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (1 - 2 * bits).astype(np.float64)


def _logsumexp(a: np.ndarray) -> float:
    mx = float(np.max(a))
    return mx + float(np.log(np.sum(np.exp(a - mx))))


def free_energy_naive(G, beta: float, n_max: int = NAIVE_N_MAX) -> float:
    """Partition log-sum by full per-state Hamiltonian re-evaluation."""
    g = G.g if hasattr(G, "g") else np.asarray(G, dtype=float)
    n = g.shape[0]
    if n > n_max:
        raise TooLarge(f"N = {n} exceeds the naive enumeration limit {n_max}")
    states = _binary_states(n)
    energies = np.einsum("mi,ij,mj->m", states, g, states) / np.sqrt(n)
    return _logsumexp(beta * energies)


def _pair_weight_matrix(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint):
    """Log-weights of every (sigma, rho) pair plus the overlap matrix."""
    n = triple.n
    states = _binary_states(n)
    a1, a2 = _mixed_couplings(triple, p.t)
    h1 = np.einsum("mi,ij,mj->m", states, a1, states) / np.sqrt(n)
    h2 = np.einsum("mi,ij,mj->m", states, a2, states) / np.sqrt(n)
    r_mat = overlap_matrix(spec, states, states)
    logw = p.beta * (h1[:, None] + h2[None, :]) + p.lam * p.beta ** 2 * n * r_mat
    return logw, r_mat


def overlap_matrix(spec: ModelSpec, sigma_states: np.ndarray,
                   rho_states: np.ndarray) -> np.ndarray:
    """Multi-overlap R for every row pair of two state matrices."""
    sp = spec.layout.species
    counts = [
        sigma_states[:, sp == s] @ rho_states[:, sp == s].T for s in range(spec.k)
    ]
    r = np.zeros((sigma_states.shape[0], rho_states.shape[0]))
    for s in range(spec.k):
        for u in range(spec.k):
            r += spec.delta2[s, u] * counts[s] * counts[u]
    return r / spec.n ** 2


def tilted_naive(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint,
                 n_max: int = TILTED_NAIVE_N_MAX) -> float:
    """Tilted pair free energy by the direct 4^N-term sum."""
    if triple.n > n_max:
        raise TooLarge(f"N = {triple.n} exceeds the naive pair limit {n_max}")
    logw, _ = _pair_weight_matrix(spec, triple, p)
    return _logsumexp(logw.ravel()) / spec.n


def pair_overlap_naive(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint,
                       n_max: int = TILTED_NAIVE_N_MAX) -> float:
    """Pair-Gibbs mean overlap by the direct 4^N-term sum."""
    if triple.n > n_max:
        raise TooLarge(f"N = {triple.n} exceeds the naive pair limit {n_max}")
    logw, r_mat = _pair_weight_matrix(spec, triple, p)
    w = np.exp(logw - logw.max())
    return float(np.sum(w * r_mat) / np.sum(w))


def cross_overlap_naive(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint,
                        n_max: int = DOUBLE_PAIR_N_MAX) -> float:
    """Mean R(sigma, rho') over two genuinely independent pairs.

    Sums w(sigma,rho) w(sigma',rho') R(sigma,rho') over all 16^N index
    combinations, organized as pair-weight marginals contracted against the
    overlap matrix; no factorization of the measure is assumed.
    """
    if triple.n > n_max:
        raise TooLarge(f"N = {triple.n} exceeds the double-pair limit {n_max}")
    logw, r_mat = _pair_weight_matrix(spec, triple, p)
    w = np.exp(logw - logw.max())
    z = w.sum()
    sigma_marginal = w.sum(axis=1)
    rho_marginal = w.sum(axis=0)
    return float(sigma_marginal @ r_mat @ rho_marginal) / z ** 2


def rademacher_overlap_moment(spec: ModelSpec) -> float:
    """Exact mean multi-overlap under independent uniform signs.

    Species sums are independent with E[c_s c_u] = n_s delta_{su}, so the
    quadratic form averages to sum_s Delta2[s,s] alpha_s / N.  This is the
    disorder-averaged coupled-replica overlap at full decoupling, and also
    its value under zero disorder.
    """
    return float(np.sum(np.diag(spec.delta2) * spec.layout.alpha)) / spec.n


def talagrand_lhs_rademacher(spec: ModelSpec, x: float,
                             n_max: int = RADEMACHER_N_MAX) -> float:
    """Exact E exp(x N v^T Delta2 v) with v the per-species means of iid signs.

    Only the k species sums matter, so the 2^N sign vectors collapse to a
    product of binomial weights: cost prod_s (|I_s| + 1) terms, accumulated
    in log space.
    """
    if x <= 0:
        raise OutOfDomain("x must be positive")
    n = spec.n
    if n > n_max:
        raise TooLarge(f"N = {n} exceeds the sign-enumeration limit {n_max}")
    sizes = spec.layout.sizes
    count_axes = []
    logw_axes = []
    for ns in sizes:
        m = np.arange(ns + 1)
        count_axes.append(ns - 2.0 * m)
        logw = np.array([
            math.lgamma(ns + 1) - math.lgamma(mm + 1) - math.lgamma(ns - mm + 1)
            for mm in m
        ]) - ns * math.log(2.0)
        logw_axes.append(logw)
    counts = np.meshgrid(*count_axes, indexing="ij")
    logw = np.zeros(tuple(ns + 1 for ns in sizes))
    for axis, lw in enumerate(logw_axes):
        shape = [1] * spec.k
        shape[axis] = len(lw)
        logw = logw + lw.reshape(shape)
    quad = np.zeros_like(logw)
    for s in range(spec.k):
        for u in range(spec.k):
            quad += spec.delta2[s, u] * counts[s] * counts[u]
    quad /= n  # x * N * (c/N)^T Delta2 (c/N) = x/N * c^T Delta2 c
    return float(np.exp(_logsumexp((logw + x * quad).ravel())))


def gaussian_quadratic_expectation(profile, lambda_mat, x: float) -> float:
    """Closed form det(I_r - 2x A^T Lambda A)^(-1/2) of E exp(x g^T Lambda g)
    for g Gaussian with covariance the profile matrix."""
    if not profile.psd:
        raise NotPSD("Gaussian moment needs a positive semi-definite profile")
    a = profile.factor
    lam = np.asarray(lambda_mat, dtype=float)
    core = a.T @ lam @ a
    mu = np.linalg.eigvalsh((core + core.T) / 2.0)
    args = 1.0 - 2.0 * x * mu
    if np.min(args, initial=np.inf) <= 0.0:
        raise OutOfDomain("I - 2x A^T Lambda A must be positive definite")
    return float(np.exp(-0.5 * np.sum(np.log(args))))


@dataclass(frozen=True)
class CheckRow:
    """One verified quantity: value vs target, with MC error when stochastic."""

    label: str
    value: float
    target: float
    stderr: float
    passed: bool


def _mc_row(label: str, samples: np.ndarray, target: float, sigmas: float = 5.0) -> CheckRow:
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(len(samples)))
    return CheckRow(label, mean, target, se, abs(mean - target) <= sigmas * max(se, 1e-300))


def covariance_check(spec: ModelSpec, pairs, m: int, master_seed: int = 0,
                     t_values=(0.25, 0.5, 0.75), chunk: int = 20000) -> list[CheckRow]:
    """Monte Carlo check of the energy covariance structure.

    For each configuration pair, compares the empirical mean of H(sigma)H(rho)
    against N R(sigma, rho).  With at least two pairs, also verifies the four
    mixed-disorder covariance identities of the interpolation (the
    fluctuation fields H/sqrt(t) - H_copy/sqrt(1-t) are orthogonal to their
    own replica and reproduce N R against the other).
    """
    from .kernels import multi_overlap  # local import to keep module load light
    from .mc import disorder_stream

    n = spec.n
    sp = spec.layout.species
    std = np.sqrt(spec.delta2[np.ix_(sp, sp)])

    def coeff(conf: np.ndarray) -> np.ndarray:
        return (std * np.outer(conf, conf)).ravel() / np.sqrt(n)

    pairs = [(as_spins(s, n), as_spins(r, n)) for s, r in pairs]
    rows: list[CheckRow] = []

    rng = disorder_stream(master_seed, 0, 0)
    prods = {i: np.empty(m) for i in range(len(pairs))}
    done = 0
    while done < m:
        b = min(chunk, m - done)
        z = rng.standard_normal((b, n * n))
        for i, (s, r) in enumerate(pairs):
            prods[i][done:done + b] = (z @ coeff(s)) * (z @ coeff(r))
        done += b
    for i, (s, r) in enumerate(pairs):
        target = n * multi_overlap(spec, s, r).multi
        rows.append(_mc_row(f"cov pair {i}", prods[i], target))

    if len(pairs) >= 2:
        (s, r), (s2, r2) = pairs[0], pairs[1]
        r_s_r2 = n * multi_overlap(spec, s, r2).multi
        r_s2_r = n * multi_overlap(spec, s2, r).multi
        for t in t_values:
            wt, wo = math.sqrt(t), math.sqrt(1.0 - t)
            acc = {key: np.empty(m) for key in range(4)}
            rng_g = disorder_stream(master_seed, 1, 0)
            rng_g1 = disorder_stream(master_seed, 1, 1)
            rng_g2 = disorder_stream(master_seed, 1, 2)
            done = 0
            while done < m:
                b = min(chunk, m - done)
                zg = rng_g.standard_normal((b, n * n))
                z1 = rng_g1.standard_normal((b, n * n))
                z2 = rng_g2.standard_normal((b, n * n))
                d_sig = (zg @ coeff(s)) / wt - (z1 @ coeff(s)) / wo
                d_rho = (zg @ coeff(r)) / wt - (z2 @ coeff(r)) / wo
                h1_s2 = wt * (zg @ coeff(s2)) + wo * (z1 @ coeff(s2))
                h2_r2 = wt * (zg @ coeff(r2)) + wo * (z2 @ coeff(r2))
                acc[0][done:done + b] = d_sig * h1_s2
                acc[1][done:done + b] = d_sig * h2_r2
                acc[2][done:done + b] = d_rho * h2_r2
                acc[3][done:done + b] = d_rho * h1_s2
                done += b
            rows.append(_mc_row(f"interp zero (sigma side) t={t}", acc[0], 0.0))
            rows.append(_mc_row(f"interp cross (sigma side) t={t}", acc[1], r_s_r2))
            rows.append(_mc_row(f"interp zero (rho side) t={t}", acc[2], 0.0))
            rows.append(_mc_row(f"interp cross (rho side) t={t}", acc[3], r_s2_r))
    return rows


def logcosh_bound_check(grid, specs=None, x_points: int = 12) -> list[CheckRow]:
    """Pointwise log cosh(t) <= t^2/2 plus the exponential-moment chain.

    For each provided model, checks sign-enumeration value <= Gaussian
    closed form <= rank bound on an x grid inside (0, beta_c^2); these are
    deterministic inequalities, so stderr is zero and the pass margin is a
    1e-12 relative tolerance.
    """
    from .model import talagrand_rhs

    rows = []
    for t in grid:
        t = float(t)
        at = abs(t)
        val = at - math.log(2.0) + math.log1p(math.exp(-2.0 * at)) if at > 20 else math.log(math.cosh(t))
        rows.append(CheckRow(f"logcosh t={t}", val, t * t / 2.0, 0.0,
                             val <= t * t / 2.0 + 1e-15))
    for spec_i, spec in enumerate(specs or []):
        bc2 = beta_critical(spec) ** 2
        for x in np.linspace(bc2 * 0.04, bc2 * 0.96, x_points):
            lhs = talagrand_lhs_rademacher(spec, float(x))
            mid = gaussian_quadratic_expectation(spec.profile, spec.lambda_matrix, float(x))
            rhs = talagrand_rhs(spec, float(x))
            rows.append(CheckRow(f"chain lhs<=mid model {spec_i} x={x:.4g}", lhs, mid, 0.0,
                                 lhs <= mid * (1.0 + 1e-12)))
            rows.append(CheckRow(f"chain mid<=rhs model {spec_i} x={x:.4g}", mid, rhs, 0.0,
                                 mid <= rhs * (1.0 + 1e-12)))
    return rows
