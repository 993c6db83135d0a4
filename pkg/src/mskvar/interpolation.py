"""Two-parameter interpolating Gibbs measures on replica pairs.

For a disorder triple (g, g1, g2) and mixing parameter t in [0, 1], the two
replicas see effective couplings

    A1 = sqrt(t) g + sqrt(1-t) g1        (first replica)
    A2 = sqrt(t) g + sqrt(1-t) g2        (second replica)

so they share the g part and are otherwise independent.  The pair measure
weights states by exp(beta (H1 + H2) + lam beta^2 N R) where R is the
multi-overlap; lam = 0 recovers the plain coupled-replica measure.

Everything here is exact for the given disorder; quenched averages over
triples are taken in :mod:`mskvar.mc`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _gray
from .errors import DimensionMismatch, OutOfDomain, TooLarge
from .kernels import CouplingMatrix, as_spins, hamiltonian
from .model import ModelSpec

DEFAULT_PAIR_N_MAX = 13


@dataclass(frozen=True)
class DisorderTriple:
    """Shared coupling plus one independent copy per replica."""

    g: CouplingMatrix
    g1: CouplingMatrix
    g2: CouplingMatrix

    def __post_init__(self):
        if not (self.g.n == self.g1.n == self.g2.n):
            raise DimensionMismatch("triple members must have equal dimensions")

    @property
    def n(self) -> int:
        return self.g.n


@dataclass(frozen=True)
class InterpolationPoint:
    """Measure parameters: replica mixing t, overlap tilt lam, temperature."""

    t: float
    lam: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise OutOfDomain(f"t = {self.t} must lie in [0, 1]")
        if self.beta <= 0.0:
            raise OutOfDomain("beta must be positive")


def _mixed_couplings(triple: DisorderTriple, t: float) -> tuple[np.ndarray, np.ndarray]:
    wt, wo = np.sqrt(t), np.sqrt(1.0 - t)
    return wt * triple.g.g + wo * triple.g1.g, wt * triple.g.g + wo * triple.g2.g


def pair_hamiltonians(triple: DisorderTriple, t: float, sigma, rho) -> tuple[float, float]:
    """Energies of the two replicas under the partially shared disorder."""
    if not 0.0 <= t <= 1.0:
        raise OutOfDomain(f"t = {t} must lie in [0, 1]")
    n = triple.n
    s = as_spins(sigma, n)
    r = as_spins(rho, n)
    a1, a2 = _mixed_couplings(triple, t)
    return hamiltonian(a1, s), hamiltonian(a2, r)


def _check_pair_size(n: int, n_max: int) -> None:
    if n > n_max:
        raise TooLarge(f"N = {n} exceeds the pair-enumeration limit {n_max}")


def _sweep(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint,
           n_max: int) -> tuple[float, float, float]:
    """(log pair partition sum, <R>, max exponent) by the 4^N Gray sweep."""
    _check_pair_size(triple.n, n_max)
    a1, a2 = _mixed_couplings(triple, p.t)
    logz, r_mean, mx = _gray.pair_sweep(
        a1 + a1.T, a2 + a2.T, spec.layout.species, spec.delta2,
        float(p.beta), float(p.lam))
    return float(logz), float(r_mean), float(mx)


def tilted_free_energy(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint,
                       n_max: int = DEFAULT_PAIR_N_MAX) -> float:
    """(1/N) log of the tilted pair partition sum for this disorder.

    Nested Gray-code enumeration of all 4^N replica pairs, with incremental
    energy and integer overlap-counter updates per single-spin flip.
    """
    logz, _, _ = _sweep(spec, triple, p, n_max)
    return logz / spec.n


def pair_gibbs_overlap(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint,
                       n_max: int = DEFAULT_PAIR_N_MAX) -> float:
    """Gibbs mean of the multi-overlap R under the pair measure.

    At lam = 0 the pair weights factorize over the replicas, so the value
    is computed from the two single-replica two-point matrices instead of
    the 4^N sweep; the result is identical.
    """
    if p.lam == 0.0:
        return float(product_overlap_batch(spec, triple, p.beta, [p.t], n_max=n_max)[0])
    _, r_mean, _ = _sweep(spec, triple, p, n_max)
    return r_mean


def pair_gibbs_cross_overlap(spec: ModelSpec, triple: DisorderTriple, p: InterpolationPoint,
                             n_max: int = DEFAULT_PAIR_N_MAX) -> float:
    """Mean overlap R(sigma, rho') across two independent pairs.

    With (sigma, rho) and (sigma', rho') independent draws from the same
    pair measure, expanding the quadratic form gives

        <R(sigma, rho')> = (1/N^2) sum_ij Delta2[s(i), s(j)]
                            <sigma_i sigma_j> <rho_i rho_j>

    where the brackets are marginal two-point functions of one pair.  The
    i = j terms survive with value 1 each, contributing
    sum_s Delta2[s, s] alpha_s / N.  At lam = 0 the two replicas of a single
    pair are already independent, so this equals pair_gibbs_overlap.
    """
    if p.lam == 0.0:
        return pair_gibbs_overlap(spec, triple, p, n_max=n_max)
    _, _, mx = _sweep(spec, triple, p, n_max)
    a1, a2 = _mixed_couplings(triple, p.t)
    sum_w, m_sig, m_rho = _gray.pair_two_point_sweep(
        a1 + a1.T, a2 + a2.T, spec.layout.species, spec.delta2,
        float(p.beta), float(p.lam), mx)
    c_sig = m_sig / sum_w
    c_rho = m_rho / sum_w
    w = _species_weight_matrix(spec)
    return float(np.sum(w * c_sig * c_rho)) / spec.n ** 2


@lru_cache(maxsize=8)
def _states(n: int) -> np.ndarray:
    return _gray.states_in_visit_order(n)


def _species_weight_matrix(spec: ModelSpec) -> np.ndarray:
    sp = spec.layout.species
    return spec.delta2[np.ix_(sp, sp)]


def _all_state_energies(states: np.ndarray, coupling: np.ndarray) -> np.ndarray:
    n = coupling.shape[0]
    return ((states @ coupling) * states).sum(axis=1) / np.sqrt(n)


def product_overlap_batch(spec: ModelSpec, triple: DisorderTriple, beta: float,
                          t_values, n_max: int = DEFAULT_PAIR_N_MAX) -> np.ndarray:
    """<R> under the lam = 0 pair measure, for several t at once.

    The pair measure is then a product of two single-replica Gibbs
    measures, so <R> contracts their two-point matrices:

        <R> = (1/N^2) sum_ij Delta2[s(i), s(j)] C1_ij C2_ij.

    Per-state energies for g, g1, g2 are computed once and remixed per t.
    """
    n = triple.n
    _check_pair_size(n, n_max)
    states = _states(n)
    e_shared = _all_state_energies(states, triple.g.g)
    e_own1 = _all_state_energies(states, triple.g1.g)
    e_own2 = _all_state_energies(states, triple.g2.g)
    w = _species_weight_matrix(spec)

    out = np.empty(len(t_values))
    for idx, t in enumerate(t_values):
        wt, wo = np.sqrt(t), np.sqrt(1.0 - t)
        c1 = _two_point_from_logw(beta * (wt * e_shared + wo * e_own1), states)
        c2 = _two_point_from_logw(beta * (wt * e_shared + wo * e_own2), states)
        out[idx] = np.sum(w * c1 * c2) / n ** 2
    return out


def _two_point_from_logw(logw: np.ndarray, states: np.ndarray) -> np.ndarray:
    p = np.exp(logw - logw.max())
    p /= p.sum()
    return (states * p[:, None]).T @ states
