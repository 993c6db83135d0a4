"""Exact computations over the full spin cube for one disorder sample.

The partition-sum kernels enumerate all 2^N states by Gray code (see
:mod:`mskvar._gray`); everything here is deterministic given its inputs.
Enumeration is capped at ``DEFAULT_N_MAX`` spins by default.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _gray
from .errors import CouplingFileError, DimensionMismatch, NonFinite, TooLarge
from .model import ModelSpec

DEFAULT_N_MAX = 24

_HEADER = struct.Struct("<4sIII")
_MAGIC = b"MSKG"
_VERSION = 1


def as_spins(x, n: int | None = None) -> np.ndarray:
    """Validate and return a +-1 spin configuration as float64."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if n is not None and arr.shape != (n,):
        raise DimensionMismatch(f"expected {n} spins, got shape {arr.shape}")
    if not np.all(np.abs(arr) == 1.0):
        raise DimensionMismatch("spin entries must be +1 or -1")
    return arr


@dataclass(frozen=True)
class CouplingMatrix:
    """One disorder sample: the full N x N Gaussian coupling array.

    Not symmetrized; the diagonal is included.  ``spec`` records the model
    the sample was drawn for.
    """

    g: np.ndarray
    spec: ModelSpec

    def __post_init__(self):
        arr = np.asarray(self.g, dtype=np.float64)
        n = self.spec.n
        if arr.shape != (n, n):
            raise DimensionMismatch(f"coupling must be {n} x {n}, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFinite("coupling entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "g", arr)

    @property
    def n(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class OverlapVector:
    """Within-species overlaps of two configurations plus the multi-overlap."""

    r_by_species: np.ndarray
    multi: float


def _coupling_array(G) -> np.ndarray:
    return G.g if isinstance(G, CouplingMatrix) else np.asarray(G, dtype=np.float64)


def hamiltonian(G, sigma) -> float:
    """Energy (1/sqrt N) * sum_{i,j} g_ij sigma_i sigma_j, full double sum."""
    g = _coupling_array(G)
    n = g.shape[0]
    if g.shape != (n, n):
        raise DimensionMismatch(f"coupling must be square, got {g.shape}")
    s = as_spins(sigma, n)
    return float(s @ g @ s) / np.sqrt(n)


def multi_overlap(spec: ModelSpec, sigma, rho) -> OverlapVector:
    """Per-species overlaps R_s = (1/N) sum_{i in I_s} sigma_i rho_i and
    the quadratic form v^T Delta2 v they induce."""
    n = spec.n
    s = as_spins(sigma, n)
    r = as_spins(rho, n)
    v = np.bincount(spec.layout.species, weights=s * r, minlength=spec.k) / n
    return OverlapVector(r_by_species=v, multi=float(v @ spec.delta2 @ v))


def _check_enumerable(g: np.ndarray, n_max: int) -> int:
    n = g.shape[0]
    if g.shape != (n, n):
        raise DimensionMismatch(f"coupling must be square, got {g.shape}")
    if n > n_max:
        raise TooLarge(f"N = {n} exceeds the enumeration limit {n_max}")
    if not np.isfinite(g).all():
        raise NonFinite("coupling entries must be finite")
    return n


def free_energy_exact(G, beta: float, n_max: int = DEFAULT_N_MAX) -> float:
    """log of the partition sum at inverse temperature beta, exact over 2^N states.

    Single Gray-code sweep with an O(N) incremental energy update per state
    and a running-max log-sum-exp, so the cost is O(2^N * N) time and O(N)
    memory.
    """
    g = _coupling_array(G)
    n = _check_enumerable(g, n_max)
    return float(_gray.free_energy_sweep(g + g.T, float(beta), np.sqrt(n)))


def state_log_weights(G, beta: float, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """beta * H for every state, in Gray visit order (2^N entries)."""
    g = _coupling_array(G)
    n = _check_enumerable(g, n_max)
    return float(beta) * _gray.energy_sweep(g + g.T, np.sqrt(n))


def gibbs_expectation(G, beta: float, f, vectorized: bool = False,
                      n_max: int = DEFAULT_N_MAX) -> float:
    """Gibbs average of an observable under weights exp(beta * H).

    ``f`` maps one +-1 configuration (1-D array) to a float; pass
    ``vectorized=True`` if it instead maps the full (2^N, N) state matrix to
    a length-2^N vector.  Normalization is two-pass (max shift), and the
    state matrix is materialized, so memory grows as 2^N * N.
    """
    logw = state_log_weights(G, beta, n_max=n_max)
    n = _coupling_array(G).shape[0]
    states = _gray.states_in_visit_order(n)
    p = np.exp(logw - logw.max())
    vals = np.asarray(f(states) if vectorized else [f(row) for row in states], dtype=float)
    if vals.shape != logw.shape:
        raise DimensionMismatch("observable must yield one value per state")
    return float(p @ vals) / float(p.sum())


def save_coupling(G: CouplingMatrix, path) -> None:
    """Binary dump: 16-byte header (magic, version, N, reserved) then the
    row-major little-endian float64 entries."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, G.n, 0))
        fh.write(np.ascontiguousarray(G.g, dtype="<f8").tobytes())


def load_coupling(path, spec: ModelSpec) -> CouplingMatrix:
    """Read a coupling dump written by :func:`save_coupling`."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise CouplingFileError(f"{path}: truncated header")
        magic, version, n, _ = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise CouplingFileError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise CouplingFileError(f"{path}: unsupported version {version}")
        if n != spec.n:
            raise CouplingFileError(f"{path}: N = {n} disagrees with model N = {spec.n}")
        body = fh.read(8 * n * n)
        if len(body) < 8 * n * n:
            raise CouplingFileError(f"{path}: truncated payload")
        g = np.frombuffer(body, dtype="<f8").reshape(n, n)
    return CouplingMatrix(g=g, spec=spec)
