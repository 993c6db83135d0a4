"""Static model description: species layout, variance profile, criticality.

The model is a multi-species SK spin glass: N spins split into k species,
with coupling variances given by a symmetric non-negative k x k profile
matrix.  Everything in this module is closed-form; the random parts live
in :mod:`mskvar.mc`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricInput,
    DegenerateModel,
    ModelFileError,
    NegativeEntry,
    NotPSD,
    OutOfDomain,
)

# Eigenvalues below this fraction of the largest magnitude count as zero
# when ranking the profile; slightly negative ones are still accepted as PSD.
RANK_TOL = 1e-10
PSD_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpeciesLayout:
    """Partition of spins 0..n-1 into k species.

    ``species[i]`` is the 0-based species index of spin i.  ``sizes[s]``
    counts the spins of species s; the density vector alpha is sizes/n.
    """

    n: int
    k: int
    sizes: tuple[int, ...]
    species: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ModelFileError("sizes: need at least one spin and one species")
        if len(self.sizes) != self.k or any(s < 1 for s in self.sizes):
            raise ModelFileError("sizes: every species needs a positive size")
        if sum(self.sizes) != self.n:
            raise ModelFileError("sizes: must sum to the total spin count")
        sp = np.asarray(self.species, dtype=np.int64)
        if sp.shape != (self.n,) or sp.min() < 0 or sp.max() >= self.k:
            raise ModelFileError("species: each spin must map to a species in range")
        counts = np.bincount(sp, minlength=self.k)
        if not np.array_equal(counts, np.asarray(self.sizes)):
            raise ModelFileError("species: counts disagree with sizes")
        object.__setattr__(self, "species", _frozen(sp))

    @classmethod
    def from_sizes(cls, sizes) -> "SpeciesLayout":
        """Contiguous layout: the first sizes[0] spins are species 0, etc."""
        sizes = tuple(int(s) for s in sizes)
        species = np.repeat(np.arange(len(sizes)), sizes)
        return cls(n=int(sum(sizes)), k=len(sizes), sizes=sizes, species=species)

    @property
    def alpha(self) -> np.ndarray:
        """Finite-N species densities sizes/n."""
        return np.asarray(self.sizes, dtype=float) / self.n

    @property
    def lambda_n(self) -> np.ndarray:
        """Diagonal density matrix diag(sizes)/n."""
        return np.diag(self.alpha)


@dataclass(frozen=True)
class VarianceProfile:
    """Symmetric non-negative k x k coupling-variance matrix with PSD data.

    When ``psd`` is true, ``factor`` is a k x r matrix A with A A^T equal to
    the profile to 1e-10 and ``rank`` its numerical rank r; otherwise both
    are None and the PSD-only operations refuse the profile.
    """

    delta2: np.ndarray
    psd: bool
    rank: int | None = None
    factor: np.ndarray | None = None

    def __post_init__(self):
        d2 = np.asarray(self.delta2, dtype=float)
        object.__setattr__(self, "delta2", _frozen(d2))
        if self.factor is not None:
            object.__setattr__(self, "factor", _frozen(np.asarray(self.factor, dtype=float)))

    @property
    def k(self) -> int:
        return self.delta2.shape[0]


def psd_factorize(delta2) -> VarianceProfile:
    """Classify a symmetric non-negative matrix and build its Gram factor.

    Returns psd=True with rank r and factor A (from the top-r eigenpairs,
    A = V_r diag(sqrt eig)) when the smallest eigenvalue is above
    -1e-10 * spectral norm; otherwise psd=False with rank/factor absent.

    Raises AsymmetricInput / NegativeEntry before any spectral work.
    """
    d2 = np.asarray(delta2, dtype=float)
    if d2.ndim != 2 or d2.shape[0] != d2.shape[1]:
        raise AsymmetricInput("variance profile must be a square matrix")
    if np.max(np.abs(d2 - d2.T)) > SYMMETRY_TOL:
        raise AsymmetricInput("variance profile must be symmetric to 1e-12")
    if np.min(d2) < 0:
        raise NegativeEntry("variance profile entries must be non-negative")
    eigval, eigvec = np.linalg.eigh(d2)
    scale = float(np.max(np.abs(eigval))) if d2.any() else 0.0
    if eigval[0] < -PSD_TOL * scale:
        return VarianceProfile(delta2=d2, psd=False)
    keep = eigval > RANK_TOL * scale
    r = int(np.count_nonzero(keep))
    factor = eigvec[:, keep] * np.sqrt(np.maximum(eigval[keep], 0.0))
    return VarianceProfile(delta2=d2, psd=True, rank=r, factor=factor)


@dataclass(frozen=True)
class ModelSpec:
    """Layout plus variance profile, with an optional density override.

    ``lambda_matrix`` defaults to the finite-N diag(sizes)/n; pass a k x k
    diagonal matrix (positive diagonal summing to 1) to use asymptotic
    densities instead.
    """

    layout: SpeciesLayout
    profile: VarianceProfile
    lambda_matrix: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.profile.k != self.layout.k:
            raise ModelFileError("delta2: species count disagrees with sizes")
        lam = self.lambda_matrix
        if lam is None:
            lam = self.layout.lambda_n
        else:
            lam = np.asarray(lam, dtype=float)
            if lam.shape != (self.layout.k, self.layout.k):
                raise ModelFileError("lambda: must be k x k diagonal")
            if np.max(np.abs(lam - np.diag(np.diag(lam)))) > 0:
                raise ModelFileError("lambda: off-diagonal entries must be zero")
            d = np.diag(lam)
            if np.min(d) <= 0 or abs(float(d.sum()) - 1.0) > 1e-9:
                raise ModelFileError("lambda: diagonal must be positive and sum to 1")
        object.__setattr__(self, "lambda_matrix", _frozen(lam))

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def k(self) -> int:
        return self.layout.k

    @property
    def delta2(self) -> np.ndarray:
        return self.profile.delta2


def make_spec(sizes, delta2, lambda_diag=None) -> ModelSpec:
    """Convenience constructor from plain sequences."""
    layout = SpeciesLayout.from_sizes(sizes)
    profile = psd_factorize(delta2)
    lam = np.diag(np.asarray(lambda_diag, dtype=float)) if lambda_diag is not None else None
    return ModelSpec(layout=layout, profile=profile, lambda_matrix=lam)


def beta_critical(spec: ModelSpec) -> float:
    """Critical inverse temperature: spectral radius of 2*Lambda*Delta2, to -1/2.

    The product Lambda*Delta2 is not symmetric; we eigensolve the similar
    symmetric matrix Lambda^1/2 Delta2 Lambda^1/2 instead, which has the
    same spectrum and gives ~1e-12 relative accuracy.
    """
    lam_half = np.sqrt(np.diag(spec.lambda_matrix))
    sym = lam_half[:, None] * spec.delta2 * lam_half[None, :]
    radius = 2.0 * float(np.max(np.abs(np.linalg.eigvalsh(sym))))
    if radius == 0.0:
        raise DegenerateModel("variance profile is identically zero")
    return radius ** -0.5


def overlap_upper_bound(spec: ModelSpec) -> float:
    """Largest possible replica multi-overlap: sum over species pairs of
    Delta2[s,t] * alpha_s * alpha_t (finite-N densities).

    Attained at equal configurations when the profile entries are
    non-negative, which the profile type guarantees.
    """
    a = spec.layout.alpha
    return float(a @ spec.delta2 @ a)


def _require_psd(spec: ModelSpec) -> tuple[float, int]:
    if not spec.profile.psd:
        raise NotPSD("operation needs a positive semi-definite variance profile")
    return beta_critical(spec), int(spec.profile.rank)


def main_lemma_bound(spec: ModelSpec, beta: float, t: float) -> float:
    """Closed-form ceiling on the mean coupled-replica overlap at mixing t.

    Valid for PSD profiles while beta^2 * t < beta_c^2; grows like
    1/(1-u) * log(2/(1-u)) in u = beta^2 t / beta_c^2 and diverges at u=1.
    """
    bc, r = _require_psd(spec)
    u = (beta / bc) ** 2 * t
    if u >= 1.0:
        raise OutOfDomain(f"beta^2 t / beta_c^2 = {u} must be < 1")
    return float((r / spec.n) * bc ** -2 / (1.0 - u) * np.log(2.0 / (1.0 - u)))


def talagrand_rhs(spec: ModelSpec, x: float) -> float:
    """Exponential-moment ceiling (1 - x/beta_c^2)^(-r/2) for 0 < x < beta_c^2."""
    bc, r = _require_psd(spec)
    if not 0.0 < x < bc ** 2:
        raise OutOfDomain(f"x = {x} must lie in (0, beta_c^2 = {bc ** 2})")
    return float((1.0 - x / bc ** 2) ** (-r / 2.0))


def proportional_sizes(alpha, n: int) -> tuple[int, ...]:
    """Integer species sizes approximating alpha * n, largest-remainder rounded.

    Every species keeps at least one spin, and the sizes sum to n exactly.
    """
    alpha = np.asarray(alpha, dtype=float)
    raw = alpha * n
    base = np.maximum(np.floor(raw).astype(int), 1)
    short = n - int(base.sum())
    if short < 0:
        raise OutOfDomain(f"n = {n} too small for {len(alpha)} species at these densities")
    # hand the leftover spins to the largest fractional parts, ties by index
    order = np.argsort(-(raw - np.floor(raw)), kind="stable")
    for idx in order[:short]:
        base[idx] += 1
    return tuple(int(b) for b in base)


def scaled_spec(spec: ModelSpec, n: int) -> ModelSpec:
    """Same species densities and profile at a different total spin count."""
    sizes = proportional_sizes(spec.layout.alpha, n)
    return ModelSpec(layout=SpeciesLayout.from_sizes(sizes), profile=spec.profile)


def load_model(path) -> ModelSpec:
    """Read a model JSON file: {"sizes": [...], "delta2": [[...], ...], "lambda": [...]}.

    Validation stops at the first violation and names the offending field.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFileError("document: expected a JSON object")
    if "sizes" not in doc:
        raise ModelFileError("sizes: missing")
    sizes = doc["sizes"]
    if not isinstance(sizes, list) or not sizes:
        raise ModelFileError("sizes: expected a non-empty list")
    for i, s in enumerate(sizes):
        if not isinstance(s, int) or s < 1:
            raise ModelFileError(f"sizes[{i}]: expected a positive integer")
    k = len(sizes)
    if "delta2" not in doc:
        raise ModelFileError("delta2: missing")
    d2 = doc["delta2"]
    if not isinstance(d2, list) or len(d2) != k:
        raise ModelFileError(f"delta2: expected {k} rows")
    for i, row in enumerate(d2):
        if not isinstance(row, list) or len(row) != k:
            raise ModelFileError(f"delta2[{i}]: expected {k} entries")
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)):
                raise ModelFileError(f"delta2[{i}][{j}]: expected a number")
            if v < 0:
                raise ModelFileError(f"delta2[{i}][{j}]: negative entry")
    arr = np.asarray(d2, dtype=float)
    if np.max(np.abs(arr - arr.T)) > SYMMETRY_TOL:
        raise ModelFileError("delta2: not symmetric")
    lam = doc.get("lambda")
    if lam is not None:
        if not isinstance(lam, list) or len(lam) != k:
            raise ModelFileError(f"lambda: expected {k} entries")
        for i, v in enumerate(lam):
            if not isinstance(v, (int, float)) or v <= 0:
                raise ModelFileError(f"lambda[{i}]: expected a positive number")
        if abs(sum(lam) - 1.0) > 1e-9:
            raise ModelFileError("lambda: entries must sum to 1")
    try:
        return make_spec(sizes, arr, lambda_diag=lam)
    except (AsymmetricInput, NegativeEntry) as exc:
        raise ModelFileError(f"delta2: {exc}") from exc
