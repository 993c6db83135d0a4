"""Fixed model battery used by inequality suites and tests.

PSD members cover k = 1, 2, 3 including a rank-deficient profile; the
bipartite profile is indefinite and exercises the rejection paths.
"""

from __future__ import annotations

import numpy as np

from .model import ModelSpec, SpeciesLayout, proportional_sizes, psd_factorize

PSD_PROFILES: list[tuple[str, tuple[float, ...], np.ndarray]] = [
    ("sk", (1.0,), np.array([[1.0]])),
    ("sk_scaled", (1.0,), np.array([[2.5]])),
    ("two_diag", (0.5, 0.5), np.eye(2)),
    ("two_rank1", (0.5, 0.5), np.array([[1.0, 1.0], [1.0, 1.0]])),
    ("two_lopsided", (0.75, 0.25), np.array([[2.0, 1.0], [1.0, 1.0]])),
    ("three_rank2", (0.375, 0.375, 0.25),
     np.array([[1.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 1.0]])),
]

BIPARTITE_PROFILE = np.array([[0.0, 1.0], [1.0, 0.0]])


def member(alpha, delta2, n: int) -> ModelSpec:
    sizes = proportional_sizes(np.asarray(alpha), n)
    return ModelSpec(layout=SpeciesLayout.from_sizes(sizes), profile=psd_factorize(delta2))


def psd_members(n: int) -> list[tuple[str, ModelSpec]]:
    """All PSD battery models instantiated at n spins."""
    return [(name, member(alpha, d2, n)) for name, alpha, d2 in PSD_PROFILES]


def bipartite(n: int) -> ModelSpec:
    """The indefinite two-species profile; lemma operations must reject it."""
    return member((0.5, 0.5), BIPARTITE_PROFILE, n)
