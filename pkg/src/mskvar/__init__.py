"""Numerical laboratory for multi-species SK free-energy fluctuations.

Exact small-system enumeration kernels, coupled-replica interpolation
measures, quenched-disorder Monte Carlo estimators, and the closed-form
bounds they are checked against.
"""

from .errors import (
    AsymmetricInput,
    CouplingFileError,
    DegenerateModel,
    DimensionMismatch,
    ModelFileError,
    MskvarError,
    NegativeEntry,
    NonFinite,
    NotPSD,
    OutOfDomain,
    TooFewReplicates,
    TooLarge,
)
from .interpolation import (
    DisorderTriple,
    InterpolationPoint,
    pair_gibbs_cross_overlap,
    pair_gibbs_overlap,
    pair_hamiltonians,
    tilted_free_energy,
)
from .kernels import (
    CouplingMatrix,
    OverlapVector,
    free_energy_exact,
    gibbs_expectation,
    hamiltonian,
    load_coupling,
    multi_overlap,
    save_coupling,
)
from .mc import (
    Estimate,
    McConfig,
    disorder_stream,
    main_lemma_check,
    sample_disorder,
    sample_triple,
    scaling_experiment,
    talagrand_check,
    variance_direct,
    variance_via_identity,
)
from .model import (
    ModelSpec,
    SpeciesLayout,
    VarianceProfile,
    beta_critical,
    load_model,
    main_lemma_bound,
    make_spec,
    overlap_upper_bound,
    psd_factorize,
    talagrand_rhs,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
