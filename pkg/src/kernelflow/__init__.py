"""Exact finite probability kernels, a relative-entropy functor with
executable laws, a partition-refinement KL estimator for real-line
densities, and proper scoring of probabilistic forecasts."""

from .borel import (
    DensityModel,
    IntegratorSpec,
    KlTrace,
    PartitionLevel,
    agreement_check,
    bin_masses,
    discretized_kl,
    estimate_kl,
    exponential_kl,
    exponential_model,
    gaussian_kl,
    gaussian_model,
    piecewise_constant_model,
    uniform_pair_model,
)
from .entropy import (
    FunctorialityCheck,
    LocalReDecomposition,
    ReValue,
    check_functoriality,
    check_lsc_on_sequence,
    convex_decompose,
    kl_divergence,
    local_re,
    re_fin,
    scaled_functor,
)
from .errors import (
    DocumentParseError,
    DomainMismatchError,
    IncoherentPairError,
    IndeterminateScoreError,
    IntegrationToleranceError,
    KernelflowError,
)
from .finite import (
    Disintegration,
    FiniteDistribution,
    FiniteSpace,
    StochasticKernel,
    deterministic_kernel,
    dirac,
    disintegrate,
    flatten,
    kernel_apply,
    kleisli_compose,
    pushforward,
    uniform,
)
from .pairs import (
    CoherenceReport,
    CoherentPair,
    compose_pairs,
    disintegration_pair,
    identity_pair,
    is_absolutely_coherent,
    is_optimal,
    singleton_pair,
    validate_coherent,
)
from .scoring import (
    ForecastRecord,
    PropernessAudit,
    ScoreReport,
    conditional_score,
    empirical_log_score,
    kl_score,
    meta_score,
    properness_audit,
    sequential_scores,
    total_variation,
)

__version__ = "0.1.0"
