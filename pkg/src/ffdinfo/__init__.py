"""Falling factorial distribution and the Fisher information of stratified
versus pooled sampling from a Poisson-Dirichlet population."""

from .compare import InfoComparison, TheoremVerdict, verdict
from .ffd import AuxSums, FfdSpec, PmfTable, aux_sums, moments, pmf_bernoulli_dp, pmf_stirling
from .inference import MleResult, mle_sample_i, mle_sample_ii
from .sampling import DesignParams

__all__ = [
    "AuxSums", "DesignParams", "FfdSpec", "InfoComparison", "MleResult", "PmfTable",
    "TheoremVerdict", "aux_sums", "mle_sample_i", "mle_sample_ii", "moments",
    "pmf_bernoulli_dp", "pmf_stirling", "verdict",
]
