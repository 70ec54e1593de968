"""Subspace-robust Wasserstein distances for discrete measures.

Exact optimal transport (network simplex with an assignment fast path),
entropic regularization, subspace-robust distances S_k via Frank-Wolfe
with certified refinement, dimension-free rate bounds, and experiment
harnesses for empirical convergence studies.
"""

from .bounds import (
    BoundSet,
    bound_set,
    covering_packing_bounds,
    fournier_H,
    fournier_kappa,
    fournier_w2_upper,
    mad_binomial,
    rate_curves,
    t_star,
)
from .measures import (
    DiscreteMeasure,
    PackingError,
    Sampler,
    SeparatedSet,
    greedy_separated_set,
    isometric_embed,
    parse_sampler_spec,
    project_measure,
    random_orthogonal,
    rng_from_seed,
    sample_empirical,
    uniform_measure,
    worst_case_measure,
)
from .harness import (
    CovarianceReport,
    DecompositionReport,
    ExperimentConfig,
    RateReport,
    RateRow,
    fit_rate_constant,
    fmt17,
    run_covariance_experiment,
    run_decomposition_experiment,
    run_lower_bound_experiment,
    run_rate_experiment,
)
from .ot import (
    CostKind,
    CostMatrix,
    Coupling,
    brute_coupling_grid,
    cost_matrix,
    monotone_coupling_1d,
    pairwise_sq_dists,
    quantile_w2_1d,
    separated_w1_lower_bound,
    sinkhorn,
    solve_exact_ot,
    wasserstein,
)
from .srw import (
    SpectralDecomposition,
    SrwResult,
    SubspaceRobustW2,
    displacement_second_moment,
    projection_residual_bound,
    s1_distance,
    spectral_decomposition,
    srw_distance,
    topk_eigensum,
)
from .verify import run_suite

__version__ = "0.1.0"

__all__ = [
    "BoundSet",
    "CostKind",
    "CostMatrix",
    "Coupling",
    "CovarianceReport",
    "DecompositionReport",
    "DiscreteMeasure",
    "ExperimentConfig",
    "PackingError",
    "RateReport",
    "RateRow",
    "Sampler",
    "SeparatedSet",
    "SpectralDecomposition",
    "SrwResult",
    "SubspaceRobustW2",
    "bound_set",
    "brute_coupling_grid",
    "cost_matrix",
    "covering_packing_bounds",
    "displacement_second_moment",
    "fit_rate_constant",
    "fmt17",
    "fournier_H",
    "fournier_kappa",
    "fournier_w2_upper",
    "greedy_separated_set",
    "isometric_embed",
    "mad_binomial",
    "monotone_coupling_1d",
    "pairwise_sq_dists",
    "parse_sampler_spec",
    "project_measure",
    "projection_residual_bound",
    "quantile_w2_1d",
    "random_orthogonal",
    "rate_curves",
    "rng_from_seed",
    "run_covariance_experiment",
    "run_decomposition_experiment",
    "run_lower_bound_experiment",
    "run_rate_experiment",
    "run_suite",
    "s1_distance",
    "sample_empirical",
    "separated_w1_lower_bound",
    "sinkhorn",
    "solve_exact_ot",
    "spectral_decomposition",
    "srw_distance",
    "t_star",
    "topk_eigensum",
    "uniform_measure",
    "wasserstein",
    "worst_case_measure",
]
