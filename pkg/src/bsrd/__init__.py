"""Bernoulli sequences with a randomly switched memory.

Exact and simulated laws of the partial-sum process, the limit-theorem
normalizers for the linear family, memory-lapse and pattern statistics of
the switch string, quota waiting times, and a seeded Monte Carlo
verification harness.
"""

__version__ = "0.1.0"

from .core import (
    BetaBinomial,
    BsrdProcess,
    Contagious,
    CorrelatedRandomWalk,
    CustomTable,
    DependenceModel,
    ExplicitRates,
    GeneralizedBinomial,
    IidSwitch,
    IncrementalRisk,
    Linear,
    PathSample,
    PoissonTrials,
    SnDistribution,
    SwitchModel,
    conditional_success_prob,
    dependence_prob,
    exact_mean_sn,
    exact_mean_sn_via_dp,
    exact_sn_distribution,
    marginal_success_prob,
    marginal_success_probs,
    mixture_success_prob,
    simulate_path,
    simulate_paths,
    switch_prob,
    walk_position,
)
from .errors import (
    BsrdError,
    DegenerateRegimeError,
    DegenerateVarianceError,
    DomainError,
    InsufficientDataError,
    MissingParameterError,
    NumericIntegrityError,
    ParameterError,
    UnsupportedFamilyError,
)
from .limits import (
    LimitConstants,
    MartingaleTrace,
    RegimeReport,
    clt_statistic,
    lil_statistic,
    limit_constants,
    martingale_trace,
    regime_report,
    slln_partial_sum,
)
from .patterns import (
    PatternCounts,
    WaitingTimeDist,
    count_alternations,
    count_lapses,
    count_success_gaps,
    count_tails,
    expected_alternation_count,
    expected_lapse_count,
    expected_success_gaps,
    expected_tail_count,
    extract_lapses,
    fq_waiting_dist,
    fq_waiting_pmf,
    pattern_summary,
    proportion_probability,
    sq_mean_via_series,
    sq_pgf_eval,
    sq_waiting_pmf,
    sq_waiting_pmf_chain,
    success_gap_limit,
)
from .verify import (
    Ensemble,
    TestReport,
    ks_test,
    poisson_limit_experiment,
    replicate_seed,
    run_ensemble,
    test_clt,
    test_lln,
    total_variation,
    verify_pattern_expectations,
)
