"""Monte Carlo harness: seeded ensembles and the statistical tests that
confront simulation with the exact laws and the limit-theorem predictions.

Reproducibility contract: replicate ``r`` of a run with master seed ``m``
always consumes the stream seeded by ``replicate_seed(m, r)``, so results
are bit-identical regardless of chunking or worker count, and every report
records the seeds, sizes and tolerances it was produced from.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import BsrdProcess, PoissonTrials, SwitchModel, exact_mean_sn, simulate_paths
from .errors import DegenerateRegimeError, DomainError, InsufficientDataError
from .limits import limit_constants, regime_report
from .patterns import (
    count_alternations,
    count_lapses,
    count_success_gaps,
    count_tails,
    expected_alternation_count,
    expected_lapse_count,
    expected_success_gaps,
    expected_tail_count,
)

__all__ = [
    "Ensemble",
    "TestReport",
    "replicate_seed",
    "run_ensemble",
    "simulate_switch_strings",
    "ks_test",
    "normal_cdf",
    "total_variation",
    "poisson_pmf",
    "test_lln",
    "test_clt",
    "verify_pattern_expectations",
    "poisson_limit_experiment",
]


def replicate_seed(master_seed: int, index: int) -> int:
    """Derived stream seed for one replicate: a pure hash-mix of the master
    seed and the replicate index."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class TestReport:
    """Outcome of one verification test.

    ``passed`` is decided from the recorded statistic(s) and threshold(s)
    alone; ``detail`` carries the auxiliary statistics of compound tests and
    ``provenance`` the seeds, sizes and tolerances needed to reproduce the
    report bit for bit.
    """

    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "passed": self.passed,
            "detail": self.detail,
            "provenance": self.provenance,
        }


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Replicated simulation of one process at a fixed horizon."""

    process: BsrdProcess
    n: int
    replicates: int
    seed: int
    terminal: np.ndarray                 # S_n per replicate
    sum_paths: np.ndarray | None         # (replicates, n) running sums, optional
    empirical_mean: float
    empirical_variance: float
    empirical_distribution: np.ndarray   # relative frequencies over 0..n

    def summary(self) -> dict:
        return {
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "empirical_mean": self.empirical_mean,
            "empirical_variance": self.empirical_variance,
        }


def _ensemble_chunk(args):
    proc, n, seeds, retain = args
    _, _, sums = simulate_paths(proc, n, seeds)
    return sums if retain else sums[:, -1]


def run_ensemble(
    proc: BsrdProcess,
    n: int,
    replicates: int,
    seed: int,
    retain_paths: bool = False,
    workers: int = 1,
    chunk_size: int | None = None,
) -> Ensemble:
    """Simulate ``replicates`` independent paths with per-replicate streams.

    The outcome depends only on ``(proc, n, replicates, seed)``; chunking
    and worker count affect scheduling, never the numbers.
    """
    if replicates < 1:
        raise DomainError(f"need at least one replicate, got {replicates}")
    seeds = [replicate_seed(seed, r) for r in range(replicates)]
    if chunk_size is None:
        chunk_size = max(1, min(replicates, 2**23 // max(1, n)))
    chunks = [seeds[i : i + chunk_size] for i in range(0, replicates, chunk_size)]
    jobs = [(proc, n, chunk, retain_paths) for chunk in chunks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(_ensemble_chunk, jobs))
    else:
        pieces = [_ensemble_chunk(job) for job in jobs]
    stacked = np.concatenate(pieces, axis=0)
    if retain_paths:
        sum_paths = stacked
        terminal = stacked[:, -1].copy()
    else:
        sum_paths = None
        terminal = stacked
    counts = np.bincount(terminal, minlength=n + 1).astype(float)
    return Ensemble(
        process=proc,
        n=n,
        replicates=replicates,
        seed=seed,
        terminal=terminal,
        sum_paths=sum_paths,
        empirical_mean=float(terminal.mean()),
        empirical_variance=float(terminal.var(ddof=1)) if replicates > 1 else 0.0,
        empirical_distribution=counts / replicates,
    )


def simulate_switch_strings(switch: SwitchModel, n: int, replicates: int, seed: int) -> np.ndarray:
    """(replicates, n) matrix of switch strings; row ``r`` consumes the
    stream of ``replicate_seed(seed, r)`` as ``n`` uniforms in index order."""
    rates = switch.rates(n)
    out = np.zeros((replicates, n), dtype=np.int8)
    for r in range(replicates):
        rng = np.random.default_rng(np.random.SeedSequence(replicate_seed(seed, r)))
        out[r] = rng.random(n) < rates
    return out


# ---------------------------------------------------------------------------
# Plain statistics


def normal_cdf(x: float) -> float:
    """Standard normal distribution function."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _kolmogorov_sf(x: float, rel_tol: float = 1e-10) -> float:
    """Limit tail probability ``2 sum_j (-1)^(j-1) exp(-2 j^2 x^2)``,
    truncated at relative error ``rel_tol``."""
    if x <= 0.0:
        return 1.0
    total = 0.0
    for j in range(1, 100_000):
        term = (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * x * x)
        total += term
        if abs(term) < rel_tol * max(abs(total), 1e-300):
            break
    return min(max(2.0 * total, 0.0), 1.0)


def ks_test(samples) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against the standard normal.

    Returns ``(D, p)`` with ``D = sup |F_hat - Phi|`` and the asymptotic
    p-value of ``sqrt(m) * D``.  Requires at least 50 samples.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    m = len(x)
    if m < 50:
        raise InsufficientDataError(f"need at least 50 samples, got {m}")
    cdf = np.array([normal_cdf(v) for v in x])
    upper = np.max(np.arange(1, m + 1) / m - cdf)
    lower = np.max(cdf - np.arange(0, m) / m)
    d = float(max(upper, lower))
    return d, _kolmogorov_sf(math.sqrt(m) * d)


def poisson_pmf(mu: float, k: int) -> float:
    if k < 0:
        return 0.0
    return math.exp(-mu + k * math.log(mu) - math.lgamma(k + 1)) if mu > 0 else float(k == 0)


def total_variation(pmf_a: np.ndarray, pmf_b: np.ndarray) -> float:
    """Half the L1 distance between two discrete distributions on 0..K."""
    a = np.zeros(max(len(pmf_a), len(pmf_b)))
    b = np.zeros_like(a)
    a[: len(pmf_a)] = pmf_a
    b[: len(pmf_b)] = pmf_b
    return 0.5 * float(np.abs(a - b).sum())


# ---------------------------------------------------------------------------
# Law-of-large-numbers and central-limit checks


def test_lln(ensemble: Ensemble, bound: float = 0.01) -> TestReport:
    """Largest normalized deviation ``max_r |S_n - E S_n| / n`` across the
    ensemble; passes when it stays under ``bound``."""
    proc = ensemble.process
    mean_n = float(exact_mean_sn(proc, ensemble.n)[-1])
    deviations = np.abs(ensemble.terminal - mean_n) / ensemble.n
    statistic = float(deviations.max())
    return TestReport(
        name="lln_max_deviation",
        statistic=statistic,
        threshold=bound,
        passed=statistic < bound,
        detail={"mean_deviation": float(deviations.mean()), "exact_mean": mean_n},
        provenance=_provenance(ensemble, bound=bound),
    )


def clt_statistics(ensemble: Ensemble) -> np.ndarray:
    """Normalized central-limit statistic of every replicate."""
    proc = ensemble.process
    constants = limit_constants(proc, ensemble.n)
    spread = float(constants.spread[-1])
    if spread <= 0.0:
        raise DegenerateRegimeError("spread is zero: no normalized statistic")
    mean_n = float(exact_mean_sn(proc, ensemble.n)[-1])
    return (ensemble.terminal - mean_n) / (float(constants.scale[-1]) * spread)


def test_clt(
    ensemble: Ensemble,
    ks_threshold: float = 0.001,
    mean_bound: float = 0.05,
    variance_band: tuple[float, float] = (0.9, 1.1),
    allow_degenerate: bool = False,
) -> TestReport:
    """Normality check of the normalized statistic: sample mean and variance
    bands plus the Kolmogorov-Smirnov p-value against the standard normal.

    The regime with ``beta_k * lambda_k == 1`` for every ``k`` keeps the
    spread bounded and the Gaussian limit is not expected, so the test
    refuses it unless ``allow_degenerate`` is set (negative controls).
    """
    report = regime_report(ensemble.process, ensemble.n)
    if report.degenerate and not allow_degenerate:
        raise DegenerateRegimeError(
            "refusing the central-limit check: " + report.flags[0]
        )
    stats = clt_statistics(ensemble)
    sample_mean = float(stats.mean())
    sample_var = float(stats.var(ddof=1))
    d, p_value = ks_test(stats)
    checks = {
        "ks_p_above_threshold": p_value > ks_threshold,
        "mean_within_bound": abs(sample_mean) < mean_bound,
        "variance_within_band": variance_band[0] <= sample_var <= variance_band[1],
    }
    return TestReport(
        name="clt_normality",
        statistic=p_value,
        threshold=ks_threshold,
        passed=all(checks.values()),
        detail={
            "ks_statistic": d,
            "sample_mean": sample_mean,
            "sample_variance": sample_var,
            "mean_bound": mean_bound,
            "variance_band": list(variance_band),
            "checks": checks,
            "degenerate_regime": report.degenerate,
        },
        provenance=_provenance(ensemble, ks_threshold=ks_threshold),
    )


# ---------------------------------------------------------------------------
# Pattern-statistics verification


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return mean, se


def verify_pattern_expectations(
    switch: SwitchModel,
    n: int,
    l: int,
    replicates: int,
    seed: int,
    se_multiple: float = 4.0,
) -> TestReport:
    """Empirical pattern means over simulated switch strings against the
    exact expectations; passes when every defined statistic lands within
    ``se_multiple`` empirical standard errors."""
    strings = simulate_switch_strings(switch, n, replicates, seed)
    comparisons: dict[str, dict] = {}

    def compare(name: str, counts: np.ndarray, expected: float) -> None:
        mean, se = _mean_se(counts)
        gap = abs(mean - expected)
        ok = gap <= se_multiple * se if se > 0 else gap == 0.0
        comparisons[name] = {
            "empirical": mean,
            "expected": expected,
            "standard_error": se,
            "ok": bool(ok),
        }

    compare("lapses",
            np.array([count_lapses(row, l) for row in strings]),
            expected_lapse_count(switch, n, l))
    if n >= 2 * l:
        compare("alternations",
                np.array([count_alternations(row, l) for row in strings]),
                expected_alternation_count(switch, n, l))
    if n > 2:
        compare("tails",
                np.array([count_tails(row) for row in strings]),
                expected_tail_count(switch, n))
    if n >= l + 1:
        compare("success_gaps",
                np.array([count_success_gaps(row, l) for row in strings]),
                expected_success_gaps(switch, l, n))

    worst = max(
        (abs(c["empirical"] - c["expected"]) / c["standard_error"]
         for c in comparisons.values() if c["standard_error"] > 0),
        default=0.0,
    )
    return TestReport(
        name="pattern_expectations",
        statistic=float(worst),
        threshold=se_multiple,
        passed=all(c["ok"] for c in comparisons.values()),
        detail={"comparisons": comparisons, "l": l},
        provenance={
            "switch": switch.to_spec(),
            "n": n,
            "replicates": replicates,
            "seed": seed,
            "se_multiple": se_multiple,
        },
    )


# ---------------------------------------------------------------------------
# Poisson limit of success gaps under the decaying switch family


def sample_decaying_switch_positions(truncation: int, rng: np.random.Generator) -> np.ndarray:
    """Indices with ``Y_i = 1`` under rates ``lambda_i = 1/i``, sampled by
    inverse transform on the gap law ``P(next > J | at i) = i / J`` (one
    uniform per success instead of one per index)."""
    positions = [1]
    i = 1
    while True:
        u = 1.0 - rng.random()  # in (0, 1]
        nxt = math.floor(i / u) + 1
        if nxt > truncation:
            return np.asarray(positions, dtype=np.int64)
        positions.append(nxt)
        i = nxt


def sample_success_gap_counts(
    l: int, truncation: int, replicates: int, seed: int
) -> np.ndarray:
    """Truncated success-gap counts for the a=1, b=0 decaying switch family,
    one per replicate."""
    out = np.zeros(replicates, dtype=np.int64)
    for r in range(replicates):
        rng = np.random.default_rng(np.random.SeedSequence(replicate_seed(seed, r)))
        positions = sample_decaying_switch_positions(truncation, rng)
        out[r] = int(np.count_nonzero(np.diff(positions) == l))
    return out


def poisson_limit_experiment(
    l: int,
    truncation: int,
    replicates: int,
    seed: int,
    tv_bound: float = 0.05,
    se_multiple: float = 3.0,
) -> TestReport:
    """Marginal Poisson check for the truncated success-gap count under the
    a=1, b=0 decaying switch: empirical mean against the exact partial sum
    and total-variation distance against the Poisson(1/l) limit."""
    if truncation < 10 * l:
        raise DomainError("truncation should dominate l (need truncation >= 10*l)")
    counts = sample_success_gap_counts(l, truncation, replicates, seed)
    expected = expected_success_gaps(PoissonTrials(a=1.0, b=0.0), l, truncation)
    mean, se = _mean_se(counts.astype(float))
    mean_ok = abs(mean - expected) <= se_multiple * se if se > 0 else mean == expected

    top = int(counts.max())
    empirical = np.bincount(counts, minlength=top + 1) / replicates
    poisson = np.array([poisson_pmf(1.0 / l, k) for k in range(top + 1)])
    tv = total_variation(empirical, poisson) + 0.5 * (1.0 - float(poisson.sum()))
    return TestReport(
        name="poisson_limit_marginal",
        statistic=float(tv),
        threshold=tv_bound,
        passed=bool(mean_ok and tv < tv_bound),
        detail={
            "empirical_mean": mean,
            "expected_partial_sum": expected,
            "analytic_limit": 1.0 / l,
            "standard_error": se,
            "mean_ok": bool(mean_ok),
            "tv_distance": float(tv),
        },
        provenance={
            "switch": {"kind": "poisson_trials", "a": 1.0, "b": 0.0},
            "l": l,
            "truncation": truncation,
            "replicates": replicates,
            "seed": seed,
            "tv_bound": tv_bound,
            "se_multiple": se_multiple,
        },
    )


def _provenance(ensemble: Ensemble, **tolerances) -> dict:
    return {
        "process": ensemble.process.to_spec(),
        "n": ensemble.n,
        "replicates": ensemble.replicates,
        "seed": ensemble.seed,
        "seed_derivation": "SeedSequence(master, spawn_key=(replicate,))",
        "tolerances": tolerances,
    }
