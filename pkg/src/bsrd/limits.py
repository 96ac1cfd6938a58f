"""Normalizing constants and limit-theorem statistics for the linear family.

For ``P*_i(s, y) = alpha_i + beta_i * s * y / i`` the centered sum admits a
martingale decomposition after dividing by the cumulative growth factors

    scale_1 = 1,   scale_n = prod_{k=1}^{n-1} (1 + beta_k * lambda_k / k).

Two cumulative spreads normalize the central limit statistic,

    spread_bound_n^2 = sum_{i<=n} 1 / scale_i^2
    spread_n^2       = sum_{i<=n} p_i (1 - p_i) / scale_i^2

with ``p_i = P(X_i = 1)`` from the exact mean recursion.  The law of large
numbers holds exactly when ``sum_k (1 - beta_k lambda_k) / (1 + k)``
diverges; its partial sums are the finite-horizon diagnostic reported here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BsrdProcess, Linear, PathSample, exact_mean_sn, marginal_success_probs
from .errors import (
    DegenerateVarianceError,
    DomainError,
    NumericIntegrityError,
    UnsupportedFamilyError,
)


@dataclass(frozen=True, eq=False)
class LimitConstants:
    """Per-index normalizers up to ``n`` (index ``i`` lives at position ``i-1``)."""

    n: int
    scale: np.ndarray          # cumulative growth factors, scale[0] == 1
    spread_bound: np.ndarray   # sqrt of cumulative 1/scale^2
    spread: np.ndarray         # sqrt of cumulative p(1-p)/scale^2
    slln_partial: np.ndarray   # partial sums of (1 - beta_k lambda_k)/(1 + k)
    ratio: np.ndarray          # spread_bound / spread (inf where spread == 0)

    def __post_init__(self):
        if self.scale[0] != 1.0:
            raise NumericIntegrityError("scale must start at 1")
        if (np.diff(self.scale) < 0).any():
            raise NumericIntegrityError("scale must be non-decreasing")
        cap = self.spread_bound**2 / 4
        if (self.spread**2 > cap * (1 + 1e-12) + 1e-15).any():
            raise NumericIntegrityError("spread^2 exceeded spread_bound^2 / 4")


def _require_linear(proc: BsrdProcess) -> Linear:
    if not isinstance(proc.dependence, Linear):
        raise UnsupportedFamilyError(
            "limit constants are defined for the linear family only, got "
            f"{proc.dependence.tag!r}"
        )
    return proc.dependence


def _growth_terms(proc: BsrdProcess, n: int) -> np.ndarray:
    """``beta_k * lambda_k`` for ``k = 1..n``."""
    model = _require_linear(proc)
    return model.betas(n) * proc.switch.rates(n)


def limit_constants(proc: BsrdProcess, n: int) -> LimitConstants:
    """All normalizers at horizons ``1..n`` in one O(n) pass."""
    if not 1 <= n <= proc.horizon:
        raise DomainError(f"need 1 <= n <= horizon = {proc.horizon}, got n = {n}")
    growth = _growth_terms(proc, n)
    k = np.arange(1, n + 1, dtype=float)
    # log-space keeps the cumulative product exact enough out to n ~ 1e6
    log_scale = np.concatenate(([0.0], np.cumsum(np.log1p(growth[:-1] / k[:-1]))))
    scale = np.exp(log_scale)
    inv_sq = np.exp(-2.0 * log_scale)
    p = marginal_success_probs(proc, n)
    spread_bound = np.sqrt(np.cumsum(inv_sq))
    spread = np.sqrt(np.cumsum(p * (1.0 - p) * inv_sq))
    slln_partial = np.cumsum((1.0 - growth) / (1.0 + k))
    with np.errstate(divide="ignore"):
        ratio = np.where(spread > 0, spread_bound / np.where(spread > 0, spread, 1.0), np.inf)
    return LimitConstants(
        n=n,
        scale=scale,
        spread_bound=spread_bound,
        spread=spread,
        slln_partial=slln_partial,
        ratio=ratio,
    )


def slln_partial_sum(proc: BsrdProcess, n: int) -> float:
    """``sum_{k=1}^{n} (1 - beta_k * lambda_k) / (1 + k)``; divergence of the
    full series is equivalent to the strong law for the centered mean."""
    growth = _growth_terms(proc, n)
    k = np.arange(1, n + 1, dtype=float)
    return float(math.fsum((1.0 - growth) / (1.0 + k)))


def clt_statistic(proc: BsrdProcess, s_n: float, n: int) -> float:
    """``(s_n - E S_n) / (scale_n * spread_n)``: the normalized central
    limit statistic at horizon ``n``."""
    constants = limit_constants(proc, n)
    spread_n = constants.spread[-1]
    if spread_n <= 0.0:
        raise DegenerateVarianceError(
            "spread is zero: every trial is deterministic, no Gaussian limit"
        )
    mean_n = exact_mean_sn(proc, n)[-1]
    return (s_n - mean_n) / (constants.scale[-1] * spread_n)


def lil_statistic(proc: BsrdProcess, s_n: float, n: int) -> float:
    """``(s_n - E S_n) / (scale_n * spread_n * sqrt(log log spread_n))``:
    the iterated-logarithm normalization.  Requires ``spread_n > e`` so the
    double logarithm is positive."""
    constants = limit_constants(proc, n)
    spread_n = float(constants.spread[-1])
    if spread_n <= math.e:
        raise DomainError(
            f"spread = {spread_n!r} <= e at n = {n}; the iterated-logarithm "
            "normalizer needs a larger horizon"
        )
    mean_n = exact_mean_sn(proc, n)[-1]
    denom = constants.scale[-1] * spread_n * math.sqrt(math.log(math.log(spread_n)))
    return (s_n - mean_n) / denom


@dataclass(frozen=True, eq=False)
class MartingaleTrace:
    """Scaled centered sums ``values_i = (S_i - E S_i) / scale_i`` with their
    increments and the per-index increment bound ``2 / scale_i``."""

    values: np.ndarray
    increments: np.ndarray
    increment_bound: np.ndarray


def martingale_trace(proc: BsrdProcess, path: PathSample) -> MartingaleTrace:
    """Martingale decomposition of one simulated path.

    The increments satisfy ``|D_i| <= 2 / scale_i`` path by path; a violation
    indicates an inconsistent mean or scale and raises.
    """
    n = len(path)
    constants = limit_constants(proc, n)
    means = exact_mean_sn(proc, n)
    values = (path.partial_sums - means) / constants.scale
    increments = np.diff(values, prepend=0.0)
    bound = 2.0 / constants.scale
    if (np.abs(increments) > bound).any():
        i = int(np.argmax(np.abs(increments) - bound))
        raise NumericIntegrityError(
            f"martingale increment bound violated at i = {i + 1}: "
            f"|D| = {abs(increments[i])!r} > {bound[i]!r}"
        )
    return MartingaleTrace(values=values, increments=increments, increment_bound=bound)


@dataclass(frozen=True, eq=False)
class RegimeReport:
    """Finite-horizon diagnostics for the limit-theorem hypotheses."""

    n: int
    constants: LimitConstants
    growth_constant: float | None  # beta*lambda when constant across k, else None
    slln_condition: str            # "holds" | "fails" | "undetermined"
    degenerate: bool               # beta_k * lambda_k == 1 for every k
    flags: tuple[str, ...]


def regime_report(proc: BsrdProcess, n: int) -> RegimeReport:
    """Classify the process regime as far as finite data allows.

    Constant ``beta*lambda < 1`` settles the strong-law condition
    analytically; ``beta*lambda == 1`` makes the scale grow like ``n`` and
    keeps the spread bounded, so the Gaussian hypotheses fail.  Non-constant
    products are reported as undetermined with their partial-sum trajectory.
    """
    growth = _growth_terms(proc, n)
    constants = limit_constants(proc, n)
    constant = float(growth[0]) if np.ptp(growth) == 0.0 else None
    degenerate = bool((growth == 1.0).all())
    if constant is None:
        condition = "undetermined"
    else:
        condition = "holds" if constant < 1.0 else "fails"
    flags = []
    if degenerate:
        flags.append("CLT hypotheses not satisfied at horizon: spread stays bounded "
                     "because beta_k * lambda_k = 1 for every k")
    if constants.spread[-1] <= math.e:
        flags.append("spread <= e at horizon: iterated-logarithm normalizer undefined")
    return RegimeReport(
        n=n,
        constants=constants,
        growth_constant=constant,
        slln_condition=condition,
        degenerate=degenerate,
        flags=tuple(flags),
    )
