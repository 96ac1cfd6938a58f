"""Pattern statistics of the switch string and quota waiting times.

A maximal run of zeros in the switch string is a memory lapse: a stretch of
trials that ignore the past.  This module counts lapses of a given length,
alternating one-zero periods, terminations of success runs, and pairs of
successes at a fixed distance; computes their exact expectations under any
switch family (closed forms where they exist, product sums otherwise); and
provides the waiting-time laws for failure quotas: the trial count until a
fixed number of zeros (negative binomial) and until the first run of ``s``
consecutive zeros (recovered by power-series inversion of its generating
function, cross-checkable against a run-length Markov chain).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import IidSwitch, PoissonTrials, SwitchModel
from .errors import DomainError, NumericIntegrityError

_CLAMP_TOL = 1e-12


def as_bits(bits) -> np.ndarray:
    """Coerce a 0/1 sequence (or a '0'/'1' string) to an integer array."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    arr = np.asarray(bits, dtype=np.int64)
    if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
        raise DomainError("bit string must be a one-dimensional 0/1 sequence")
    return arr


# ---------------------------------------------------------------------------
# Counting kernels (literal indicator sums over one string)


def count_lapses(bits, l: int) -> int:
    """Number of maximal zero runs of length exactly ``l``.

    Evaluated literally as the indicator sum: interior terms are
    1-zeros(l)-1 windows, plus one boundary term for a run flush with each
    end of the string.  ``l == n`` degenerates to the all-zeros indicator.
    """
    y = as_bits(bits)
    n = len(y)
    if not 1 <= l <= n:
        raise DomainError(f"need 1 <= l <= n = {n}, got l = {l}")
    if l == n:
        return int((y == 0).all())
    zeros_upto = np.concatenate(([0], np.cumsum(y == 0)))

    def all_zero(a: int, b: int) -> np.ndarray:
        return zeros_upto[b] - zeros_upto[a] == b - a

    total = 0
    if n - l - 1 >= 1:
        k = np.arange(0, n - l - 1)  # leading one at position k (0-indexed)
        total += int(np.sum((y[k] == 1) & all_zero(k + 1, k + 1 + l) & (y[k + l + 1] == 1)))
    total += int(all_zero(0, l) and y[l] == 1)
    total += int(y[n - l - 1] == 1 and all_zero(n - l, n))
    return total


def extract_lapses(bits) -> list[tuple[int, int]]:
    """All maximal zero runs as ``(start, length)`` pairs, 1-indexed."""
    y = as_bits(bits)
    runs: list[tuple[int, int]] = []
    start = None
    for idx, v in enumerate(y):
        if v == 0 and start is None:
            start = idx
        elif v == 1 and start is not None:
            runs.append((start + 1, idx - start))
            start = None
    if start is not None:
        runs.append((start + 1, len(y) - start))
    return runs


def count_alternations(bits, l: int) -> int:
    """Occurrences of the pattern ``10`` repeated ``l`` times, overlaps allowed."""
    y = as_bits(bits)
    n = len(y)
    if l < 1:
        raise DomainError(f"need l >= 1, got l = {l}")
    if n < 2 * l:
        raise DomainError(f"need n >= 2l, got n = {n}, l = {l}")
    pair = (y[:-1] == 1) & (y[1:] == 0)
    starts = np.arange(n - 2 * l + 1)
    ok = np.ones(len(starts), dtype=bool)
    for t in range(l):
        ok &= pair[starts + 2 * t]
    return int(ok.sum())


def count_tails(bits) -> int:
    """Occurrences of ``110``: a success run of length >= 2 ending."""
    y = as_bits(bits)
    n = len(y)
    if n <= 2:
        raise DomainError(f"need n > 2, got n = {n}")
    return int(np.sum((y[:-2] == 1) & (y[1:-1] == 1) & (y[2:] == 0)))


def count_success_gaps(bits, l: int) -> int:
    """Positions with a one, a one ``l`` later, and zeros strictly between."""
    y = as_bits(bits)
    n = len(y)
    if l < 1:
        raise DomainError(f"need l >= 1, got l = {l}")
    if n < l + 1:
        raise DomainError(f"need n >= l + 1, got n = {n}, l = {l}")
    zeros_upto = np.concatenate(([0], np.cumsum(y == 0)))
    k = np.arange(0, n - l)
    between = zeros_upto[k + l] - zeros_upto[k + 1] == l - 1
    return int(np.sum((y[k] == 1) & between & (y[k + l] == 1)))


@dataclass(frozen=True, eq=False)
class PatternCounts:
    """All pattern statistics of one switch string up to a maximum length."""

    n: int
    lapse_counts: dict[int, int]
    alternation_counts: dict[int, int]
    tail_count: int | None
    gap_counts: dict[int, int]
    lapse_intervals: list[tuple[int, int]]


def pattern_summary(bits, max_l: int | None = None) -> PatternCounts:
    """Counts of every pattern statistic for ``l = 1..max_l`` where defined."""
    y = as_bits(bits)
    n = len(y)
    top = n if max_l is None else min(max_l, n)
    return PatternCounts(
        n=n,
        lapse_counts={l: count_lapses(y, l) for l in range(1, top + 1)},
        alternation_counts={l: count_alternations(y, l)
                            for l in range(1, top + 1) if n >= 2 * l},
        tail_count=count_tails(y) if n > 2 else None,
        gap_counts={l: count_success_gaps(y, l)
                    for l in range(1, top + 1) if n >= l + 1},
        lapse_intervals=extract_lapses(y),
    )


# ---------------------------------------------------------------------------
# Exact expectations under an arbitrary switch family


def _window_products(factors: np.ndarray, width: int) -> np.ndarray:
    """Products over every sliding window of ``width`` consecutive factors.

    Zero factors are handled exactly (a window containing one is zero), the
    rest goes through cumulative logs.
    """
    if width < 1:
        raise DomainError(f"window width must be >= 1, got {width}")
    m = len(factors) - width + 1
    if m <= 0:
        return np.empty(0)
    is_zero = factors == 0.0
    safe = np.where(is_zero, 1.0, factors)
    log_cum = np.concatenate(([0.0], np.cumsum(np.log(safe))))
    zero_cum = np.concatenate(([0], np.cumsum(is_zero)))
    j = np.arange(m)
    prod = np.exp(log_cum[j + width] - log_cum[j])
    prod[zero_cum[j + width] - zero_cum[j] > 0] = 0.0
    return prod


def lapse_product_sum(rates: np.ndarray, l: int) -> float:
    """Expectation of the lapse-count indicator sum from raw switch rates."""
    lam = np.asarray(rates, dtype=float)
    n = len(lam)
    if not 1 <= l <= n:
        raise DomainError(f"need 1 <= l <= n = {n}, got l = {l}")
    comp = 1.0 - lam
    if l == n:
        return float(np.prod(comp))
    zero_windows = _window_products(comp, l)  # product over comp[j .. j+l-1]
    terms = []
    if n - l - 1 >= 1:
        k = np.arange(0, n - l - 1)
        terms.append(float(np.sum(lam[k] * zero_windows[k + 1] * lam[k + l + 1])))
    terms.append(float(zero_windows[0] * lam[l]))
    terms.append(float(lam[n - l - 1] * zero_windows[n - l]))
    return float(math.fsum(terms))


def alternation_product_sum(rates: np.ndarray, l: int) -> float:
    """Expectation of the alternation indicator sum from raw switch rates."""
    lam = np.asarray(rates, dtype=float)
    n = len(lam)
    if l < 1 or n < 2 * l:
        raise DomainError(f"need n >= 2l >= 2, got n = {n}, l = {l}")
    starts = np.arange(n - 2 * l + 1)
    prod = np.ones(len(starts))
    for t in range(l):
        prod *= lam[starts + 2 * t] * (1.0 - lam[starts + 2 * t + 1])
    return float(math.fsum(prod))


def tail_product_sum(rates: np.ndarray) -> float:
    """Expectation of the run-termination indicator sum from raw rates."""
    lam = np.asarray(rates, dtype=float)
    n = len(lam)
    if n <= 2:
        raise DomainError(f"need n > 2, got n = {n}")
    return float(math.fsum(lam[:-2] * lam[1:-1] * (1.0 - lam[2:])))


def gap_product_sum(rates: np.ndarray, l: int) -> float:
    """Expectation of the success-gap indicator sum from raw rates."""
    lam = np.asarray(rates, dtype=float)
    n = len(lam)
    if l < 1 or n < l + 1:
        raise DomainError(f"need n >= l + 1 >= 2, got n = {n}, l = {l}")
    k = np.arange(0, n - l)
    if l == 1:
        between = np.ones(len(k))
    else:
        between = _window_products(1.0 - lam, l - 1)[k + 1]
    return float(math.fsum(lam[k] * between * lam[k + l]))


def expected_lapse_count(switch: SwitchModel, n: int, l: int) -> float:
    """Exact expected number of length-``l`` lapses among ``n`` switches.

    Constant rate ``lam`` gives ``(1-lam)^l (2 lam + lam^2 (n-l-1))`` for
    ``n > l``; decaying rates ``1/(b+i)`` telescope to the horizon-free value
    ``(2b+l) / ((b+l)(b+l+1))``; anything else is evaluated as the plain
    product sum.  ``l == n`` is the all-zeros probability.
    """
    if not 1 <= l <= n:
        raise DomainError(f"need 1 <= l <= n = {n}, got l = {l}")
    if isinstance(switch, IidSwitch):
        lam = float(switch.rate)
        if l == n:
            return (1.0 - lam) ** n
        return (1.0 - lam) ** l * (2.0 * lam + lam * lam * (n - l - 1))
    if isinstance(switch, PoissonTrials) and switch.a == 1.0 and l < n:
        b = float(switch.b)
        return (2.0 * b + l) / ((b + l) * (b + l + 1.0))
    return lapse_product_sum(switch.rates(n), l)


def expected_alternation_count(switch: SwitchModel, n: int, l: int) -> float:
    """Exact expected number of length-``2l`` alternating periods.

    The constant-rate indicator sum has ``n - 2l + 1`` terms, hence
    ``(n-2l+1) (lam (1-lam))^l``; decaying rates ``1/(b+i)`` collapse each
    term to a product of ``l`` reciprocals.
    """
    if l < 1 or n < 2 * l:
        raise DomainError(f"need n >= 2l >= 2, got n = {n}, l = {l}")
    if isinstance(switch, IidSwitch):
        lam = float(switch.rate)
        return (n - 2 * l + 1) * (lam * (1.0 - lam)) ** l
    if isinstance(switch, PoissonTrials) and switch.a == 1.0:
        b = float(switch.b)
        k = np.arange(1, n - 2 * l + 2, dtype=float)
        prod = np.ones(len(k))
        for i in range(1, l + 1):
            prod /= k + b + 2 * i - 1
        return float(math.fsum(prod))
    return alternation_product_sum(switch.rates(n), l)


def expected_tail_count(switch: SwitchModel, n: int) -> float:
    """Exact expected number of ``110`` windows among ``n`` switches."""
    if n <= 2:
        raise DomainError(f"need n > 2, got n = {n}")
    if isinstance(switch, IidSwitch):
        lam = float(switch.rate)
        return (n - 2) * lam * lam * (1.0 - lam)
    if isinstance(switch, PoissonTrials) and switch.a == 1.0:
        b = float(switch.b)
        head = (3.0 + 2.0 * b) / ((1.0 + b) * (2.0 + b))
        tail = (2.0 * n + 2.0 * b - 1.0) / ((n + b - 1.0) * (n + b))
        return 0.5 * (head - tail)
    return tail_product_sum(switch.rates(n))


def expected_success_gaps(switch: SwitchModel, l: int, truncation: int) -> float:
    """Truncated expectation of the success-gap count: the partial sum of
    ``lam_k * prod(1 - lam_{k+1..k+l-1}) * lam_{k+l}`` for ``k <= K - l``."""
    if l < 1 or truncation < l + 1:
        raise DomainError(f"need truncation >= l + 1 >= 2, got K = {truncation}, l = {l}")
    return gap_product_sum(switch.rates(truncation), l)


def success_gap_limit(switch: SwitchModel, l: int) -> float | None:
    """Analytic infinite-horizon limit of the expected success-gap count,
    known in closed form (``1/l``) for the decaying family with a = 1, b = 0."""
    if l < 1:
        raise DomainError(f"need l >= 1, got l = {l}")
    if isinstance(switch, PoissonTrials) and switch.a == 1.0 and switch.b == 0.0:
        return 1.0 / l
    return None


# ---------------------------------------------------------------------------
# Quota waiting times


@dataclass(frozen=True, eq=False)
class WaitingTimeDist:
    """Waiting-time law up to a horizon: ``pmf[k] = P(W = k)``.

    ``kind`` is ``"fq"`` (trials until a fixed count of zeros) or ``"sq"``
    (trials until the first run of ``quota`` zeros).  ``mean`` carries the
    closed-form expectation, ``math.inf`` when the quota is never reached.
    ``denom_coeffs`` holds the generating-function denominator for the
    series-inverted succession law.
    """

    kind: str
    quota: int
    rate: float
    pmf: np.ndarray
    mean: float
    denom_coeffs: np.ndarray | None = None
    note: str | None = None

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if (pmf < -_CLAMP_TOL).any() or (pmf > 1.0 + _CLAMP_TOL).any():
            raise NumericIntegrityError("waiting-time pmf entries leave [0, 1]")
        if (pmf[: self.quota] != 0.0).any():
            raise NumericIntegrityError(
                f"pmf support must start at the quota {self.quota}"
            )
        partial = np.cumsum(pmf)
        if (partial > 1.0 + 1e-9).any():
            raise NumericIntegrityError("waiting-time pmf partial sums exceed 1")

    @property
    def horizon(self) -> int:
        return len(self.pmf) - 1

    def total_mass(self) -> float:
        return float(math.fsum(self.pmf))


def fq_waiting_pmf(r: int, lam: float, k: int) -> float:
    """``P(W = k)`` for the waiting time until ``r`` zeros: negative binomial
    ``C(k-1, r-1) (1-lam)^r lam^(k-r)``; zero below the support."""
    if r < 1:
        raise DomainError(f"need r >= 1, got r = {r}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"need lambda in [0, 1], got {lam}")
    if k < r:
        return 0.0
    if lam == 1.0:
        return 0.0
    if lam == 0.0:
        return 1.0 if k == r else 0.0
    q = 1.0 - lam
    log_term = (
        math.lgamma(k) - math.lgamma(r) - math.lgamma(k - r + 1)
        + r * math.log(q) + (k - r) * math.log(lam)
    )
    return math.exp(log_term)


def fq_waiting_dist(r: int, lam: float, horizon: int | None = None) -> WaitingTimeDist:
    """Full failure-quota law; the horizon adapts until the tail mass drops
    below 1e-10 when not given."""
    if r < 1:
        raise DomainError(f"need r >= 1, got r = {r}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"need lambda in [0, 1], got {lam}")
    if lam == 1.0:
        k = horizon if horizon is not None else r
        return WaitingTimeDist("fq", r, lam, np.zeros(k + 1), math.inf,
                               note="never occurs: zeros have probability 0")
    if lam == 0.0:
        k = horizon if horizon is not None else r
        pmf = np.zeros(k + 1)
        if r <= k:
            pmf[r] = 1.0
        return WaitingTimeDist("fq", r, lam, pmf, float(r),
                               note="deterministic: every switch is a zero")

    q = 1.0 - lam
    mean = r / q
    if horizon is not None and horizon < r:
        return WaitingTimeDist("fq", r, lam, np.zeros(horizon + 1), mean)
    sd = math.sqrt(r * lam) / q
    terms = [fq_waiting_pmf(r, lam, r)]
    target = horizon if horizon is not None else max(r, int(mean + 10 * sd) + 1)
    mass = terms[0]
    k = r
    while True:
        while k < target:
            terms.append(terms[-1] * lam * k / (k - r + 1))
            mass += terms[-1]
            k += 1
        if horizon is not None or 1.0 - mass < 1e-10:
            break
        target *= 2
    pmf = np.zeros(k + 1)
    pmf[r:] = terms
    return WaitingTimeDist("fq", r, lam, pmf, mean)


def proportion_probability(n: int, delta: float, lam: float) -> float:
    """``P(Z <= floor(n * delta))`` for ``Z ~ Binomial(n, lam)``: the chance
    the zero proportion stays within the critical fraction ``delta``."""
    if n < 0:
        raise DomainError(f"need n >= 0, got n = {n}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"need delta in (0, 1), got {delta}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"need lambda in [0, 1], got {lam}")
    cut = min(math.floor(n * delta), n)
    if lam == 0.0:
        return 1.0
    if lam == 1.0:
        return 1.0 if cut >= n else 0.0
    log_lam, log_comp = math.log(lam), math.log(1.0 - lam)
    terms = [
        math.exp(
            math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)
            + j * log_lam + (n - j) * log_comp
        )
        for j in range(cut + 1)
    ]
    return min(math.fsum(terms), 1.0)


def _sq_check(s: int, lam: float) -> None:
    if s < 1:
        raise DomainError(f"need s >= 1, got s = {s}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"need lambda in [0, 1], got {lam}")


def sq_pgf_eval(s: int, lam: float, t: float) -> float:
    """Generating function of the first run of ``s`` zeros, evaluated at
    ``t``: ``(1-qt)(qt)^s / ((1-lam t)(1-qt) - lam q t^2 (1-(qt)^(s-1)))``."""
    _sq_check(s, lam)
    if not 0.0 < lam < 1.0:
        raise DomainError(f"need lambda in (0, 1) for the generating function, got {lam}")
    if abs(t) > 1.0:
        raise DomainError(f"need |t| <= 1, got t = {t}")
    q = 1.0 - lam
    qt = q * t
    numerator = (1.0 - qt) * qt**s
    denominator = (1.0 - lam * t) * (1.0 - qt) - lam * q * t * t * (1.0 - qt ** (s - 1))
    if abs(denominator) < 1e-14:
        raise NumericIntegrityError(
            f"generating-function denominator vanishes at t = {t!r}"
        )
    return numerator / denominator


def _sq_recurrence_coeffs(s: int, lam: float):
    """Series-inversion pieces: boundary source terms and the denominator
    polynomial ``1 - t + lam q^s t^(s+1)``."""
    q = 1.0 - lam
    qs = q**s
    denom = np.zeros(s + 2)
    denom[0] = 1.0
    denom[1] = -1.0
    denom[s + 1] = lam * qs
    return qs, denom


def sq_waiting_pmf(s: int, lam: float, horizon: int) -> WaitingTimeDist:
    """Succession-quota law by power-series inversion.

    The generating function equals ``(q^s t^s - q^(s+1) t^(s+1)) / D(t)``
    with ``D(t) = 1 - t + lam q^s t^(s+1)``, so the coefficients obey
    ``c_k = c_{k-1} - lam q^s c_{k-s-1}`` plus the two boundary sources.
    Coefficients are clamped into [0, 1] within 1e-12; larger excursions
    raise an inversion-integrity error.
    """
    _sq_check(s, lam)
    if horizon < s:
        raise DomainError(f"need horizon >= s = {s}, got {horizon}")
    if lam == 0.0:
        pmf = np.zeros(horizon + 1)
        pmf[s] = 1.0
        return WaitingTimeDist("sq", s, lam, pmf, float(s),
                               note="deterministic: every switch is a zero")
    if lam == 1.0:
        return WaitingTimeDist("sq", s, lam, np.zeros(horizon + 1), math.inf,
                               note="never occurs: zeros have probability 0")
    q = 1.0 - lam
    qs, denom = _sq_recurrence_coeffs(s, lam)
    coeffs = np.zeros(horizon + 1)
    for k in range(s, horizon + 1):
        value = coeffs[k - 1]
        if k - s - 1 >= 0:
            value -= lam * qs * coeffs[k - s - 1]
        if k == s:
            value += qs
        elif k == s + 1:
            value -= q * qs
        if not -_CLAMP_TOL <= value <= 1.0 + _CLAMP_TOL:
            raise NumericIntegrityError(
                f"series inversion produced coefficient {value!r} at k = {k}"
            )
        coeffs[k] = min(max(value, 0.0), 1.0)
    mean = (1.0 - qs) / (lam * qs)
    return WaitingTimeDist("sq", s, lam, coeffs, mean, denom_coeffs=denom)


def sq_waiting_pmf_chain(s: int, lam: float, horizon: int) -> np.ndarray:
    """Independent oracle for the succession-quota law: forward iteration of
    the run-length chain (states 0..s-1, absorb when the run reaches s)."""
    _sq_check(s, lam)
    if horizon < s:
        raise DomainError(f"need horizon >= s = {s}, got {horizon}")
    q = 1.0 - lam
    state = np.zeros(s)
    state[0] = 1.0
    pmf = np.zeros(horizon + 1)
    for k in range(1, horizon + 1):
        absorbed = state[s - 1] * q
        nxt = np.zeros(s)
        nxt[1:] = state[:-1] * q
        nxt[0] = state.sum() * lam
        pmf[k] = absorbed
        state = nxt
    return pmf


def sq_mean_via_series(s: int, lam: float, tol: float = 1e-7) -> float:
    """Mean of the succession-quota law from its series coefficients.

    The partial mean is extended until the rigorous geometric tail bound
    ``(1 - mass) * (k + s / q^s)`` falls below ``tol``: any ``s`` consecutive
    switches are all zero with probability ``q^s``, so survival decays at
    least geometrically in blocks of ``s``.
    """
    _sq_check(s, lam)
    if lam == 0.0:
        return float(s)
    if lam == 1.0:
        return math.inf
    q = 1.0 - lam
    qs = q**s
    tail_factor = s / qs
    ring = [0.0] * (s + 1)  # ring[k % (s+1)] == c_{k}; holds the last s+1 values
    mass = 0.0
    mean = 0.0
    k = s
    max_steps = 50_000_000
    while True:
        value = ring[(k - 1) % (s + 1)] if k > s else 0.0
        value -= lam * qs * ring[k % (s + 1)]  # slot currently holds c_{k-s-1}
        if k == s:
            value += qs
        elif k == s + 1:
            value -= q * qs
        value = min(max(value, 0.0), 1.0)
        ring[k % (s + 1)] = value
        mass += value
        mean += k * value
        if (1.0 - mass) * (k + tail_factor) < tol:
            return mean
        k += 1
        if k > max_steps:
            raise NumericIntegrityError(
                f"succession-quota mean did not converge within {max_steps} terms"
            )
