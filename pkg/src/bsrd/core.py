"""Bernoulli trials whose dependence on the running success count is
switched on and off by an auxiliary independent Bernoulli sequence.

Trials ``X_1, X_2, ...`` accumulate successes ``S_i = X_1 + ... + X_i``.
A switch sequence ``Y_1, Y_2, ...`` with ``P(Y_i = 1) = lambda_i`` is drawn
independently of the trials; given ``S_i = s`` and ``Y_i = y`` the success
probability of ``X_{i+1}`` is ``P_i(s)`` when ``y = 1`` and ``P_i(0)`` when
``y = 0``.  Averaging over the switch gives the mixture law

    P(X_{i+1} = 1 | S_i = s) = (1 - lambda_i) * P_i(0) + lambda_i * P_i(s)

which reduces to independent trials when ``lambda_i = 0`` and to the fully
dependent model when ``lambda_i = 1``.

This module holds the catalogue of conditional-probability families
``P_i(s)``, the switch-rate families ``lambda_i``, seeded path simulation,
and the exact law of ``S_n`` computed by forward dynamic programming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DomainError,
    MissingParameterError,
    NumericIntegrityError,
    ParameterError,
)

# Tolerance for "probability is inside [0,1]" checks; pure float noise only.
_PROB_TOL = 1e-12

# Raw normalization drift allowed in the dynamic program before the result
# is declared numerically unsound.
_DP_DRIFT_TOL = 1e-10


def _maybe_scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_prob(value: float, what: str) -> float:
    if not (0.0 - _PROB_TOL <= value <= 1.0 + _PROB_TOL) or math.isnan(value):
        raise ParameterError(f"{what} = {value!r} is outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def _as_rate_tuple(value, name: str) -> tuple[float, ...]:
    seq = tuple(float(v) for v in value)
    if not seq:
        raise ParameterError(f"{name} sequence must be non-empty")
    return seq


# ---------------------------------------------------------------------------
# Dependence families: the conditional success law P_i(s)


class DependenceModel:
    """Conditional success law ``P_i(s)`` given ``s`` successes in ``i`` trials.

    Subclasses implement the law for ``i >= 1``; the first trial (``i = 0``)
    uses :meth:`initial_prob`.  ``prob`` accepts an integer or an integer
    array for ``s`` and must be monotone in ``s`` so that range validation
    over a horizon only needs the endpoints ``s = 0`` and ``s = i``.
    """

    tag: str = "base"

    def initial_prob(self) -> float:
        """P(X_1 = 1)."""
        raise NotImplementedError

    def prob(self, i: int, s):
        """``P_i(s)`` for ``i >= 1``, unvalidated; ``s`` may be an array."""
        raise NotImplementedError

    def validate(self, horizon: int) -> None:
        """Raise :class:`ParameterError` if the model can produce a value
        outside [0, 1] anywhere on ``{(i, s): 0 <= s <= i < horizon}``."""
        self._range_sweep(horizon)

    def to_spec(self) -> dict:
        """JSON-ready description of the model."""
        raise NotImplementedError

    # -- helpers

    def _range_sweep(self, horizon: int) -> None:
        p0 = self.initial_prob()
        if not 0.0 <= p0 <= 1.0:
            raise ParameterError(
                f"{self.tag}: initial probability P_0 = {p0!r} outside [0, 1]"
            )
        for i in range(1, horizon):
            for s in (0, i):
                v = float(self.prob(i, s))
                if not 0.0 <= v <= 1.0 or math.isnan(v):
                    raise ParameterError(
                        f"{self.tag}: P_{i}({s}) = {v!r} outside [0, 1]"
                    )


@dataclass(frozen=True)
class Contagious(DependenceModel):
    """``P_i(s) = p + beta * s``: each earlier success shifts the rate by beta."""

    p: float
    beta: float

    tag = "contagious"

    def initial_prob(self) -> float:
        return float(self.p)

    def prob(self, i: int, s):
        return _maybe_scalar(self.p + self.beta * np.asarray(s, dtype=float))

    def validate(self, horizon: int) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"contagious: p = {self.p!r} outside [0, 1]")
        if self.beta > 0 and not self.beta < (1.0 - self.p) / horizon:
            raise ParameterError(
                f"contagious: beta = {self.beta!r} violates beta < (1-p)/n "
                f"at horizon n = {horizon}"
            )
        if self.beta < 0 and not abs(self.beta) < self.p / horizon:
            raise ParameterError(
                f"contagious: beta = {self.beta!r} violates |beta| < p/n "
                f"at horizon n = {horizon}"
            )
        self._range_sweep(horizon)

    def to_spec(self) -> dict:
        return {"family": self.tag, "p": self.p, "beta": self.beta}


@dataclass(frozen=True)
class GeneralizedBinomial(DependenceModel):
    """``P_i(s) = (1 - theta) * p + theta * s / i``: rate pulled toward the
    running success fraction with weight theta."""

    p: float
    theta: float

    tag = "generalized_binomial"

    def initial_prob(self) -> float:
        return float(self.p)

    def prob(self, i: int, s):
        return _maybe_scalar(
            (1.0 - self.theta) * self.p + self.theta * np.asarray(s, dtype=float) / i
        )

    def validate(self, horizon: int) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"generalized_binomial: p = {self.p!r} outside [0, 1]")
        if not self.theta <= 1.0:
            raise ParameterError(
                f"generalized_binomial: theta = {self.theta!r} violates theta <= 1"
            )
        self._range_sweep(horizon)

    def to_spec(self) -> dict:
        return {"family": self.tag, "p": self.p, "theta": self.theta}


@dataclass(frozen=True)
class BetaBinomial(DependenceModel):
    """``P_i(s) = (p + a*s) / (1 + a*i)``: reinforced-urn (Polya) update with
    pseudo-count scale ``1/a``."""

    p: float
    a: float

    tag = "beta_binomial"

    def initial_prob(self) -> float:
        return float(self.p)

    def prob(self, i: int, s):
        return _maybe_scalar((self.p + self.a * np.asarray(s, dtype=float)) / (1.0 + self.a * i))

    def validate(self, horizon: int) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"beta_binomial: p = {self.p!r} outside [0, 1]")
        if not self.a >= -self.p / horizon:
            raise ParameterError(
                f"beta_binomial: a = {self.a!r} violates a >= -p/n "
                f"at horizon n = {horizon}"
            )
        for i in range(1, horizon):
            if 1.0 + self.a * i <= 0.0:
                raise ParameterError(
                    f"beta_binomial: denominator 1 + a*i not positive at i = {i}"
                )
        self._range_sweep(horizon)

    def to_spec(self) -> dict:
        return {"family": self.tag, "p": self.p, "a": self.a}


@dataclass(frozen=True)
class IncrementalRisk(DependenceModel):
    """Logistic law ``P_i(s) = exp(a + b*s) / (1 + exp(a + b*s))``."""

    a: float
    b: float

    tag = "incremental_risk"

    def initial_prob(self) -> float:
        return _sigmoid(self.a)

    def prob(self, i: int, s):
        x = self.a + self.b * np.asarray(s, dtype=float)
        return _maybe_scalar(_sigmoid(x))

    def validate(self, horizon: int) -> None:
        # The logistic map lands in (0, 1) for every finite argument.
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ParameterError("incremental_risk: a and b must be finite")

    def to_spec(self) -> dict:
        return {"family": self.tag, "a": self.a, "b": self.b}


def _sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _maybe_scalar(out)


@dataclass(frozen=True)
class Linear(DependenceModel):
    """``P_i(s) = alpha_i + beta_i * s / i`` with ``P(X_1 = 1) = alpha0``.

    ``alpha`` and ``beta`` are either constants or explicit per-index tables
    for ``i = 1, 2, ...`` (entry ``j`` holds the value at ``i = j + 1``).
    When ``alpha`` is constant, ``alpha0`` defaults to it; for a table it
    must be given explicitly.  Constraints: ``alpha_i >= 0``, ``beta_i >= 0``
    and ``alpha_i + beta_i <= 1``.
    """

    alpha: float | tuple[float, ...]
    beta: float | tuple[float, ...]
    alpha0: float | None = None

    tag = "linear"

    def __post_init__(self):
        if not np.isscalar(self.alpha):
            object.__setattr__(self, "alpha", _as_rate_tuple(self.alpha, "alpha"))
        if not np.isscalar(self.beta):
            object.__setattr__(self, "beta", _as_rate_tuple(self.beta, "beta"))
        if self.alpha0 is None and not np.isscalar(self.alpha):
            raise ParameterError("linear: alpha0 is required when alpha is a sequence")

    def first_prob(self) -> float:
        return float(self.alpha if self.alpha0 is None else self.alpha0)

    def initial_prob(self) -> float:
        return self.first_prob()

    def alpha_at(self, i: int) -> float:
        return _entry(self.alpha, i, "alpha")

    def beta_at(self, i: int) -> float:
        return _entry(self.beta, i, "beta")

    def alphas(self, i_max: int) -> np.ndarray:
        return _entries(self.alpha, i_max, "alpha")

    def betas(self, i_max: int) -> np.ndarray:
        return _entries(self.beta, i_max, "beta")

    def prob(self, i: int, s):
        return _maybe_scalar(
            self.alpha_at(i) + self.beta_at(i) * np.asarray(s, dtype=float) / i
        )

    def validate(self, horizon: int) -> None:
        a0 = self.first_prob()
        if not 0.0 <= a0 <= 1.0:
            raise ParameterError(f"linear: alpha0 = {a0!r} outside [0, 1]")
        if horizon > 1:
            al = self.alphas(horizon - 1)
            be = self.betas(horizon - 1)
            for i in range(1, horizon):
                a, b = al[i - 1], be[i - 1]
                if a < 0.0:
                    raise ParameterError(f"linear: alpha_i >= 0 violated at i={i}")
                if b < 0.0:
                    raise ParameterError(f"linear: beta_i >= 0 violated at i={i}")
                if a + b > 1.0:
                    raise ParameterError(f"linear: alpha_i + beta_i <= 1 violated at i={i}")

    def to_spec(self) -> dict:
        spec: dict = {"family": self.tag, "alpha": _seq_or_const(self.alpha),
                      "beta": _seq_or_const(self.beta)}
        if self.alpha0 is not None:
            spec["alpha0"] = self.alpha0
        return spec


def _entry(param, i: int, name: str) -> float:
    if np.isscalar(param):
        return float(param)
    if i - 1 >= len(param):
        raise MissingParameterError(f"linear: no {name} entry at index i={i}")
    return param[i - 1]


def _entries(param, i_max: int, name: str) -> np.ndarray:
    if np.isscalar(param):
        return np.full(i_max, float(param))
    if i_max > len(param):
        raise MissingParameterError(
            f"linear: {name} sequence has {len(param)} entries, need {i_max}"
        )
    return np.asarray(param[:i_max], dtype=float)


def _seq_or_const(param):
    return param if np.isscalar(param) else list(param)


@dataclass(frozen=True)
class CorrelatedRandomWalk(DependenceModel):
    """Step-up law of a correlated walk: ``P_i(s) = (1 - mu*i/(i+offset))/2
    + mu*s/(i+offset)`` with persistence ``mu`` in (-1, 1) and decay offset
    ``offset > 0``.  Steps map to positions via ``W_i = 2*S_i - i``."""

    mu: float
    offset: float

    tag = "correlated_rw"

    def initial_prob(self) -> float:
        return 0.5

    def prob(self, i: int, s):
        w = self.mu / (i + self.offset)
        return _maybe_scalar(0.5 * (1.0 - w * i) + w * np.asarray(s, dtype=float))

    def validate(self, horizon: int) -> None:
        if not -1.0 < self.mu < 1.0:
            raise ParameterError(f"correlated_rw: mu = {self.mu!r} outside (-1, 1)")
        if not self.offset > 0.0:
            raise ParameterError(f"correlated_rw: offset = {self.offset!r} must be > 0")
        self._range_sweep(horizon)

    def to_spec(self) -> dict:
        return {"family": self.tag, "mu": self.mu, "offset": self.offset}


@dataclass(frozen=True)
class CustomTable(DependenceModel):
    """Explicit table ``table[i][s] = P_i(s)`` for ``0 <= s <= i < len(table)``."""

    table: tuple[tuple[float, ...], ...]

    tag = "custom"

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.table)
        object.__setattr__(self, "table", rows)

    def initial_prob(self) -> float:
        return self.table[0][0]

    def prob(self, i: int, s):
        if i >= len(self.table):
            raise MissingParameterError(f"custom: no table row at index i={i}")
        return _maybe_scalar(np.asarray(self.table[i], dtype=float)[s])

    def validate(self, horizon: int) -> None:
        if len(self.table) < horizon:
            raise MissingParameterError(
                f"custom: table has {len(self.table)} rows, horizon {horizon} needs {horizon}"
            )
        for i in range(horizon):
            row = self.table[i]
            if len(row) != i + 1:
                raise ParameterError(
                    f"custom: table row {i} has {len(row)} entries, expected {i + 1}"
                )
            for s, v in enumerate(row):
                if not 0.0 <= v <= 1.0:
                    raise ParameterError(f"custom: P_{i}({s}) = {v!r} outside [0, 1]")

    def to_spec(self) -> dict:
        return {"family": self.tag, "table": [list(r) for r in self.table]}


# ---------------------------------------------------------------------------
# Switch families: the rate lambda_i of the memory switch


class SwitchModel:
    """Law of the independent switch sequence: ``P(Y_i = 1) = lambda_i``."""

    tag: str = "base"

    def rate_at(self, i: int) -> float:
        """``lambda_i`` for ``i >= 1``."""
        raise NotImplementedError

    def rates(self, n: int) -> np.ndarray:
        """Vector ``(lambda_1, ..., lambda_n)``."""
        return np.array([self.rate_at(i) for i in range(1, n + 1)])

    def validate(self, horizon: int) -> None:
        r = self.rates(horizon)
        bad = np.flatnonzero((r < 0.0) | (r > 1.0))
        if bad.size:
            i = int(bad[0]) + 1
            raise ParameterError(f"{self.tag}: lambda_{i} = {r[bad[0]]!r} outside [0, 1]")

    def to_spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class IidSwitch(SwitchModel):
    """Constant switch rate: ``lambda_i = rate`` for every index."""

    rate: float

    tag = "iid"

    def rate_at(self, i: int) -> float:
        return float(self.rate)

    def rates(self, n: int) -> np.ndarray:
        return np.full(n, float(self.rate))

    def to_spec(self) -> dict:
        return {"kind": self.tag, "lambda": self.rate}


@dataclass(frozen=True)
class PoissonTrials(SwitchModel):
    """Decaying switch rates ``lambda_i = a / (a + b + i - 1)`` with ``a > 0``,
    ``b >= 0``.  For ``a = 1, b = 0`` this gives ``lambda_1 = 1`` and
    ``lambda_i = 1/i``."""

    a: float
    b: float = 0.0

    tag = "poisson_trials"

    def rate_at(self, i: int) -> float:
        return self.a / (self.a + self.b + i - 1.0)

    def rates(self, n: int) -> np.ndarray:
        i = np.arange(1, n + 1, dtype=float)
        return self.a / (self.a + self.b + i - 1.0)

    def validate(self, horizon: int) -> None:
        if not self.a > 0.0:
            raise ParameterError(f"poisson_trials: a = {self.a!r} must be > 0")
        if not self.b >= 0.0:
            raise ParameterError(f"poisson_trials: b = {self.b!r} must be >= 0")

    def to_spec(self) -> dict:
        return {"kind": self.tag, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class ExplicitRates(SwitchModel):
    """Explicit table of rates; entry ``j`` holds ``lambda_{j+1}``."""

    values: tuple[float, ...]

    tag = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "values", _as_rate_tuple(self.values, "lambdas"))

    def rate_at(self, i: int) -> float:
        if i - 1 >= len(self.values):
            raise MissingParameterError(f"explicit: no lambda entry at index i={i}")
        return self.values[i - 1]

    def rates(self, n: int) -> np.ndarray:
        if n > len(self.values):
            raise MissingParameterError(
                f"explicit: lambda table has {len(self.values)} entries, need {n}"
            )
        return np.asarray(self.values[:n], dtype=float)

    def to_spec(self) -> dict:
        return {"kind": self.tag, "lambdas": list(self.values)}


# ---------------------------------------------------------------------------
# Process and sample containers


@dataclass(frozen=True)
class BsrdProcess:
    """A dependence family paired with a switch family, validated up to a
    fixed horizon.  Immutable; all operations take ``n <= horizon``."""

    dependence: DependenceModel
    switch: SwitchModel
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {self.horizon}")
        self.dependence.validate(self.horizon)
        self.switch.validate(self.horizon)

    def to_spec(self) -> dict:
        return {
            "model": self.dependence.to_spec(),
            "switch": self.switch.to_spec(),
            "horizon": self.horizon,
        }


@dataclass(frozen=True, eq=False)
class PathSample:
    """One simulated trajectory: trials ``xs``, switches ``ys`` and the
    running success count ``partial_sums``, all of length ``n``."""

    xs: np.ndarray
    ys: np.ndarray
    partial_sums: np.ndarray
    seed: int

    def __post_init__(self):
        increments = np.diff(self.partial_sums, prepend=0)
        if not np.array_equal(increments, self.xs):
            raise NumericIntegrityError("partial_sums do not accumulate xs")
        if not np.isin(self.xs, (0, 1)).all() or not np.isin(self.ys, (0, 1)).all():
            raise ParameterError("path entries must be 0/1")

    def __len__(self) -> int:
        return len(self.xs)


@dataclass(frozen=True, eq=False)
class SnDistribution:
    """Exact law of ``S_n``: ``probs[s] = P(S_n = s)`` for ``s = 0..n``."""

    n: int
    probs: np.ndarray
    mean: float
    variance: float

    @classmethod
    def from_probs(cls, n: int, probs: np.ndarray) -> "SnDistribution":
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (n + 1,):
            raise DomainError(f"probability vector must have length n+1 = {n + 1}")
        if (probs < -_PROB_TOL).any() or (probs > 1.0 + _PROB_TOL).any():
            raise NumericIntegrityError("distribution entries leave [0, 1]")
        total = math.fsum(probs)
        if abs(total - 1.0) > _PROB_TOL:
            raise NumericIntegrityError(
                f"distribution sums to {total!r}, drift exceeds {_PROB_TOL}"
            )
        support = np.arange(n + 1, dtype=float)
        mean = float(support @ probs)
        variance = float((support - mean) ** 2 @ probs)
        return cls(n=n, probs=probs, mean=mean, variance=variance)


# ---------------------------------------------------------------------------
# Probability operations


def dependence_prob(model: DependenceModel, i: int, s: int) -> float:
    """``P_i(s)``, validated to land in [0, 1]; ``i = 0`` is the first trial."""
    if i < 0 or s < 0 or s > i:
        raise DomainError(f"need 0 <= s <= i, got (i, s) = ({i}, {s})")
    if i == 0:
        value = model.initial_prob()
    else:
        value = float(model.prob(i, s))
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ParameterError(
            f"{model.tag}: P_{i}({s}) = {value!r} outside [0, 1]"
        )
    return value


def switch_prob(switch: SwitchModel, i: int) -> float:
    """``lambda_i`` for ``i >= 1``."""
    if i < 1:
        raise DomainError(f"switch index must be >= 1, got {i}")
    return _check_prob(float(switch.rate_at(i)), f"{switch.tag}: lambda_{i}")


def conditional_success_prob(proc: BsrdProcess, i: int, s: int, y: int) -> float:
    """``P(X_{i+1} = 1 | S_i = s, Y_i = y)``: ``P_i(s)`` if the switch fired,
    else ``P_i(0)``."""
    if y not in (0, 1):
        raise DomainError(f"switch value must be 0 or 1, got {y}")
    if not 1 <= i <= proc.horizon:
        raise DomainError(f"need 1 <= i <= horizon = {proc.horizon}, got i = {i}")
    return dependence_prob(proc.dependence, i, s if y else 0)


def mixture_success_prob(proc: BsrdProcess, i: int, s: int) -> float:
    """``P(X_{i+1} = 1 | S_i = s)`` after averaging over the switch:
    ``(1 - lambda_i) * P_i(0) + lambda_i * P_i(s)``."""
    if not 1 <= i <= proc.horizon:
        raise DomainError(f"need 1 <= i <= horizon = {proc.horizon}, got i = {i}")
    lam = switch_prob(proc.switch, i)
    p_off = dependence_prob(proc.dependence, i, 0)
    p_on = dependence_prob(proc.dependence, i, s)
    return (1.0 - lam) * p_off + lam * p_on


# ---------------------------------------------------------------------------
# Simulation


def simulate_paths(proc: BsrdProcess, n: int, seeds: Sequence[int]):
    """Simulate one path per seed, vectorized across paths.

    Every path consumes its own stream of ``2n`` uniforms in a fixed order:
    ``u[0]`` draws ``X_1`` and, for each step ``i = 1..n-1``, ``u[2i-1]``
    draws ``Y_i`` then ``u[2i]`` draws ``X_{i+1}``; ``u[2n-1]`` draws the
    trailing ``Y_n``.  Each stream is a pure function of its seed, so the
    result for a given seed does not depend on how seeds are batched.

    Returns ``(xs, ys, sums)`` as ``(len(seeds), n)`` integer arrays.
    """
    if not 1 <= n <= proc.horizon:
        raise DomainError(f"need 1 <= n <= horizon = {proc.horizon}, got n = {n}")
    reps = len(seeds)
    uniforms = np.empty((reps, 2 * n))
    for r, seed in enumerate(seeds):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
        uniforms[r] = rng.random(2 * n)

    model = proc.dependence
    rates = proc.switch.rates(n)
    xs = np.zeros((reps, n), dtype=np.int8)
    ys = np.zeros((reps, n), dtype=np.int8)
    sums = np.zeros((reps, n), dtype=np.int64)

    xs[:, 0] = uniforms[:, 0] < model.initial_prob()
    running = xs[:, 0].astype(np.int64)
    sums[:, 0] = running
    for i in range(1, n):
        y = uniforms[:, 2 * i - 1] < rates[i - 1]
        p = np.where(y, model.prob(i, running), model.prob(i, 0))
        x = uniforms[:, 2 * i] < p
        ys[:, i - 1] = y
        xs[:, i] = x
        running = running + x
        sums[:, i] = running
    ys[:, n - 1] = uniforms[:, 2 * n - 1] < rates[n - 1]
    return xs, ys, sums


def simulate_path(proc: BsrdProcess, n: int, seed: int) -> PathSample:
    """One seeded trajectory of length ``n``; deterministic given the seed."""
    xs, ys, sums = simulate_paths(proc, n, [seed])
    return PathSample(xs=xs[0], ys=ys[0], partial_sums=sums[0], seed=int(seed))


def walk_position(path: PathSample) -> np.ndarray:
    """Walk coordinates ``W_i = 2 * S_i - i`` (success steps up, failures down)."""
    n = len(path)
    return 2 * path.partial_sums - np.arange(1, n + 1)


# ---------------------------------------------------------------------------
# Exact law of S_n


def _dp_sweep(proc: BsrdProcess, n: int, collect_means: bool):
    """Forward recursion over the mixture law.  Returns the final probability
    vector and, when asked, the exact mean of every partial sum."""
    model = proc.dependence
    rates = proc.switch.rates(n - 1) if n > 1 else np.empty(0)
    probs = np.zeros(n + 1)
    p0 = model.initial_prob()
    probs[0] = 1.0 - p0
    probs[1] = p0
    means = np.empty(n) if collect_means else None
    if collect_means:
        means[0] = p0
    for i in range(1, n):
        support = np.arange(i + 1)
        lam = rates[i - 1]
        p_step = (1.0 - lam) * float(model.prob(i, 0)) + lam * np.asarray(
            model.prob(i, support), dtype=float
        )
        head = probs[: i + 1]
        nxt = np.zeros(n + 1)
        nxt[: i + 1] = head * (1.0 - p_step)
        nxt[1 : i + 2] += head * p_step
        probs = nxt
        if collect_means:
            means[i] = float(np.arange(i + 2) @ probs[: i + 2])
    return probs, means


def exact_sn_distribution(proc: BsrdProcess, n: int) -> SnDistribution:
    """Exact law of ``S_n`` by O(n^2) forward dynamic programming.

    The raw normalization drift is checked with compensated summation and
    must stay below 1e-10; the returned vector is then renormalized so it
    sums to 1 at machine precision.
    """
    if not 1 <= n <= proc.horizon:
        raise DomainError(f"need 1 <= n <= horizon = {proc.horizon}, got n = {n}")
    probs, _ = _dp_sweep(proc, n, collect_means=False)
    total = math.fsum(probs)
    if abs(total - 1.0) > _DP_DRIFT_TOL:
        raise NumericIntegrityError(
            f"dynamic program drifted: sum = {total!r} (tolerance {_DP_DRIFT_TOL})"
        )
    return SnDistribution.from_probs(n, probs / total)


def exact_mean_sn(proc: BsrdProcess, n: int) -> np.ndarray:
    """Exact means ``(E S_1, ..., E S_n)``.

    For the linear family this is the O(n) recursion
    ``E S_{i+1} = E S_i + alpha_i + (beta_i * lambda_i / i) * E S_i``;
    other families go through the dynamic program.
    """
    if not 1 <= n <= proc.horizon:
        raise DomainError(f"need 1 <= n <= horizon = {proc.horizon}, got n = {n}")
    if isinstance(proc.dependence, Linear):
        return _linear_means(proc, n)[0]
    _, means = _dp_sweep(proc, n, collect_means=True)
    return means


def exact_mean_sn_via_dp(proc: BsrdProcess, n: int) -> np.ndarray:
    """Means of every partial sum read off the dynamic program; the slow
    cross-check for the closed recursion of the linear family."""
    if not 1 <= n <= proc.horizon:
        raise DomainError(f"need 1 <= n <= horizon = {proc.horizon}, got n = {n}")
    _, means = _dp_sweep(proc, n, collect_means=True)
    return means


def _linear_means(proc: BsrdProcess, n: int):
    """Means and per-trial success probabilities for the linear family."""
    model: Linear = proc.dependence  # type: ignore[assignment]
    means = np.empty(n)
    marginals = np.empty(n)
    mu = model.first_prob()
    means[0] = mu
    marginals[0] = mu
    if n > 1:
        alphas = model.alphas(n - 1)
        betas = model.betas(n - 1)
        lams = proc.switch.rates(n - 1)
        for i in range(1, n):
            p_next = alphas[i - 1] + betas[i - 1] * lams[i - 1] * mu / i
            mu = mu + p_next
            means[i] = mu
            marginals[i] = p_next
    return means, marginals


def marginal_success_probs(proc: BsrdProcess, n: int) -> np.ndarray:
    """Vector of ``p_i = P(X_i = 1)`` for ``i = 1..n``."""
    if isinstance(proc.dependence, Linear):
        return _linear_means(proc, n)[1]
    means = exact_mean_sn(proc, n)
    return np.diff(means, prepend=0.0)


def marginal_success_prob(proc: BsrdProcess, i: int) -> float:
    """``p_i = P(X_i = 1) = E S_i - E S_{i-1}``."""
    if not 1 <= i <= proc.horizon:
        raise DomainError(f"need 1 <= i <= horizon = {proc.horizon}, got i = {i}")
    return float(marginal_success_probs(proc, i)[i - 1])
