"""Command-line interface: one-shot subcommands with bit-exact outputs.

Configuration is a JSON document with an explicit schema version::

    {
      "schema_version": 1,
      "model":  {"family": "linear", "alpha": 0.5, "beta": 0.3},
      "switch": {"kind": "iid", "lambda": 0.5},
      "n": 1000,
      "replicates": 100,
      "seed": 42
    }

Sequence-valued parameters (``alpha``, ``beta``, ``lambdas``) are arrays
indexed from i = 1; the first-trial probability ``alpha0`` is its own field.
Unknown fields are rejected.  CSV output uses shortest round-trip decimals,
always carries a header row and ends with a newline; every run writes a
``manifest.json`` (config echo, seed, tool version) next to its outputs.

Exit codes: 0 success, 1 validation error, 2 failed verification suite.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import CRITERIA, PROFILES, run_suite
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
    PoissonTrials,
    SwitchModel,
    exact_sn_distribution,
    simulate_path,
)
from .errors import BsrdError
from .limits import limit_constants
from .verify import replicate_seed
from .patterns import (
    expected_alternation_count,
    expected_lapse_count,
    expected_success_gaps,
    expected_tail_count,
    fq_waiting_dist,
    pattern_summary,
    sq_pgf_eval,
    sq_waiting_pmf,
    success_gap_limit,
)


class ConfigError(BsrdError, ValueError):
    """A configuration document violates the schema or a model constraint."""


_MODEL_FIELDS = {
    "contagious": {"p", "beta"},
    "generalized_binomial": {"p", "theta"},
    "beta_binomial": {"p", "a"},
    "incremental_risk": {"a", "b"},
    "linear": {"alpha", "beta", "alpha0"},
    "correlated_rw": {"mu", "offset"},
    "custom": {"table"},
}

_SWITCH_FIELDS = {
    "iid": {"lambda"},
    "poisson_trials": {"a", "b"},
    "explicit": {"lambdas"},
}

_TOP_FIELDS = {"schema_version", "model", "switch", "n", "replicates", "seed", "out"}


def _require_known(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown field {sorted(unknown)[0]!r}")


def build_model(spec: dict) -> DependenceModel:
    if "family" not in spec:
        raise ConfigError("model: missing required field 'family'")
    family = spec["family"]
    if family not in _MODEL_FIELDS:
        raise ConfigError(f"model: unknown family {family!r}")
    _require_known(spec, _MODEL_FIELDS[family] | {"family"}, f"model[{family}]")
    body = {k: v for k, v in spec.items() if k != "family"}
    try:
        if family == "contagious":
            return Contagious(**body)
        if family == "generalized_binomial":
            return GeneralizedBinomial(**body)
        if family == "beta_binomial":
            return BetaBinomial(**body)
        if family == "incremental_risk":
            return IncrementalRisk(**body)
        if family == "linear":
            alpha = body.get("alpha")
            beta = body.get("beta")
            if alpha is None or beta is None:
                raise ConfigError("model[linear]: fields 'alpha' and 'beta' are required")
            alpha = tuple(alpha) if isinstance(alpha, list) else alpha
            beta = tuple(beta) if isinstance(beta, list) else beta
            return Linear(alpha=alpha, beta=beta, alpha0=body.get("alpha0"))
        if family == "correlated_rw":
            return CorrelatedRandomWalk(**body)
        return CustomTable(table=tuple(tuple(row) for row in body.get("table", ())))
    except TypeError as exc:
        raise ConfigError(f"model[{family}]: {exc}") from exc


def build_switch(spec: dict) -> SwitchModel:
    if "kind" not in spec:
        raise ConfigError("switch: missing required field 'kind'")
    kind = spec["kind"]
    if kind not in _SWITCH_FIELDS:
        raise ConfigError(f"switch: unknown kind {kind!r}")
    _require_known(spec, _SWITCH_FIELDS[kind] | {"kind"}, f"switch[{kind}]")
    if kind == "iid":
        if "lambda" not in spec:
            raise ConfigError("switch[iid]: missing required field 'lambda'")
        return IidSwitch(rate=spec["lambda"])
    if kind == "poisson_trials":
        if "a" not in spec:
            raise ConfigError("switch[poisson_trials]: missing required field 'a'")
        return PoissonTrials(a=spec["a"], b=spec.get("b", 0.0))
    if "lambdas" not in spec:
        raise ConfigError("switch[explicit]: missing required field 'lambdas'")
    return ExplicitRates(values=tuple(spec["lambdas"]))


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration document; ``raw`` echoes the file losslessly."""

    raw: dict
    model_spec: dict | None
    switch_spec: dict | None
    n: int | None
    replicates: int | None
    seed: int | None
    out: str | None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a JSON object")
        _require_known(raw, _TOP_FIELDS, "config")
        if raw.get("schema_version") != 1:
            raise ConfigError("config: field 'schema_version' must be 1")
        for key in ("n", "replicates", "seed"):
            if key in raw and (not isinstance(raw[key], int) or isinstance(raw[key], bool)):
                raise ConfigError(f"config: field {key!r} must be an integer")
        if "n" in raw and raw["n"] < 1:
            raise ConfigError("config: field 'n' must be >= 1")
        if "seed" in raw and not 0 <= raw["seed"] < 2**64:
            raise ConfigError("config: field 'seed' must fit in 64 bits")
        cfg = cls(
            raw=raw,
            model_spec=raw.get("model"),
            switch_spec=raw.get("switch"),
            n=raw.get("n"),
            replicates=raw.get("replicates"),
            seed=raw.get("seed"),
            out=raw.get("out"),
        )
        # construct (and therefore validate) whatever the document declares
        if cfg.model_spec is not None:
            build_model(cfg.model_spec)
        if cfg.switch_spec is not None:
            build_switch(cfg.switch_spec)
        if cfg.model_spec is not None and cfg.switch_spec is not None and cfg.n is not None:
            cfg.process(cfg.n)
        return cfg

    def process(self, n: int) -> BsrdProcess:
        if self.model_spec is None:
            raise ConfigError("config: field 'model' is required for this command")
        if self.switch_spec is None:
            raise ConfigError("config: field 'switch' is required for this command")
        return BsrdProcess(build_model(self.model_spec), build_switch(self.switch_spec), n)

    def switch(self) -> SwitchModel:
        if self.switch_spec is None:
            raise ConfigError("config: field 'switch' is required for this command")
        return build_switch(self.switch_spec)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return RunConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# Output helpers


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_format_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_manifest(out: Path, subcommand: str, seed: int | None, config: dict | None,
                    options: dict) -> None:
    write_json(out / "manifest.json", {
        "tool": "bsrd",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config": config,
        "options": options,
    })


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective(args, cfg: RunConfig | None, field: str, default=None):
    value = getattr(args, field, None)
    if value is None and cfg is not None:
        value = getattr(cfg, field)
    return default if value is None else value


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    n = _effective(args, cfg, "n")
    if n is None:
        raise ConfigError("simulate: 'n' must be given (flag --n or config field)")
    seed = _effective(args, cfg, "seed", 0)
    replicates = _effective(args, cfg, "replicates", 1)
    proc = cfg.process(n)
    out = _out_dir(args)
    for r in range(replicates):
        path = simulate_path(proc, n, replicate_seed(seed, r))
        rows = zip(range(1, n + 1), path.xs, path.ys, path.partial_sums)
        write_csv(out / f"path_{r:04d}.csv", ["i", "x", "y", "s"], rows)
    _write_manifest(out, "simulate", seed, cfg.raw,
                    {"n": n, "replicates": replicates})
    print(f"wrote {replicates} path file(s) to {out}")
    return 0


def _cmd_dist(args) -> int:
    cfg = load_config(args.config)
    n = _effective(args, cfg, "n")
    if n is None:
        raise ConfigError("dist: 'n' must be given (flag --n or config field)")
    proc = cfg.process(n)
    dist = exact_sn_distribution(proc, n)
    out = _out_dir(args)
    write_csv(out / "sn_distribution.csv", ["s", "prob"],
              zip(range(n + 1), dist.probs))
    _write_manifest(out, "dist", None, cfg.raw,
                    {"n": n, "mean": dist.mean, "variance": dist.variance})
    print(json.dumps({"n": n, "mean": dist.mean, "variance": dist.variance}, sort_keys=True))
    return 0


def _cmd_limits(args) -> int:
    cfg = load_config(args.config)
    n = _effective(args, cfg, "n")
    if n is None:
        raise ConfigError("limits: 'n' must be given (flag --n or config field)")
    proc = cfg.process(n)
    constants = limit_constants(proc, n)
    out = _out_dir(args)
    rows = zip(range(1, n + 1), constants.scale, constants.spread_bound,
               constants.spread, constants.slln_partial, constants.ratio)
    write_csv(out / "limits.csv",
              ["i", "scale", "spread_bound", "spread", "slln_partial", "ratio"], rows)
    _write_manifest(out, "limits", None, cfg.raw, {"n": n})
    print(f"wrote limit constants for n = {n} to {out}")
    return 0


def _cmd_patterns(args) -> int:
    if args.bits is None and args.config is None:
        raise ConfigError("patterns: need --bits and/or --config")
    cfg = load_config(args.config) if args.config else None
    out = _out_dir(args)
    report: dict = {}
    rows: list[tuple] = []

    counts = None
    if args.bits is not None:
        counts = pattern_summary(args.bits, max_l=args.max_l)
        report["counts"] = {
            "n": counts.n,
            "lapse_intervals": counts.lapse_intervals,
            "lapses": counts.lapse_counts,
            "alternations": counts.alternation_counts,
            "tails": counts.tail_count,
            "success_gaps": counts.gap_counts,
        }

    expectations = None
    if cfg is not None:
        switch = cfg.switch()
        n = _effective(args, cfg, "n", counts.n if counts else None)
        if n is None:
            raise ConfigError("patterns: 'n' must be given (flag --n, config, or --bits)")
        expectations = {"n": n, "lapses": {}, "alternations": {}, "tails": None,
                        "success_gaps": {}}
        top = min(args.max_l, n)
        for l in range(1, top + 1):
            expectations["lapses"][l] = expected_lapse_count(switch, n, l)
            if n >= 2 * l:
                expectations["alternations"][l] = expected_alternation_count(switch, n, l)
            if n >= l + 1:
                expectations["success_gaps"][l] = expected_success_gaps(switch, l, n)
                limit = success_gap_limit(switch, l)
                if limit is not None:
                    expectations.setdefault("success_gap_limits", {})[l] = limit
        if n > 2:
            expectations["tails"] = expected_tail_count(switch, n)
        report["expectations"] = expectations

    top = args.max_l
    for l in range(1, top + 1):
        for stat in ("lapses", "alternations", "success_gaps"):
            observed = report.get("counts", {}).get(stat, {}).get(l)
            expected = report.get("expectations", {}).get(stat, {}).get(l)
            if observed is not None or expected is not None:
                rows.append((stat, l, "" if observed is None else observed,
                             "" if expected is None else expected))
    tails_obs = report.get("counts", {}).get("tails")
    tails_exp = report.get("expectations", {}).get("tails")
    if tails_obs is not None or tails_exp is not None:
        rows.append(("tails", "", "" if tails_obs is None else tails_obs,
                     "" if tails_exp is None else tails_exp))

    write_csv(out / "patterns.csv", ["statistic", "l", "observed", "expected"], rows)
    write_json(out / "patterns.json", report)
    _write_manifest(out, "patterns", None, cfg.raw if cfg else None,
                    {"bits_length": None if args.bits is None else len(args.bits),
                     "max_l": args.max_l})
    print(json.dumps(report, sort_keys=True))
    return 0


def _sq_default_horizon(s: int, lam: float) -> int:
    if not 0.0 < lam < 1.0:
        return max(s, 200)
    mean = (1.0 - (1.0 - lam) ** s) / (lam * (1.0 - lam) ** s)
    return max(s, int(20.0 * mean) + 1, 200)


def _cmd_waiting(args) -> int:
    if args.fq == args.sq:
        raise ConfigError("waiting: exactly one of --fq or --sq is required")
    out = _out_dir(args)
    if args.fq:
        if args.r is None:
            raise ConfigError("waiting: --fq needs the zero count -r R")
        dist = fq_waiting_dist(args.r, args.rate, horizon=args.horizon)
    else:
        if args.s is None:
            raise ConfigError("waiting: --sq needs the run length -s S")
        horizon = args.horizon
        if horizon is None:
            horizon = _sq_default_horizon(args.s, args.rate)
        dist = sq_waiting_pmf(args.s, args.rate, horizon)
    support = range(dist.quota, dist.horizon + 1)
    write_csv(out / "waiting_pmf.csv", ["k", "prob"],
              ((k, dist.pmf[k]) for k in support))
    summary = {
        "kind": dist.kind,
        "quota": dist.quota,
        "lambda": dist.rate,
        "mean": dist.mean if dist.mean != float("inf") else "inf",
        "horizon": dist.horizon,
        "mass_within_horizon": dist.total_mass(),
        "note": dist.note,
    }
    if dist.denom_coeffs is not None:
        summary["pgf_denominator_coefficients"] = dist.denom_coeffs.tolist()
    if args.pgf_at is not None and args.sq:
        summary["pgf_value"] = sq_pgf_eval(args.s, args.rate, args.pgf_at)
    write_json(out / "waiting_summary.json", summary)
    _write_manifest(out, "waiting", None, None, {
        "kind": dist.kind, "quota": dist.quota, "lambda": args.rate,
        "horizon": dist.horizon,
    })
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_verify(args) -> int:
    reports = run_suite(suite=args.suite, seed=args.seed, workers=args.workers)
    out = _out_dir(args)
    payload = {
        "suite": args.suite,
        "seed": args.seed,
        "tool_version": __version__,
        "criteria": {cid: rep.to_dict() for (cid, _), rep in zip(CRITERIA, reports)},
        "all_passed": all(r.passed for r in reports),
    }
    write_json(out / "verify_report.json", payload)
    write_csv(out / "verify_summary.csv",
              ["criterion", "name", "statistic", "threshold", "passed"],
              [(cid, rep.name, rep.statistic, rep.threshold, rep.passed)
               for (cid, _), rep in zip(CRITERIA, reports)])
    _write_manifest(out, "verify", args.seed, None,
                    {"suite": args.suite, "workers": args.workers})
    for (cid, _), rep in zip(CRITERIA, reports):
        flag = "PASS" if rep.passed else "FAIL"
        print(f"[{flag}] criterion {cid}: {rep.name} "
              f"(statistic={rep.statistic!r}, threshold={rep.threshold!r})")
    if not payload["all_passed"]:
        print("verification suite FAILED", file=sys.stderr)
        return 2
    print("verification suite passed")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsrd",
        description="Dependent Bernoulli trials with a randomly switched memory: "
                    "exact laws, simulation, pattern statistics and verification.",
    )
    parser.add_argument("--version", action="version", version=f"bsrd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON configuration file")
        p.add_argument("--n", type=int, default=None, help="horizon (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--out", default="bsrd_out", help="output directory")

    p = sub.add_parser("simulate", help="simulate seeded paths to CSV (columns i,x,y,s)")
    common(p)
    p.add_argument("--replicates", type=int, default=None,
                   help="number of paths (overrides config)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("dist", help="exact law of S_n to CSV (columns s,prob)")
    common(p)
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("limits", help="limit-theorem normalizer table to CSV")
    common(p)
    p.set_defaults(func=_cmd_limits)

    p = sub.add_parser("patterns", help="pattern counts and/or exact expectations")
    common(p, config_required=False)
    p.add_argument("--bits", default=None, help="explicit 0/1 switch string to count")
    p.add_argument("--max-l", type=int, default=8, help="largest pattern length reported")
    p.set_defaults(func=_cmd_patterns)

    p = sub.add_parser("waiting", help="failure-quota waiting-time tables")
    p.add_argument("--fq", action="store_true",
                   help="waiting time until a count of zeros (negative binomial)")
    p.add_argument("--sq", action="store_true",
                   help="waiting time until a run of consecutive zeros")
    p.add_argument("-r", type=int, default=None, help="zero count for --fq")
    p.add_argument("-s", type=int, default=None, help="run length for --sq")
    p.add_argument("--lambda", dest="rate", type=float, required=True,
                   help="success probability of each switch")
    p.add_argument("--horizon", type=int, default=None,
                   help="largest k tabulated (default: adaptive)")
    p.add_argument("--pgf-at", type=float, default=None,
                   help="also evaluate the SQ generating function at t")
    p.add_argument("--out", default="bsrd_out", help="output directory")
    p.set_defaults(func=_cmd_waiting)

    p = sub.add_parser("verify", help="run the verification suite, emit JSON reports")
    p.add_argument("--suite", choices=sorted(PROFILES), default="acceptance")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="bsrd_out", help="output directory")
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BsrdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
