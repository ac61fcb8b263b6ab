"""Command-line front end: ``sample``, ``check`` and ``demo``.

Exit codes: 0 success (all checks passed), 1 numerical failure or a failed
check, 2 invalid usage or input data.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .constraints import ConstraintSystem, DiagonalScales
from .csvio import read_matrix, read_vector, write_matrix
from .diagnostics import (
    CheckResult,
    conjugate_regression_demo,
    default_suite,
    run_constraint_suite,
    run_family_suite,
)
from .errors import ConstrainedPriorError, CholeskyFailure, SingularSystem, SVDFailure
from .families import Family, FamilySpec, RhsParams, sample_family
from .rng import LANE_DATA, RngStream
from .sampler import build, draw_batch

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_NUMERICAL = (CholeskyFailure, SingularSystem, SVDFailure, np.linalg.LinAlgError)

DEFAULTS = {
    "family": None,
    "K": None,
    "constraint": None,
    "b": None,
    "D": None,
    "n": None,
    "seed": 0,
    "stream": 0,
    "out": None,
    "format": "csv",
    "compensate": True,
    "suite": False,
    "p0": 1,
    "sigma_tilde": 1.0,
    "n_obs": 1,
    "nu1": 1.0,
    "nu2": 4.0,
    "s_sq": 4.0,
    "nu3": 4.0,
    # demo
    "effects": None,
    "noise": 0.1,
    "prior_sd": 1.0,
    "draws": 1000,
    "design": None,
    "y": None,
    "report": None,
}

_DEMO_KEYS = {"effects", "noise", "prior_sd", "draws", "design", "y", "report"}
_RHS_KEYS = {"p0", "sigma_tilde", "n_obs", "nu1", "nu2", "s_sq", "nu3"}

_N_DEFAULT = {"sample": 1000, "check": 100_000, "demo": 300}


class ConfigError(Exception):
    def __init__(self, fld, message):
        super().__init__(f"{fld}: {message}")
        self.field = fld


@dataclass
class RunConfig:
    command: str
    family: str | None = None
    K: int | None = None
    constraint: str | None = None
    b: str | None = None
    D: str | None = None
    n: int = 1000
    seed: int = 0
    stream: int = 0
    out: str | None = None
    format: str = "csv"
    compensate: bool = True
    suite: bool = False
    p0: int = 1
    sigma_tilde: float = 1.0
    n_obs: int = 1
    nu1: float = 1.0
    nu2: float = 4.0
    s_sq: float = 4.0
    nu3: float = 4.0
    effects: str | None = None
    noise: float = 0.1
    prior_sd: float = 1.0
    draws: int = 1000
    design: str | None = None
    y: str | None = None
    report: str | None = None
    config: str | None = None
    extra: dict = field(default_factory=dict)

    def metadata(self):
        skip = {"extra"}
        if self.command != "demo":
            skip |= _DEMO_KEYS
        if self.family != Family.RHS.value:
            skip |= _RHS_KEYS
        meta = {k: v for k, v in asdict(self).items() if v is not None and k not in skip}
        meta["version"] = __version__
        meta["backend"] = kernels.BACKEND
        return meta


# -- argument parsing ------------------------------------------------------


def _common(p, *, family=True):
    p.add_argument("--config", help="JSON file of option values; command-line flags take precedence")
    if family:
        p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--K", type=int, help="number of coefficients (family mode)")
    p.add_argument("--constraint", help="CSV file holding A (J x K)")
    p.add_argument("--b", help="CSV file or inline comma list for b (default: zeros)")
    p.add_argument("--D", help="CSV file or inline list of the prior variances lambda_k^2 (default: ones)")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int)
    p.add_argument("--out")
    p.add_argument("--compensate", action=argparse.BooleanOptionalAction, default=None,
                   help="multiply D by K/(K-1) in the sum-to-zero families (default on)")
    g = p.add_argument_group("regularized horseshoe")
    g.add_argument("--p0", type=int)
    g.add_argument("--sigma-tilde", dest="sigma_tilde", type=float)
    g.add_argument("--n-obs", dest="n_obs", type=int)
    g.add_argument("--nu1", type=float)
    g.add_argument("--nu2", type=float)
    g.add_argument("--s-sq", dest="s_sq", type=float)
    g.add_argument("--nu3", type=float)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="constrained-prior",
        description="Sample and verify Gaussian priors under linear equality constraints.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="write draws to CSV (plus a JSON sidecar)")
    _common(p)
    p.add_argument("--format", choices=["csv", "json"])

    p = sub.add_parser("check", help="run the verification suite and write a JSON report")
    _common(p)
    p.add_argument("--suite", action="store_true", default=None,
                   help="run every family at K in {2, 3, 10, 50}")

    p = sub.add_parser("demo", help="conjugate regression with a sum-to-zero effect prior")
    _common(p, family=False)
    p.add_argument("--effects", help="true group effects for synthetic data, e.g. 1,2,-3")
    p.add_argument("--noise", type=float, help="noise standard deviation")
    p.add_argument("--prior-sd", dest="prior_sd", type=float, help="marginal prior sd of each effect")
    p.add_argument("--draws", type=int, help="number of posterior draws")
    p.add_argument("--design", help="CSV design matrix (n x K) instead of synthetic data")
    p.add_argument("--y", help="CSV observations, used with --design")
    p.add_argument("--report", help="path for the JSON report (default: stdout)")
    return parser


def resolve_config(args) -> RunConfig:
    """Merge defaults, the optional config file, and explicit flags (in that order)."""
    values = dict(DEFAULTS)
    values["n"] = _N_DEFAULT[args.command]
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from None
        unknown = set(loaded) - set(values)
        if unknown:
            raise ConfigError("config", f"unknown keys {sorted(unknown)}")
        values.update(loaded)
    for key in values:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(command=args.command, config=getattr(args, "config", None), **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.n is None or cfg.n < 1:
        raise ConfigError("n", "must be >= 1")
    for name in ("seed", "stream"):
        v = getattr(cfg, name)
        if not isinstance(v, int) or not 0 <= v < 2**64:
            raise ConfigError(name, "must be an integer in [0, 2**64)")
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format", "must be csv or json")
    if cfg.command == "demo":
        return
    if cfg.suite:
        return
    if (cfg.family is None) == (cfg.constraint is None):
        raise ConfigError("family", "give exactly one of --family or --constraint")
    if cfg.family is not None:
        try:
            Family(cfg.family)
        except ValueError:
            raise ConfigError("family", f"unknown family {cfg.family!r}") from None
        if cfg.K is None or cfg.K < 2:
            raise ConfigError("K", "--family needs --K >= 2")


def _family_spec(cfg):
    fam = Family(cfg.family)
    rhs = None
    if fam is Family.RHS:
        rhs = RhsParams(cfg.p0, cfg.sigma_tilde, cfg.n_obs, cfg.nu1, cfg.nu2, cfg.s_sq, cfg.nu3)
    try:
        return FamilySpec(fam, cfg.K, rhs)
    except ConstrainedPriorError as exc:
        raise ConfigError("family", str(exc)) from None


def _load_system(cfg):
    try:
        A = read_matrix(cfg.constraint)
        b = read_vector(cfg.b) if cfg.b is not None else np.zeros(A.shape[0])
        c = ConstraintSystem(A, b)
        d = DiagonalScales(read_vector(cfg.D)) if cfg.D is not None else DiagonalScales.identity(c.K)
    except (OSError, ValueError) as exc:
        raise ConfigError("constraint", f"{type(exc).__name__}: {exc}") from None
    if d.K != c.K:
        raise ConfigError("D", f"has {d.K} entries, A has {c.K} columns")
    return c, d


def _write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -- commands --------------------------------------------------------------


def cmd_sample(cfg: RunConfig) -> int:
    rng = RngStream(cfg.seed, cfg.stream)
    meta = cfg.metadata()
    if cfg.family is not None:
        spec = _family_spec(cfg)
        beta, _ = sample_family(spec, rng, cfg.n, compensate=cfg.compensate)
    else:
        c, d = _load_system(cfg)
        beta = draw_batch(build(c, d), rng, cfg.n)
        meta["J"], meta["K"] = c.J, c.K
    out = cfg.out or ("samples.csv" if cfg.format == "csv" else "samples.json")
    if cfg.format == "csv":
        write_matrix(out, beta)
        _write_json(out + ".json", meta)
    else:
        # repr of a float64 round-trips exactly, like the 17-digit CSV
        _write_json(out, {"metadata": meta, "samples": beta.tolist()})
    print(f"wrote {beta.shape[0]} x {beta.shape[1]} draws to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    if cfg.suite:
        reports = default_suite(cfg.n, cfg.seed, compensate=cfg.compensate)
    elif cfg.family is not None:
        reports = [run_family_suite(_family_spec(cfg), cfg.n, RngStream(cfg.seed, cfg.stream), cfg.compensate)]
    else:
        c, d = _load_system(cfg)
        reports = [run_constraint_suite(c, d, cfg.n, RngStream(cfg.seed, cfg.stream))]
    for r in reports:
        for line in r.summary_lines():
            print(line, file=sys.stderr)
    ok = all(r.passed for r in reports)
    doc = reports[0].to_dict() if len(reports) == 1 else {
        "seed": cfg.seed,
        "n_samples": cfg.n,
        "all_passed": ok,
        "reports": [r.to_dict() for r in reports],
    }
    doc["config"] = cfg.metadata()
    _write_json(cfg.out, doc)
    return EXIT_OK if ok else EXIT_FAIL


def synthetic_one_hot(effects, n, noise, rng: RngStream):
    """Balanced one-hot design (observation ``i`` in group ``i mod K``) and noisy responses."""
    effects = np.asarray(effects, dtype=float)
    K = effects.size
    groups = np.arange(n) % K
    X = np.zeros((n, K))
    X[np.arange(n), groups] = 1.0
    y = effects[groups] + noise * rng.normal(0, n, 1, LANE_DATA)[:, 0]
    return X, y


def cmd_demo(cfg: RunConfig) -> int:
    rng = RngStream(cfg.seed, cfg.stream)
    truth = None
    try:
        if cfg.design is not None:
            if cfg.y is None:
                raise ConfigError("y", "--design needs --y")
            X = read_matrix(cfg.design)
            y = read_vector(cfg.y)
        else:
            truth = read_vector(cfg.effects) if cfg.effects is not None else np.array([1.0, 2.0, -3.0])
            if cfg.K is not None and cfg.K != truth.size:
                raise ConfigError("K", f"--K {cfg.K} disagrees with {truth.size} effects")
            X, y = synthetic_one_hot(truth, cfg.n, cfg.noise, rng)
    except (OSError, ValueError) as exc:
        raise ConfigError("design", f"{type(exc).__name__}: {exc}") from None
    K = X.shape[1]
    if K < 2:
        raise ConfigError("design", "need at least two columns")
    if not cfg.noise > 0:
        raise ConfigError("noise", "must be > 0")
    if cfg.constraint is not None:
        c, d = _load_system(cfg)
    else:
        c = ConstraintSystem.sum_to_zero(K)
        factor = K / (K - 1.0) if cfg.compensate else 1.0
        d = DiagonalScales(np.full(K, cfg.prior_sd**2 * factor))
    if c.K != K:
        raise ConfigError("constraint", f"A has {c.K} columns, design has {K}")
    res = conjugate_regression_demo(X, y, cfg.noise, build(c, d), rng, cfg.draws)
    report = res.report
    report.extra["posterior_mean"] = res.posterior_mean.tolist()
    report.extra["posterior_sd"] = res.posterior_sd.tolist()
    report.extra["draw_residual_max"] = float(np.abs(c.residual(res.draws)).max())
    if truth is not None:
        err = np.abs(res.posterior_mean - truth)
        report.extra["truth"] = truth.tolist()
        report.extra["recovery_error"] = err.tolist()
        report.extra["max_recovery_error"] = float(err.max())
        z = err / res.posterior_sd
        report.add(CheckResult("truth_within_posterior", bool(z.max() <= 4.0), float(z.max()), 4.0,
                               "max_k |E[beta_k|y] - truth_k| / posterior sd"))
    if cfg.out is not None:
        write_matrix(cfg.out, res.draws)
        _write_json(cfg.out + ".json", cfg.metadata())
    doc = report.to_dict()
    doc["config"] = cfg.metadata()
    _write_json(cfg.report, doc)
    for line in report.summary_lines():
        print(line, file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"sample": cmd_sample, "check": cmd_check, "demo": cmd_demo}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERICAL as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ConstrainedPriorError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
