"""``schedkit`` command line: generate, convert, verify, compare, scaling, mi-feasibility.

Exit codes: 0 success or pass, 1 verification failure, 2 usage or validation
error, 3 I/O error.  ``--out -`` writes to stdout.
"""

from __future__ import annotations

import argparse
import importlib
import logging
import os
import sys
from dataclasses import dataclass
from typing import Optional

import jsonschema
import numpy as np

from . import io as sio
from . import ou_core, sampler_design, schemas
from .equivalence import EnsembleConfig, marginal_identity_check, run_equivalence, scaling_check
from .errors import SchedkitError
from .schedules import DEFAULT_FLOOR, FAMILIES, ScheduleSpec, generate

log = logging.getLogger("schedkit")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3

CLI_FAMILIES = tuple(f for f in FAMILIES if f != "custom-density") + ("custom",)
DEFAULT_COMPARE = ("constant-variance", "cv-quadratic", "entropy", "fisher-cosine")
BUILTIN_DENSITIES = {
    "fisher-sqrt": sampler_design.fisher_sqrt,
    "cv-inverse": sampler_design.cv_inverse,
    "auto-variance": sampler_design.auto_variance_increment,
}


class UsageError(Exception):
    """Bad flag combination detected after argparse."""


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    out: str
    format: str = "json"
    seed: Optional[int] = None
    verbosity: int = 0


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _emit_json(path: str, schema: str, document: dict) -> None:
    schemas.validate(schema, document)
    _write(path, sio.dumps(document))


def _load_density(ref: str, singular_at_one: bool) -> sampler_design.DesignDensity:
    if ref in BUILTIN_DENSITIES:
        return BUILTIN_DENSITIES[ref]()
    mod_name, sep, attr = ref.partition(":")
    if not sep or not mod_name or not attr:
        raise UsageError(f"--density must be a builtin {sorted(BUILTIN_DENSITIES)} or module:callable, got {ref!r}")
    try:
        obj = getattr(importlib.import_module(mod_name), attr)
    except (ImportError, AttributeError) as exc:
        raise UsageError(f"cannot import density {ref!r}: {exc}") from None
    if isinstance(obj, sampler_design.DesignDensity):
        return obj
    if not callable(obj):
        raise UsageError(f"density {ref!r} is neither a DesignDensity nor callable")
    return sampler_design.custom(obj, singular_at_one=singular_at_one, name=ref)


def _family_params(args, family: str) -> dict:
    params = {}
    if family == "entropy":
        params["sigma0_sq"] = args.sigma0_sq
        params["entropy_form"] = args.entropy_form
    elif family == "linear-beta":
        params["beta_start"] = args.beta_start
        params["beta_end"] = args.beta_end
    elif family in ("custom", "custom-density"):
        if not args.density:
            raise UsageError("--family custom needs --density")
        params["density"] = _load_density(args.density, args.singular_at_one)
        params["method"] = args.method
    return params


def _spec(args, family: str, T: int) -> ScheduleSpec:
    return ScheduleSpec(family, T, _family_params(args, family), args.alpha_bar_floor)


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    s = generate(_spec(args, args.family, args.steps))
    if args.format == "csv":
        _write(args.out, sio.schedule_to_csv(s))
    else:
        _emit_json(args.out, "schedule", sio.schedule_to_dict(s))
    return EXIT_OK


def cmd_convert(args) -> int:
    s = sio.load_schedule(args.input, args.alpha_bar_floor)
    if args.format == "csv":
        _write(args.out, sio.schedule_to_csv(s))
    else:
        _emit_json(args.out, "representation", sio.representation_to_dict(s, args.emit))
    return EXIT_OK


def _resolve_seed(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("SCHEDKIT_SEED")
    if env is None or not env.strip():
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SCHEDKIT_SEED must be an integer, got {env!r}") from None


def cmd_verify(args) -> int:
    s = sio.load_schedule(args.schedule, args.alpha_bar_floor)
    identity = marginal_identity_check(s)
    cfg = EnsembleConfig(n_samples=args.samples, seed=_resolve_seed(args.seed), x0=args.x0,
                         scheme=args.scheme, workers=args.workers)
    report = run_equivalence(s, cfg, args.alpha, correction=args.correction)
    if identity.max_error > 1e-12:
        report.failures = sorted(set(report.failures) | {0})
        report.notes.append(f"marginal identity error {identity.max_error:.3e} exceeds 1e-12")
    _emit_json(args.out, "report", report.to_dict())
    log.info("verdict %s (max KS %.5f)", report.verdict, report.max_ks)
    for w in report.warnings:
        log.warning("%s", w)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_compare(args) -> int:
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    if not families:
        raise UsageError("--families is empty")
    table = {f: generate(_spec(args, f, args.steps)) for f in families}
    if args.format == "csv":
        header = ["k"]
        for f in families:
            header += [f"beta_{f}", f"alpha_bar_{f}"]
        lines = [",".join(header)]
        for i in range(args.steps):
            row = [str(i + 1)]
            for f in families:
                row += [repr(float(table[f].betas[i])), repr(float(table[f].alpha_bars[i]))]
            lines.append(",".join(row))
        _write(args.out, "\n".join(lines) + "\n")
        return EXIT_OK
    doc = {
        "format_version": sio.FORMAT_VERSION,
        "T": args.steps,
        "families": families,
        "k": list(range(1, args.steps + 1)),
        "columns": {f: {"betas": [float(x) for x in s.betas], "alpha_bars": [float(x) for x in s.alpha_bars]}
                    for f, s in table.items()},
    }
    _emit_json(args.out, "compare", doc)
    return EXIT_OK


def cmd_scaling(args) -> int:
    result = scaling_check(_spec(args, args.family, args.steps), args.factor)
    _emit_json(args.out, "scaling", {"format_version": sio.FORMAT_VERSION, **result.to_dict()})
    return EXIT_OK


def cmd_mi_feasibility(args) -> int:
    disp = ou_core.InitialDispersion(args.sigma0_sq)
    if args.grid < 1:
        raise UsageError("--grid must be at least 1")
    if not 0 < args.t_min <= args.t_max:
        raise UsageError("need 0 < --t-min <= --t-max")
    grid = np.geomspace(args.t_min, args.t_max, args.grid) if args.grid > 1 else np.array([args.t_min])
    report = ou_core.mi_schedule_feasibility(disp, grid)
    if args.format == "csv":
        d = report.to_dict()
        lines = ["t,mutual_information,rhs,in_unit_interval"]
        lines += [f"{p['t']!r},{p['mutual_information']!r},{p['rhs']!r},{str(p['in_unit_interval']).lower()}"
                  for p in d["points"]]
        _write(args.out, "\n".join(lines) + "\n")
    else:
        _emit_json(args.out, "feasibility", {"format_version": sio.FORMAT_VERSION, **report.to_dict()})
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _add_family_flags(p):
    p.add_argument("--sigma0-sq", type=float, default=ou_core.SIGMA0_SQ_MAIN,
                   help="initial-data variance for the entropy family")
    p.add_argument("--entropy-form", choices=("derived", "paper"), default="derived")
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.02)
    p.add_argument("--density", help="custom family: builtin name or module:callable")
    p.add_argument("--singular-at-one", action="store_true",
                   help="custom density diverges at theta = 1")
    p.add_argument("--method", choices=("auto", "analytic", "numeric"), default="auto")
    p.add_argument("--alpha-bar-floor", type=float, default=DEFAULT_FLOOR)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schedkit", description="DDPM noise schedules as OU observation times.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="write a schedule from a generator family")
    p.add_argument("--family", required=True, choices=CLI_FAMILIES)
    p.add_argument("--steps", required=True, type=_positive_int)
    _add_family_flags(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("convert", help="re-emit a schedule file as betas, alpha-bars or times")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--emit", required=True, choices=sio.REPRESENTATIONS)
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="csv always writes the full k,beta,alpha,alpha_bar,t table")
    p.add_argument("--alpha-bar-floor", type=float, default=None, help="floor for CSV input")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("verify", help="Monte Carlo check that the DDPM chain matches the OU process")
    p.add_argument("--schedule", required=True)
    p.add_argument("--samples", type=_positive_int, default=200_000)
    p.add_argument("--seed", type=int, default=None, help="falls back to $SCHEDKIT_SEED, then 0")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--correction", choices=("sidak", "none"), default="sidak",
                   help="multiple-testing correction across steps")
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--scheme", choices=("independent", "paired"), default="independent")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--alpha-bar-floor", type=float, default=None, help="floor for CSV input")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="aligned beta and alpha-bar table for several families")
    p.add_argument("--families", default=",".join(DEFAULT_COMPARE), help="comma-separated")
    p.add_argument("--steps", required=True, type=_positive_int)
    _add_family_flags(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scaling", help="compare alpha-bar at T with every M-th step at M*T")
    p.add_argument("--family", required=True, choices=CLI_FAMILIES)
    p.add_argument("--steps", required=True, type=_positive_int)
    p.add_argument("--factor", required=True, type=int)
    _add_family_flags(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("mi-feasibility", help="test the mutual-information mark condition on a time grid")
    p.add_argument("--sigma0-sq", type=float, default=ou_core.SIGMA0_SQ_MAIN)
    p.add_argument("--t-min", type=float, default=1e-4)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--grid", type=int, default=1000, help="number of log-spaced points")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_mi_feasibility)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="schedkit: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (SchedkitError, UsageError, ValueError, jsonschema.ValidationError) as exc:
        message = getattr(exc, "message", None) or str(exc)
        print(f"schedkit {args.subcommand}: error: {message}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"schedkit {args.subcommand}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
