"""Command-line front end.

Subcommands:

* ``estimate``  -- closed-form unbiased estimate from a data file
* ``verify``    -- quadrature unbiasedness sweep (or Tate-bias reproduction)
* ``compare``   -- variance comparison of the two pth-moment estimators
* ``clt``       -- standardized-replicate normality diagnostics

Every output (JSON or CSV) embeds the run manifest, and identical manifests
produce byte-identical outputs: no timestamps, explicit seeds only.

Exit codes: 0 success, 1 verification threshold exceeded, 2 input error,
3 domain/spec error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .errors import (DomainError, ExpunbiasError, InversionError,
                     QuadratureError, RangeError, SpecError)
from .estimators import (FunctionalSpec, Kind, Sample, estimate,
                         target_value)
from .montecarlo import McConfig, clt_check, variance_comparison
from .oracle import verify_tate_bias, verify_unbiasedness

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_DOMAIN = 3
EXIT_NUMERICAL = 4

_KIND_NAMES = {k.value: k for k in Kind if k is not Kind.CUSTOM}


class _InputError(Exception):
    pass


@dataclass
class RunManifest:
    """Reproducibility record serialized into every output."""

    command: str
    parameters: dict
    input_path: Optional[str] = None
    seed: Optional[int] = None
    output_format: str = "json"
    tool_version: str = field(default=__version__)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "input_path": self.input_path,
            "seed": self.seed,
            "output_format": self.output_format,
            "tool_version": self.tool_version,
        }


def read_observations(path: str) -> list[float]:
    """Parse a data file: one strictly positive decimal per line; blank
    lines ignored; '#'-prefixed lines are comments."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise _InputError(f"cannot read data file {path!r}: {exc}") from exc
    values = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 1:
            raise _InputError(f"{path}:{lineno}: expected one value per line, got {line!r}")
        try:
            v = float(tokens[0])
        except ValueError:
            raise _InputError(f"{path}:{lineno}: not a number: {tokens[0]!r}") from None
        if not (math.isfinite(v) and v > 0.0):
            raise _InputError(f"{path}:{lineno}: observations must be strictly positive, "
                              f"got {tokens[0]!r}")
        values.append(v)
    if not values:
        raise _InputError(f"{path}: no observations found")
    return values


def _spec_from_args(args) -> FunctionalSpec:
    kind = _KIND_NAMES[args.kind]
    kwargs = {}
    if kind in (Kind.RATE_POWER, Kind.MOMENT, Kind.EXPECTED_SHORTFALL):
        if args.p is None:
            raise SpecError(f"{args.kind} requires --p")
        kwargs["p"] = args.p
    if kind is Kind.QUANTILE:
        if args.q is None:
            raise SpecError("quantile requires --q")
        kwargs["q"] = args.q
    if kind in (Kind.SURVIVAL, Kind.MAX_CDF_POWER, Kind.MIN_SURVIVAL,
                Kind.PDF, Kind.MEAN_PAST_LIFETIME, Kind.MGF):
        if args.t is None:
            raise SpecError(f"{args.kind} requires --t")
        kwargs["t"] = args.t
    if kind in (Kind.MAX_CDF_POWER, Kind.MIN_SURVIVAL):
        if args.m is None:
            raise SpecError(f"{args.kind} requires --m")
        kwargs["m"] = args.m
    return FunctionalSpec(kind, **kwargs)


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _render(manifest: RunManifest, rows: list[dict]) -> str:
    if manifest.output_format == "json":
        doc = {"manifest": manifest.to_dict(), "results": rows}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    # RFC-4180-style CSV: header row, quoted where needed; the manifest is
    # carried in a dedicated column so each row is self-describing.
    manifest_json = json.dumps(manifest.to_dict(), sort_keys=True)
    fieldnames = sorted({k for row in rows for k in row}) + ["manifest"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = {k: row.get(k, "") for k in fieldnames[:-1]}
        out["manifest"] = manifest_json
        writer.writerow(out)
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_estimate(args) -> int:
    spec = _spec_from_args(args)
    observations = read_observations(args.data)
    sample = Sample(observations)
    if args.engine == "closed":
        result = estimate(spec, sample)
    else:
        # generic Laplace-inversion path over the built-in transform registry
        from .laplace import (InversionConfig, InversionMethod,
                              builtin_transfer_function,
                              generic_unbiased_estimate)
        method = (InversionMethod.TALBOT if args.engine == "talbot"
                  else InversionMethod.GAVER_STEHFEST)
        result = generic_unbiased_estimate(
            builtin_transfer_function(spec), sample,
            InversionConfig(method=method), spec=spec)
    manifest = RunManifest("estimate",
                           {"kind": args.kind, **spec.params(),
                            "engine": args.engine},
                           input_path=args.data, output_format=args.format)
    rows = [{
        "value": result.value,
        "kind": args.kind,
        **spec.params(),
        "n": result.n,
        "family": result.estimator_family.value,
    }]
    _emit(_render(manifest, rows), args.out)
    return EXIT_OK


_DEFAULT_VERIFY_KINDS = [k.value for k in Kind if k is not Kind.CUSTOM]
_TATE_KIND_NAMES = ["rate-power", "quantile", "max-cdf-power"]


def _verify_specs(kind: Kind, args) -> list[FunctionalSpec]:
    if kind is Kind.RATE_POWER:
        return [FunctionalSpec(kind, p=args.p)]
    if kind is Kind.MOMENT:
        return [FunctionalSpec(kind, p=args.moment_p)]
    if kind is Kind.EXPECTED_SHORTFALL:
        return [FunctionalSpec(kind, p=args.q)]
    if kind is Kind.QUANTILE:
        return [FunctionalSpec(kind, q=args.q)]
    if kind in (Kind.SURVIVAL, Kind.PDF, Kind.MEAN_PAST_LIFETIME, Kind.MGF):
        return [FunctionalSpec(kind, t=args.t)]
    return [FunctionalSpec(kind, t=args.t, m=args.m)]


def _cmd_verify(args) -> int:
    n_grid = [int(v) for v in args.n.split(",")]
    lam_grid = [float(v) for v in getattr(args, "lambda").split(",")]
    kinds = args.kinds.split(",") if args.kinds else (
        _TATE_KIND_NAMES if args.tate else _DEFAULT_VERIFY_KINDS)
    for name in kinds:
        if name not in _KIND_NAMES:
            raise SpecError(f"unknown kind {name!r}")

    cells = []
    for name in kinds:
        kind = _KIND_NAMES[name]
        if args.tate and name not in _TATE_KIND_NAMES:
            raise SpecError(f"--tate supports only {', '.join(_TATE_KIND_NAMES)}")
        for spec in _verify_specs(kind, args):
            for n in n_grid:
                if kind is Kind.PDF and n < 2:
                    continue
                if args.tate and n < 2:
                    continue
                if kind is Kind.RATE_POWER and spec.p >= (n - 1 if args.tate else n):
                    continue
                for lam in lam_grid:
                    if kind is Kind.MGF and spec.t >= lam:
                        continue
                    cells.append((name, spec, n, lam))

    def run_cell(cell):
        name, spec, n, lam = cell
        if args.tate:
            report = verify_tate_bias(spec, n, lam, rel_tol=args.rel_tol)
            corrected = target_value(spec, lam)
            delta = report.target - corrected
        else:
            report = verify_unbiasedness(spec, n, lam, rel_tol=args.rel_tol)
            delta = None
        row = {
            "kind": name,
            **spec.params(),
            "n": n,
            "lambda": lam,
            "target": report.target,
            "oracle_expectation": report.oracle_expectation,
            "abs_bias": report.abs_bias,
            "rel_bias": report.rel_bias,
            "quad_err": report.quad_abs_err_estimate,
            "family": report.estimator_family.value,
        }
        if delta is not None:
            row["tate_minus_corrected"] = delta
        return row

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]

    manifest = RunManifest("verify", {
        "kinds": ",".join(kinds), "n": args.n, "lambda": getattr(args, "lambda"),
        "p": args.p, "moment_p": args.moment_p, "q": args.q, "t": args.t,
        "m": args.m, "rel_tol": args.rel_tol, "threshold": args.threshold,
        "tate": bool(args.tate),
    }, output_format=args.format)
    _emit(_render(manifest, rows), args.out)
    ok = all(row["rel_bias"] < args.threshold for row in rows)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def _cmd_compare(args) -> int:
    config = McConfig(args.reps, args.n, getattr(args, "lambda"), args.seed,
                      parallel_chunks=args.jobs)
    emp_unbiased, emp_mle, closed_unbiased, closed_mle = \
        variance_comparison(args.p, config)
    manifest = RunManifest("compare", {
        "p": args.p, "n": args.n, "lambda": getattr(args, "lambda"),
        "reps": args.reps,
    }, seed=args.seed, output_format=args.format)
    rows = [{
        "p": args.p, "n": args.n, "lambda": getattr(args, "lambda"),
        "closed_unbiased": closed_unbiased,
        "closed_mle": closed_mle,
        "empirical_unbiased": emp_unbiased.variance,
        "empirical_mle": emp_mle.variance,
        "empirical_unbiased_mean": emp_unbiased.mean,
        "empirical_mle_mean": emp_mle.mean,
        "replications": emp_unbiased.replications,
    }]
    _emit(_render(manifest, rows), args.out)
    return EXIT_OK


def _cmd_clt(args) -> int:
    spec = _spec_from_args(args)
    config = McConfig(args.reps, args.n, getattr(args, "lambda"), args.seed,
                      parallel_chunks=args.jobs)
    summary = clt_check(spec, config)
    manifest = RunManifest("clt", {
        "kind": args.kind, **spec.params(), "n": args.n,
        "lambda": getattr(args, "lambda"), "reps": args.reps,
        "hist_bins": args.hist_bins,
    }, seed=args.seed, output_format=args.format)
    skew, exkurt = summary.standardized_moments
    rows = [{
        "kind": args.kind, **spec.params(), "n": args.n,
        "lambda": getattr(args, "lambda"),
        "mean": summary.mean, "variance": summary.variance,
        "std_error": summary.std_error, "replications": summary.replications,
        "ks_statistic": summary.ks_statistic,
        "skewness": skew, "excess_kurtosis": exkurt,
    }]
    _emit(_render(manifest, rows), args.out)
    if args.hist:
        _emit(_histogram_csv(spec, config, args.hist_bins), args.hist)
    return EXIT_OK


def _histogram_csv(spec: FunctionalSpec, config: McConfig, bins: int) -> str:
    # binned standardized replicates on fixed [-6, 6] edges for plotting
    from .estimators import phi_function
    from .montecarlo import _collect, asymptotic_variance

    sigma2 = asymptotic_variance(spec, config.n, config.lam)
    xi = target_value(spec, config.lam)
    phi = phi_function(spec, config.n)
    scale = math.sqrt(config.n / sigma2)
    z, = _collect(config, lambda x: ((phi(x.mean(axis=1)) - xi) * scale,), 1)
    edges = np.linspace(-6.0, 6.0, bins + 1)
    counts, _ = np.histogram(z, bins=edges)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_left", "bin_right", "count"])
    writer.writerow(["-inf", edges[0], int(np.sum(z < edges[0]))])
    for i in range(bins):
        writer.writerow([edges[i], edges[i + 1], int(counts[i])])
    writer.writerow([edges[-1], "inf", int(np.sum(z >= edges[-1]))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expunbias",
        description="Unbiased estimation of exponential-rate functionals, "
                    "with built-in verification oracles.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--jobs", type=int, default=1)

    p_est = sub.add_parser("estimate", help="estimate a functional from data")
    p_est.add_argument("--kind", required=True, choices=sorted(_KIND_NAMES))
    p_est.add_argument("--p", type=float)
    p_est.add_argument("--q", type=float)
    p_est.add_argument("--t", type=float)
    p_est.add_argument("--m", type=int)
    p_est.add_argument("--data", required=True, help="one positive value per line")
    p_est.add_argument("--engine", choices=("closed", "talbot", "gaver-stehfest"),
                       default="closed",
                       help="closed form (default) or numeric Laplace inversion")
    add_common(p_est)
    p_est.set_defaults(func=_cmd_estimate)

    p_ver = sub.add_parser("verify", help="quadrature unbiasedness sweep")
    p_ver.add_argument("--kinds", help="comma-separated kinds (default: all)")
    p_ver.add_argument("--n", default="2,5,10", help="comma-separated sample sizes")
    p_ver.add_argument("--lambda", default="1.0", help="comma-separated rates")
    p_ver.add_argument("--p", type=float, default=0.5, help="rate-power exponent")
    p_ver.add_argument("--moment-p", type=float, default=2.0, help="moment exponent")
    p_ver.add_argument("--q", type=float, default=0.5, help="quantile/shortfall level")
    p_ver.add_argument("--t", type=float, default=0.5, help="time argument")
    p_ver.add_argument("--m", type=int, default=2, help="number of copies")
    p_ver.add_argument("--rel-tol", type=float, default=1e-9)
    p_ver.add_argument("--threshold", type=float, default=1e-7,
                       help="maximum acceptable relative bias")
    p_ver.add_argument("--tate", action="store_true",
                       help="verify the biased 1959 estimators against their "
                            "closed-form expectations instead")
    add_common(p_ver)
    p_ver.set_defaults(func=_cmd_verify)

    p_cmp = sub.add_parser("compare", help="variance comparison for the pth moment")
    p_cmp.add_argument("--p", type=float, required=True)
    p_cmp.add_argument("--n", type=int, required=True)
    p_cmp.add_argument("--lambda", type=float, required=True)
    p_cmp.add_argument("--reps", type=int, default=100000)
    p_cmp.add_argument("--seed", type=int, default=0)
    add_common(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    p_clt = sub.add_parser("clt", help="normality diagnostics of standardized replicates")
    p_clt.add_argument("--kind", required=True, choices=sorted(_KIND_NAMES))
    p_clt.add_argument("--p", type=float)
    p_clt.add_argument("--q", type=float)
    p_clt.add_argument("--t", type=float)
    p_clt.add_argument("--m", type=int)
    p_clt.add_argument("--n", type=int, required=True)
    p_clt.add_argument("--lambda", type=float, required=True)
    p_clt.add_argument("--reps", type=int, default=100000)
    p_clt.add_argument("--seed", type=int, default=0)
    p_clt.add_argument("--hist", help="write a CSV histogram of the replicates here")
    p_clt.add_argument("--hist-bins", type=int, default=100)
    add_common(p_clt)
    p_clt.set_defaults(func=_cmd_clt)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QuadratureError, InversionError, RangeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpecError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ExpunbiasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
