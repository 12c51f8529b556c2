"""Command-line entry points: verification suites, obstruction reports from
metric jets, and far-field decay tables.

Subcommands
-----------
verify    run named check suites for a (k, lambda) configuration
obstruct  evaluate the obstruction pipeline on a jet input file
asympt    emit a CSV table of far-field deviations and fitted exponents

The environment variable ALE_LAB_THREADS caps the numerical backends'
thread pools; it is applied before any numerical module is imported, which
is why all heavy imports happen inside the handlers.  JSON reports carry
"schema_version": 1 and contain no timing data, so reruns with equal
arguments are byte-identical; durations go to the human-readable output
only.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

SCHEMA_VERSION = 1

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

_OVERRIDE_KEYS = {
    "volSigma": "vol_sigma",
    "omegaNorm2": "omega_norm2",
    "intMomega": "int_m_omega",
    "mP1": "m_p1",
}


def _configure_threads() -> None:
    cap = os.environ.get("ALE_LAB_THREADS")
    if not cap:
        return
    for var in _THREAD_VARS:
        os.environ[var] = cap


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    from . import suites
    from .errors import AleLabError

    names = list(suites.SUITE_NAMES) if args.suite == "all" else [args.suite]
    try:
        results = suites.run_suites(names, args.k, args.lam,
                                    tol_scale=args.tol)
    except (AleLabError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    for res in results:
        print(f"suite {res.suite} (k={args.k}, lambda={args.lam:g}):")
        for line in res.lines():
            print(line)
    all_pass = all(r.passed for r in results)
    total = sum(r.duration_s for r in results)
    print(f"verify: {'PASS' if all_pass else 'FAIL'} "
          f"({sum(len(r.checks) for r in results)} checks, {total:.2f}s)")

    if args.report:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": "verify",
            "k": args.k,
            "lambda": args.lam,
            "tol_scale": args.tol,
            "passed": all_pass,
            "suites": [r.to_dict(include_duration=False) for r in results],
        }
        _emit(_json_text(payload), args.report)
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# obstruct
# ---------------------------------------------------------------------------


def _require(mapping: dict, key: str, kind, path: str):
    from .errors import SchemaError

    if key not in mapping:
        raise SchemaError(f"{path}.{key}: missing required field")
    value = mapping[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise SchemaError(
            f"{path}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _load_jet_input(path: str):
    import numpy as np

    from . import jets
    from .errors import SchemaError, SymmetryError

    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"jet file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"jet file: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise SchemaError("jet file: top level must be an object")

    k = raw.get("k")
    if k is not None and (not isinstance(k, int) or k < 1):
        raise SchemaError(f"k: expected positive integer, got {k!r}")
    lam = raw.get("lambda", 1.0)
    if isinstance(lam, int):
        lam = float(lam)
    if not isinstance(lam, float) or not math.isfinite(lam) or lam <= 0:
        raise SchemaError(f"lambda: expected positive number, got {lam!r}")

    h_raw = raw.get("H")
    if h_raw is None:
        raise SchemaError("H: missing required field")
    try:
        h_arr = np.asarray(h_raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"H: non-numeric entries ({exc})") from exc
    if h_arr.shape != (4, 4, 4, 4):
        raise SchemaError(f"H: expected shape [4][4][4][4], got {list(h_arr.shape)}")
    try:
        jet = jets.Jet2.from_array(h_arr)
    except SymmetryError as exc:
        raise SchemaError(f"H: {exc}") from exc

    quartic = None
    if raw.get("H2") is not None:
        try:
            h2_arr = np.asarray(raw["H2"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"H2: non-numeric entries ({exc})") from exc
        if h2_arr.shape != (4, 4, 4, 4, 4, 4):
            raise SchemaError(
                f"H2: expected shape [4][4][4][4][4][4], got {list(h2_arr.shape)}")
        try:
            quartic = jets.Jet4.from_array(h2_arr)
        except SymmetryError as exc:
            raise SchemaError(f"H2: {exc}") from exc

    overrides = None
    if raw.get("constants_override") is not None:
        block = raw["constants_override"]
        if not isinstance(block, dict):
            raise SchemaError("constants_override: expected an object")
        overrides = {}
        for key, value in block.items():
            if key not in _OVERRIDE_KEYS:
                raise SchemaError(
                    f"constants_override.{key}: unknown key "
                    f"(expected one of {sorted(_OVERRIDE_KEYS)})")
            if isinstance(value, int):
                value = float(value)
            if not isinstance(value, float) or not math.isfinite(value):
                raise SchemaError(
                    f"constants_override.{key}: expected finite number, got {value!r}")
            overrides[_OVERRIDE_KEYS[key]] = value

    gauge = raw.get("gauge_project", False)
    if not isinstance(gauge, bool):
        raise SchemaError(
            f"gauge_project: expected boolean, got {type(gauge).__name__}")
    return jet, quartic, k, lam, overrides, gauge


def cmd_obstruct(args: argparse.Namespace) -> int:
    from .errors import AleLabError, SchemaError

    try:
        jet, quartic, k, lam, overrides, gauge = _load_jet_input(args.jet)
        from . import obstruction

        report = obstruction.compute_report(
            jet, quartic=quartic, k=k, lam=lam, overrides=overrides,
            apply_gauge=gauge)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (AleLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    payload = {"schema_version": SCHEMA_VERSION, "command": "obstruct"}
    payload.update(report.to_dict())
    _emit(_json_text(payload), args.report)
    det_bold = obstruction.bold_det_from_block(report.Rplus_block)
    print(f"wall side: {report.wall_side} "
          f"(det of the negated block = {det_bold:.6g})")
    return 0


# ---------------------------------------------------------------------------
# asympt
# ---------------------------------------------------------------------------


def cmd_asympt(args: argparse.Namespace) -> int:
    from .errors import AleLabError, FitUnstable

    radii = [r for r in (tok.strip() for tok in args.radii.split(",")) if r]
    if not radii:
        print("configuration error: --radii is empty", file=sys.stderr)
        return 2
    try:
        radii_f = [float(r) for r in radii]
    except ValueError as exc:
        print(f"configuration error: --radii: {exc}", file=sys.stderr)
        return 2
    if any(not math.isfinite(r) or r <= 0 for r in radii_f):
        print("configuration error: --radii entries must be positive",
              file=sys.stderr)
        return 2

    from . import gh, harmonic

    try:
        config = gh.GHConfig.canonical(args.k, args.lam)
        # the table is indexed by the asymptotic (cone) radius; convert to
        # base radii for the profile sampler
        k1 = args.k + 1
        rho = [r * r / (2.0 * k1) for r in sorted(radii_f)]
        profiles = harmonic.decay_profiles(config, rho)
    except (AleLabError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    flag = ""
    slopes = {"metric": "", "moment": "", "omega": ""}
    if len(profiles) >= 2:
        try:
            slopes = harmonic.decay_exponents(profiles)
        except (FitUnstable, ValueError):
            flag = "fit-unstable"
    else:
        flag = "fit-unstable"

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "r", "metric_deviation", "moment_deviation", "omega_profile_coeff",
        "metric_exponent", "moment_exponent", "omega_exponent", "flag",
    ])
    for prof in profiles:
        writer.writerow([
            f"{prof.r:.12g}",
            f"{prof.metric_deviation:.12g}",
            f"{prof.moment_deviation:.12g}",
            f"{prof.omega_profile_coeff:.12g}",
            "" if flag else f"{slopes['metric']:.12g}",
            "" if flag else f"{slopes['moment']:.12g}",
            "" if flag else f"{slopes['omega']:.12g}",
            flag,
        ])
    _emit(buf.getvalue(), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ale-lab",
        description="Verification suites and obstruction reports for "
                    "multi-center gravitational instanton geometry.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run check suites")
    p_verify.add_argument("--k", type=int, default=1,
                          help="number of coincident far centers (default 1)")
    p_verify.add_argument("--lambda", dest="lam", type=float, default=1.0,
                          help="center separation scale (default 1.0)")
    p_verify.add_argument("--suite", default="all",
                          choices=["gh", "harmonic", "quadrature",
                                   "deformation", "all"])
    p_verify.add_argument("--tol", type=float, default=1.0,
                          help="global tolerance scale applied to every "
                               "check (default 1.0)")
    p_verify.add_argument("--report", default=None,
                          help="write a deterministic JSON report here")
    p_verify.set_defaults(func=cmd_verify)

    p_obstruct = sub.add_parser("obstruct",
                                help="obstruction report from a jet file")
    p_obstruct.add_argument("--jet", required=True,
                            help="path to the JSON jet input")
    p_obstruct.add_argument("--report", default=None,
                            help="write the JSON report here instead of stdout")
    p_obstruct.set_defaults(func=cmd_obstruct)

    p_asympt = sub.add_parser("asympt",
                              help="far-field decay table as CSV")
    p_asympt.add_argument("--k", type=int, default=1)
    p_asympt.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_asympt.add_argument("--radii", required=True,
                          help="comma-separated asymptotic radii")
    p_asympt.add_argument("--out", default=None,
                          help="write the CSV here instead of stdout")
    p_asympt.set_defaults(func=cmd_asympt)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "k", 1) < 1:
        print("configuration error: --k must be >= 1", file=sys.stderr)
        return 2
    if getattr(args, "lam", 1.0) <= 0:
        print("configuration error: --lambda must be positive", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
