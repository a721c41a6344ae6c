"""Command-line interface: ``sect <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from . import gp
from .complex import ComplexError, betti_numbers, euler_characteristic
from .experiment import ExperimentConfig, run_experiment
from .filtration import DEFAULT_DIRECTIONS, DEFAULT_LEVELS, direction_set, ec_curve, vertex_heights
from .ingest import IngestError, load_shape, read_matrix
from .persistence import FiltrationError, compute_barcode, lower_star_filtration, write_barcode_csv
from .synth import generate_synthetic_cohort
from .transform import ProfileMismatch, SECTProfile, sect, sect_distance, write_curve_csv

EXIT_INPUT = 3
EXIT_NUMERIC = 4
EXIT_USAGE = 2


def parse_direction(text: str, dim: int) -> np.ndarray:
    """Angle in degrees (planar shapes) or comma-separated vector, normalized."""
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) == 1:
        if dim != 2:
            raise ValueError("an angle only defines a direction for planar shapes; pass a vector")
        phi = math.radians(float(parts[0]))
        return np.array([math.cos(phi), math.sin(phi)])
    v = np.array([float(p) for p in parts])
    if v.size != dim:
        raise ValueError(f"direction has {v.size} components but the shape lives in R^{dim}")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("direction must be nonzero")
    return v / norm


def _emit(obj, out):
    text = json.dumps(obj, indent=1)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_compute(args):
    K = load_shape(args.input, args.spacing)
    profile = sect(K, direction_set(args.directions, K.dim), args.levels, source=str(args.input))
    if args.out:
        profile.save(args.out)
    else:
        print(json.dumps(profile.to_json()))


def cmd_curve(args):
    K = load_shape(args.input, args.spacing)
    nu = parse_direction(args.direction, K.dim)
    curve = ec_curve(K, nu, args.levels)
    write_curve_csv(curve, args.out or sys.stdout)


def cmd_distance(args):
    print(repr(sect_distance(SECTProfile.load(args.a), SECTProfile.load(args.b))))


def cmd_barcode(args):
    K = load_shape(args.input, args.spacing)
    nu = parse_direction(args.direction, K.dim)
    bars = compute_barcode(lower_star_filtration(K, vertex_heights(K, nu)))
    write_barcode_csv(bars, args.out or sys.stdout, drop_zero_length=args.drop_zero)


def cmd_info(args):
    K = load_shape(args.input, args.spacing)
    print(json.dumps({"counts": list(K.counts), "euler": euler_characteristic(K), "betti": betti_numbers(K)}))


def _xy(path, response):
    ids, names, X = read_matrix(path)
    if response not in names:
        return ids, X, None, names
    j = names.index(response)
    return ids, np.delete(X, j, axis=1), X[:, j], names[:j] + names[j + 1:]


def cmd_gp(args):
    ids_tr, X_tr, y_tr, names_tr = _xy(args.train, args.response)
    ids_te, X_te, y_te, names_te = _xy(args.test, args.response)
    if y_tr is None:
        raise IngestError(f"{args.train}: no response column named {args.response!r}")
    if names_tr != names_te:
        raise IngestError("train and test tables have different feature columns")
    mu, sd = y_tr.mean(), y_tr.std()
    if sd == 0:
        raise ValueError("training response is constant")
    ys = (y_tr - mu) / sd
    scaler = gp.FeatureScaler(not args.raw_features, not args.raw_features).fit(X_tr, args.kernel)
    Xs, Xt = scaler.transform(X_tr), scaler.transform(X_te)
    theta = None
    if args.kernel != "linear":
        theta = args.theta
        if args.cv:
            theta = gp.cv_bandwidth(args.kernel, Xs, ys, args.folds, gp.default_grid(), args.tau2, args.seed)
        if theta is None:
            raise ValueError(f"{args.kernel} kernel needs --theta or --cv")
    model = gp.fit(gp.KernelSpec(args.kernel, theta, Xs.shape[1]), args.tau2, Xs, ys)
    mean, cov = gp.posterior_predict(model, Xt)
    var = gp.predictive_variance(cov)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["id", "mean", "variance"])
        for sid, m, v in zip(ids_te, mean * sd + mu, var * sd * sd):
            w.writerow([sid, repr(float(m)), repr(float(v))])
    finally:
        if args.out:
            out.close()
    summary = {**model.to_json(), "seed": args.seed, "cv": bool(args.cv)}
    if y_te is not None and len(y_te) >= 2:
        pred = mean * sd + mu
        summary["rmsep"] = gp.rmsep((y_te - mu) / sd, mean)
        try:
            summary["r2"] = gp.r_squared(y_te, pred)
        except ValueError:
            summary["r2"] = None
    if args.model_out:
        _emit(summary, args.model_out)
    print(json.dumps(summary), file=sys.stderr)


def cmd_experiment(args):
    config = ExperimentConfig.from_file(args.config)
    if args.out:
        config.output_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    report = run_experiment(config, args.workers)
    print(report.format_table())


def cmd_synth(args):
    path = generate_synthetic_cohort(args.n, args.seed, args.out, slices=args.slices)
    print(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sect", description="Smooth Euler characteristic transform toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def shape_args(p):
        p.add_argument("--input", required=True, help="mask (.pgm/.csv), mesh (.off) or complex dump (.json)")
        p.add_argument("--spacing", type=float, default=1.0, help="pixel spacing for masks")

    p = sub.add_parser("compute", help="SECT profile of one shape")
    shape_args(p)
    p.add_argument("--directions", type=int, default=DEFAULT_DIRECTIONS)
    p.add_argument("--levels", type=int, default=DEFAULT_LEVELS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("curve", help="EC / centred / smooth curve for one direction")
    shape_args(p)
    p.add_argument("--direction", required=True, help="angle in degrees or comma-separated vector")
    p.add_argument("--levels", type=int, default=DEFAULT_LEVELS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("distance", help="SECT distance between two saved profiles")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("barcode", help="sublevel-set persistence barcode for one direction")
    shape_args(p)
    p.add_argument("--direction", required=True)
    p.add_argument("--drop-zero", action="store_true", help="omit zero-length bars")
    p.add_argument("--out")
    p.set_defaults(func=cmd_barcode)

    p = sub.add_parser("info", help="simplex counts, Euler characteristic and Betti numbers")
    shape_args(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("gp", help="fit a GP on one table and predict another")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--response", default="y")
    p.add_argument("--kernel", choices=gp.FAMILIES, default="gaussian")
    p.add_argument("--theta", type=float)
    p.add_argument("--cv", action="store_true", help="choose theta by cross-validation")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--tau2", type=float, default=gp.DEFAULT_NOISE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw-features", action="store_true", help="skip feature standardization")
    p.add_argument("--out")
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_gp)

    p = sub.add_parser("experiment", help="repeated-split evaluation from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="override output_dir")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="write a synthetic mask cohort")
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--slices", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (IngestError, ComplexError, OSError) as exc:
        print(f"sect: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except np.linalg.LinAlgError as exc:
        print(f"sect: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, ProfileMismatch, FiltrationError) as exc:
        print(f"sect: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
