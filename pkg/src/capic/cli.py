"""Command-line entry point.

Subcommands: ``svd``, ``train``, ``eval``, ``plane``, ``oracle``,
``interpolate``.  All artifact-producing commands honour ``--out`` and
the ``CA_OUTPUT_DIR`` environment variable; ``--seed`` rewrites every
seed in the config deterministically.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import factor_plane as fp
from .datasets import apply_standardization
from .errors import CaError
from .experiment import (
    OUTPUT_DIR_ENV,
    build_dataset,
    category_g_points,
    evaluate_model,
    load_config,
    resolve_config,
    run_eval,
    run_experiment,
)
from .fileio import write_text_atomic
from .model import load_model
from .oracles import (
    BscSpec,
    GaussianPairSpec,
    bsc_sample,
    bsc_spectrum_uniform,
    gaussian_pair_sample,
    multimodal_gaussian_sample,
)


def _out_dir(args, default="."):
    if args.out is not None:
        return Path(args.out)
    import os

    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path(default)


def _cmd_train(args):
    out = run_experiment(args.config, seed=args.seed, out_dir=args.out)
    print(f"artifacts written to {out}")
    return 0


def _cmd_svd(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.pmf:
        cfg = {"version": 1, "mode": "svd", "dataset": {"source": "pmf_csv", "path": args.pmf}}
        if args.plane:
            cfg["planes"] = [args.plane]
    else:
        raise CaError("svd needs --config or --pmf")
    cfg["mode"] = "svd"
    out = run_experiment(cfg, seed=args.seed, out_dir=args.out)
    print(f"artifacts written to {out}")
    return 0


def _cmd_eval(args):
    out = run_eval(args.model, args.config, seed=args.seed, out_dir=args.out)
    print(f"report written to {out / 'pic_report_eval.json'}")
    return 0


def _cmd_plane(args):
    cfg = resolve_config(load_config(args.config), seed=args.seed, out_dir=args.out)
    model = load_model(args.model)
    data = build_dataset(cfg["dataset"])
    train_pf, _ = evaluate_model(model, data)
    y_cat = data.y_kind == "onehot"
    y_labels = list(data.y_labels) if y_cat else None
    plane, svg = fp.export_factor_plane(
        train_pf, args.i, args.j,
        y_points=category_g_points(model, y_labels) if y_cat else None,
        y_labels=y_labels,
    )
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_text_atomic(out / f"plane_{args.i}_{args.j}.svg", svg)
    write_text_atomic(out / f"plane_{args.i}_{args.j}.csv", fp.plane_to_csv(plane))
    print(f"plane written to {out}")
    return 0


def _write_dataset_csv(path, ds):
    import csv as _csv
    import io as _io

    buf = _io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    nx, ny = ds.x.shape[0], ds.y.shape[0]
    writer.writerow([f"x{k}" for k in range(nx)] + [f"y{k}" for k in range(ny)])
    for col in range(ds.n):
        writer.writerow(
            [repr(float(v)) for v in ds.x[:, col]] + [repr(float(v)) for v in ds.y[:, col]]
        )
    write_text_atomic(path, buf.getvalue())


def _cmd_oracle(args):
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "bsc-spectrum":
        spectrum = bsc_spectrum_uniform(args.bits, args.delta)
        lines = ["value,multiplicity"]
        lines += [f"{value!r},{mult}" for value, mult in spectrum]
        path = out / "bsc_spectrum.csv"
        write_text_atomic(path, "\n".join(lines) + "\n")
    elif args.kind == "bsc":
        ds = bsc_sample(BscSpec(args.bits, args.delta, args.p), args.samples, args.seed)
        path = out / "bsc_samples.csv"
        _write_dataset_csv(path, ds)
    elif args.kind == "gaussian":
        ds = gaussian_pair_sample(
            GaussianPairSpec(args.sigma1, args.sigma2, args.samples, args.seed)
        )
        path = out / "gaussian_samples.csv"
        _write_dataset_csv(path, ds)
    elif args.kind == "multimodal":
        ds = multimodal_gaussian_sample(
            mu0=args.mu0, mu1=args.mu1,
            cov=[[args.var, args.cov], [args.cov, args.var]],
            p_mode=args.p_mode, n=args.samples, seed=args.seed,
        )
        path = out / "multimodal_samples.csv"
        _write_dataset_csv(path, ds)
    else:  # pragma: no cover - argparse restricts choices
        raise CaError(f"unknown oracle kind {args.kind}")
    print(f"wrote {path}")
    return 0


def _parse_vector(text):
    try:
        return np.asarray([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise CaError(f"cannot parse vector {text!r}; expected comma-separated floats") from None


def _cmd_interpolate(args):
    model = load_model(args.model)
    start = _parse_vector(args.start)
    end = _parse_vector(args.end)
    std = model.metadata.get("standardization", {}).get("x")
    if std is not None:
        start = apply_standardization(std, start[:, None])[:, 0]
        end = apply_standardization(std, end[:, None])[:, 0]
    path = fp.interpolate_path(model, start, end, args.steps)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    d = path.shape[1]
    lines = ["step," + ",".join(f"f{k}" for k in range(d))]
    lines += [
        f"{idx}," + ",".join(repr(float(v)) for v in row) for idx, row in enumerate(path)
    ]
    target = out / "interpolation.csv"
    write_text_atomic(target, "\n".join(lines) + "\n")
    print(f"wrote {target}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ca",
        description="Correspondence analysis: classical SVD and neural principal functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training experiment from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override every config seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("svd", help="classical decomposition of a table or dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--pmf", default=None, help="joint-table CSV (labels in header/first column)")
    p.add_argument("--plane", type=int, nargs=2, metavar=("I", "J"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_svd)

    p = sub.add_parser("eval", help="re-evaluate a saved model on a config's dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("plane", help="export a factor plane for a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("-i", type=int, required=True)
    p.add_argument("-j", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_plane)

    p = sub.add_parser("oracle", help="emit oracle datasets or exact spectra")
    p.add_argument("kind", choices=["bsc-spectrum", "bsc", "gaussian", "multimodal"])
    p.add_argument("--bits", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--mu0", type=float, nargs=2, default=[5.0, 5.0])
    p.add_argument("--mu1", type=float, nargs=2, default=[-5.0, -5.0])
    p.add_argument("--var", type=float, default=1.0)
    p.add_argument("--cov", type=float, default=0.7)
    p.add_argument("--p-mode", type=float, default=0.5, dest="p_mode")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("interpolate", help="trace a feature-space segment in the factor plane")
    p.add_argument("--model", required=True)
    p.add_argument("--start", required=True, help="comma-separated feature vector")
    p.add_argument("--end", required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_interpolate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
