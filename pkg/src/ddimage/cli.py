"""Command-line entry point: ``ddimage {identify,predict,run,sweep,kernel}``.

Settings come from a TOML file (``--config``; keys are the
:class:`~ddimage.experiment.RunConfig` field names) and are overridden by
command-line flags, ``--set key=value`` included.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .algdiff import build_kernel, frequency_response
from .experiment import (
    RunConfig,
    RunResult,
    StageError,
    default_latent,
    evaluate_prediction,
    identify,
    representation_dict,
    representation_from_dict,
    run_single,
    run_sweep,
    write_dat,
    write_json,
    write_run_artifacts,
)
from .imagerep import predict_trajectory

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _parse_value(text: str):
    # TOML value syntax, so lists, floats and strings need no extra rules
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def build_config(args) -> RunConfig:
    data = load_config(args.config)
    flags = {
        "seeds": args.seeds, "noise_stds": args.noise_stds, "L": args.L, "lambda_reg": args.lambda_reg,
        "output_dir": args.output_dir, "workers": args.workers, "derivatives": args.derivatives,
        "ic": args.ic, "dt": args.dt, "amplitude": args.amplitude, "latent_seed": args.latent_seed,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        data[key.strip()] = _parse_value(value.strip())
    try:
        cfg = RunConfig.from_dict(data)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise SystemExit(f"invalid configuration: {exc}")
    return cfg


def _out_dir(cfg: RunConfig) -> str:
    path = cfg.output_dir or "."
    os.makedirs(path, exist_ok=True)
    return path


def cmd_identify(args) -> int:
    cfg = build_config(args)
    seed, std = cfg.seeds[0], cfg.noise_stds[0]
    result = RunResult(seed, std)
    try:
        ident = identify(cfg, seed, std, 0, result)
    except StageError as exc:
        print(f"identification failed at stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 1
    path = os.path.join(_out_dir(cfg), "M_coeffs.json")
    write_json({"result": result.record(), "representation": representation_dict(ident.representation)}, path)
    print(f"degree {ident.representation.degree}, latent dimension {ident.representation.latent_dim}, "
          f"Gamma rank {result.gamma_rank}/{result.gamma_size} -> {path}")
    return 0


def cmd_predict(args) -> int:
    cfg = build_config(args)
    with open(args.coeffs) as fh:
        data = json.load(fh)
    rep = representation_from_dict(data["representation"] if "representation" in data else data)
    seed = cfg.latent_seed if cfg.latent_seed is not None else cfg.seeds[0]
    ell = default_latent(rep.latent_dim, cfg.latent_freqs, np.random.default_rng(seed))
    out_dir = _out_dir(cfg)
    if args.states:
        result = RunResult(seed, 0.0)
        try:
            sig = evaluate_prediction(cfg, cfg.model(), rep, ell, result)
        except StageError as exc:
            print(f"prediction failed at stage {exc.stage}: {exc.cause}", file=sys.stderr)
            return 1
        pred = sig["prediction"]
        result.signals = sig
        write_run_artifacts(result, out_dir)
        print(f"rel_error {result.rel_error:.6g}, residual {result.residual:.3g}")
    else:
        t0, t1 = cfg.horizon
        n = int(round((t1 - t0) / cfg.dt)) + 1
        pred = predict_trajectory(rep, ell, t0, cfg.dt, n, max_order=0)
    cols = {"t": pred.u.times}
    cols.update({f"u{i + 1}": pred.u.values[i] for i in range(pred.u.n_channels)})
    cols.update({f"y{i + 1}": pred.y.values[i] for i in range(pred.y.n_channels)})
    path = os.path.join(out_dir, "prediction.dat")
    write_dat(path, cols)
    print(f"wrote {path}")
    return 0


def cmd_run(args) -> int:
    cfg = build_config(args)
    cfg = replace(cfg, output_dir=_out_dir(cfg), write_runs=True)
    result = run_single(cfg, cfg.seeds[0], cfg.noise_stds[0])
    rec = result.record()
    for key, val in rec.items():
        print(f"{key:>16}: {val}")
    return 0 if result.ok else 1


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    cfg = replace(cfg, output_dir=_out_dir(cfg))
    results, agg = run_sweep(cfg)
    print(f"{'noise_std':>10} {'runs':>5} {'ok':>5} {'E median':>10} {'E q25':>10} {'E q75':>10} {'SNR median':>11}")
    for row in agg:
        print(f"{row['noise_std']:>10.3g} {row['runs']:>5d} {row['ok']:>5d} {row['rel_error_median']:>10.4g} "
              f"{row['rel_error_q25']:>10.4g} {row['rel_error_q75']:>10.4g} {row['snr_db_median']:>11.2f}")
    print(f"summary written to {os.path.join(cfg.output_dir, 'summary.csv')}")
    return 0


def cmd_kernel(args) -> int:
    cfg = build_config(args)
    spec = cfg.differentiator()
    kernels = [build_kernel(spec, k, cfg.dt) for k in range(args.max_order + 1)]
    out_dir = _out_dir(cfg)
    tau = cfg.dt * np.arange(len(kernels[0]))
    write_dat(os.path.join(out_dir, "kernel_taps.dat"), {"tau": tau, **{f"g{k.order}": k.taps for k in kernels}})
    cols = {}
    for k in kernels:
        f, H = frequency_response(k, args.n_fft)
        cols.setdefault("f", f)
        cols[f"H{k.order}"] = H
    write_dat(os.path.join(out_dir, "kernel_response.dat"), cols)
    print(f"{len(tau)} taps, delay {kernels[0].delay:.6g} s -> {out_dir}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with RunConfig fields")
    common.add_argument("--seeds", type=int, nargs="+", help="run seeds")
    common.add_argument("--noise-stds", type=float, nargs="+", dest="noise_stds", help="output noise levels")
    common.add_argument("--L", type=int, help="Gramian depth (default n+1)")
    common.add_argument("--lambda-reg", type=float, dest="lambda_reg")
    common.add_argument("--dt", type=float, help="sample time")
    common.add_argument("--amplitude", type=float, help="spline knot amplitude")
    common.add_argument("--derivatives", choices=("filtered", "exact"))
    common.add_argument("--ic", choices=("reconstructed", "zero"))
    common.add_argument("--latent-seed", type=int, dest="latent_seed")
    common.add_argument("--workers", type=int)
    common.add_argument("-o", "--output-dir", dest="output_dir")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config field")

    parser = argparse.ArgumentParser(prog="ddimage", description="Data-driven image representations of LTI systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("identify", parents=[common], help="identify M(s) and write its coefficients")
    p.set_defaults(func=cmd_identify)
    p = sub.add_parser("predict", parents=[common], help="predict a trajectory from stored coefficients")
    p.add_argument("coeffs", help="M_coeffs.json written by identify or run")
    p.add_argument("--states", action="store_true", help="also reconstruct states and compare with a simulation")
    p.set_defaults(func=cmd_predict)
    p = sub.add_parser("run", parents=[common], help="single experiment with all artifacts")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", parents=[common], help="seeds x noise levels with summary table")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("kernel", parents=[common], help="differentiator taps and frequency response")
    p.add_argument("--max-order", type=int, default=3, dest="max_order")
    p.add_argument("--n-fft", type=int, default=4096, dest="n_fft")
    p.set_defaults(func=cmd_kernel)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
