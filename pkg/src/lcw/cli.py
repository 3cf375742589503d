"""Command-line driver: training, sampling, interpolation, evaluation, distances.

Exit codes: 0 success, 2 config error, 3 data error, 4 incompatible
checkpoint/dims.  LCW_THREADS caps internal parallelism (BLAS and the
oracle kernels) and must be honored before numpy loads, hence the env
setup at the top.
"""

from __future__ import annotations

import os

_threads = os.environ.get("LCW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMBA_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import load_run_config
from .cwdist import cw2_to_gaussian, cw2_two_samples, sliced_wasserstein
from .datasets import load_points_file, save_batch
from .errors import CompatibilityError, ConfigError, DataError, ShapeError
from .evaluation import eval_suite, interpolate, nearest_latent_distance
from .nets import forward
from .autodiff import DiffValue
from .plots import pgm_grid, svg_scatter
from .training import (sample, sample_generator, train_direct_generator,
                       train_stage1, train_stage2)

METRICS_HEADER = "epoch,loss,rec_term,latent_term,frechet_prior,wall_s"
EVAL_HEADER = "label,rec_mse,latent_d2,frechet_prior,frechet_lcw,covered_modes"


def _write_metrics(path, records) -> None:
    with open(path, "w") as f:
        f.write(METRICS_HEADER + "\n")
        for r in records:
            f.write(f"{r.epoch},{r.loss!r},{r.rec_term!r},{r.latent_term!r},"
                    f"{r.frechet_prior!r},{r.wall_s!r}\n")


def _image_side(data_dim: int) -> int | None:
    side = int(math.isqrt(data_dim))
    return side if side * side == data_dim and side >= 4 else None


def _dataset_from_echo(config_echo: dict):
    """Rebuild the training dataset from a checkpoint's config echo, if possible."""
    from .config import RunConfig

    if not config_echo.get("dataset"):
        return None
    try:
        return RunConfig(dataset=config_echo["dataset"]).build_dataset()
    except (ConfigError, DataError, FileNotFoundError):
        return None


def _emit_samples(prefix: Path, data: np.ndarray) -> list[str]:
    written = [str(prefix) + ".lcwb"]
    save_batch(data, written[0])
    if data.shape[1] == 2:
        svg_scatter(str(prefix) + ".svg", [data], title=prefix.name)
        written.append(str(prefix) + ".svg")
    else:
        side = _image_side(data.shape[1])
        if side is not None:
            pgm_grid(str(prefix) + ".pgm", data[:100], side)
            written.append(str(prefix) + ".pgm")
    return written


def cmd_train_stage1(args) -> int:
    run = load_run_config(args.config)
    cfg = run.stage1_config(args.objective)
    ds = run.build_dataset()
    bundle, records = train_stage1(ds, cfg)

    out_dir = Path(args.out_dir or run.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{run.preset}_{cfg.objective}"
    ckpt_path = out_dir / f"{stem}.ckpt.json"
    save_checkpoint(ckpt_path, "bundle",
                    {"encoder": bundle.encoder, "decoder": bundle.decoder},
                    run.echo(), records, cfg.seed)
    _write_metrics(out_dir / f"{stem}.metrics.csv", records)

    if cfg.latent_dim == 2 and len(ds.val_data):
        encoded = forward(bundle.encoder, DiffValue(ds.val_data), "eval").value
        svg_scatter(out_dir / f"{stem}.encoded_val.svg", [encoded],
                    title=f"{stem} encoded validation data")
    print(f"wrote {ckpt_path}")
    return 0


def cmd_train_stage2(args) -> int:
    run = load_run_config(args.config)
    ck = load_checkpoint(args.ckpt)
    bundle = ck.bundle()
    cfg = run.stage2_config()
    ds = run.build_dataset()
    if ds.dim != bundle.data_dim:
        raise CompatibilityError(
            f"dataset dim {ds.dim} does not match checkpoint data dim {bundle.data_dim}")
    bundle, records = train_stage2(ds, bundle, cfg)

    out_dir = Path(args.out_dir or run.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.ckpt).name.replace(".ckpt.json", "") + "_lt"
    ckpt_path = out_dir / f"{stem}.ckpt.json"
    save_checkpoint(ckpt_path, "bundle",
                    {"encoder": bundle.encoder, "decoder": bundle.decoder,
                     "latent_generator": bundle.latent_generator},
                    run.echo(), list(ck.metrics) + records, cfg.seed)
    _write_metrics(out_dir / f"{stem}.metrics.csv", records)

    if bundle.latent_dim == 2:
        rng = np.random.default_rng(cfg.seed)
        noise = rng.standard_normal((2000, bundle.noise_dim))
        transported = forward(bundle.latent_generator, DiffValue(noise), "eval").value
        svg_scatter(out_dir / f"{stem}.lg_latent.svg", [transported],
                    title=f"{stem} noise transported to latent")
    print(f"wrote {ckpt_path}")
    return 0


def cmd_train_generator(args) -> int:
    run = load_run_config(args.config)
    cfg = run.generator_config(args.distance, args.sw_dirs)
    ds = run.build_dataset()
    gen, records = train_direct_generator(ds, cfg)

    out_dir = Path(args.out_dir or run.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{run.preset}_{args.distance or 'cw'}gen"
    ckpt_path = out_dir / f"{stem}.ckpt.json"
    save_checkpoint(ckpt_path, "generator", {"generator": gen},
                    run.echo(), records, cfg.seed)
    _write_metrics(out_dir / f"{stem}.metrics.csv", records)
    _emit_samples(out_dir / f"{stem}.samples", sample_generator(gen, 1000, cfg.seed))
    print(f"wrote {ckpt_path}")
    return 0


def cmd_sample(args) -> int:
    ck = load_checkpoint(args.ckpt)
    if args.path == "gen":
        data = sample_generator(ck.generator(), args.n, args.seed)
    else:
        data = sample(ck.bundle(), args.n, args.seed, path=args.path)
    if args.out:
        prefix = Path(args.out)
    else:
        stem = Path(args.ckpt).name.replace(".ckpt.json", "")
        prefix = Path(args.ckpt).parent / f"{stem}_samples_{args.path}"
    for name in _emit_samples(prefix, data):
        print(f"wrote {name}")
    return 0


def cmd_interpolate(args) -> int:
    ck = load_checkpoint(args.ckpt)
    bundle = ck.bundle()
    lg = bundle.require_latent_generator()
    rng = np.random.default_rng(args.seed)
    z_start = rng.standard_normal(lg.spec.input_dim)
    z_end = rng.standard_normal(lg.spec.input_dim)
    mode = "linear_latent" if args.mode == "linear" else "density_based"
    path_req = interpolate(bundle, z_start, z_end, args.steps, mode)
    path_lin = interpolate(bundle, z_start, z_end, args.steps, "linear_latent")
    path_den = interpolate(bundle, z_start, z_end, args.steps, "density_based")

    prefix = Path(args.out) if args.out else \
        Path(args.ckpt).parent / (Path(args.ckpt).name.replace(".ckpt.json", "")
                                  + f"_interp_{args.mode}")
    written = []
    if bundle.latent_dim == 2:
        rng2 = np.random.default_rng(args.seed + 1)
        cloud = forward(lg, DiffValue(rng2.standard_normal((1500, lg.spec.input_dim))),
                        "eval").value
        svg_scatter(str(prefix) + ".svg", [cloud],
                    lines=[path_lin.latents, path_den.latents],
                    title="latent paths: linear (red), density (green)")
        written.append(str(prefix) + ".svg")
    side = _image_side(bundle.data_dim)
    if side is not None:
        pgm_grid(str(prefix) + ".pgm", path_req.decoded, side, per_row=args.steps)
        written.append(str(prefix) + ".pgm")
    save_batch(path_req.decoded, str(prefix) + ".lcwb")
    written.append(str(prefix) + ".lcwb")

    # nearest-encoded-latent metric for both modes, against the run's dataset
    csv_path = str(prefix) + ".csv"
    with open(csv_path, "w") as f:
        f.write("mode,steps,seed,nearest_latent_mean\n")
        ds = _dataset_from_echo(ck.config)
        if ds is not None and ds.dim == bundle.data_dim:
            encoded = forward(bundle.encoder, DiffValue(ds.train_data), "eval").value
            for p in (path_lin, path_den):
                f.write(f"{p.mode},{args.steps},{args.seed},"
                        f"{nearest_latent_distance(p.latents, encoded)!r}\n")
    written.append(csv_path)
    for name in written:
        print(f"wrote {name}")
    return 0


def cmd_eval(args) -> int:
    ck = load_checkpoint(args.ckpt)
    if str(args.data).endswith(".toml"):
        ds = load_run_config(args.data).build_dataset()
    else:
        from .datasets import Dataset
        ds = Dataset(Path(args.data).stem, load_points_file(args.data))
    bundle = ck.bundle()
    if ds.dim != bundle.data_dim:
        raise CompatibilityError(
            f"dataset dim {ds.dim} does not match checkpoint data dim {bundle.data_dim}")
    report = eval_suite(bundle, ds, n_samples=args.n_samples, seed=args.seed)

    out = Path(args.out) if args.out else Path("eval.csv")
    new_file = not out.exists()
    row = report.as_row()
    with open(out, "a") as f:
        if new_file:
            f.write(EVAL_HEADER + "\n")
        label = Path(args.ckpt).name.replace(".ckpt.json", "")
        f.write(f"{label},{row['rec_mse']!r},{row['latent_d2']!r},"
                f"{row['frechet_prior']!r},{row['frechet_lcw']},"
                f"{row['covered_modes']}\n")
    print(f"appended eval row to {out}")
    return 0


def cmd_dist(args) -> int:
    a = load_points_file(args.a)
    if args.gaussian:
        value = float(cw2_to_gaussian(DiffValue(a)).value)
    else:
        if args.b is None:
            raise ConfigError("--b is required unless --gaussian is given")
        b = load_points_file(args.b)
        if args.metric == "cw":
            value = float(cw2_two_samples(DiffValue(a), DiffValue(b)).value)
        else:
            value = float(sliced_wasserstein(DiffValue(a), DiffValue(b),
                                             args.sw_dirs, seed=args.seed).value)
    print(f"{value:.9f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lcw", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s1 = sub.add_parser("train-stage1", help="train the autoencoder stage")
    s1.add_argument("--config", required=True)
    s1.add_argument("--objective", choices=("ae", "cwae", "cw2"))
    s1.add_argument("--out-dir")
    s1.set_defaults(func=cmd_train_stage1)

    s2 = sub.add_parser("train-stage2", help="train the latent generator stage")
    s2.add_argument("--ckpt", required=True)
    s2.add_argument("--config", required=True)
    s2.add_argument("--out-dir")
    s2.set_defaults(func=cmd_train_stage2)

    tg = sub.add_parser("train-generator", help="train a direct noise-to-data generator")
    tg.add_argument("--config", required=True)
    tg.add_argument("--distance", choices=("cw", "sw"))
    tg.add_argument("--sw-dirs", type=int)
    tg.add_argument("--out-dir")
    tg.set_defaults(func=cmd_train_generator)

    sm = sub.add_parser("sample", help="draw samples from a checkpoint")
    sm.add_argument("--ckpt", required=True)
    sm.add_argument("--n", type=int, required=True)
    sm.add_argument("--path", choices=("prior", "lcw", "gen"), default="prior")
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--out")
    sm.set_defaults(func=cmd_sample)

    ip = sub.add_parser("interpolate", help="interpolate between two noise points")
    ip.add_argument("--ckpt", required=True)
    ip.add_argument("--mode", choices=("linear", "density"), default="density")
    ip.add_argument("--steps", type=int, default=10)
    ip.add_argument("--seed", type=int, default=0)
    ip.add_argument("--out")
    ip.set_defaults(func=cmd_interpolate)

    ev = sub.add_parser("eval", help="run the evaluation suite on a checkpoint")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--data", required=True, help="run-config .toml or points file")
    ev.add_argument("--n-samples", type=int, default=10000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_eval)

    ds = sub.add_parser("dist", help="distance between two point files")
    ds.add_argument("--a", required=True)
    ds.add_argument("--b")
    ds.add_argument("--metric", choices=("cw", "sw"), default="cw")
    ds.add_argument("--gaussian", action="store_true")
    ds.add_argument("--sw-dirs", type=int, default=1000)
    ds.add_argument("--seed", type=int, default=0)
    ds.set_defaults(func=cmd_dist)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except (CompatibilityError, ShapeError) as e:
        print(f"compatibility error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
