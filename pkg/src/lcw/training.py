"""Training objectives and the two-stage procedure.

Stage one trains an autoencoder (plain MSE, CWAE, or the CW^2 variant
that uses the set-level CW distance as its reconstruction term).  Stage
two freezes the autoencoder and trains a latent generator to transport
standard Gaussian noise onto the encoded-data distribution.  Direct
noise-to-data generators trained on a data-space distance are the
baseline.

All loops are deterministic given the config seed: shuffles, noise
draws, and evaluation samples come from counter-derived RNG streams.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .autodiff import AdamState, DiffValue, adam_step, zero_grads
from .cwdist import cw2_to_gaussian, cw2_two_samples, log_cw, sliced_wasserstein
from .errors import CompatibilityError, ShapeError
from .evaluation import fit_gaussian, frechet_distance
from .nets import (Mlp, ModelBundle, build_decoder, build_direct_generator,
                   build_encoder, build_latent_generator, forward)

__all__ = [
    "TrainConfig",
    "MetricsRecord",
    "loss_cwae",
    "loss_cw2",
    "loss_lt",
    "loss_direct_generator",
    "train_stage1",
    "train_stage2",
    "train_direct_generator",
    "sample",
    "sample_generator",
]

STAGE1_OBJECTIVES = ("ae", "cwae", "cw2")
GENERATOR_OBJECTIVES = ("cw_gen", "sw_gen")
OBJECTIVES = STAGE1_OBJECTIVES + ("lt",) + GENERATOR_OBJECTIVES


@dataclass
class TrainConfig:
    objective: str
    lr: float
    lam: float = 1.0
    batch_size: int = 128
    epochs: int = 100
    latent_dim: int = 2
    noise_dim: int | None = None
    data_dim: int | None = None
    seed: int = 0
    sw_num_dirs: int = 1000
    eval_every: int = 10
    eval_samples: int = 2000
    clip_norm: float = 5.0
    log_both_terms: bool = False
    final_activation: str = "sigmoid"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class MetricsRecord:
    epoch: int
    loss: float
    rec_term: float
    latent_term: float
    frechet_prior: float
    wall_s: float


def _mse(x: DiffValue, r: DiffValue) -> DiffValue:
    # per-sample squared Euclidean norm, averaged over the batch
    return (x - r).square().sum(axis=1).mean()


def _cwae_terms(x: np.ndarray, bundle: ModelBundle, cfg: TrainConfig):
    xd = DiffValue(x)
    z = forward(bundle.encoder, xd, "train")
    r = forward(bundle.decoder, z, "train")
    rec = _mse(xd, r)
    lat_d2 = cw2_to_gaussian(z)
    loss = rec + log_cw(lat_d2) * cfg.lam
    return loss, float(rec.value), float(lat_d2.value)


def _cw2_terms(x: np.ndarray, bundle: ModelBundle, cfg: TrainConfig):
    xd = DiffValue(x)
    z = forward(bundle.encoder, xd, "train")
    r = forward(bundle.decoder, z, "train")
    rec = cw2_two_samples(xd, r)
    if cfg.log_both_terms:
        rec_term = log_cw(rec)
    else:
        rec_term = rec
    lat_d2 = cw2_to_gaussian(z)
    loss = rec_term + log_cw(lat_d2) * cfg.lam
    return loss, float(rec.value), float(lat_d2.value)


def _ae_terms(x: np.ndarray, bundle: ModelBundle, cfg: TrainConfig):
    xd = DiffValue(x)
    z = forward(bundle.encoder, xd, "train")
    r = forward(bundle.decoder, z, "train")
    rec = _mse(xd, r)
    # latent normality is recorded (not optimized) so AE rows stay comparable
    lat_d2 = float(cw2_to_gaussian(z).value)
    return rec, float(rec.value), lat_d2


def loss_cwae(x, bundle: ModelBundle, cfg: TrainConfig) -> DiffValue:
    """MSE reconstruction plus lambda * log of the latent CW distance to N(0, I)."""
    return _cwae_terms(np.asarray(x, dtype=np.float64), bundle, cfg)[0]


def loss_cw2(x, bundle: ModelBundle, cfg: TrainConfig) -> DiffValue:
    """Set-level CW reconstruction distance plus the CWAE latent term.

    The reconstruction term is not log-wrapped unless cfg.log_both_terms.
    """
    return _cw2_terms(np.asarray(x, dtype=np.float64), bundle, cfg)[0]


def loss_lt(x, zprime, bundle: ModelBundle, cfg: TrainConfig) -> DiffValue:
    """CW distance between frozen encodings of x and LG(zprime).

    Gradients flow only into the latent generator.
    """
    lg = bundle.require_latent_generator()
    x = np.asarray(x, dtype=np.float64)
    zprime = np.asarray(zprime, dtype=np.float64)
    if len(zprime) != len(x):
        raise ShapeError("noise batch must match data batch size")
    z_data = forward(bundle.encoder, DiffValue(x), "eval").value  # stop-gradient
    gen = forward(lg, DiffValue(zprime), "train")
    return cw2_two_samples(DiffValue(z_data), gen)


def loss_direct_generator(x, zprime, gen: Mlp, cfg: TrainConfig,
                          sw_seed: int = 0) -> DiffValue:
    """Data-space distance between a data batch and gen(zprime)."""
    if cfg.objective not in GENERATOR_OBJECTIVES:
        raise ValueError("objective must be cw_gen or sw_gen")
    x = np.asarray(x, dtype=np.float64)
    out = forward(gen, DiffValue(np.asarray(zprime, dtype=np.float64)), "train")
    if cfg.objective == "cw_gen":
        return cw2_two_samples(DiffValue(x), out)
    return sliced_wasserstein(DiffValue(x), out, cfg.sw_num_dirs, seed=sw_seed)


def _clip_global_norm(params, max_norm: float) -> None:
    total = 0.0
    for p in params:
        total += float(np.sum(p.grad * p.grad))
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for p in params:
            p.grad *= scale


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(n)
    for lo in range(0, n, batch_size):
        idx = perm[lo:lo + batch_size]
        if len(idx) >= 2:
            yield idx


def _reference_data(dataset) -> np.ndarray:
    val = dataset.val_data
    return val if len(val) else dataset.train_data


def _frechet_vs(ref_stats, samples: np.ndarray) -> float:
    return frechet_distance(ref_stats, fit_gaussian(samples))


def train_stage1(dataset, cfg: TrainConfig) -> tuple[ModelBundle, list[MetricsRecord]]:
    """Mini-batch Adam training of the autoencoder objectives (ae/cwae/cw2)."""
    if cfg.objective not in STAGE1_OBJECTIVES:
        raise ValueError(f"stage 1 objective must be one of {STAGE1_OBJECTIVES}")
    train = dataset.train_data
    n, data_dim = train.shape
    if n < cfg.batch_size:
        raise ShapeError("dataset smaller than batch_size")

    encoder = build_encoder(data_dim, cfg.latent_dim, cfg.seed + 1)
    decoder = build_decoder(cfg.latent_dim, data_dim, cfg.seed + 2,
                            final_activation=cfg.final_activation)
    bundle = ModelBundle(encoder, decoder, data_dim, cfg.latent_dim)
    params = encoder.parameters() + decoder.parameters()
    opt = AdamState(params)

    terms = {"ae": _ae_terms, "cwae": _cwae_terms, "cw2": _cw2_terms}[cfg.objective]
    ref_stats = fit_gaussian(_reference_data(dataset))
    records: list[MetricsRecord] = []
    t0 = time.perf_counter()

    # epoch-0 baseline: objective terms of the untrained model on one batch
    first_idx = np.random.default_rng([cfg.seed, 3, 0]).permutation(n)[:cfg.batch_size]
    loss0, rec0, lat0 = terms(train[first_idx], bundle, cfg)
    records.append(MetricsRecord(
        epoch=0, loss=float(loss0.value), rec_term=rec0, latent_term=lat0,
        frechet_prior=_frechet_vs(ref_stats, sample(bundle, min(cfg.eval_samples, 4 * n),
                                                    [cfg.seed, 4, 0], path="prior")),
        wall_s=time.perf_counter() - t0,
    ))

    for epoch in range(1, cfg.epochs + 1):
        shuffle_rng = np.random.default_rng([cfg.seed, 3, epoch])
        sum_loss = sum_rec = sum_lat = 0.0
        n_batches = 0
        for idx in _batches(n, cfg.batch_size, shuffle_rng):
            loss, rec_val, lat_val = terms(train[idx], bundle, cfg)
            zero_grads(params)
            loss.backward()
            _clip_global_norm(params, cfg.clip_norm)
            adam_step(params, [p.grad for p in params], opt, cfg.lr)
            sum_loss += float(loss.value)
            sum_rec += rec_val
            sum_lat += lat_val
            n_batches += 1
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            gen = sample(bundle, min(cfg.eval_samples, 4 * n), [cfg.seed, 4, epoch],
                         path="prior")
            records.append(MetricsRecord(
                epoch=epoch,
                loss=sum_loss / n_batches,
                rec_term=sum_rec / n_batches,
                latent_term=sum_lat / n_batches,
                frechet_prior=_frechet_vs(ref_stats, gen),
                wall_s=time.perf_counter() - t0,
            ))
    return bundle, records


def train_stage2(dataset, bundle: ModelBundle, cfg: TrainConfig) -> tuple[ModelBundle, list[MetricsRecord]]:
    """Train the latent generator against frozen encodings (the second stage).

    Encoder and decoder parameters are never touched; the dataset is
    encoded once up front.  Noise is resampled fresh every batch.
    """
    if bundle.encoder.spec.input_dim != dataset.dim:
        raise CompatibilityError("bundle data dim does not match dataset")
    noise_dim = cfg.noise_dim if cfg.noise_dim is not None else bundle.latent_dim
    train = dataset.train_data
    n = train.shape[0]
    if n < cfg.batch_size:
        raise ShapeError("dataset smaller than batch_size")

    lg = build_latent_generator(noise_dim, bundle.latent_dim, cfg.seed + 5)
    bundle = ModelBundle(bundle.encoder, bundle.decoder, bundle.data_dim,
                         bundle.latent_dim, latent_generator=lg, noise_dim=noise_dim)
    params = lg.parameters()
    opt = AdamState(params)

    encoded = forward(bundle.encoder, DiffValue(train), "eval").value
    ref_stats = fit_gaussian(_reference_data(dataset))
    records: list[MetricsRecord] = []
    t0 = time.perf_counter()

    # epoch-0 baseline with the untrained latent generator
    idx0 = np.random.default_rng([cfg.seed, 6, 0]).permutation(n)[:cfg.batch_size]
    z0 = np.random.default_rng([cfg.seed, 7, 0]).standard_normal((len(idx0), noise_dim))
    loss0 = cw2_two_samples(DiffValue(encoded[idx0]),
                            forward(lg, DiffValue(z0), "train"))
    records.append(MetricsRecord(
        epoch=0, loss=float(loss0.value), rec_term=0.0,
        latent_term=float(loss0.value),
        frechet_prior=_frechet_vs(ref_stats, sample(bundle, min(cfg.eval_samples, 4 * n),
                                                    [cfg.seed, 8, 0], path="lcw")),
        wall_s=time.perf_counter() - t0,
    ))

    for epoch in range(1, cfg.epochs + 1):
        shuffle_rng = np.random.default_rng([cfg.seed, 6, epoch])
        noise_rng = np.random.default_rng([cfg.seed, 7, epoch])
        sum_loss = 0.0
        n_batches = 0
        for idx in _batches(n, cfg.batch_size, shuffle_rng):
            zprime = noise_rng.standard_normal((len(idx), noise_dim))
            gen = forward(lg, DiffValue(zprime), "train")
            loss = cw2_two_samples(DiffValue(encoded[idx]), gen)
            zero_grads(params)
            loss.backward()
            _clip_global_norm(params, cfg.clip_norm)
            adam_step(params, [p.grad for p in params], opt, cfg.lr)
            sum_loss += float(loss.value)
            n_batches += 1
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            gen_x = sample(bundle, min(cfg.eval_samples, 4 * n), [cfg.seed, 8, epoch],
                           path="lcw")
            mean_loss = sum_loss / n_batches
            records.append(MetricsRecord(
                epoch=epoch,
                loss=mean_loss,
                rec_term=0.0,
                latent_term=mean_loss,
                frechet_prior=_frechet_vs(ref_stats, gen_x),
                wall_s=time.perf_counter() - t0,
            ))
    return bundle, records


def train_direct_generator(dataset, cfg: TrainConfig) -> tuple[Mlp, list[MetricsRecord]]:
    """Train a noise-to-data generator by minimizing a data-space distance."""
    if cfg.objective not in GENERATOR_OBJECTIVES:
        raise ValueError("objective must be cw_gen or sw_gen")
    train = dataset.train_data
    n, data_dim = train.shape
    if n < cfg.batch_size:
        raise ShapeError("dataset smaller than batch_size")
    noise_dim = cfg.noise_dim if cfg.noise_dim is not None else cfg.latent_dim

    gen = build_direct_generator(noise_dim, data_dim, cfg.seed + 9,
                                 final_activation=cfg.final_activation)
    params = gen.parameters()
    opt = AdamState(params)
    ref_stats = fit_gaussian(_reference_data(dataset))
    records: list[MetricsRecord] = []
    t0 = time.perf_counter()
    step = 0

    # epoch-0 baseline with the untrained generator
    idx0 = np.random.default_rng([cfg.seed, 10, 0]).permutation(n)[:cfg.batch_size]
    z0 = np.random.default_rng([cfg.seed, 11, 0]).standard_normal((len(idx0), noise_dim))
    loss0 = loss_direct_generator(train[idx0], z0, gen, cfg, sw_seed=cfg.seed)
    records.append(MetricsRecord(
        epoch=0, loss=float(loss0.value), rec_term=float(loss0.value),
        latent_term=0.0,
        frechet_prior=_frechet_vs(ref_stats,
                                  sample_generator(gen, min(cfg.eval_samples, 4 * n),
                                                   [cfg.seed, 12, 0])),
        wall_s=time.perf_counter() - t0,
    ))

    for epoch in range(1, cfg.epochs + 1):
        shuffle_rng = np.random.default_rng([cfg.seed, 10, epoch])
        noise_rng = np.random.default_rng([cfg.seed, 11, epoch])
        sum_loss = 0.0
        n_batches = 0
        for idx in _batches(n, cfg.batch_size, shuffle_rng):
            zprime = noise_rng.standard_normal((len(idx), noise_dim))
            loss = loss_direct_generator(train[idx], zprime, gen, cfg,
                                         sw_seed=cfg.seed + step)
            zero_grads(params)
            loss.backward()
            _clip_global_norm(params, cfg.clip_norm)
            adam_step(params, [p.grad for p in params], opt, cfg.lr)
            sum_loss += float(loss.value)
            n_batches += 1
            step += 1
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            gen_x = sample_generator(gen, min(cfg.eval_samples, 4 * n),
                                     [cfg.seed, 12, epoch])
            mean_loss = sum_loss / n_batches
            records.append(MetricsRecord(
                epoch=epoch,
                loss=mean_loss,
                rec_term=mean_loss,
                latent_term=0.0,
                frechet_prior=_frechet_vs(ref_stats, gen_x),
                wall_s=time.perf_counter() - t0,
            ))
    return gen, records


def sample(bundle: ModelBundle, n: int, seed, path: str = "prior") -> np.ndarray:
    """Decode n latent points: path="prior" decodes z ~ N(0, I); path="lcw"
    decodes LG(z') with z' ~ N(0, I), LG in eval mode."""
    rng = np.random.default_rng(seed)
    if path == "prior":
        z = rng.standard_normal((n, bundle.latent_dim))
    elif path == "lcw":
        lg = bundle.require_latent_generator()
        zprime = rng.standard_normal((n, lg.spec.input_dim))
        z = forward(lg, DiffValue(zprime), "eval").value
    else:
        raise ValueError(f"unknown sampling path {path!r}")
    return forward(bundle.decoder, DiffValue(z), "eval").value


def sample_generator(gen: Mlp, n: int, seed) -> np.ndarray:
    """Eval-mode samples from a direct noise-to-data generator."""
    rng = np.random.default_rng(seed)
    zprime = rng.standard_normal((n, gen.spec.input_dim))
    return forward(gen, DiffValue(zprime), "eval").value
