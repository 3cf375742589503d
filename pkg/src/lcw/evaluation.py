"""Desk-scale evaluation: Fréchet-Gaussian proxy, mode coverage, interpolation.

The Fréchet proxy fits Gaussians to raw vectors and evaluates the
closed-form Fréchet distance; it preserves ordering comparisons between
generators without an external feature network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import DiffValue
from .cwdist import cw2_to_gaussian
from .errors import ShapeError
from .nets import ModelBundle, forward

__all__ = [
    "FrechetStats",
    "ModeCoverage",
    "InterpolationPath",
    "EvalReport",
    "fit_gaussian",
    "frechet_distance",
    "psd_sqrt",
    "mode_coverage",
    "interpolate",
    "eval_suite",
]

_SHRINK = 1e-6


@dataclass(frozen=True)
class FrechetStats:
    """Gaussian fit of a sample: mean, covariance, and the fit size."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_gaussian(x: np.ndarray) -> FrechetStats:
    """Sample mean and unbiased covariance."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ShapeError("fit_gaussian needs an n x d matrix with n >= 2")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / (x.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    return FrechetStats(mean=mean, cov=cov, n=x.shape[0])


def psd_sqrt(s: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition, eigenvalues clamped at 0."""
    s = 0.5 * (s + s.T)
    w, v = np.linalg.eigh(s)
    w = np.maximum(w, 0.0)
    root = (v * np.sqrt(w)) @ v.T
    return 0.5 * (root + root.T)


def frechet_distance(a: FrechetStats, b: FrechetStats) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), clamped at 0.

    Covariances are shrunk by 1e-6 * I when the fit had fewer samples
    than dimensions, keeping the proxy defined on small evaluation sets.
    """
    if a.dim != b.dim:
        raise ShapeError(f"stat dims disagree: {a.dim} vs {b.dim}")
    d = a.dim
    cov_a, cov_b = a.cov, b.cov
    if d > a.n:
        cov_a = cov_a + _SHRINK * np.eye(d)
    if d > b.n:
        cov_b = cov_b + _SHRINK * np.eye(d)
    root_a = psd_sqrt(cov_a)
    inner = root_a @ cov_b @ root_a
    w = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    trace_sqrt = np.sum(np.sqrt(np.maximum(w, 0.0)))
    diff = a.mean - b.mean
    val = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_sqrt)
    return max(val, 0.0)


@dataclass(frozen=True)
class ModeCoverage:
    counts: np.ndarray       # samples assigned per mode
    fractions: np.ndarray    # counts / total samples
    unassigned: int
    covered: int             # modes with at least one assigned sample


def mode_coverage(samples: np.ndarray, centers: np.ndarray, radius: float) -> ModeCoverage:
    """Assign each sample to its nearest center when within radius."""
    samples = np.asarray(samples, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] == 0:
        raise ShapeError("centers must be a non-empty k x d matrix")
    if radius <= 0:
        raise ValueError("radius must be positive")
    d2 = np.sum((samples[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    nearest = np.argmin(d2, axis=1)
    within = d2[np.arange(len(samples)), nearest] <= radius * radius
    counts = np.bincount(nearest[within], minlength=len(centers))
    total = max(len(samples), 1)
    return ModeCoverage(counts=counts,
                        fractions=counts / total,
                        unassigned=int(len(samples) - within.sum()),
                        covered=int(np.count_nonzero(counts)))


@dataclass(frozen=True)
class InterpolationPath:
    z_start: np.ndarray          # noise-space endpoints
    z_end: np.ndarray
    steps: int
    mode: str
    alphas: np.ndarray
    latents: np.ndarray          # steps x latent_dim
    decoded: np.ndarray          # steps x data_dim


def interpolate(bundle: ModelBundle, z_start, z_end, steps: int,
                mode: str = "density_based") -> InterpolationPath:
    """Interpolate between two noise points through the latent generator.

    linear_latent blends the two LG outputs; density_based maps the
    straight noise-space line through LG, so the path tracks the learned
    latent distribution.  Both share their endpoints exactly.
    """
    if mode not in ("linear_latent", "density_based"):
        raise ValueError(f"unknown interpolation mode {mode!r}")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    lg = bundle.require_latent_generator()
    z_start = np.asarray(z_start, dtype=np.float64).reshape(1, -1)
    z_end = np.asarray(z_end, dtype=np.float64).reshape(1, -1)
    if z_start.shape[1] != lg.spec.input_dim or z_end.shape[1] != lg.spec.input_dim:
        raise ShapeError("endpoint dim does not match the latent generator input")
    alphas = np.linspace(1.0, 0.0, steps)

    # endpoints evaluated once so both modes share them bit-exactly
    ends = forward(lg, DiffValue(np.vstack([z_start, z_end])), "eval").value
    if mode == "linear_latent":
        latents = alphas[:, None] * ends[0] + (1.0 - alphas)[:, None] * ends[1]
    else:
        noise_line = alphas[:, None] * z_start + (1.0 - alphas)[:, None] * z_end
        latents = forward(lg, DiffValue(noise_line), "eval").value
        latents[0] = ends[0]
        latents[-1] = ends[1]
    decoded = forward(bundle.decoder, DiffValue(latents), "eval").value
    return InterpolationPath(z_start=z_start[0], z_end=z_end[0], steps=steps,
                             mode=mode, alphas=alphas, latents=latents, decoded=decoded)


def nearest_latent_distance(path_latents: np.ndarray, encoded: np.ndarray) -> float:
    """Mean distance from path points to their nearest encoded training latent."""
    d2 = np.sum((path_latents[:, None, :] - encoded[None, :, :]) ** 2, axis=2)
    return float(np.mean(np.sqrt(d2.min(axis=1))))


@dataclass
class EvalReport:
    rec_mse: float
    latent_d2: float
    frechet_prior: float
    frechet_lcw: float | None = None
    coverage: ModeCoverage | None = None

    def as_row(self) -> dict:
        row = {
            "rec_mse": self.rec_mse,
            "latent_d2": self.latent_d2,
            "frechet_prior": self.frechet_prior,
            "frechet_lcw": self.frechet_lcw if self.frechet_lcw is not None else "",
            "covered_modes": self.coverage.covered if self.coverage is not None else "",
        }
        return row


def default_mode_radius(centers: np.ndarray) -> float:
    """Half the minimum inter-center distance."""
    d2 = np.sum((centers[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    return 0.5 * float(np.sqrt(d2.min()))


def eval_suite(bundle: ModelBundle, dataset, n_samples: int = 10000,
               seed: int = 0, mode_radius: float | None = None) -> EvalReport:
    """Held-out reconstruction error, latent normality, Fréchet proxies, and
    mode coverage where centers are known."""
    from .training import sample  # local import to avoid a module cycle

    held = dataset.val_data if len(dataset.val_data) else dataset.train_data
    xd = DiffValue(held)
    z = forward(bundle.encoder, xd, "eval")
    recon = forward(bundle.decoder, z, "eval")
    rec_mse = float((xd - recon).square().sum(axis=1).mean().value)
    latent_d2 = float(cw2_to_gaussian(z).value)

    ref = fit_gaussian(held)
    prior_samples = sample(bundle, n_samples, [seed, 1], path="prior")
    report = EvalReport(
        rec_mse=rec_mse,
        latent_d2=latent_d2,
        frechet_prior=frechet_distance(ref, fit_gaussian(prior_samples)),
    )
    lcw_samples = None
    if bundle.latent_generator is not None:
        lcw_samples = sample(bundle, n_samples, [seed, 2], path="lcw")
        report.frechet_lcw = frechet_distance(ref, fit_gaussian(lcw_samples))
    if dataset.centers is not None:
        radius = mode_radius if mode_radius is not None else default_mode_radius(dataset.centers)
        best = lcw_samples if lcw_samples is not None else prior_samples
        report.coverage = mode_coverage(best, dataset.centers, radius)
    return report
