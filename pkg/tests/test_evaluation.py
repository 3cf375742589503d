import numpy as np
import pytest

from lcw.autodiff import DiffValue
from lcw.datasets import gaussian_ring, split, standardize
from lcw.errors import CompatibilityError, ShapeError
from lcw.evaluation import (FrechetStats, default_mode_radius, eval_suite,
                            fit_gaussian, frechet_distance, interpolate,
                            mode_coverage, nearest_latent_distance, psd_sqrt)
from lcw.nets import (ModelBundle, build_decoder, build_encoder,
                      build_latent_generator)
from lcw.training import TrainConfig, train_stage1


class TestFitGaussian:
    def test_constant_data_zero_cov(self):
        stats = fit_gaussian(np.full((10, 3), 2.5))
        np.testing.assert_array_equal(stats.cov, np.zeros((3, 3)))

    def test_two_point_unbiased_cov(self):
        stats = fit_gaussian(np.array([[0.0, 0.0], [2.0, 0.0]]))
        np.testing.assert_array_equal(stats.mean, [1.0, 0.0])
        np.testing.assert_array_equal(stats.cov, [[2.0, 0.0], [0.0, 0.0]])

    def test_permutation_invariant(self, rng):
        x = rng.standard_normal((50, 4))
        a = fit_gaussian(x)
        b = fit_gaussian(x[rng.permutation(50)])
        np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)
        np.testing.assert_allclose(a.cov, b.cov, atol=1e-12)

    def test_single_point_rejected(self):
        with pytest.raises(ShapeError):
            fit_gaussian(np.ones((1, 2)))


class TestPsdSqrt:
    @pytest.mark.parametrize("d", [2, 8, 32, 64])
    def test_square_reproduces_input(self, d, rng):
        a = rng.standard_normal((d, d))
        s = a @ a.T  # random PSD
        root = psd_sqrt(s)
        err = np.linalg.norm(root @ root - s) / np.linalg.norm(s)
        assert err < 1e-8

    def test_negative_eigenvalues_clamped(self):
        s = np.array([[1.0, 0.0], [0.0, -1e-6]])
        root = psd_sqrt(s)
        assert np.all(np.linalg.eigvalsh(root) >= -1e-12)


class TestFrechetDistance:
    def test_identical_stats_zero(self, rng):
        x = rng.standard_normal((100, 5))
        s = fit_gaussian(x)
        assert frechet_distance(s, s) == 0.0

    def test_mean_shift_only(self):
        mu = np.array([3.0, -4.0])
        a = FrechetStats(np.zeros(2), np.eye(2), n=1000)
        b = FrechetStats(mu, np.eye(2), n=1000)
        assert abs(frechet_distance(a, b) - 25.0) < 1e-10

    def test_1d_matches_scalar_formula(self):
        for s1, s2 in ((1.0, 2.0), (0.3, 1.7), (2.5, 2.5)):
            a = FrechetStats(np.zeros(1), np.array([[s1 ** 2]]), n=100)
            b = FrechetStats(np.zeros(1), np.array([[s2 ** 2]]), n=100)
            assert abs(frechet_distance(a, b) - (s1 - s2) ** 2) < 1e-10

    def test_symmetric_nonnegative(self, rng):
        for seed in range(10):
            r = np.random.default_rng(seed)
            a = fit_gaussian(r.standard_normal((30, 4)))
            b = fit_gaussian(r.standard_normal((30, 4)) * 2 + 1)
            ab, ba = frechet_distance(a, b), frechet_distance(b, a)
            assert abs(ab - ba) < 1e-9
            assert ab >= 0.0

    def test_dim_mismatch(self):
        a = FrechetStats(np.zeros(2), np.eye(2), n=10)
        b = FrechetStats(np.zeros(3), np.eye(3), n=10)
        with pytest.raises(ShapeError):
            frechet_distance(a, b)

    def test_shrinkage_keeps_small_fits_defined(self, rng):
        # more dims than samples: covariance is rank-deficient
        x = rng.standard_normal((5, 12))
        y = rng.standard_normal((5, 12)) + 0.5
        v = frechet_distance(fit_gaussian(x), fit_gaussian(y))
        assert np.isfinite(v) and v >= 0

    def test_halves_closer_than_untrained_model(self, rng):
        data = gaussian_ring(8, 5.0, 0.2, 2000, seed=0).data
        half = frechet_distance(fit_gaussian(data[:1000]), fit_gaussian(data[1000:]))
        dec = build_decoder(2, 2, seed=1, final_activation="linear")
        from lcw.autodiff import DiffValue
        from lcw.nets import forward
        raw = forward(dec, DiffValue(rng.standard_normal((1000, 2))), "eval").value
        untrained = frechet_distance(fit_gaussian(data[:1000]), fit_gaussian(raw))
        assert half <= untrained


class TestModeCoverage:
    def test_samples_at_centers_cover_all(self):
        centers = gaussian_ring(8, 5.0, 0.0001, 10, seed=0).centers
        cov = mode_coverage(np.repeat(centers, 5, axis=0), centers, radius=0.5)
        assert cov.covered == 8
        np.testing.assert_array_equal(cov.counts, np.full(8, 5))

    def test_collapse_to_one_center(self):
        centers = gaussian_ring(8, 5.0, 0.0001, 10, seed=0).centers
        cov = mode_coverage(np.tile(centers[2], (100, 1)), centers, radius=0.5)
        assert cov.covered == 1
        assert cov.fractions[2] == 1.0

    def test_out_of_radius_unassigned(self):
        centers = np.array([[0.0, 0.0]])
        cov = mode_coverage(np.array([[10.0, 0.0], [0.1, 0.0]]), centers, radius=1.0)
        assert cov.unassigned == 1 and cov.counts[0] == 1

    def test_empty_centers_rejected(self):
        with pytest.raises(ShapeError):
            mode_coverage(np.ones((3, 2)), np.empty((0, 2)), radius=1.0)

    def test_radius_validated(self):
        with pytest.raises(ValueError):
            mode_coverage(np.ones((3, 2)), np.ones((1, 2)), radius=0.0)

    def test_default_radius_half_min_center_gap(self):
        centers = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 6.0]])
        assert abs(default_mode_radius(centers) - 1.0) < 1e-12


def tiny_bundle(seed=0):
    enc = build_encoder(2, 2, seed=seed)
    dec = build_decoder(2, 2, seed=seed + 1, final_activation="linear")
    lg = build_latent_generator(2, 2, seed=seed + 2)
    return ModelBundle(enc, dec, 2, 2, latent_generator=lg)


class TestInterpolate:
    def test_two_steps_are_exact_endpoints(self, rng):
        bundle = tiny_bundle()
        z1, z2 = rng.standard_normal(2), rng.standard_normal(2)
        lin = interpolate(bundle, z1, z2, 2, "linear_latent")
        den = interpolate(bundle, z1, z2, 2, "density_based")
        np.testing.assert_array_equal(lin.decoded, den.decoded)
        assert lin.steps == 2

    def test_endpoints_identical_across_modes(self, rng):
        bundle = tiny_bundle()
        z1, z2 = rng.standard_normal(2), rng.standard_normal(2)
        lin = interpolate(bundle, z1, z2, 9, "linear_latent")
        den = interpolate(bundle, z1, z2, 9, "density_based")
        np.testing.assert_array_equal(lin.latents[0], den.latents[0])
        np.testing.assert_array_equal(lin.latents[-1], den.latents[-1])

    def test_midpoints_differ_for_nonlinear_generator(self, rng):
        bundle = tiny_bundle()
        z1, z2 = rng.standard_normal(2) + 2.0, rng.standard_normal(2) - 2.0
        lin = interpolate(bundle, z1, z2, 9, "linear_latent")
        den = interpolate(bundle, z1, z2, 9, "density_based")
        assert not np.allclose(lin.latents[4], den.latents[4])

    def test_alpha_spacing(self, rng):
        p = interpolate(tiny_bundle(), rng.standard_normal(2),
                        rng.standard_normal(2), 5, "density_based")
        np.testing.assert_allclose(p.alphas, [1.0, 0.75, 0.5, 0.25, 0.0], atol=1e-15)

    def test_requires_latent_generator(self, rng):
        enc = build_encoder(2, 2, seed=0)
        dec = build_decoder(2, 2, seed=1, final_activation="linear")
        bundle = ModelBundle(enc, dec, 2, 2)
        with pytest.raises(CompatibilityError):
            interpolate(bundle, rng.standard_normal(2), rng.standard_normal(2), 5)

    def test_steps_validated(self, rng):
        with pytest.raises(ValueError):
            interpolate(tiny_bundle(), rng.standard_normal(2),
                        rng.standard_normal(2), 1)

    def test_bad_mode(self, rng):
        with pytest.raises(ValueError):
            interpolate(tiny_bundle(), rng.standard_normal(2),
                        rng.standard_normal(2), 5, "geodesic")

    def test_nearest_latent_distance(self):
        path = np.array([[0.0, 0.0], [1.0, 0.0]])
        encoded = np.array([[0.0, 1.0], [1.0, 2.0]])
        # nearest distances are 1 and sqrt(2); mean of the two
        expect = (1.0 + np.sqrt(2.0)) / 2.0
        assert abs(nearest_latent_distance(path, encoded) - expect) < 1e-12


class TestEvalSuite:
    def test_metrics_finite_and_ordered(self):
        ds = split(standardize(gaussian_ring(8, 5.0, 0.2, 1200, seed=0)), 0.1, seed=1)
        cfg = TrainConfig(objective="cwae", lr=1e-3, lam=1.0, batch_size=128,
                          epochs=8, latent_dim=2, seed=2, eval_every=8,
                          final_activation="linear")
        bundle, _ = train_stage1(ds, cfg)
        report = eval_suite(bundle, ds, n_samples=1500, seed=3)
        assert np.isfinite(report.rec_mse)
        assert np.isfinite(report.latent_d2)
        assert np.isfinite(report.frechet_prior)
        assert report.frechet_lcw is None
        assert report.coverage is not None  # ring has centers

    def test_trained_beats_untrained(self):
        ds = split(standardize(gaussian_ring(8, 5.0, 0.2, 1500, seed=0)), 0.1, seed=1)
        trained, untrained = [], []
        for seed in (2, 3, 4):
            cfg = TrainConfig(objective="cwae", lr=1e-3, lam=1.0, batch_size=128,
                              epochs=40, latent_dim=2, seed=seed, eval_every=40,
                              final_activation="linear")
            bundle, _ = train_stage1(ds, cfg)
            trained.append(eval_suite(bundle, ds, n_samples=1500, seed=5).frechet_prior)
            raw = ModelBundle(build_encoder(2, 2, seed=seed),
                              build_decoder(2, 2, seed=seed + 9,
                                            final_activation="linear"), 2, 2)
            untrained.append(eval_suite(raw, ds, n_samples=1500, seed=5).frechet_prior)
        assert np.median(trained) < np.median(untrained)
