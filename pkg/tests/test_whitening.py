import numpy as np
import pytest

from simdistill import errors
from simdistill.tensor import covariance, l2_normalize_rows
from simdistill.whitening import (
    WhiteningTransform,
    apply_whitening,
    fit_pca_whitening,
    identity_transform,
    significant_components,
    whiten_pipeline,
)


def unit_rows(rows, cols, seed=0):
    return l2_normalize_rows(np.random.default_rng(seed).standard_normal((rows, cols)))


class TestSignificantComponents:
    def test_counts_relative_to_leading(self):
        assert significant_components(np.array([4.0, 2.0, 1e-9]), eps_rel=1e-6) == 2

    def test_all_significant(self):
        assert significant_components(np.array([2.0, 1.0, 0.5])) == 3

    def test_tiny_negative_clamped(self):
        assert significant_components(np.array([1.0, 0.5, -1e-14])) == 2

    def test_large_negative_rejected(self):
        with pytest.raises(errors.DataError):
            significant_components(np.array([1.0, -0.5]))

    def test_unsorted_rejected(self):
        with pytest.raises(errors.DataError):
            significant_components(np.array([1.0, 2.0]))

    def test_empty_rejected(self):
        with pytest.raises(errors.EmptySpectrum):
            significant_components(np.array([]))


class TestFit:
    def test_diagonal_case_analytic(self):
        # covariance diag(4, 1) should whiten with row scales 1/2 and 1
        rng = np.random.default_rng(0)
        x = rng.standard_normal((20000, 2)) * np.array([2.0, 1.0])
        t = fit_pca_whitening(x, 2)
        scales = np.sort(np.linalg.norm(t.projection, axis=1))
        np.testing.assert_allclose(scales, [0.5, 1.0], atol=0.02)

    def test_whitened_covariance_is_identity(self):
        x = unit_rows(500, 16, seed=1)
        t = fit_pca_whitening(x, 16)
        cov = covariance(apply_whitening(t, x))
        assert np.max(np.abs(cov - np.eye(16))) < 1e-8

    def test_truncated_fit_still_identity(self):
        x = unit_rows(300, 12, seed=2)
        t = fit_pca_whitening(x, 5)
        cov = covariance(apply_whitening(t, x))
        assert np.max(np.abs(cov - np.eye(5))) < 1e-8

    def test_spectrum_descending_full_length(self):
        x = unit_rows(200, 10, seed=3)
        t = fit_pca_whitening(x, 4)
        assert t.spectrum.shape == (10,)
        assert np.all(np.diff(t.spectrum) <= 1e-12)
        assert t.n_c == 4 and t.projection.shape == (4, 10)

    def test_warning_flag_on_rank_deficient_request(self):
        # data spans a 3-dim subspace embedded in 8 dims
        rng = np.random.default_rng(4)
        low = rng.standard_normal((100, 3))
        lift = rng.standard_normal((3, 8))
        x = l2_normalize_rows(low @ lift)
        t = fit_pca_whitening(x, 8)
        assert t.warning
        assert t.significant <= 3
        clean = fit_pca_whitening(x, 2)
        assert not clean.warning

    def test_eps_rel_bounds(self):
        x = unit_rows(50, 4)
        for bad in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(errors.BadConfig):
                fit_pca_whitening(x, 2, eps_rel=bad)

    def test_n_c_bounds(self):
        x = unit_rows(50, 4)
        for bad in (0, 5, -1):
            with pytest.raises(errors.BadConfig):
                fit_pca_whitening(x, bad)

    def test_needs_enough_rows(self):
        with pytest.raises(errors.TooFewSamples):
            fit_pca_whitening(unit_rows(8, 8), 8)

    def test_constant_rows_rank_deficient(self):
        x = np.tile(unit_rows(1, 6), (20, 1))
        with pytest.raises(errors.RankDeficient):
            fit_pca_whitening(x, 3)


class TestApply:
    def test_affine_definition(self):
        x = unit_rows(100, 8, seed=5)
        t = fit_pca_whitening(x, 6)
        y = unit_rows(30, 8, seed=6)
        expected = (y - t.mean) @ t.projection.T
        np.testing.assert_allclose(apply_whitening(t, y), expected, atol=1e-12)

    def test_dim_checked(self):
        t = fit_pca_whitening(unit_rows(100, 8), 4)
        with pytest.raises(errors.DimMismatch):
            apply_whitening(t, unit_rows(10, 9))


class TestPipeline:
    def test_output_unit_norm(self):
        x = np.random.default_rng(7).standard_normal((120, 10)) * 3.0
        t = fit_pca_whitening(l2_normalize_rows(x), 10)
        out = whiten_pipeline(t, x)
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)

    def test_scale_invariant(self):
        # leading normalization makes the pipeline blind to row scaling
        x = np.random.default_rng(8).standard_normal((90, 6))
        t = fit_pca_whitening(l2_normalize_rows(x), 6)
        a = whiten_pipeline(t, x)
        b = whiten_pipeline(t, x * 7.5)
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestIdentityTransform:
    def test_pipeline_reduces_to_normalization(self):
        x = np.random.default_rng(9).standard_normal((40, 5))
        t = identity_transform(5)
        np.testing.assert_allclose(whiten_pipeline(t, x), l2_normalize_rows(x), atol=1e-14)

    def test_fields(self):
        t = identity_transform(3)
        assert isinstance(t, WhiteningTransform)
        assert t.n_t == 3 and t.n_c == 3 and not t.warning
