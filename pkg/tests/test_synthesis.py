import itertools

import numpy as np
import pytest
import scipy.stats

from voxsynth.errors import ConfigError
from voxsynth.fields import LabelVolume
from voxsynth.rng import RngStream
from voxsynth.synthesis import (IntensityLUT, render_mean_image, sample_lut)


class TestSampleLut:
    def test_forced_background(self):
        lut = sample_lut(2, RngStream(0), forced={0: 0.0})
        assert lut.values[0] == 0.0
        assert 0.0 <= lut.values[1] <= 1.0

    def test_tie_groups_share_draws(self):
        lut = sample_lut(5, RngStream(1), ties=[(1, 2), (3, 4)])
        assert lut.values[1] == lut.values[2]
        assert lut.values[3] == lut.values[4]

    def test_uniformity_ks(self):
        draws = np.concatenate([
            sample_lut(100, RngStream(seed)).values
            for seed in range(1000)])
        assert draws.size == 100000
        stat = scipy.stats.kstest(draws, "uniform")
        assert stat.pvalue > 0.01

    def test_bounds_restrict_draws(self):
        lut = sample_lut(50, RngStream(2), bounds=(0.4, 0.6))
        assert lut.values.min() >= 0.4 and lut.values.max() <= 0.6

    def test_constraint_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            sample_lut(3, RngStream(3), forced={7: 0.5})
        with pytest.raises(ConfigError):
            sample_lut(3, RngStream(3), ties=[(1, 9)])

    def test_minimum_label_count(self):
        with pytest.raises(ConfigError):
            sample_lut(1, RngStream(4))

    def test_deterministic(self):
        a = sample_lut(10, RngStream(5, 2))
        b = sample_lut(10, RngStream(5, 2))
        assert np.array_equal(a.values, b.values)


class TestRenderMeanImage:
    def test_single_label_region_constant(self):
        s = LabelVolume(np.zeros((4, 4), dtype=np.uint32), 2)
        lut = IntensityLUT(np.array([0.3, 0.8]))
        assert np.allclose(render_mean_image(s, lut).values, 0.3)

    def test_two_region_alignment(self):
        labels = np.zeros((4, 4), dtype=np.uint32)
        labels[:, 2:] = 1
        s = LabelVolume(labels, 2)
        out = render_mean_image(s, IntensityLUT(np.array([0.2, 0.9])))
        assert np.allclose(out.values[:, :2], 0.2)
        assert np.allclose(out.values[:, 2:], 0.9)

    def test_exhaustive_voxel_loop(self):
        gen = np.random.default_rng(6)
        labels = gen.integers(0, 5, (16, 16, 16)).astype(np.uint32)
        s = LabelVolume(labels, 5)
        lut = sample_lut(5, RngStream(7))
        out = render_mean_image(s, lut)
        for m in itertools.product(range(16), repeat=3):
            assert out.values[m] == lut.values[labels[m]]

    def test_zero_variance_per_region(self):
        gen = np.random.default_rng(8)
        labels = gen.integers(0, 4, (12, 12)).astype(np.uint32)
        s = LabelVolume(labels, 4)
        out = render_mean_image(s, sample_lut(4, RngStream(9)))
        for j in range(4):
            region = out.values[labels == j]
            # exact constancy: every voxel equals the region's first value
            assert region.size == 0 or (region == region[0]).all()

    def test_label_permutation_equivariance(self):
        gen = np.random.default_rng(10)
        labels = gen.integers(0, 4, (8, 8)).astype(np.uint32)
        lut = sample_lut(4, RngStream(11))
        perm = np.array([2, 0, 3, 1])
        inv = np.argsort(perm)
        permuted = LabelVolume(perm[labels].astype(np.uint32), 4)
        permuted_lut = IntensityLUT(lut.values[inv])
        a = render_mean_image(LabelVolume(labels, 4), lut)
        b = render_mean_image(permuted, permuted_lut)
        assert np.array_equal(a.values, b.values)

    def test_out_of_range_label_rejected(self):
        s = LabelVolume(np.full((4, 4), 3, dtype=np.uint32), 4)
        with pytest.raises(ConfigError):
            render_mean_image(s, IntensityLUT(np.array([0.1, 0.9])))


def test_lut_validation():
    with pytest.raises(ValueError):
        IntensityLUT(np.array([0.5]))
    with pytest.raises(ValueError):
        IntensityLUT(np.array([0.5, 1.5]))
