"""Compression ratio, structure agreement, level distribution, depth errors."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_forest
from quadmap import (
    EmptyMaskError,
    EncodeConfig,
    ShapeError,
    compression_ratio,
    depth_metrics,
    encode_dense,
    level_distribution,
    structure_likelihood,
)
from quadmap.synthetic import street_scene


class TestCompressionRatio:
    def test_constant_map(self):
        forest = encode_dense(np.ones((64, 64)), EncodeConfig(0.1))
        assert compression_ratio(forest) == 4096 / 4

    def test_fully_refined(self, rng):
        forest = encode_dense(rng.random((64, 64)), EncodeConfig(0.0))
        assert compression_ratio(forest) == pytest.approx(4096 / 5460)

    def test_monotone_in_tau(self, rng):
        d = rng.random((64, 64)) * 4.0
        ratios = [
            compression_ratio(encode_dense(d, EncodeConfig(t)))
            for t in (0.0, 0.05, 0.1, 0.2, 0.5, 1.0)
        ]
        assert all(a <= b for a, b in zip(ratios, ratios[1:]))

    def test_sweep_reaches_both_operating_points(self):
        # the committed synthetic scene supports ratios near 30 and near 10
        d = street_scene()
        rows = [
            (t, compression_ratio(encode_dense(d, EncodeConfig(float(t)))))
            for t in np.geomspace(0.05, 1.0, 40)
        ]
        near30 = min(rows, key=lambda r: abs(math.log(r[1] / 30.0)))
        near10 = min(rows, key=lambda r: abs(math.log(r[1] / 10.0)))
        assert 20.0 <= near30[1] <= 45.0
        assert 7.0 <= near10[1] <= 15.0


class TestStructureLikelihood:
    def test_self_comparison_is_perfect(self, rng):
        forest = random_forest(rng)
        report = structure_likelihood(forest, forest)
        assert report.likelihood == 1.0
        assert all(m == 1.0 for m in report.per_level_match)
        assert report.compression_a == report.compression_b

    def test_symmetry(self, rng):
        a = random_forest(rng, p_active=0.3)
        b = random_forest(rng, p_active=0.7)
        ra = structure_likelihood(a, b)
        rb = structure_likelihood(b, a)
        assert ra.likelihood == rb.likelihood
        assert ra.per_level_match == rb.per_level_match

    def test_label_count_oracle(self, rng):
        d = rng.random((16, 16))
        coarse = encode_dense(np.ones((16, 16)), EncodeConfig(0.1, 3))
        fine = encode_dense(d, EncodeConfig(0.0, 3))
        report = structure_likelihood(coarse, fine)

        # enumerate expected label matches by hand: the constant-map forest
        # is all-absent below a leaf-only root; the refined one all-present
        expected = []
        weights = []
        for level in (2, 1, 0):
            sa = coarse.slice_at(level)
            sb = fine.slice_at(level)
            cells = sa.present.size
            match = 0
            for y in range(sa.present.shape[0]):
                for x in range(sa.present.shape[1]):
                    la = int(sa.present[y, x]) + int(sa.active[y, x])
                    lb = int(sb.present[y, x]) + int(sb.active[y, x])
                    match += la == lb
            expected.append(match / cells)
            weights.append(int((sa.present | sb.present).sum()))
        assert list(report.per_level_match) == expected
        want = sum(m * w for m, w in zip(expected, weights)) / sum(weights)
        assert report.likelihood == pytest.approx(want, abs=1e-15)

    def test_two_encodes_of_same_map_agree(self, rng):
        d = rng.random((32, 32))
        a = encode_dense(d, EncodeConfig(0.1, 4))
        b = encode_dense(d, EncodeConfig(0.1, 4))
        assert structure_likelihood(a, b).likelihood == 1.0

    def test_geometry_mismatch(self, rng):
        with pytest.raises(ShapeError):
            structure_likelihood(
                random_forest(rng, level_count=3), random_forest(rng, level_count=4)
            )


class TestLevelDistribution:
    def test_constant_map_is_all_root(self):
        forest = encode_dense(np.ones((64, 64)), EncodeConfig(0.1))
        assert level_distribution(forest) == (100.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def test_fully_refined_is_all_leaf(self, rng):
        forest = encode_dense(rng.random((64, 64)), EncodeConfig(0.0))
        assert level_distribution(forest) == (0.0, 0.0, 0.0, 0.0, 0.0, 100.0)

    def test_sums_to_hundred(self, rng):
        for _ in range(10):
            forest = random_forest(rng, p_active=float(rng.uniform(0.0, 1.0)))
            assert sum(level_distribution(forest)) == pytest.approx(100.0, abs=1e-9)

    def test_pixel_origin_oracle(self, rng):
        forest = random_forest(rng, level_count=4, p_active=0.5)
        dist = level_distribution(forest)
        counts = [0] * forest.level_count
        for y in range(forest.full_h):
            for x in range(forest.full_w):
                for level in range(forest.level_count):
                    if forest.slice_at(level).present[y >> level, x >> level]:
                        counts[level] += 1
                        break
        total = forest.full_h * forest.full_w
        expected = tuple(
            counts[level] * 100.0 / total
            for level in range(forest.level_count - 1, -1, -1)
        )
        assert dist == expected

    def test_single_hot_pixel_distribution(self):
        d = np.ones((64, 64))
        d[0, 0] = 10.0
        forest = encode_dense(d, EncodeConfig(0.03))
        dist = level_distribution(forest)
        # one branch refines: each finer level owns 3 quarters of the
        # remaining corner block, and the pixel quadruple owns the last 4
        px = 100.0 / 4096
        expected = (
            100.0 - 100.0 * 1024 / 4096 * 1,  # root keeps 3 of 4 root cells
            px * 256 * 3,
            px * 64 * 3,
            px * 16 * 3,
            px * 4 * 3,
            px * 4,
        )
        assert dist == pytest.approx(expected, abs=1e-12)


class TestDepthMetrics:
    def test_perfect_prediction(self, rng):
        gt = rng.random((16, 16)) + 0.5
        m = depth_metrics(gt, gt, np.ones((16, 16), bool), scale=2.0)
        assert (m.abs_rel, m.sq_rel, m.rmse) == (0.0, 0.0, 0.0)
        assert m.n_valid == 256

    def test_double_depth_gives_unit_abs_rel(self, rng):
        gt_depth = rng.random((8, 8)) * 10.0 + 1.0
        scale = 3.0
        gt_disp = scale / gt_depth
        pred_disp = scale / (2.0 * gt_depth)
        m = depth_metrics(pred_disp, gt_disp, np.ones((8, 8), bool), scale=scale)
        assert m.abs_rel == pytest.approx(1.0, abs=1e-12)

    def test_direct_summation_oracle(self, rng):
        scale = 1.7
        gt = rng.random((12, 12)) * 2.0 + 0.1
        pred = rng.random((12, 12)) * 2.0 + 0.1
        mask = rng.random((12, 12)) < 0.8
        m = depth_metrics(pred, gt, mask, scale=scale)

        abs_acc = sq_acc = rmse_acc = n = 0
        for y in range(12):
            for x in range(12):
                if not mask[y, x]:
                    continue
                g = scale / gt[y, x]
                p = scale / pred[y, x]
                abs_acc += abs(g - p) / g
                sq_acc += (g - p) ** 2 / g
                rmse_acc += (g - p) ** 2
                n += 1
        assert m.n_valid == n
        assert m.abs_rel == pytest.approx(abs_acc / n, abs=1e-10)
        assert m.sq_rel == pytest.approx(sq_acc / n, abs=1e-10)
        assert m.rmse == pytest.approx(math.sqrt(rmse_acc / n), abs=1e-10)

    def test_permutation_invariance(self, rng):
        gt = rng.random(64) + 0.2
        pred = rng.random(64) + 0.2
        mask = rng.random(64) < 0.7
        perm = rng.permutation(64)
        m1 = depth_metrics(pred.reshape(8, 8), gt.reshape(8, 8), mask.reshape(8, 8))
        m2 = depth_metrics(
            pred[perm].reshape(8, 8), gt[perm].reshape(8, 8), mask[perm].reshape(8, 8)
        )
        assert m1.abs_rel == pytest.approx(m2.abs_rel, abs=1e-12)
        assert m1.sq_rel == pytest.approx(m2.sq_rel, abs=1e-12)
        assert m1.rmse == pytest.approx(m2.rmse, abs=1e-12)
        assert m1.n_valid == m2.n_valid

    def test_disparity_space(self, rng):
        gt = rng.random((6, 6)) + 0.5
        pred = gt * 1.5
        m = depth_metrics(pred, gt, np.ones((6, 6), bool), space="disparity")
        assert m.abs_rel == pytest.approx(0.5, abs=1e-12)

    def test_max_depth_filter(self):
        gt_disp = np.array([[1.0, 0.01]])  # depths 1 and 100
        pred = np.array([[0.5, 0.005]])
        full = depth_metrics(pred, gt_disp, np.ones((1, 2), bool))
        capped = depth_metrics(pred, gt_disp, np.ones((1, 2), bool), max_depth=10.0)
        assert capped.n_valid == 1
        assert capped.rmse < full.rmse

    def test_empty_mask(self, rng):
        with pytest.raises(EmptyMaskError):
            depth_metrics(np.ones((4, 4)), np.ones((4, 4)), np.zeros((4, 4), bool))

    def test_nonpositive_gt_rejected(self):
        gt = np.array([[1.0, 0.0]])
        with pytest.raises(ValueError):
            depth_metrics(np.ones((1, 2)), gt, np.ones((1, 2), bool))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            depth_metrics(np.ones((4, 4)), np.ones((4, 5)), np.ones((4, 5), bool))


class TestNoiseDegradesStructure:
    def test_likelihood_drops_with_noise(self, rng):
        clean = street_scene(160, 96)
        ref = encode_dense(clean, EncodeConfig(0.3, 5))
        noise = rng.normal(size=clean.shape)
        last = 1.0
        for amp in np.linspace(0.0, 1.0, 8):
            noisy = np.clip(clean + amp * noise, 0.0, None)
            got = structure_likelihood(ref, encode_dense(noisy, EncodeConfig(0.3, 5)))
            if amp == 0.0:
                assert got.likelihood == 1.0
            last = got.likelihood
        assert last < 0.9
