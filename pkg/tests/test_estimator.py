"""Transformer-protocol front end."""

from __future__ import annotations

import numpy as np
import pytest

from quadmap import DimensionError, EncodeConfig, QuadtreeEncoder, encode_dense, rasterize


class TestParams:
    def test_get_params_roundtrip(self):
        enc = QuadtreeEncoder(tau=0.25, level_count=4, keep_children=False)
        assert enc.get_params() == {
            "tau": 0.25,
            "level_count": 4,
            "keep_children": False,
        }
        other = QuadtreeEncoder().set_params(**enc.get_params())
        assert other.get_params() == enc.get_params()

    def test_set_params_rejects_unknown(self):
        with pytest.raises(ValueError, match="unknown parameter"):
            QuadtreeEncoder().set_params(threshold=1.0)

    def test_repr_round_trips_params(self):
        enc = QuadtreeEncoder(tau=0.5, level_count=3)
        assert eval(repr(enc)).get_params() == enc.get_params()


class TestTransform:
    def test_transform_matches_functional_core(self, rng):
        d = rng.random((32, 32))
        enc = QuadtreeEncoder(tau=0.1, level_count=5)
        assert enc.fit(d) is enc
        forest = enc.transform(d)
        assert forest == encode_dense(d, EncodeConfig(0.1, 5))
        assert np.array_equal(enc.inverse_transform(forest), rasterize(forest))

    def test_reconstruct_is_lossless_at_zero_tau(self, rng):
        d = rng.random((16, 16))
        enc = QuadtreeEncoder(tau=0.0, level_count=3)
        assert np.array_equal(enc.reconstruct(d), d)

    def test_fit_validates_input(self):
        enc = QuadtreeEncoder(level_count=6)
        with pytest.raises(DimensionError):
            enc.fit(np.ones((48, 48)))
        with pytest.raises(ValueError):
            enc.fit(np.full((64, 64), -1.0))


class TestSklearnInterop:
    def test_clone_compatibility(self, rng):
        clone = pytest.importorskip("sklearn.base").clone
        enc = QuadtreeEncoder(tau=0.2, level_count=4)
        cloned = clone(enc)
        assert cloned is not enc
        assert cloned.get_params() == enc.get_params()
