"""Tensor sketches against materialized-matrix oracles and distortion bounds."""

import math

import numpy as np
import pytest

from sparsekit.errors import ConfigError
from sparsekit.hashing import PolyHash
from sparsekit.sketch import (
    SketchEnsemble,
    TensorSparseSketch,
    TensorSrhtSketch,
    fwht,
    sketch_dim_default,
    sparsity_default,
)


class TestFwht:
    def test_matches_hadamard_matrix(self, rng):
        from scipy.linalg import hadamard

        for d in (2, 4, 8, 16):
            x = rng.standard_normal(d)
            assert np.allclose(fwht(x), hadamard(d) @ x, atol=1e-10)


class TestSrht:
    def test_zero_maps_to_zero(self):
        S = TensorSrhtSketch(4, 8, seed=7)
        assert np.allclose(S.apply_pair(np.zeros(4), np.zeros(4)), 0.0)

    def test_pair_matches_materialized(self, rng):
        S = TensorSrhtSketch(4, 8, seed=7)
        dense = S.materialize()
        u = np.zeros(4)
        v = np.zeros(4)
        u[0] = 1.0
        v[1] = 1.0
        expected = dense @ np.outer(u, v).ravel()
        assert np.allclose(S.apply_pair(u, v), expected, atol=1e-9)
        for _ in range(10):
            u, v = rng.standard_normal(4), rng.standard_normal(4)
            expected = dense @ np.outer(u, v).ravel()
            assert np.allclose(S.apply_pair(u, v), expected, atol=1e-9)

    def test_flat_consistency(self, rng):
        S = TensorSrhtSketch(8, 16, seed=3)
        e1 = np.zeros(8)
        e1[0] = 1.0
        assert np.allclose(S.apply_flat(np.outer(e1, e1).ravel()), S.apply_pair(e1, e1), atol=1e-9)
        assert np.allclose(S.apply_flat(np.zeros(64)), 0.0)
        dense = S.materialize()
        x = rng.standard_normal(64)
        assert np.allclose(S.apply_flat(x), dense @ x, atol=1e-9)

    def test_frobenius_norm_bound(self):
        for seed in range(5):
            S = TensorSrhtSketch(4, 16, seed=seed)
            assert np.linalg.norm(S.materialize()) <= 4.0 + 1e-9

    def test_monte_carlo_distortion(self, rng):
        d, b = 16, 256
        S = TensorSrhtSketch(d, b, seed=11)
        good = 0
        trials = 1000
        for _ in range(trials):
            u = rng.standard_normal(d)
            v = rng.standard_normal(d)
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            out = S.apply_pair(u, v)
            if abs(out @ out - 1.0) <= 0.5:
                good += 1
        assert good >= 0.99 * trials

    def test_padding_invisible(self, rng):
        # side 3 pads to 4; norms of sketched vectors track the unpadded input
        S = TensorSrhtSketch(3, 64, seed=5)
        assert S.side == 4
        u = rng.standard_normal(3)
        v = rng.standard_normal(3)
        out = S.apply_pair(u, v)
        assert out.shape == (64,)


class TestTensorSparse:
    def test_zero_maps_to_zero(self):
        R = TensorSparseSketch(4, 8, 2, seed=3)
        assert np.allclose(R.apply_pair(np.zeros(4), np.zeros(4)), 0.0)

    def test_pair_matches_materialized(self, rng):
        R = TensorSparseSketch(4, 8, 2, seed=3)
        dense = R.materialize()
        e1 = np.zeros(4)
        e1[0] = 1.0
        assert np.allclose(R.apply_pair(e1, e1), dense @ np.outer(e1, e1).ravel(), atol=1e-9)
        for _ in range(10):
            u, v = rng.standard_normal(4), rng.standard_normal(4)
            expected = dense @ np.outer(u, v).ravel()
            assert np.allclose(R.apply_pair(u, v), expected, atol=1e-9)

    def test_flat_matches_materialized(self, rng):
        R = TensorSparseSketch(4, 12, 3, seed=9)
        dense = R.materialize()
        x = rng.standard_normal(16)
        assert np.allclose(R.apply_flat(x), dense @ x, atol=1e-9)
        e12 = np.outer(np.eye(4)[0], np.eye(4)[1]).ravel()
        assert np.allclose(R.apply_flat(e12), R.apply_pair(np.eye(4)[0], np.eye(4)[1]), atol=1e-9)

    def test_column_support_exactly_s_one_per_block(self):
        R = TensorSparseSketch(4, 12, 3, seed=1)
        dense = R.materialize()
        block = 12 // 3
        for col in range(16):
            nz = np.flatnonzero(dense[:, col])
            assert len(nz) == 3
            assert sorted(nz // block) == [0, 1, 2]
            assert np.allclose(np.abs(dense[nz, col]), 1.0 / math.sqrt(3))

    def test_frobenius_norm_exact(self):
        for seed in range(5):
            R = TensorSparseSketch(5, 12, 3, seed=seed)
            assert np.linalg.norm(R.materialize()) == pytest.approx(5.0, abs=1e-12)

    def test_divisibility_enforced(self):
        with pytest.raises(ConfigError):
            TensorSparseSketch(4, 10, 3, seed=0)

    def test_monte_carlo_distortion(self, rng):
        d, b, s = 16, 512, 32
        R = TensorSparseSketch(d, b, s, seed=17)
        bad = 0
        trials = 1000
        for _ in range(trials):
            u = rng.standard_normal(d)
            u /= np.linalg.norm(u)
            out = R.apply_pair(u, u)
            if abs(out @ out - 1.0) > 0.5:
                bad += 1
        assert bad <= 0.05 * trials


class TestDistortionTailVsBound:
    """Empirical tail at most twice the bound the target dimension implies.

    The tail model exp(-eps^2 b / 8) uses exponent constant 8 rather than
    the 4 of the dimension default: applying a sketch to u (x) v multiplies
    fourth moments, which costs one factor of two in the exponent.  Measured
    tails at (eps=0.5, b=48) sit near exp(-eps^2 b / 5.7), so the model is
    conservative yet still catches gross variance or normalization bugs.
    """

    def _tail(self, sketch, rng, trials=1000, eps=0.5):
        bad = 0
        for _ in range(trials):
            u = rng.standard_normal(16)
            v = rng.standard_normal(16)
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            out = sketch.apply_pair(u, v)
            if abs(out @ out - 1.0) > eps:
                bad += 1
        return bad / trials

    @staticmethod
    def implied_tail_bound(eps, b):
        return math.exp(-(eps**2) * b / 8.0)

    def test_srht_tail(self, rng):
        eps, delta = 0.5, 0.05
        b = sketch_dim_default(eps, 1, delta)
        tail = self._tail(TensorSrhtSketch(16, b, seed=23), rng, eps=eps)
        assert tail <= 2.0 * self.implied_tail_bound(eps, b)

    def test_sparse_tail(self, rng):
        eps, delta = 0.5, 0.05
        b = sketch_dim_default(eps, 1, delta)
        s = sparsity_default(eps, b)
        b = -(-b // s) * s
        tail = self._tail(TensorSparseSketch(16, b, s, seed=29), rng, eps=eps)
        assert tail <= 2.0 * self.implied_tail_bound(eps, b)


class TestEnsemble:
    def test_single_member_behaves_like_sketch(self, rng):
        ens = SketchEnsemble(kind="srht", side=4, b=16, k=1, master_seed=5)
        u, v = rng.standard_normal(4), rng.standard_normal(4)
        single = ens.sketches[0]
        assert np.allclose(ens[0].apply_pair(u, v), single.apply_pair(u, v))

    def test_master_seed_determinism(self, rng):
        a = SketchEnsemble(kind="sparse", side=4, b=16, s=4, k=5, master_seed=42)
        b = SketchEnsemble(kind="sparse", side=4, b=16, s=4, k=5, master_seed=42)
        u, v = rng.standard_normal(4), rng.standard_normal(4)
        for sa, sb in zip(a.sketches, b.sketches):
            assert np.array_equal(sa.apply_pair(u, v), sb.apply_pair(u, v))

    def test_distinct_member_seeds(self):
        ens = SketchEnsemble(kind="srht", side=4, b=16, k=20, master_seed=1)
        seeds = {s.seed for s in ens.sketches}
        assert len(seeds) == 20

    def test_sample_full_and_singleton(self):
        ens = SketchEnsemble(kind="srht", side=4, b=16, k=6, master_seed=3)
        all_idx = ens.sample(6, np.random.default_rng(0))
        assert sorted(all_idx.tolist()) == list(range(6))
        one = ens.sample(1, np.random.default_rng(12))
        again = ens.sample(1, np.random.default_rng(12))
        assert one == again

    def test_sample_count_validated(self):
        ens = SketchEnsemble(kind="srht", side=4, b=16, k=6, master_seed=3)
        with pytest.raises(ConfigError):
            ens.sample(7, np.random.default_rng(0))

    def test_sampling_uniformity(self):
        ens = SketchEnsemble(kind="srht", side=2, b=4, k=8, master_seed=3)
        rng = np.random.default_rng(99)
        counts = np.zeros(8)
        draws = 10**5
        for _ in range(draws // 2):
            for i in ens.sample(2, rng):
                counts[i] += 1
        expected = draws / 8 * np.ones(8)
        sigma = math.sqrt(draws * (1 / 8) * (7 / 8))
        assert np.all(np.abs(counts - expected) <= 3 * sigma)

    def test_majority_preserves_distances(self, rng):
        # most members preserve each tested distance within the JL window
        k = 60
        ens = SketchEnsemble(kind="srht", side=4, b=128, k=k, master_seed=7)
        pts = rng.standard_normal((20, 16))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        queries = rng.standard_normal((10, 16))
        queries /= np.linalg.norm(queries, axis=1)[:, None]
        for q in queries:
            for p in pts:
                true = np.linalg.norm(q - p) ** 2
                ok = 0
                for sk in ens.sketches:
                    est = sk.apply_flat(q - p)
                    if abs(est @ est - true) <= 0.5 * true + ens.alpha:
                        ok += 1
                assert ok >= 0.95 * k

    def test_json_round_trip(self, rng):
        ens = SketchEnsemble(kind="sparse", side=4, b=16, s=4, k=3, master_seed=11)
        clone = SketchEnsemble.from_json(ens.to_json())
        u, v = rng.standard_normal(4), rng.standard_normal(4)
        for sa, sb in zip(ens.sketches, clone.sketches):
            assert np.array_equal(sa.apply_pair(u, v), sb.apply_pair(u, v))


class TestPolyHash:
    def test_deterministic_and_in_range(self):
        h = PolyHash(4, 13, seed=5)
        values = [h(i) for i in range(200)]
        assert values == [h(i) for i in range(200)]
        assert all(0 <= v < 13 for v in values)

    def test_distinct_seeds_differ(self):
        h1 = PolyHash(4, 97, seed=1)
        h2 = PolyHash(4, 97, seed=2)
        assert [h1(i) for i in range(50)] != [h2(i) for i in range(50)]

    def test_pairwise_collision_rate(self):
        # over random functions, Pr[h(0) = h(1)] should be ~ 1/range
        hits = 0
        trials = 2000
        for seed in range(trials):
            h = PolyHash(2, 16, seed=seed)
            hits += h(0) == h(1)
        assert abs(hits / trials - 1 / 16) <= 0.02
