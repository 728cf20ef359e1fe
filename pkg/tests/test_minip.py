"""Asymmetric transform, exact oracle, and the robust Min-IP index."""

import math

import numpy as np
import pytest

from sparsekit.errors import ConfigError, NotFound
from sparsekit.minip import (
    MinIpConfig,
    RobustMinIpIndex,
    exact_min_ip,
    minip_transform_dataset,
    minip_transform_query,
)


def desk_config(**kw):
    kw.setdefault("sketch_dim", 16)
    kw.setdefault("sketch_sparsity", 4)
    return MinIpConfig.desk(**kw)


class TestTransform:
    def test_dataset_formula(self):
        out, dx = minip_transform_dataset(np.array([[1.0, 0.0]]), D_X=2.0)
        assert dx == 2.0
        assert np.allclose(out[0], [0.5, 0.0, 0.0, math.sqrt(3.0) / 2.0])
        assert np.linalg.norm(out[0]) == pytest.approx(1.0, abs=1e-12)

    def test_query_formula(self):
        out, dy = minip_transform_query(np.array([3.0, 4.0]), D_Y=5.0)
        assert dy == 5.0
        assert np.allclose(out, [0.6, 0.8, 0.0, 0.0])

    def test_default_dy_normalizes(self):
        out, dy = minip_transform_query(np.array([3.0, 4.0]))
        assert dy == 5.0
        assert np.allclose(out, [0.6, 0.8, 0.0, 0.0])

    def test_oversized_point_rejected(self):
        with pytest.raises(ValueError):
            minip_transform_dataset(np.array([[3.0, 0.0]]), D_X=1.0)

    def test_distance_ip_duality(self, rng):
        X = rng.standard_normal((100, 5))
        q = rng.standard_normal(5)
        pts, dx = minip_transform_dataset(X)
        qa, dy = minip_transform_query(q)
        for x_aug, x in zip(pts, X):
            lhs = np.linalg.norm(x_aug - qa) ** 2
            ip = float(x_aug @ qa)
            assert abs(lhs + 2.0 * ip - 2.0) <= 1e-12
            assert ip == pytest.approx(float(x @ q) / (dx * dy), abs=1e-12)

    def test_furthest_is_argmin_ip(self, rng):
        X = rng.standard_normal((100, 4))
        pts, _ = minip_transform_dataset(X)
        for _ in range(20):
            q = rng.standard_normal(4)
            qa, _ = minip_transform_query(q)
            dists = np.linalg.norm(pts - qa, axis=1)
            ips = X @ q
            assert int(np.argmax(dists)) == int(np.argmin(ips))


class TestExactOracle:
    def test_two_points(self):
        idx, val = exact_min_ip(np.eye(2), np.array([1.0, 0.0]))
        assert (idx, val) == (1, 0.0)

    def test_single_point(self, rng):
        v = rng.standard_normal(3)
        q = rng.standard_normal(3)
        idx, val = exact_min_ip(v[None, :], q)
        assert idx == 0 and val == pytest.approx(float(v @ q))

    def test_reversed_iteration_oracle(self, rng):
        Y = rng.standard_normal((50, 4))
        q = rng.standard_normal(4)
        idx, val = exact_min_ip(Y, q)
        best_rev = min(
            ((float(Y[i] @ q), i) for i in reversed(range(50))),
            key=lambda t: (t[0], t[1]),
        )
        assert val == pytest.approx(best_rev[0])
        assert idx == best_rev[1]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            exact_min_ip(np.zeros((0, 3)), np.zeros(3))


class TestWindowAlgebra:
    def test_high_regime_selected(self):
        idx = RobustMinIpIndex(
            np.eye(4), c=0.50005, tau=0.5, lam=0.05, delta=0.1, eps=0.05,
            seed=0, config=desk_config(),
        )
        assert idx.cbar_sq > 100.0
        assert idx.regime == "n^0.01"

    def test_sqrt2_regime_selected(self):
        idx = RobustMinIpIndex(
            np.eye(4), c=0.52, tau=0.5, lam=0.05, delta=0.1, eps=0.05,
            seed=0, config=desk_config(),
        )
        assert 2.0 < idx.cbar_sq < 100.0
        assert idx.regime == "n^0.5"

    def test_c_equal_tau_rejected(self):
        with pytest.raises(ConfigError):
            RobustMinIpIndex(
                np.eye(4), c=0.5, tau=0.5, lam=0.05, delta=0.1, eps=0.05,
                seed=0, config=desk_config(),
            )

    def test_out_of_window_rejected(self):
        with pytest.raises(ConfigError) as err:
            RobustMinIpIndex(
                np.eye(4), c=0.9, tau=0.5, lam=0.05, delta=0.1, eps=0.05,
                seed=0, config=desk_config(),
            )
        assert "8*tau" in str(err.value)

    def test_window_map_monotone(self):
        # c (1 - tau) / (c - tau) falls in c (tau fixed) and rises in tau (c fixed)
        for tau in np.linspace(0.2, 0.8, 7):
            cs = np.linspace(tau + 0.01, 0.99, 20)
            vals = [c * (1 - tau) / (c - tau) for c in cs]
            assert np.all(np.diff(vals) < 0)
        for c in np.linspace(0.3, 0.9, 7):
            taus = np.linspace(0.05, c - 0.02, 15)
            vals = [c * (1 - tau) / (c - tau) for tau in taus]
            assert np.all(np.diff(vals) > 0)


class TestRobustIndex:
    def test_two_point_forcing(self):
        pts = np.array([[1.0, 0.0], [-1.0, 0.0]])
        idx = RobustMinIpIndex(
            pts, c=0.90005, tau=0.9, lam=0.05, delta=0.1, eps=0.05,
            seed=3, config=desk_config(),
        )
        rng = np.random.default_rng(0)
        found = 0
        for _ in range(20):
            hit = idx.query(np.array([1.0, 0.0]), rng)
            if hit is not None:
                assert hit[0] == 1
                found += 1
        assert found >= 15

    def test_never_violates_bound(self, rng):
        n, d = 60, 8
        pts = rng.standard_normal((n, d))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        idx = RobustMinIpIndex(
            pts, c=0.505, tau=0.5, lam=0.05, delta=0.1, eps=0.05,
            seed=11, config=desk_config(),
        )
        bound = idx.tau / idx.c + idx.lambda_tilde
        for _ in range(30):
            q = rng.standard_normal(d)
            q /= np.linalg.norm(q)
            hit = idx.query(q, rng)
            if hit is not None:
                assert hit[2] <= bound + 1e-12
                assert hit[2] == pytest.approx(float(pts[hit[0]] @ q), abs=1e-12)

    def test_adaptive_chain_success_rate(self, rng):
        n, d = 120, 8
        half = rng.standard_normal((n // 2, d))
        half /= np.linalg.norm(half, axis=1)[:, None]
        pts = np.vstack([half, -half])  # antipodal pairs keep the promise easy
        idx = RobustMinIpIndex(
            pts, c=0.505, tau=0.5, lam=0.05, delta=0.1, eps=0.05,
            seed=5, config=desk_config(),
        )
        rng_q = np.random.default_rng(77)
        q = rng.standard_normal(d)
        q /= np.linalg.norm(q)
        successes = 0
        queries = 40
        for _ in range(queries):
            _, true_min = exact_min_ip(pts, q)
            assert true_min <= idx.tau  # promise holds by construction
            hit = idx.query(q, rng_q)
            if hit is not None:
                successes += 1
                assert hit[2] <= idx.tau / idx.c + idx.lambda_tilde
                # next query depends deterministically on the answer
                q = q - 0.5 * hit[1]
            else:
                q = q + rng_q.standard_normal(d) * 0.1
            q /= np.linalg.norm(q)
        assert successes >= 0.9 * queries

    def test_insert_delete_roundtrip(self, rng):
        pts = rng.standard_normal((10, 4))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        idx = RobustMinIpIndex(
            pts, c=0.505, tau=0.5, lam=0.05, delta=0.1, eps=0.05,
            seed=2, config=desk_config(),
        )
        z = rng.standard_normal(4)
        z /= np.linalg.norm(z)
        pid = idx.insert(z)
        assert idx.count == 11
        idx.delete(pid)
        assert idx.count == 10
        with pytest.raises(NotFound):
            idx.delete(pid)

    def test_descriptor_replay(self, rng):
        pts = rng.standard_normal((12, 4))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        kwargs = dict(c=0.505, tau=0.5, lam=0.05, delta=0.1, eps=0.05, seed=9)
        a = RobustMinIpIndex(pts, config=desk_config(), **kwargs)
        b = RobustMinIpIndex(pts, config=desk_config(), **kwargs)
        assert a.to_json() == b.to_json()
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        ra = a.query(q, np.random.default_rng(1))
        rb = b.query(q, np.random.default_rng(1))
        assert (ra is None) == (rb is None)
        if ra is not None:
            assert ra[0] == rb[0]
