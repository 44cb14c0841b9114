"""Truncated-SVD tile compression and low-rank sum recompression."""

import numpy as np
import pytest

from tlrgeo import compress_tile, recompress

EPS_GRID = (1e-5, 1e-7, 1e-9, 1e-12)


def rel_err(a, tile):
    na = np.linalg.norm(a)
    return np.linalg.norm(a - tile.to_dense()) / (na if na else 1.0)


class TestCompressTile:
    def test_zero_tile(self):
        t = compress_tile(np.zeros((16, 16)), 1e-9)
        assert t.rank == 0
        assert t.to_dense().shape == (16, 16)
        assert (t.to_dense() == 0).all()

    def test_outer_product_rank_one(self, rng):
        u = rng.standard_normal(24)
        v = rng.standard_normal(17)
        a = np.outer(u, v)
        t = compress_tile(a, 1e-9)
        assert t.rank == 1
        assert np.linalg.norm(a - t.to_dense()) <= 1e-14 * np.linalg.norm(a)

    def test_random_tile_error_bound(self, rng):
        a = rng.standard_normal((64, 64))
        t = compress_tile(a, 1e-9)
        assert rel_err(a, t) <= 1e-9

    def test_error_bound_and_monotonicity_sweep(self, rng):
        # smaller eps never decreases the rank; error bound always holds
        for _ in range(60):
            m = rng.integers(8, 48)
            n = rng.integers(8, 48)
            base = rng.integers(1, min(m, n))
            a = (rng.standard_normal((m, base)) @ rng.standard_normal((base, n))
                 + 10.0 ** rng.uniform(-14, -2) * rng.standard_normal((m, n)))
            prev_rank = None
            for eps in EPS_GRID:
                t = compress_tile(a, eps)
                assert rel_err(a, t) <= eps
                if prev_rank is not None:
                    assert t.rank >= prev_rank
                prev_rank = t.rank

    def test_smallest_rank_selected(self, rng):
        a = rng.standard_normal((32, 32))
        eps = 1e-7
        t = compress_tile(a, eps)
        s = np.linalg.svd(a, compute_uv=False)
        fro = np.linalg.norm(s)
        if t.rank > 0:
            tail_with_one_less = np.sqrt(np.sum(s[t.rank - 1:] ** 2))
            assert tail_with_one_less > eps * fro

    def test_full_rank_kept_when_needed(self):
        a = np.diag(np.linspace(1.0, 2.0, 10))
        t = compress_tile(a, 1e-12)
        assert t.rank == 10

    def test_invalid_eps(self):
        a = np.eye(3)
        for eps in (0.0, 1.0, -1e-3, 2.0):
            with pytest.raises(ValueError):
                compress_tile(a, eps)


class TestRecompress:
    def test_zero_second_addend(self, rng):
        u1 = rng.standard_normal((20, 3))
        v1 = rng.standard_normal((15, 3))
        z = np.zeros((20, 0))
        zv = np.zeros((15, 0))
        t = recompress(u1, v1, z, zv, 1e-10)
        assert t.rank <= 3
        want = u1 @ v1.T
        assert np.linalg.norm(t.to_dense() - want) <= 1e-10 * np.linalg.norm(want)

    def test_exact_cancellation(self, rng):
        u = rng.standard_normal((12, 4))
        v = rng.standard_normal((12, 4))
        t = recompress(u, v, -u, v, 1e-12)
        assert t.rank == 0

    def test_rank3_plus_rank5(self, rng):
        u1, v1 = rng.standard_normal((40, 3)), rng.standard_normal((30, 3))
        u2, v2 = rng.standard_normal((40, 5)), rng.standard_normal((30, 5))
        t = recompress(u1, v1, u2, v2, 1e-12)
        assert t.rank <= 8
        want = u1 @ v1.T + u2 @ v2.T
        assert np.linalg.norm(t.to_dense() - want) <= 1e-12 * np.linalg.norm(want)

    def test_rank_never_exceeds_sum(self, rng):
        for _ in range(40):
            m, n = rng.integers(6, 30), rng.integers(6, 30)
            k1, k2 = rng.integers(0, 6), rng.integers(0, 6)
            u1, v1 = rng.standard_normal((m, k1)), rng.standard_normal((n, k1))
            u2, v2 = rng.standard_normal((m, k2)), rng.standard_normal((n, k2))
            eps = 10.0 ** rng.uniform(-12, -5)
            t = recompress(u1, v1, u2, v2, eps)
            assert t.rank <= k1 + k2
            want = u1 @ v1.T + u2 @ v2.T
            norm = np.linalg.norm(want)
            assert np.linalg.norm(t.to_dense() - want) <= eps * norm + 1e-300

    def test_both_empty(self):
        t = recompress(np.zeros((5, 0)), np.zeros((7, 0)),
                       np.zeros((5, 0)), np.zeros((7, 0)), 1e-9)
        assert t.rank == 0
        assert t.shape == (5, 7)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            recompress(rng.standard_normal((5, 2)), rng.standard_normal((7, 2)),
                       rng.standard_normal((6, 2)), rng.standard_normal((7, 2)), 1e-9)
