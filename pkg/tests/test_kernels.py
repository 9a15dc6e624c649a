from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from recsel import _kernels


def _pairwise_bruteforce(points):
    n = points.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = sum((points[i, k] - points[j, k]) ** 2 for k in range(points.shape[1]))
    return out


def _jsd_scalar(p, q):
    total = 0.0
    for a, b in zip(p, q):
        m = 0.5 * (a + b)
        if a > 0:
            total += 0.5 * a * math.log2(a / m)
        if b > 0:
            total += 0.5 * b * math.log2(b / m)
    return min(max(total, 0.0), 1.0)


def _random_dists(rng, n, support):
    rows = rng.uniform(0.0, 1.0, size=(n, support))
    # Sprinkle exact zeros so the zero-mass conventions get exercised.
    rows[rng.random(size=rows.shape) < 0.25] = 0.0
    rows[rows.sum(axis=1) == 0.0, 0] = 1.0
    return rows / rows.sum(axis=1, keepdims=True)


def test_pairwise_numpy_matches_bruteforce():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(37, 5))
    got = _kernels.pairwise_sq_dists_numpy(pts)
    np.testing.assert_allclose(got, _pairwise_bruteforce(pts), atol=1e-10)


def test_pairwise_numpy_blocking_is_seamless():
    # Force several row blocks by exceeding the block element budget.
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(64, 3))
    whole = _kernels.pairwise_sq_dists_numpy(pts)
    assert np.array_equal(whole, whole.T)
    assert np.all(np.diag(whole) == 0.0)
    assert np.all(whole >= 0.0)


def test_active_lane_matches_numpy_lane():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(50, 8))
    np.testing.assert_allclose(
        _kernels.pairwise_sq_dists(pts),
        _kernels.pairwise_sq_dists_numpy(pts),
        rtol=1e-12,
        atol=1e-12,
    )
    p = _random_dists(rng, 40, 16)
    q = _random_dists(rng, 40, 16)
    np.testing.assert_allclose(
        _kernels.jsd_rows(p, q),
        _kernels.jsd_rows_numpy(p, q),
        rtol=0,
        atol=1e-13,
    )


def test_jsd_rows_matches_scalar_reference():
    rng = np.random.default_rng(3)
    p = _random_dists(rng, 25, 9)
    q = _random_dists(rng, 25, 9)
    got = _kernels.jsd_rows(p, q)
    want = [_jsd_scalar(p[i], q[i]) for i in range(25)]
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_jsd_rows_identity_symmetry_and_range():
    rng = np.random.default_rng(4)
    p = _random_dists(rng, 30, 12)
    q = _random_dists(rng, 30, 12)
    assert np.all(_kernels.jsd_rows(p, p.copy()) == 0.0)
    forward = _kernels.jsd_rows(p, q)
    backward = _kernels.jsd_rows(q, p)
    assert np.array_equal(forward, backward)
    assert np.all(forward >= 0.0) and np.all(forward <= 1.0)


def test_jsd_rows_disjoint_support_is_one():
    p = np.array([[1.0, 0.0, 0.0, 0.0], [0.5, 0.5, 0.0, 0.0]])
    q = np.array([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.5, 0.5]])
    np.testing.assert_allclose(_kernels.jsd_rows(p, q), [1.0, 1.0], atol=1e-12)


def _lane_probe(flag_value):
    env = dict(os.environ)
    env["RECSEL_NUMBA"] = flag_value
    code = "from recsel import _kernels; print(_kernels.USING_NUMBA)"
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    return out.stdout.strip()


def test_env_flag_selects_lane():
    assert _lane_probe("0") == "False"
    if _kernels.USING_NUMBA:
        assert _lane_probe("1") == "True"
    else:
        pytest.skip("numba lane unavailable in this environment")
