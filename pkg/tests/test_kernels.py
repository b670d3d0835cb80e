import os
import subprocess
import sys

import numpy as np
import pytest

from regionsearch import _kernels

BACKENDS = list(_kernels.IMPLEMENTATIONS)


@pytest.fixture(params=BACKENDS)
def impl(request):
    return _kernels.IMPLEMENTATIONS[request.param]


def random_boxes(rng, n):
    xy = rng.uniform(0, 900, size=(n, 2))
    wh = rng.uniform(1, 100, size=(n, 2))
    return np.hstack([xy, xy + wh])


def test_centers_inside_matches_loop(impl):
    rng = np.random.default_rng(0)
    centers = rng.uniform(0, 1000, size=(200, 2))
    centers[0] = (100.0, 100.0)  # exactly on the corner: inclusive
    got = impl["centers_inside"](centers, 100.0, 100.0, 600.0, 400.0)
    want = [100 <= x <= 600 and 100 <= y <= 400 for x, y in centers]
    assert got.tolist() == want


def test_clipped_area_sum_hand_values(impl):
    boxes = np.array([[0, 0, 5, 5], [5, 5, 10, 10], [8, 8, 20, 20], [30, 30, 40, 40]], float)
    # 25 + 25 + 2*2 visible + 0
    assert impl["clipped_area_sum"](boxes, 0.0, 0.0, 10.0, 10.0) == pytest.approx(54.0)
    assert impl["clipped_area_sum"](boxes[:0], 0.0, 0.0, 10.0, 10.0) == 0.0


def test_weighted_relevance_hand_value(impl):
    scores = np.array([0.8, 0.4])
    inter = np.array([True, False])
    got = impl["weighted_relevance"](scores, inter, 0.5, 1e-8)
    assert got == pytest.approx(1.0 / (1.5 + 1e-8), abs=1e-12)


def test_softmax_entropy_uniform(impl):
    for n in (2, 5, 17):
        assert impl["softmax_entropy"](np.full(n, 0.3), 0.1) == pytest.approx(np.log(n), abs=1e-12)


def test_backends_agree_on_random_inputs():
    rng = np.random.default_rng(42)
    a, b = _kernels.IMPLEMENTATIONS["numpy"], _kernels.IMPLEMENTATIONS["numba"]
    for _ in range(200):
        n = int(rng.integers(1, 60))
        boxes = random_boxes(rng, n)
        centers = (boxes[:, :2] + boxes[:, 2:]) / 2
        region = sorted(rng.uniform(0, 1000, 2)), sorted(rng.uniform(0, 1000, 2))
        x0, x1 = region[0]
        y0, y1 = region[1]
        scores = rng.uniform(0, 1, n)
        inter = rng.uniform(size=n) < 0.5
        tau = float(rng.uniform(0.01, 1.0))
        assert (a["centers_inside"](centers, x0, y0, x1, y1)
                == b["centers_inside"](centers, x0, y0, x1, y1)).all()
        assert a["clipped_area_sum"](boxes, x0, y0, x1, y1) == pytest.approx(
            b["clipped_area_sum"](boxes, x0, y0, x1, y1), rel=1e-12, abs=1e-9)
        assert a["weighted_relevance"](scores, inter, 0.5, 1e-8) == pytest.approx(
            b["weighted_relevance"](scores, inter, 0.5, 1e-8), rel=1e-12)
        assert a["softmax_entropy"](scores, tau) == pytest.approx(
            b["softmax_entropy"](scores, tau), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, expected):
    if expected == "numba" and _kernels.numba is None:
        pytest.skip("numba not installed")
    env = dict(os.environ, REGIONSEARCH_PURE_NUMPY=flag)
    out = subprocess.run([sys.executable, "-c", "import regionsearch; print(regionsearch.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
