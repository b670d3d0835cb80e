"""Numeric inner loops used by every node evaluation.

Each kernel has a numba ``@njit`` version and a pure-numpy version with the
same signature. The numba path is used when numba imports cleanly and the
``REGIONSEARCH_PURE_NUMPY`` environment variable is unset or ``0``. The
choice is made once, at import time; ``BACKEND`` records it.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

_FLAG = os.environ.get("REGIONSEARCH_PURE_NUMPY", "0").strip().lower()
USE_NUMBA = numba is not None and _FLAG in ("", "0", "false", "no")
BACKEND = "numba" if USE_NUMBA else "numpy"


# -- pure numpy -------------------------------------------------------------

def centers_inside_np(centers, x0, y0, x1, y1):
    cx = centers[:, 0]
    cy = centers[:, 1]
    return (cx >= x0) & (cx <= x1) & (cy >= y0) & (cy <= y1)


def clipped_area_sum_np(boxes, x0, y0, x1, y1):
    if boxes.shape[0] == 0:
        return 0.0
    w = np.minimum(boxes[:, 2], x1) - np.maximum(boxes[:, 0], x0)
    h = np.minimum(boxes[:, 3], y1) - np.maximum(boxes[:, 1], y0)
    return float(np.sum(np.where((w > 0.0) & (h > 0.0), w * h, 0.0)))


def weighted_relevance_np(scores, interactive, lam, eps):
    if scores.shape[0] == 0:
        return 0.0
    w = np.where(interactive, 1.0, lam)
    return float(np.sum(w * scores) / (np.sum(w) + eps))


def softmax_entropy_np(scores, tau):
    # H = log Z - sum(p * z) with z shifted by its max; p == 0 terms vanish.
    z = scores / tau
    z = z - np.max(z)
    e = np.exp(z)
    total = np.sum(e)
    p = e / total
    return float(np.log(total) - np.sum(p * z))


# -- numba ------------------------------------------------------------------

def _centers_inside_loop(centers, x0, y0, x1, y1):
    n = centers.shape[0]
    out = np.empty(n, dtype=np.bool_)
    for i in range(n):
        cx = centers[i, 0]
        cy = centers[i, 1]
        out[i] = cx >= x0 and cx <= x1 and cy >= y0 and cy <= y1
    return out


def _clipped_area_sum_loop(boxes, x0, y0, x1, y1):
    total = 0.0
    for i in range(boxes.shape[0]):
        w = min(boxes[i, 2], x1) - max(boxes[i, 0], x0)
        h = min(boxes[i, 3], y1) - max(boxes[i, 1], y0)
        if w > 0.0 and h > 0.0:
            total += w * h
    return total


def _weighted_relevance_loop(scores, interactive, lam, eps):
    n = scores.shape[0]
    if n == 0:
        return 0.0
    num = 0.0
    den = 0.0
    for i in range(n):
        w = 1.0 if interactive[i] else lam
        num += w * scores[i]
        den += w
    return num / (den + eps)


def _softmax_entropy_loop(scores, tau):
    n = scores.shape[0]
    zmax = scores[0] / tau
    for i in range(1, n):
        v = scores[i] / tau
        if v > zmax:
            zmax = v
    total = 0.0
    for i in range(n):
        total += np.exp(scores[i] / tau - zmax)
    acc = 0.0
    for i in range(n):
        z = scores[i] / tau - zmax
        acc += np.exp(z) / total * z
    return np.log(total) - acc


if numba is not None:
    _jit = numba.njit(cache=True, nogil=True)
    centers_inside_nb = _jit(_centers_inside_loop)
    clipped_area_sum_nb = _jit(_clipped_area_sum_loop)
    weighted_relevance_nb = _jit(_weighted_relevance_loop)
    softmax_entropy_nb = _jit(_softmax_entropy_loop)
else:  # pragma: no cover
    centers_inside_nb = _centers_inside_loop
    clipped_area_sum_nb = _clipped_area_sum_loop
    weighted_relevance_nb = _weighted_relevance_loop
    softmax_entropy_nb = _softmax_entropy_loop


if USE_NUMBA:
    def centers_inside(centers, x0, y0, x1, y1):
        return centers_inside_nb(centers, float(x0), float(y0), float(x1), float(y1))

    def clipped_area_sum(boxes, x0, y0, x1, y1):
        return float(clipped_area_sum_nb(boxes, float(x0), float(y0), float(x1), float(y1)))

    def weighted_relevance(scores, interactive, lam, eps):
        return float(weighted_relevance_nb(scores, interactive, float(lam), float(eps)))

    def softmax_entropy(scores, tau):
        return float(softmax_entropy_nb(scores, float(tau)))
else:
    centers_inside = centers_inside_np
    clipped_area_sum = clipped_area_sum_np
    weighted_relevance = weighted_relevance_np
    softmax_entropy = softmax_entropy_np


IMPLEMENTATIONS = {
    "numpy": {
        "centers_inside": centers_inside_np,
        "clipped_area_sum": clipped_area_sum_np,
        "weighted_relevance": weighted_relevance_np,
        "softmax_entropy": softmax_entropy_np,
    },
    "numba": {
        "centers_inside": centers_inside_nb,
        "clipped_area_sum": clipped_area_sum_nb,
        "weighted_relevance": weighted_relevance_nb,
        "softmax_entropy": softmax_entropy_nb,
    },
}
