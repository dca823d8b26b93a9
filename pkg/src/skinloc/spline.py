"""C2 cubic spline interpolation with not-a-knot ends, on rectilinear grids.

One-dimensional spline interpolation is linear in the node values, so it is
represented as a weight matrix ``W`` with ``f(points) = W @ values``. The
tensor-product bicubic surface on a grid is then ``Wy @ V @ Wx.T``.

Fewer than four nodes cannot carry the not-a-knot conditions; three nodes give
the interpolating parabola and two the straight line, which is what the
not-a-knot spline degenerates to.
"""
from __future__ import annotations

import numpy as np


def _second_derivative_operator(nodes: np.ndarray) -> np.ndarray:
    """Matrix ``C`` with ``M = C @ y``, the spline second derivatives at the nodes."""
    n = len(nodes)
    h = np.diff(nodes)
    if n == 2:
        return np.zeros((2, 2))
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for i in range(1, n - 1):
        A[i, i - 1] = h[i - 1]
        A[i, i] = 2.0 * (h[i - 1] + h[i])
        A[i, i + 1] = h[i]
        B[i, i - 1] = 6.0 / h[i - 1]
        B[i, i] = -6.0 / h[i - 1] - 6.0 / h[i]
        B[i, i + 1] = 6.0 / h[i]
    if n == 3:
        # constant second derivative: the parabola through all three nodes
        A[0, :2] = [1.0, -1.0]
        A[2, 1:] = [1.0, -1.0]
    else:
        # third derivative continuous across the second and penultimate nodes
        A[0, :3] = [-h[1], h[0] + h[1], -h[0]]
        A[-1, -3:] = [-h[-1], h[-2] + h[-1], -h[-2]]
    return np.linalg.solve(A, B)


def spline_weights(nodes, points) -> np.ndarray:
    """Weights ``W`` (len(points) x len(nodes)) evaluating the interpolant.

    Points outside the node range are extrapolated with the end polynomial.
    """
    x = np.asarray(nodes, dtype=float)
    t = np.asarray(points, dtype=float).ravel()
    n = len(x)
    if n < 2:
        raise ValueError(f"spline needs at least 2 nodes, got {n}")
    if np.any(np.diff(x) <= 0):
        raise ValueError("spline nodes must be strictly increasing")

    C = _second_derivative_operator(x)
    k = np.clip(np.searchsorted(x, t, side="right") - 1, 0, n - 2)
    h = x[k + 1] - x[k]
    s = (t - x[k]) / h
    rows = np.arange(len(t))

    W = np.zeros((len(t), n))
    W[rows, k] += 1.0 - s
    W[rows, k + 1] += s
    Q = np.zeros((len(t), n))
    Q[rows, k] = h * h / 6.0 * ((1.0 - s) ** 3 - (1.0 - s))
    Q[rows, k + 1] = h * h / 6.0 * (s**3 - s)
    return W + Q @ C


class BicubicSpline:
    """Tensor-product not-a-knot cubic spline through ``values[row, col]``.

    Rows follow ``y_nodes``, columns ``x_nodes``.
    """

    def __init__(self, x_nodes, y_nodes, values):
        self.x_nodes = np.asarray(x_nodes, dtype=float)
        self.y_nodes = np.asarray(y_nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.y_nodes), len(self.x_nodes)):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {len(self.y_nodes)} x {len(self.x_nodes)}"
            )

    def grid(self, x, y) -> np.ndarray:
        """Evaluate on the grid ``y x x``; result has shape (len(y), len(x))."""
        return spline_weights(self.y_nodes, y) @ self.values @ spline_weights(self.x_nodes, x).T

    def __call__(self, x, y) -> np.ndarray:
        """Evaluate at scattered points ``(x[i], y[i])``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        wy = spline_weights(self.y_nodes, y)
        wx = spline_weights(self.x_nodes, x)
        return np.einsum("ir,rc,ic->i", wy, self.values, wx)
