"""1D Gauss-Lobatto nodes, barycentric Lagrange evaluation, Gauss quadrature.

Shared by the mesh generator (curved-facet geometry interpolation) and the
finite element space. All reference coordinates live on [0, 1].
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "gll_points",
    "gauss_rule",
    "lagrange_matrix",
    "lagrange_deriv_matrix",
    "tensor_gauss_rule",
]


@lru_cache(maxsize=None)
def gll_points(p: int) -> np.ndarray:
    """Gauss-Lobatto-Legendre points of degree p on [0, 1], (p+1,) array."""
    if p < 1:
        raise ValueError("degree must be >= 1")
    if p == 1:
        x = np.array([-1.0, 1.0])
    else:
        # Interior GLL nodes are the roots of P_p'(x).
        coeffs = np.zeros(p + 1)
        coeffs[p] = 1.0
        dcoeffs = np.polynomial.legendre.legder(coeffs)
        interior = np.polynomial.legendre.legroots(dcoeffs)
        x = np.concatenate([[-1.0], np.sort(interior), [1.0]])
    pts = 0.5 * (x + 1.0)
    pts[0] = 0.0
    pts[-1] = 1.0
    return pts


@lru_cache(maxsize=None)
def _bary_weights_cached(key: bytes, n: int) -> np.ndarray:
    nodes = np.frombuffer(key, dtype=np.float64)
    w = np.ones(n)
    for j in range(n):
        diff = nodes[j] - np.delete(nodes, j)
        w[j] = 1.0 / np.prod(diff)
    return w


def _bary_weights(nodes: np.ndarray) -> np.ndarray:
    return _bary_weights_cached(np.ascontiguousarray(nodes).tobytes(), len(nodes))


def lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values L_j(x_i) of the Lagrange basis on `nodes`, shape (len(x), len(nodes)).

    Barycentric form; exact (identity rows) when x hits a node.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = _bary_weights(nodes)
    diff = x[:, None] - nodes[None, :]
    out = np.empty((len(x), len(nodes)))
    exact_i, exact_j = np.nonzero(np.abs(diff) < 1e-14)
    diff[exact_i, exact_j] = 1.0  # placeholder, rows overwritten below
    terms = w[None, :] / diff
    with np.errstate(divide="ignore", invalid="ignore"):
        # Rows with an exact node hit may misbehave here; overwritten below.
        out = terms / terms.sum(axis=1)[:, None]
    for i, j in zip(exact_i, exact_j):
        out[i, :] = 0.0
        out[i, j] = 1.0
    return out


def lagrange_deriv_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Derivatives L_j'(x_i), shape (len(x), len(nodes))."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = len(nodes)
    w = _bary_weights(nodes)
    # Differentiation matrix at the nodes themselves.
    D = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (nodes[i] - nodes[j])
        D[i, i] = 0.0
        D[i, i] = -D[i, :].sum()
    # L'(x) = L(x) @ D works because the derivative of a degree-n polynomial
    # is itself degree < n and interpolation at the nodes is exact.
    return lagrange_matrix(nodes, x) @ D


@lru_cache(maxsize=None)
def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]: (points, weights)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def tensor_gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensorized n x n Gauss rule on [0,1]^2: (u, v, w) flat arrays, u fast."""
    x, w = gauss_rule(n)
    U, V = np.meshgrid(x, x, indexing="xy")  # V slow, U fast along rows
    W = np.outer(w, w)
    return U.ravel(), V.ravel(), W.ravel()
