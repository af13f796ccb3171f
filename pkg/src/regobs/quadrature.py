"""Numerical integration used where no closed form is available.

Two families live here: QUADPACK adaptive Gauss-Kronrod through
``scipy.integrate`` (custom profiles, test oracles) and composite
Gauss-Legendre with subdivision doubling (polylines, tabulated profiles).
"""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import integrate

from .geometry import Box

ABS_TOL = 1e-12

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def adaptive_quad(f: Callable[[float], float], a: float, b: float,
                  epsabs: float = ABS_TOL, points=None) -> float:
    """Adaptive Gauss-Kronrod integral of a scalar function on ``[a, b]``."""
    val, _ = integrate.quad(f, a, b, epsabs=epsabs, epsrel=0.0, limit=500, points=points)
    return float(val)


def box_quad(f: Callable[..., float], box: Box, epsabs: float = ABS_TOL) -> float:
    """Adaptive integral of ``f(x)`` (1D) or ``f(x, y)`` (2D) over a box."""
    if box.dim == 1:
        return adaptive_quad(f, box.lower[0], box.upper[0], epsabs)
    # dblquad integrates func(y, x) with x the outer variable
    val, _ = integrate.dblquad(
        lambda y, x: f(x, y),
        box.lower[0], box.upper[0], box.lower[1], box.upper[1],
        epsabs=epsabs, epsrel=0.0,
    )
    return float(val)


def gauss_nodes(a: float, b: float, pieces: int, order: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Gauss-Legendre on ``[a, b]``."""
    x, w = _gauss_legendre(order)
    edges = np.linspace(a, b, pieces + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def composite_gauss(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                    tol: float = 1e-10, order: int = 10, max_pieces: int = 4096) -> np.ndarray:
    """Integrate a vectorised ``f`` on ``[a, b]`` to absolute tolerance ``tol``.

    ``f`` maps a node array of shape ``(P,)`` to values of shape ``(..., P)``;
    the result has the leading shape.  The subdivision count doubles until
    two successive estimates agree.
    """
    pieces = 1
    nodes, weights = gauss_nodes(a, b, pieces, order)
    prev = np.asarray(f(nodes)) @ weights
    while pieces < max_pieces:
        pieces *= 2
        nodes, weights = gauss_nodes(a, b, pieces, order)
        cur = np.asarray(f(nodes)) @ weights
        if np.max(np.abs(cur - prev), initial=0.0) <= tol:
            return cur
        prev = cur
    return prev


def composite_gauss_box(f: Callable[[np.ndarray], np.ndarray], box: Box,
                        tol: float = 1e-10, order: int = 10, max_pieces: int = 256) -> np.ndarray:
    """Tensor composite Gauss-Legendre over a box.

    ``f`` receives points of shape ``(P, dim)`` and returns ``(..., P)``.
    """
    if box.dim == 1:
        return composite_gauss(lambda x: f(x[:, None]), box.lower[0], box.upper[0],
                               tol, order, max_pieces)

    def estimate(pieces):
        x, wx = gauss_nodes(box.lower[0], box.upper[0], pieces, order)
        y, wy = gauss_nodes(box.lower[1], box.upper[1], pieces, order)
        X, Y = np.meshgrid(x, y, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        w = np.outer(wx, wy).ravel()
        return np.asarray(f(pts)) @ w

    pieces = 1
    prev = estimate(pieces)
    while pieces < max_pieces:
        pieces *= 2
        cur = estimate(pieces)
        if np.max(np.abs(cur - prev), initial=0.0) <= tol:
            return cur
        prev = cur
    return prev
