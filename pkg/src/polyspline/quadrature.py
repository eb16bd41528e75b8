"""Composite Gauss-Legendre rules on finite intervals and on half-lines."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

DEFAULT_ORDER = 32


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(breaks, order: int = DEFAULT_ORDER, subdivisions: int = 1):
    """Nodes and weights of a composite rule over consecutive finite ``breaks``.

    Each interval ``[breaks[i], breaks[i+1]]`` is split into ``subdivisions``
    equal parts, each carrying an ``order``-point Gauss-Legendre rule.
    """
    b = np.asarray(breaks, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("need at least two break points")
    if np.any(np.diff(b) < 0) or not np.all(np.isfinite(b)):
        raise ValueError("break points must be finite and non-decreasing")
    edges = [b[0]]
    for lo, hi in zip(b[:-1], b[1:]):
        if hi > lo:
            edges.extend(np.linspace(lo, hi, subdivisions + 1)[1:])
    edges = np.asarray(edges)
    x, w = gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def half_line_rule(a: float, order: int = DEFAULT_ORDER, levels: int = 64):
    """Rule for integrals over ``[a, inf)`` with ``a > 0``.

    Uses the substitution ``r = a / u`` and dyadic panels ``[2^-(j+1), 2^-j]``
    in ``u``, so algebraically decaying integrands are handled without
    truncating at a finite radius (the neglected piece lies beyond
    ``a * 2**levels``).
    """
    if not a > 0:
        raise ValueError("half-line rule needs a positive left end")
    u_edges = 2.0 ** -np.arange(levels + 1, dtype=float)
    u, wu = composite_rule(u_edges[::-1], order)
    return a / u, wu * a / u**2


def integrate(f, breaks, order: int = DEFAULT_ORDER, subdivisions: int = 1):
    nodes, weights = composite_rule(breaks, order, subdivisions)
    return np.sum(weights * f(nodes))


def integrate_half_line(f, a: float, order: int = DEFAULT_ORDER, levels: int = 64):
    nodes, weights = half_line_rule(a, order, levels)
    return np.sum(weights * f(nodes))
