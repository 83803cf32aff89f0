"""Physicists' Hermite polynomials, Gaussian-weighted derivative identities and
Gauss-Hermite quadrature.

Coefficient work is exact (Python ints and ``fractions.Fraction``); floating
point appears only when evaluating at a point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite as _npherm

from .errors import DegreeTooLarge, OrderOutOfRange

MAX_DEGREE = 64
MAX_QUADRATURE_ORDER = 256


@dataclass(frozen=True)
class HermiteExpansion:
    """H_n as a monomial expansion, ``coefficients[j]`` multiplying s**j."""

    degree: int
    coefficients: tuple

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(s, [float(c) for c in self.coefficients])


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights for integrals against exp(-s^2)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> complex:
        return np.sum(self.weights * f(self.nodes))


@lru_cache(maxsize=None)
def hermite_coefficients(n: int) -> tuple:
    """Integer monomial coefficients of H_n (lowest degree first)."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    prev, cur = (), (1,)
    for k in range(n):
        nxt = [0] * (k + 2)
        for j, c in enumerate(cur):
            nxt[j + 1] += 2 * c
        for j, c in enumerate(prev):
            nxt[j] -= 2 * k * c
        prev, cur = cur, tuple(nxt)
    return cur


def hermite_expansion(n: int) -> HermiteExpansion:
    return HermiteExpansion(n, hermite_coefficients(n))


def hermite_eval(n: int, s, max_degree: int = MAX_DEGREE):
    """H_n(s) by the three-term recurrence; ``s`` may be complex or an array."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    if n > max_degree:
        raise DegreeTooLarge(f"degree {n} exceeds the configured maximum {max_degree}")
    s = np.asarray(s)
    h_prev = np.zeros_like(s, dtype=np.result_type(s, float))
    h = np.ones_like(h_prev)
    for k in range(n):
        h_prev, h = h, 2 * s * h - 2 * k * h_prev
    return h[()] if h.ndim == 0 else h


def hermite_derivative_eval(n: int, order: int, s, max_degree: int = MAX_DEGREE):
    """d^order/ds^order H_n(s) using H_n' = 2n H_{n-1}."""
    if order > n:
        return np.zeros_like(np.asarray(s), dtype=np.result_type(np.asarray(s), float))[()]
    scale = 2 ** order * math.factorial(n) // math.factorial(n - order)
    return scale * hermite_eval(n - order, s, max_degree)


# -- exact polynomial helpers (coefficient lists, lowest degree first) --

def _padd(p, q):
    out = [Fraction(0)] * max(len(p), len(q))
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] += c
    return out


def _pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _pderiv(p):
    return [i * c for i, c in enumerate(p)][1:] or [Fraction(0)]


@lru_cache(maxsize=None)
def gaussian_derivative_blocks(order: int) -> tuple:
    """Polynomials q_j with d^order[e^{-s^2/2} h(s)] = e^{-s^2/2} sum_j q_j h^{(j)}.

    For ``order=4`` these are s^4-6s^2+3, -4(s^3-3s), 6(s^2-1), -4s and 1.
    """
    # e^{s^2/2} d^k/ds^k e^{-s^2/2} = g_k with g_{k+1} = g_k' - s g_k
    g = [[Fraction(1)]]
    for _ in range(order):
        g.append(_padd(_pderiv(g[-1]), _pmul([Fraction(0), Fraction(-1)], g[-1])))
    blocks = []
    for j in range(order + 1):
        blocks.append(tuple(math.comb(order, j) * c for c in g[order - j]))
    return tuple(blocks)


def _to_hermite_basis(poly):
    """Exact conversion of a monomial polynomial to a {degree: coefficient} Hermite series."""
    poly = list(poly)
    out = {}
    while any(poly):
        d = max(i for i, c in enumerate(poly) if c)
        lead = Fraction(poly[d]) / 2 ** d
        out[d] = lead
        for i, c in enumerate(hermite_coefficients(d)):
            poly[i] -= lead * c
    return out


@lru_cache(maxsize=None)
def derivative_expansion(n: int, order: int) -> dict:
    """Offsets j -> c_j with d^order[e^{-s^2/2} H_n] = e^{-s^2/2} sum_j c_j H_{n+j}.

    Built from the Leibniz blocks of :func:`gaussian_derivative_blocks` applied
    to the exact coefficients of H_n and its derivatives, then re-expanded in the
    Hermite basis. Zero coefficients are dropped.
    """
    if n < 0 or order < 0:
        raise ValueError("n and order must be >= 0")
    hn = [Fraction(c) for c in hermite_coefficients(n)]
    total = [Fraction(0)]
    deriv = hn
    for block in gaussian_derivative_blocks(order):
        total = _padd(total, _pmul(list(block), deriv))
        deriv = _pderiv(deriv)
    return {d - n: c for d, c in sorted(_to_hermite_basis(total).items())}


def fourth_derivative_expansion(n: int) -> dict:
    """Expansion of d^4/ds^4 [e^{-s^2/2} H_n(s)]; offsets lie in {-4, -2, 0, 2, 4}."""
    return derivative_expansion(n, 4)


def second_derivative_expansion(n: int) -> dict:
    return derivative_expansion(n, 2)


def gaussian_derivative_eval(n: int, order: int, s):
    """e^{s^2/2} d^order/ds^order [e^{-s^2/2} H_n(s)] evaluated pointwise from the blocks."""
    s = np.asarray(s)
    total = 0
    for j, block in enumerate(gaussian_derivative_blocks(order)):
        if j > n:
            break
        poly = np.polynomial.polynomial.polyval(s, [float(c) for c in block])
        total = total + poly * hermite_derivative_eval(n, j, s)
    return total


@lru_cache(maxsize=None)
def _rule(order: int) -> QuadratureRule:
    nodes, weights = _npherm.hermgauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order, nodes, weights)


def gauss_hermite_rule(order: int) -> QuadratureRule:
    """Gauss-Hermite rule exact for polynomials of degree <= 2*order - 1."""
    if not 1 <= order <= MAX_QUADRATURE_ORDER:
        raise OrderOutOfRange(f"order must be in [1, {MAX_QUADRATURE_ORDER}], got {order}")
    return _rule(int(order))
