"""Quadrature rules on reference simplices plus 1D adaptive integration."""

from __future__ import annotations

import math

import numpy as np

# 6-point rule on the triangle, exact for total degree <= 4.
# Barycentric points; weights normalized to sum to 1 (multiply by |T|).
_A1, _B1 = 0.816847572980459, 0.091576213509771
_A2, _B2 = 0.108103018168070, 0.445948490915965
TRI_D4_BARY = np.array(
    [
        [_A1, _B1, _B1],
        [_B1, _A1, _B1],
        [_B1, _B1, _A1],
        [_A2, _B2, _B2],
        [_B2, _A2, _B2],
        [_B2, _B2, _A2],
    ]
)
TRI_D4_WEIGHTS = np.array(
    [
        0.109951743655322,
        0.109951743655322,
        0.109951743655322,
        0.223381589678011,
        0.223381589678011,
        0.223381589678011,
    ]
)

# 11-point rule on the tetrahedron, exact for total degree <= 4.
# One negative weight is inherent to this rule. Weights sum to 1.
_C1 = 11.0 / 14.0
_C2 = 1.0 / 14.0
_D1 = 0.399403576166799
_D2 = 0.100596423833201


def _perms4(a, b):
    """Distinct permutations of the multiset (a, a, b, b)."""
    out = []
    for i in range(4):
        for j in range(i + 1, 4):
            p = [b, b, b, b]
            p[i] = a
            p[j] = a
            out.append(p)
    return out


TET_D4_BARY = np.array(
    [[0.25, 0.25, 0.25, 0.25]]
    + [[_C1 if k == i else _C2 for k in range(4)] for i in range(4)]
    + _perms4(_D1, _D2)
)
TET_D4_WEIGHTS = np.array([-0.0789333333333333] + [0.0457333333333333] * 4 + [0.1493333333333333] * 6)


def simplex_rule(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree-4 rule for the given dimension: (barycentric points, weights)."""
    if dim == 2:
        return TRI_D4_BARY, TRI_D4_WEIGHTS
    if dim == 3:
        return TET_D4_BARY, TET_D4_WEIGHTS
    raise ValueError(f"unsupported dimension {dim}")


def reference_monomial_integral(exponents) -> float:
    """Exact integral of prod(x_i^a_i) over the unit reference simplex.

    Uses the closed form a1!...an! / (a1+...+an+n)!.
    """
    exps = [int(e) for e in exponents]
    n = len(exps)
    num = 1
    for e in exps:
        num *= math.factorial(e)
    return num / math.factorial(sum(exps) + n)


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-14, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    `tol` is an absolute tolerance on the whole interval.
    """

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl = f(xl)
        fr = f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return recurse(x0, xm, f0, fl, f1, left, 0.5 * eps, depth + 1) + recurse(
            xm, x2, f1, fr, f2, right, 0.5 * eps, depth + 1
        )

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    return recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 0)
