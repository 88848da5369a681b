"""Metric primitives on simplices (triangles in 2D, tetrahedra in 3D).

All operations are pure functions on immutable values; degenerate inputs
raise instead of silently producing huge constants.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .errors import DegenerateSimplexError

# A simplex with measure below DEGENERACY_TOL * h_T^dim is rejected.
DEGENERACY_TOL = 1e-14

_FACTORIAL = (1.0, 1.0, 2.0, 6.0)

# Angle at or below pi/2 + NONBLUNT_TOL counts as non-obtuse.
NONBLUNT_TOL = 1e-12


class Simplex:
    """Immutable simplex: dim+1 vertices in R^dim, dim in {2, 3}."""

    __slots__ = ("vertices", "dim")

    def __init__(self, vertices) -> None:
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (2, 3) or v.shape[0] != v.shape[1] + 1:
            raise ValueError(f"expected (dim+1, dim) vertex array with dim in {{2,3}}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertex coordinates must be finite")
        v.setflags(write=False)
        self.vertices = v
        self.dim = int(v.shape[1])

    def __repr__(self) -> str:
        return f"Simplex({self.vertices.tolist()})"


def triangle(p0, p1, p2) -> Simplex:
    return Simplex([p0, p1, p2])


def tetrahedron(p0, p1, p2, p3) -> Simplex:
    return Simplex([p0, p1, p2, p3])


def signed_measure(s: Simplex) -> float:
    """Signed measure (orientation-sensitive); no degeneracy check."""
    edges = s.vertices[1:] - s.vertices[0]
    return float(np.linalg.det(edges)) / _FACTORIAL[s.dim]


def measure(s: Simplex) -> float:
    """Area (2D) or volume (3D); raises on degenerate vertex sets."""
    vol = abs(signed_measure(s))
    h = longest_edge(s)
    if vol <= DEGENERACY_TOL * h**s.dim:
        raise DegenerateSimplexError(f"simplex measure {vol:.3e} below degeneracy threshold")
    return vol


def edge_lengths(s: Simplex) -> list[float]:
    """All edge lengths, sorted in descending order (first entry = h_T)."""
    v = s.vertices
    lengths = [float(np.linalg.norm(v[i] - v[j])) for i, j in combinations(range(len(v)), 2)]
    lengths.sort(reverse=True)
    return lengths


def longest_edge(s: Simplex) -> float:
    v = s.vertices
    return max(float(np.linalg.norm(v[i] - v[j])) for i, j in combinations(range(len(v)), 2))


def circumcenter(s: Simplex) -> np.ndarray:
    """Center of the circumscribed ball.

    Solves the perpendicular-bisector system with partial pivoting; the
    shift to the first vertex keeps the system well scaled.
    """
    measure(s)  # reject degenerate input before solving
    v = s.vertices
    d = v[1:] - v[0]
    rhs = np.einsum("ij,ij->i", d, d)
    y = np.linalg.solve(2.0 * d, rhs)
    return v[0] + y


def circumradius(s: Simplex) -> float:
    return float(np.linalg.norm(circumcenter(s) - s.vertices[0]))


def _facet_measures(s: Simplex) -> list[float]:
    v = s.vertices
    if s.dim == 2:
        return [float(np.linalg.norm(v[i] - v[j])) for i, j in combinations(range(3), 2)]
    areas = []
    for face in combinations(range(4), 3):
        a, b, c = (v[i] for i in face)
        areas.append(0.5 * float(np.linalg.norm(np.cross(b - a, c - a))))
    return areas


def inradius(s: Simplex) -> float:
    """Radius of the inscribed ball: dim * measure / (facet measure sum)."""
    return s.dim * measure(s) / sum(_facet_measures(s))


def angles(t: Simplex) -> list[float]:
    """Interior angles of a triangle, in radians, vertex order."""
    if t.dim != 2:
        raise ValueError("angles are defined for triangles only")
    measure(t)
    v = t.vertices
    out = []
    for i in range(3):
        u = v[(i + 1) % 3] - v[i]
        w = v[(i + 2) % 3] - v[i]
        out.append(math.atan2(abs(u[0] * w[1] - u[1] * w[0]), float(np.dot(u, w))))
    return out


def min_angle(t: Simplex) -> float:
    return min(angles(t))


def is_nonblunt(t: Simplex) -> bool:
    """True iff no interior angle exceeds pi/2 (right angles admitted)."""
    return max(angles(t)) <= math.pi / 2.0 + NONBLUNT_TOL


def barycenter(s: Simplex) -> np.ndarray:
    return s.vertices.mean(axis=0)
