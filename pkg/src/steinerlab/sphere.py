"""Quadrature nodes on S^1 and S^2."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def circle_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Equispaced angles on the unit circle with trapezoid weights."""
    theta = 2 * np.pi * np.arange(m) / m
    nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return nodes, np.full(m, 2 * np.pi / m)


_PHI = (1 + 5 ** 0.5) / 2
_ICO_VERTS = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
], dtype=float)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


@lru_cache(maxsize=8)
def icosphere(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and triangles of the icosahedron subdivided ``level`` times."""
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts), np.array(faces)


def spherical_triangle_areas(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    # Van Oosterom-Strackee solid angle formula.
    triple = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    denom = 1 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2 * np.arctan2(triple, denom)


@lru_cache(maxsize=8)
def icosphere_quadrature(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Centroid rule on the subdivided icosahedron: (nodes, weights summing to 4*pi)."""
    verts, faces = icosphere(level)
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    cen = a + b + c
    cen /= np.linalg.norm(cen, axis=1, keepdims=True)
    return cen, spherical_triangle_areas(a, b, c)


def sphere_quadrature(n: int, samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Direction nodes and weights for integration over S^{n-1}, n in {2, 3}.

    For n=3 the icosahedron level is the smallest one with at least ``samples``
    triangles.
    """
    if n == 2:
        return circle_nodes(samples)
    if n == 3:
        level = 0
        while 20 * 4 ** level < samples:
            level += 1
        nodes, weights = icosphere_quadrature(level)
        return nodes.copy(), weights.copy()
    raise ValueError(f"sphere quadrature supports n in {{2, 3}}, got {n}")


def random_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
