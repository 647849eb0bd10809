"""Steiner symmetrals, successive symmetrization and midpoint-set diagnostics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .bodies import (Ball, Chord, ConvexBody, Frame, GraphBody, GraphPair, QuadratureSpec, RadialBody,
                     hausdorff_distance, register_kind, body_from_dict, unit_vector, volume)
from .differential import ANALYTIC, JetEvaluation
from .errors import InputError
from .generators import Generator
from .sphere import unit_ball_volume
from .surface import SurfaceResult, surface_areas


@register_kind
class SymmetralBody(ConvexBody):
    """S_xi(K): over each x of the projection, the chord of K re-centered at t = 0.

    In its own frame the overgraph and undergraph both equal h = (f + g)/2
    with jets averaged from the parent's, so analytic parents keep exact
    derivatives.
    """

    kind = "Symmetral"
    exact_support = False

    def __init__(self, parent: ConvexBody, xi):
        xi = unit_vector(xi, parent.dim)
        super().__init__(parent.dim)
        self.parent = parent
        self.frame = Frame(xi)
        self.native_frame = self.frame
        self.analytic = parent.analytic
        self.positive_curvature = parent.positive_curvature
        self.representation_error = parent.representation_error
        self._xc = self.frame.to_frame(parent.center)[:-1]
        self.flat_order = self._inherited_flat_order()

    def _inherited_flat_order(self):
        # Flat points survive only where both parent sides are flat over the same x, or on the rim.
        if self.parent.flat_order is None:
            return None
        xs = self.parent.singular_x(self.frame)
        if len(xs) == 0:
            return None
        d = np.linalg.norm(xs[:, None] - xs[None], axis=-1)
        shared = np.any(d[np.triu_indices(len(xs), 1)] < 1e-9 * self.parent.bounding_radius)
        if shared or GraphPair(self.parent, self.frame).rim_singular:
            return self.parent.flat_order
        return None

    def singular_points(self):
        xs = self.parent.singular_x(self.frame)
        if len(xs) == 0:
            return np.empty((0, self.dim))
        h, _ = self.half_width(xs)
        return np.concatenate([self.frame.to_world(xs, h), self.frame.to_world(xs, -h)])

    @property
    def xi(self):
        return self.frame.xi

    @property
    def center(self):
        return self.frame.to_world(self._xc[None], np.zeros(1))[0]

    @property
    def bounding_radius(self):
        return float(np.sqrt(2)) * (self.parent.bounding_radius + np.linalg.norm(self.parent.center))

    def half_width(self, x) -> tuple[np.ndarray, np.ndarray]:
        ch = self.parent.chord(self.frame, np.atleast_2d(x))
        return np.where(ch.ok, (ch.hi - ch.lo) / 2, 0.0), ch.ok

    def level(self, y):
        z = self.frame.to_frame(np.atleast_2d(y))
        h, ok = self.half_width(z[:, :-1])
        t = np.abs(z[:, -1])
        return np.where(ok, t - h, t + 1.0)

    def chord(self, frame, x):
        if frame.same_as(self.frame):
            h, ok = self.half_width(x)
            return Chord(-h, h, ok)
        return super().chord(frame, x)

    def _native_jets(self, x):
        ch = self.parent.chord(self.frame, x)
        if self.parent.analytic:
            over, under = self.parent.graph_jets(self.frame, x, ch)
        else:
            gp = GraphPair(self.parent, self.frame)
            _, over, under = gp.jets(x)
        h = JetEvaluation.average(over, under)
        return h

    def graph_jets(self, frame, x, chord):
        x = np.atleast_2d(x)
        if frame.same_as(self.frame):
            h = self._native_jets(x)
            return h, h
        return super().graph_jets(frame, x, chord)

    def defining(self, y):
        # |t| - h(x) in the native frame, pulled back to world coordinates.
        z = self.frame.to_frame(np.atleast_2d(y))
        x, t = z[:, :-1], z[:, -1]
        h = self._native_jets(x)
        k = self.dim - 1
        g = np.concatenate([-h.gradient, np.sign(t)[:, None]], axis=1)
        H = np.zeros((len(z), k + 1, k + 1))
        H[:, :k, :k] = -h.hessian
        R = self.frame.R
        return np.abs(t) - h.value, g @ R, np.einsum("ji,mjk,kl->mil", R, H, R)

    def projection_radial(self, frame, x0, omegas):
        if frame.same_as(self.frame):
            return self.parent.projection_radial(frame, x0, omegas)
        return super().projection_radial(frame, x0, omegas)

    @cached_property
    def _cloud(self):
        gp = GraphPair(self, self.frame)
        x, _ = gp.nodes(1024 if self.dim == 2 else 96)
        if self.dim == 2:
            a, b = gp.extent
            rim = np.array([[a], [b]])
        else:
            th = 2 * np.pi * (np.arange(256) + 0.5) / 256
            om = np.stack([np.cos(th), np.sin(th)], axis=1)
            rim = gp.x0 + om * gp.domain_radial(om)[:, None]
        h, _ = self.half_width(x)
        pts = np.concatenate([self.frame.to_world(x, h), self.frame.to_world(x, -h),
                              self.frame.to_world(rim, np.zeros(len(rim)))])
        return pts

    def _support(self, U):
        return np.max(U @ self._cloud.T, axis=1)

    def _radial(self, U):
        # Rays from the origin start inside, so bisection on the level is safe.
        return super()._radial(U)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "parent": self.parent.to_dict(), "xi": self.xi.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(body_from_dict(d["parent"]), d["xi"])


def steiner_symmetral(body: ConvexBody, xi, q: QuadratureSpec | None = None) -> ConvexBody:
    """S_xi(body): a semi-analytic wrapper, or a grid body when the parent is a grid."""
    xi = unit_vector(xi, body.dim)
    if isinstance(body, GraphBody):
        frame = Frame(xi)
        if frame.same_as(body.frame):
            h = np.where(body.mask, (body.f + body.g) / 2, np.nan)
            return GraphBody(xi, body.lower, body.spacing, h, h, body.mask)
        res = max(body.mask.shape)
        return GraphBody.from_body(SymmetralBody(body, xi), xi, res)
    return SymmetralBody(body, xi)


# --------------------------------------------------------------------------
# Materialization
# --------------------------------------------------------------------------

def _radial_samples_from_graph(body: SymmetralBody, m: int) -> np.ndarray:
    """Radial function of a planar symmetral at m equispaced angles.

    The boundary is traced as (x(s), +-h(x(s))) with x = mid + half*cos(s),
    a smooth closed curve; r(theta) is then a periodic spline through the
    traced points.
    """
    gp = GraphPair(body, body.frame)
    a, b = gp.extent
    mid, half = (a + b) / 2, (b - a) / 2
    N = 8 * m
    s = 2 * np.pi * np.arange(N) / N
    x = (mid + half * np.cos(s))[:, None]
    h, _ = body.half_width(x)
    h = np.where(s < np.pi, h, -h)
    h[0] = 0.0
    h[N // 2] = 0.0
    P = body.frame.to_world(x, h)
    theta = np.unwrap(np.arctan2(P[:, 1], P[:, 0]))
    r = np.linalg.norm(P, axis=1)
    if theta[-1] < theta[0]:
        theta, r = theta[::-1], r[::-1]
    theta = theta - 2 * np.pi * np.floor(theta[0] / (2 * np.pi))
    knots = np.append(theta, theta[0] + 2 * np.pi)
    spline = CubicSpline(knots, np.append(r, r[0]), bc_type="periodic")
    target = 2 * np.pi * np.arange(m) / m
    shifted = theta[0] + np.mod(target - theta[0], 2 * np.pi)
    return spline(shifted)


def materialize(body: ConvexBody, q: QuadratureSpec | None = None) -> ConvexBody:
    """Replace a wrapper by a flat representation: RadialBody (n=2) or GraphBody (n=3)."""
    q = q or QuadratureSpec()
    if isinstance(body, (RadialBody, GraphBody)):
        return body
    if body.dim == 2:
        if isinstance(body, SymmetralBody):
            radii = _radial_samples_from_graph(body, q.radial_samples)
        else:
            th = 2 * np.pi * np.arange(q.radial_samples) / q.radial_samples
            radii = body._radial(np.stack([np.cos(th), np.sin(th)], axis=1))
        return RadialBody(radii)
    xi = body.frame.xi if isinstance(body, SymmetralBody) else np.eye(body.dim)[-1]
    return GraphBody.from_body(body, xi, q.grid_resolution)


# --------------------------------------------------------------------------
# Diagnostics
# --------------------------------------------------------------------------

def midpoint_fit(body: ConvexBody, xi, q: QuadratureSpec | None = None):
    """Least-squares affine fit of chord midpoints (f - g)/2 over the truncated domain.

    Returns (coefficients [const, slopes...], max abs residual, sample count).
    """
    q = q or QuadratureSpec()
    frame = Frame(unit_vector(xi, body.dim))
    gp = GraphPair(body, frame, q)
    x, _ = gp.nodes(q.grid_resolution, q.boundary_margin)
    ch = gp.chord(x)
    x, lo, hi = x[ch.ok], ch.lo[ch.ok], ch.hi[ch.ok]
    if len(x) < body.dim:
        raise InputError("too few sample points for a midpoint fit")
    mid = (hi + lo) / 2
    X = np.concatenate([np.ones((len(x), 1)), x], axis=1)
    coef, *_ = np.linalg.lstsq(X, mid, rcond=None)
    resid = float(np.max(np.abs(X @ coef - mid)))
    return coef, resid, len(x)


def midpoint_planarity(body: ConvexBody, xi, q: QuadratureSpec | None = None) -> float:
    """Max residual of an affine fit to chord midpoints; ~0 iff the midpoint set is flat."""
    return midpoint_fit(body, xi, q)[1]


def ball_of_equal_volume(body: ConvexBody, q: QuadratureSpec | None = None) -> Ball:
    v = volume(body, q)
    r = (v / unit_ball_volume(body.dim)) ** (1 / body.dim)
    return Ball(r, np.zeros(body.dim), body.dim)


# --------------------------------------------------------------------------
# Successive symmetrization
# --------------------------------------------------------------------------

def direction_schedule(n: int, n_steps: int, seed: int) -> list[np.ndarray]:
    """Directions for steps 1..n_steps: every 5th a coordinate axis, the rest uniform random."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(1, n_steps + 1):
        if i % 5 == 0:
            e = np.zeros(n)
            e[(i // 5 - 1) % n] = 1.0
            out.append(e)
        else:
            v = rng.standard_normal(n)
            out.append(v / np.linalg.norm(v))
    return out


@dataclass
class TraceStep:
    index: int
    xi: list[float] | None
    hausdorff_to_BK: float
    volume: float
    surface_values: dict[str, SurfaceResult] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"step": self.index, "xi": self.xi, "hausdorff_to_BK": self.hausdorff_to_BK,
                "volume": self.volume,
                "surface_values": {k: v.to_dict() for k, v in self.surface_values.items()}}


@dataclass
class SymmetrizationTrace:
    steps: list[TraceStep]
    seed: int
    body_id: str
    ball_radius: float

    def to_jsonl(self) -> str:
        lines = []
        for s in self.steps:
            d = {"body": self.body_id, "seed": self.seed, "ball_radius": self.ball_radius}
            d.update(s.to_dict())
            lines.append(json.dumps(d, sort_keys=True))
        return "\n".join(lines) + "\n"

    def series(self, name: str) -> list[SurfaceResult]:
        return [s.surface_values[name] for s in self.steps]

    @property
    def final(self) -> TraceStep:
        return self.steps[-1]


def successive_symmetrization(body: ConvexBody, n_steps: int, seed: int, gens: list[Generator],
                              q: QuadratureSpec | None = None, body_id: str = "",
                              progress=None) -> SymmetrizationTrace:
    """K_0 = body, K_i = S_{xi_i}(K_{i-1}) with every intermediate materialized.

    Volumes and surface functionals are taken on the semi-analytic wrapper in
    the plane and on the grid materialization in space; the Hausdorff
    distance to B_K always uses the materialization.
    """
    if n_steps < 1:
        raise InputError("n_steps must be at least 1")
    q = q or QuadratureSpec()
    n = body.dim
    BK = ball_of_equal_volume(body, q)
    steps = []

    def record(i, xi, K_eval, K_flat):
        vals = surface_areas(K_eval, gens, None, q)
        d = hausdorff_distance(K_flat, BK, q)
        steps.append(TraceStep(i, None if xi is None else [float(v) for v in xi], d, volume(K_eval, q), vals))
        if progress:
            progress(steps[-1])

    record(0, None, body, body)
    flat = body
    for i, xi in enumerate(direction_schedule(n, n_steps, seed), start=1):
        wrapper = SymmetralBody(flat, xi)
        flat = materialize(wrapper, q)
        record(i, xi, wrapper if n == 2 else flat, flat)
    return SymmetrizationTrace(steps, seed, body_id, BK.radius)
