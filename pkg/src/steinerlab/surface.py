"""L_phi / L_psi / L_p affine surface areas from overgraph and undergraph jets.

For a body with overgraph f and undergraph g over the projection domain K0,

    as_gen(K) = int_{K0} gen(R_f) <f> + gen(R_g) <g> dx,
    R_f = det(-d^2 f) / <f>^{n+1},  <f> = f - x . grad f.

Smooth bodies are integrated with a boundary-fitted rule (see
``GraphPair.nodes``): the integrand grows like an inverse square root of the
distance to relbd K0, and the cosine / sine substitutions remove that
singularity so the rule converges spectrally. Grid bodies use the masked
midpoint rule with an explicit boundary strip. Every result carries an error
estimate built from coarser levels (and from two strip widths when a strip is
used).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import ConvexBody, Frame, GraphBody, GraphPair, QuadratureSpec, QUADRATURE_DIMS, unit_vector, volume
from .differential import curvature_ratio, support_bracket
from .errors import GeometryError, InputError
from .generators import CONV, Generator, lp_generator, power_conc
from .sphere import unit_ball_volume

DIVERGENCE_FLOOR = 1e-14
ERROR_FLOOR = 1e-11
TAIL_NEAR, TAIL_FAR = 1e-12, 1e-8


@dataclass(frozen=True)
class SurfaceResult:
    value: float
    estimated_error: float
    n_samples: int
    diverged: bool = False

    def to_dict(self) -> dict:
        return {"value": _json_float(self.value), "estimated_error": _json_float(self.estimated_error),
                "n_samples": self.n_samples, "diverged": self.diverged}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["value"]), float(d["estimated_error"]), int(d["n_samples"]), bool(d["diverged"]))

    @classmethod
    def divergent(cls, n_samples: int = 0) -> "SurfaceResult":
        return cls(math.inf, 0.0, n_samples, True)


def _json_float(x: float):
    return "inf" if math.isinf(x) else float(x)


class _Diverged(Exception):
    pass


def _frame_for(body: ConvexBody, xi, q: QuadratureSpec) -> GraphPair:
    """Graph pair in the requested frame, or in a nearby one if a singular point sits on its rim.

    The functional does not depend on the frame; frames whose rim runs through
    a flat (or infinitely curved) boundary point make the graph integrand
    singular beyond what double precision can resolve, so those are rotated
    away from. Native frames (symmetrals, grids) are kept.
    """
    native = getattr(body, "native_frame", None)
    if native is not None:
        return GraphPair(body, native, q)
    if xi is None:
        xi = np.zeros(body.dim)
        xi[-1] = 1.0
    xi = unit_vector(xi, body.dim)
    gp = GraphPair(body, Frame(xi), q)
    if not len(body.singular_points()):
        return gp
    rng = np.random.default_rng(12345)
    tries = 0
    while gp.rim_singular and tries < 20:
        tries += 1
        v = xi + 0.15 * rng.standard_normal(body.dim)
        gp = GraphPair(body, Frame(v / np.linalg.norm(v)), q)
    return gp


class _Samples:
    """Curvature ratios and support brackets at one set of nodes, shared by all generators."""

    def __init__(self, gp: GraphPair, x: np.ndarray, w: np.ndarray):
        self.sides = []
        self.dist = None
        # Graded nodes can land within rounding of the rim; such lines are dropped.
        ch = gp.chord(x) if len(x) else None
        if ch is not None and not np.all(ch.ok):
            ok = ch.ok
            x, w = x[ok], w[ok]
            ch = gp.chord(x) if len(x) else None
        self.w = w
        # Bodies with declared flat points get an exact divergence test instead of the floor.
        self.floor_check = gp.body.flat_order is None
        if len(x) == 0:
            return
        _, over, under = gp.jets(x, chord=ch)
        for j in (over, under):
            self.sides.append((curvature_ratio(j, x), support_bracket(j, x)))
        if gp.grid is None and gp.dim == 2 and (len(gp.singular_x) or gp.rim_singular):
            self.dist = gp.special_distance(x)

    def integrate(self, gen: Generator) -> tuple[float, float]:
        """(value, tail error). The tail is the part next to singular points that floats cannot reach."""
        total = np.zeros(len(self.w))
        for ratio, bracket in self.sides:
            if gen.class_tag == CONV and self.floor_check and np.any(ratio < DIVERGENCE_FLOOR):
                raise _Diverged()
            total += gen(ratio) * bracket
        contrib = self.w * total
        value = float(np.sum(contrib))
        if self.dist is None:
            return value, 0.0
        # Mass within 1e-8 and 1e-12 of the singular points; a power law through
        # the two strips extrapolates what lies below the last representable node.
        d1 = float(np.sum(contrib[self.dist < TAIL_NEAR]))
        d2 = float(np.sum(contrib[(self.dist >= TAIL_NEAR) & (self.dist < TAIL_FAR)]))
        if d1 == 0.0:
            return value, 0.0
        r = d2 / d1
        if r > 1.0 and np.isfinite(r):
            tail = d1 / (r - 1.0)
            return value + tail, abs(tail)
        return value, abs(d1) + abs(d2)


def integrand(gp: GraphPair, gen: Generator, x: np.ndarray) -> np.ndarray:
    """gen(R_f)<f> + gen(R_g)<g> at frame points x (rows)."""
    x = np.atleast_2d(x)
    _, over, under = gp.jets(x)
    total = np.zeros(len(x))
    for j in (over, under):
        total += gen(curvature_ratio(j, x)) * support_bracket(j, x)
    return total


def _analytically_divergent(body: ConvexBody, gen: Generator) -> bool:
    """Flat boundary points of order k make psi-integrals diverge when a*k <= -1."""
    if gen.class_tag != CONV or body.flat_order is None or gen.exponent is None:
        return False
    return gen.exponent * body.flat_order <= -1


def _level_estimate(values: list[float]) -> float:
    """Error of values[0] from a sequence of successively coarser approximations."""
    q1, q2, q3 = values
    d1, d2 = q1 - q2, q2 - q3
    if d2 != 0:
        r = d1 / d2
        if 0 < r < 1:
            return max(abs(d1), abs(d1) * r / (1 - r))
    return abs(d1) + abs(d2)


def _grid_nodes(body: GraphBody, margin: float, stride: int = 1):
    active = body.mask & (body._inside_dist > margin * float(np.max(body._inside_dist)))
    if stride > 1:
        sub = np.zeros_like(active)
        sub[(slice(None, None, stride),) * active.ndim] = True
        active &= sub
    x = body.cell_centers()[active]
    return x, np.full(len(x), body.cell_volume * stride ** active.ndim)


def surface_areas(body: ConvexBody, gens: list[Generator], xi=None, q: QuadratureSpec | None = None,
                  margin: float | None = None) -> dict[str, SurfaceResult]:
    """as_gen(body) for several generators from one set of jet evaluations.

    Smooth bodies: the boundary-fitted rule at resolutions res, res/2, res/4
    with the error taken from the level differences. ``margin`` (relative
    width of a left-out boundary strip) is optional there; when given the
    value comes from margin/2 and the change from margin enters the error.
    Grid bodies: masked midpoint rule with strip widths eps and eps/2
    (eps = q.boundary_margin unless ``margin`` is given) plus a stride-2
    coarse grid.
    """
    q = q or QuadratureSpec()
    if body.dim not in QUADRATURE_DIMS:
        raise InputError(f"quadrature supports n in {QUADRATURE_DIMS}")
    gens = [g if g.n == body.dim else g.with_dim(body.dim) for g in gens]
    gp = _frame_for(body, xi, q)
    if gp.grid is not None:
        eps = q.boundary_margin if margin is None else margin
        main = _Samples(gp, *_grid_nodes(body, eps / 2))
        others = [_Samples(gp, *_grid_nodes(body, eps)), _Samples(gp, *_grid_nodes(body, eps / 2, 2))]
    else:
        res = q.grid_resolution
        half = (margin or 0.0) / 2
        main = _Samples(gp, *gp.nodes(res, half))
        others = [_Samples(gp, *gp.nodes(r, half)) for r in (res // 2, res // 4)]
        if margin:
            others.append(_Samples(gp, *gp.nodes(res, margin)))
    out = {}
    for gen in gens:
        out[gen.name] = _one(body, gen, gp, main, others, margin)
    return out


def _one(body, gen, gp, main, others, margin) -> SurfaceResult:
    m = len(main.w)
    if _analytically_divergent(body, gen):
        return SurfaceResult.divergent(m)
    try:
        value, tail = main.integrate(gen)
        aux = [o.integrate(gen)[0] for o in others]
    except _Diverged:
        return SurfaceResult.divergent(m)
    if not np.isfinite(value) or not np.all(np.isfinite(aux)):
        if gen.class_tag == CONV:
            return SurfaceResult.divergent(m)
        raise GeometryError("non-finite affine surface area integrand")
    if gp.grid is not None:
        err = abs(value - aux[0]) + abs(value - aux[1])
    else:
        err = _level_estimate([value, aux[0], aux[1]])
        if margin:
            err += abs(value - aux[2])
    err += tail + ERROR_FLOOR * abs(value) + 10 * body.representation_error * abs(value)
    return SurfaceResult(max(value, 0.0), float(err), int(m), False)


def affine_surface_area(body: ConvexBody, gen: Generator, xi=None, q: QuadratureSpec | None = None,
                        margin: float | None = None) -> SurfaceResult:
    """as_gen(body) computed in the frame taking xi to e_n (bodies with a native frame use it)."""
    return surface_areas(body, [gen], xi, q, margin)[gen.name if gen.n == body.dim else gen.with_dim(body.dim).name]


def as_p(body: ConvexBody, p: float, q: QuadratureSpec | None = None, xi=None,
         margin: float | None = None) -> SurfaceResult:
    """L_p affine surface area for p in (-n, 0) or (0, inf]."""
    n = body.dim
    if not (p > 0 or -n < p < 0):
        raise InputError("p must lie in (-n, 0) or (0, inf]")
    return affine_surface_area(body, lp_generator(p, n), xi, q, margin)


def as_infinity(body: ConvexBody, q: QuadratureSpec | None = None, xi=None) -> SurfaceResult:
    """as_{+-inf}: the generator phi(t) = t."""
    return affine_surface_area(body, power_conc(math.inf, body.dim), xi, q)


# --------------------------------------------------------------------------
# Closed forms for balls
# --------------------------------------------------------------------------

def ball_value(gen: Generator, r: float = 1.0, n: int | None = None) -> float:
    """as_gen(r B_2^n) = n |B_2^n| r^n gen(r^{-2n})."""
    n = gen.n if n is None else n
    return n * unit_ball_volume(n) * r ** n * float(gen(np.array(r ** (-2 * n))))


def ball_as_p(p: float, r: float, n: int) -> float:
    """as_p(r B_2^n) = n |B_2^n| r^{n(n-p)/(n+p)}."""
    if math.isinf(p):
        return n * unit_ball_volume(n) * r ** (-n)
    return n * unit_ball_volume(n) * r ** (n * (n - p) / (n + p))


def constant_identity(body: ConvexBody, c: float, q: QuadratureSpec | None = None) -> float:
    """c n |K|, the value of the constant-generator integral."""
    return c * body.dim * volume(body, q)
