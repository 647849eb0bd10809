"""Convex bodies with the origin in their interior.

Every body exposes a *level* function (nonpositive exactly on the body and
quasi-convex along lines), support and radial functions, and chords along
lines of a :class:`Frame`. Bodies with a smooth defining function also
expose exact graph jets through implicit differentiation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import interpolate, ndimage

from .differential import ANALYTIC, FINITE_DIFFERENCE, JetEvaluation, fd_jet, implicit_jet_local
from .errors import DomainError, GeometryError, InputError
from .sphere import icosphere, sphere_quadrature, unit_ball_volume

BISECTION_TOL = 1e-12
GOLDEN_TOL = 1e-10
UNIT_TOL = 1e-9
QUADRATURE_DIMS = (2, 3)


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization parameters shared by all quadrature-backed operations.

    ``grid_resolution`` sets the node count of the boundary-fitted rule
    (4*res angles in n=2, res x res in n=3) and the cell count per axis of
    grid bodies. ``boundary_margin`` is the relative width of the strip next
    to the projection boundary that truncated runs and grid bodies leave out.
    """

    grid_resolution: int = 256
    boundary_margin: float = 0.01
    sphere_samples: int = 720
    fd_step: float = 1e-4
    tol_rel: float = 5e-3
    radial_samples: int = 1024

    def __post_init__(self):
        if self.grid_resolution < 16:
            raise InputError("grid_resolution must be at least 16")
        if not 0 < self.boundary_margin < 0.1:
            raise InputError("boundary_margin must lie in (0, 0.1)")
        for name in ("sphere_samples", "fd_step", "tol_rel", "radial_samples"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")

    def with_resolution(self, res: int) -> "QuadratureSpec":
        return QuadratureSpec(res, self.boundary_margin, self.sphere_samples, self.fd_step,
                              self.tol_rel, self.radial_samples)


def unit_vector(u, dim: int | None = None) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if dim is not None and u.shape[-1] != dim:
        raise InputError(f"expected vectors of dimension {dim}, got {u.shape[-1]}")
    if np.any(np.abs(np.linalg.norm(u, axis=-1) - 1) > UNIT_TOL):
        raise InputError("direction must be a unit vector")
    return u


def normalize(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


# --------------------------------------------------------------------------
# Frames
# --------------------------------------------------------------------------

class Frame:
    """Rotation R taking a unit direction xi to e_n.

    R is the Householder reflection through (xi + e_n)/|xi + e_n| followed by
    negation of the last coordinate (reflection through e_1 when xi = -e_n),
    so det R = 1 and the construction is deterministic.
    """

    __slots__ = ("xi", "R")

    def __init__(self, xi):
        xi = normalize(np.asarray(xi, dtype=float))
        n = xi.size
        e_n = np.zeros(n)
        e_n[-1] = 1.0
        v = xi + e_n
        if np.linalg.norm(v) < 1e-8:
            w = np.zeros(n)
            w[0] = 1.0
        else:
            w = v / np.linalg.norm(v)
        H = np.eye(n) - 2 * np.outer(w, w)
        D = np.eye(n)
        D[-1, -1] = -1.0
        self.xi = xi
        self.R = D @ H

    @property
    def dim(self) -> int:
        return self.xi.size

    def to_frame(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) @ self.R.T

    def to_world(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return np.concatenate([x, t[..., None]], axis=-1) @ self.R

    def vector_to_frame(self, g) -> np.ndarray:
        return np.asarray(g) @ self.R.T

    def matrix_to_frame(self, H) -> np.ndarray:
        return np.einsum("ij,...jk,lk->...il", self.R, H, self.R)

    def same_as(self, other: "Frame") -> bool:
        return other.dim == self.dim and np.array_equal(other.R, self.R)


def frame_for(xi) -> Frame:
    return Frame(xi)


# --------------------------------------------------------------------------
# Vectorized line searches
# --------------------------------------------------------------------------

def _golden_min(fun, a, b, tol=GOLDEN_TOL):
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    if a.size == 0:
        return a, a.copy()
    width = float(np.max(np.abs(b - a)))
    if width == 0:
        return a, fun(a)
    iters = max(1, int(math.ceil(math.log(width / tol) / math.log((1 + 5 ** 0.5) / 2))))
    r = (5 ** 0.5 - 1) / 2
    c = b - r * (b - a)
    d = a + r * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc < fd
        # left: minimum in [a, d]; new d = c, new c computed.
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        probe = np.where(left, b - r * (b - a), a + r * (b - a))
        fp = fun(probe)
        c, d, fc, fd = (np.where(left, probe, d), np.where(left, c, probe),
                        np.where(left, fp, fd), np.where(left, fc, fp))
    t = (a + b) / 2
    return t, fun(t)


def _bisect(fun, inside, outside, tol=BISECTION_TOL):
    """Elementwise bisection between points with fun <= 0 (inside) and fun > 0 (outside)."""
    a = np.array(inside, dtype=float)
    b = np.array(outside, dtype=float)
    if a.size == 0:
        return a
    width = float(np.max(np.abs(b - a)))
    iters = max(1, int(math.ceil(math.log2(max(width, tol) / tol))))
    for _ in range(iters):
        m = (a + b) / 2
        ins = fun(m) <= 0
        a = np.where(ins, m, a)
        b = np.where(ins, b, m)
    return (a + b) / 2


@dataclass
class Chord:
    """Intersection of lines x + t e_n (frame coordinates) with a body."""

    lo: np.ndarray
    hi: np.ndarray
    ok: np.ndarray
    min_level: np.ndarray | None = None


# --------------------------------------------------------------------------
# Base body
# --------------------------------------------------------------------------

_REGISTRY: dict[str, type] = {}


def register_kind(cls):
    _REGISTRY[cls.kind] = cls
    return cls


class ConvexBody:
    """Base class. Subclasses provide ``level`` and ideally ``defining``."""

    kind = "ConvexBody"
    analytic = True
    exact_support = False
    positive_curvature = True
    flat_order: float | None = None
    representation_error = 0.0
    polish_chords = True

    def __init__(self, dim: int):
        if int(dim) < 2:
            raise InputError("dimension must be at least 2")
        self.dim = int(dim)

    # -- required interface -------------------------------------------------
    @property
    def center(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def bounding_radius(self) -> float:
        raise NotImplementedError

    def level(self, y) -> np.ndarray:
        raise NotImplementedError

    def defining(self, y):
        """(Phi, grad Phi, Hess Phi) of a smooth function vanishing on the boundary."""
        raise NotImplementedError(f"{self.kind} has no smooth defining function")

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- generic behaviour --------------------------------------------------
    def _check_origin(self):
        if not float(self.level(np.zeros((1, self.dim)))[0]) < 0:
            raise GeometryError(f"origin is not interior to the {self.kind}")

    def contains(self, y) -> np.ndarray:
        return self.level(np.atleast_2d(y)) <= 0

    def volume_exact(self) -> float | None:
        return None

    def singular_points(self) -> np.ndarray:
        """Boundary points where the curvature vanishes or blows up (world coordinates)."""
        return np.empty((0, self.dim))

    def singular_x(self, frame: Frame) -> np.ndarray:
        return frame.to_frame(self.singular_points())[:, :-1]

    @property
    def is_centered_ellipsoid(self) -> bool:
        return False

    def support(self, u):
        """h_K(u) = max_{x in K} <x, u> for unit u (single vector or rows)."""
        u = unit_vector(u, self.dim)
        out = self._support(np.atleast_2d(u))
        return float(out[0]) if u.ndim == 1 else out

    def radial(self, u):
        """max{lambda > 0 : lambda u in K} for unit u."""
        u = unit_vector(u, self.dim)
        out = self._radial(np.atleast_2d(u))
        return float(out[0]) if u.ndim == 1 else out

    def _radial(self, U: np.ndarray) -> np.ndarray:
        hi = np.full(len(U), np.linalg.norm(self.center) + self.bounding_radius * 1.001 + 1e-9)
        fun = lambda lam: self.level(U * lam[:, None])  # noqa: E731
        return _bisect(fun, np.zeros(len(U)), hi)

    @cached_property
    def _cloud(self) -> np.ndarray:
        if self.dim == 2:
            theta = 2 * np.pi * np.arange(2048) / 2048
            dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        else:
            dirs, _ = icosphere(5)
        return dirs * self._radial(dirs)[:, None]

    def _support(self, U: np.ndarray) -> np.ndarray:
        if self.dim != 2:
            return np.max(U @ self._cloud.T, axis=1)
        return self._support_2d_refined(U)

    def _support_2d_refined(self, U: np.ndarray) -> np.ndarray:
        cloud = self._cloud
        m = len(cloud)
        j = np.argmax(U @ cloud.T, axis=1)
        dtheta = 2 * np.pi / m
        th0 = np.arctan2(cloud[j, 1], cloud[j, 0])

        def neg(theta):
            d = np.stack([np.cos(theta), np.sin(theta)], axis=1)
            return -self._radial(d) * np.sum(d * U, axis=1)

        _, val = _golden_min(neg, th0 - dtheta, th0 + dtheta, tol=1e-9)
        return np.maximum(-val, np.max(U @ cloud.T, axis=1))

    # -- lines in a frame ---------------------------------------------------
    def frame_level(self, frame: Frame, x, t) -> np.ndarray:
        return self.level(frame.to_world(x, t))

    def chord(self, frame: Frame, x) -> Chord:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m = len(x)
        tc = float(frame.to_frame(self.center)[-1])
        span = self.bounding_radius * 1.001 + 1e-9
        t_in = np.full(m, tc)
        L = self.frame_level(frame, x, t_in)
        need = np.flatnonzero(L >= 0)
        if need.size:
            xs = x[need]
            tt, LL = _golden_min(lambda t: self.frame_level(frame, xs, t),
                                       np.full(need.size, tc - span), np.full(need.size, tc + span))
            t_in[need] = tt
            L[need] = LL
        ok = L < 0
        lo, hi = t_in.copy(), t_in.copy()
        idx = np.flatnonzero(ok)
        if idx.size:
            xs = x[idx]
            f = lambda t: self.frame_level(frame, xs, t)  # noqa: E731
            hi[idx] = self._polish(frame, xs, _bisect(f, t_in[idx], np.full(idx.size, tc + span)))
            lo[idx] = self._polish(frame, xs, _bisect(f, t_in[idx], np.full(idx.size, tc - span)))
        return Chord(lo, hi, ok, L)

    def _polish(self, frame: Frame, x, t):
        """Newton steps on the defining function; bisection alone leaves 1e-12 noise that FD jets amplify."""
        if not (self.analytic and self.polish_chords):
            return t
        try:
            for _ in range(2):
                phi, grad, _ = self.defining(frame.to_world(x, t))
                step = phi / (grad @ frame.R[-1])
                step = np.where(np.isfinite(step) & (np.abs(step) < 4 * BISECTION_TOL), step, 0.0)
                t = t - step
        except NotImplementedError:
            pass
        return t

    def graph_jets(self, frame: Frame, x, chord: Chord) -> tuple[JetEvaluation, JetEvaluation]:
        """Exact jets of the overgraph f and undergraph g at frame points x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        top = frame.to_world(x, chord.hi)
        bot = frame.to_world(x, chord.lo)
        _, g1, H1, L = self.defining_local(top)
        _, g2, H2, _ = self.defining_local(bot)
        B = frame.R if L is None else frame.R @ L.T
        over = implicit_jet_local(x, chord.hi, g1, H1, B)
        under = implicit_jet_local(x, chord.lo, g2, H2, B).negate()
        return over, under

    def defining_local(self, y):
        """``defining`` in the body's own linear coordinates u = L y + c, plus L (None for identity)."""
        return (*self.defining(y), None)

    def line_hits(self, frame: Frame, x) -> np.ndarray:
        """Minimum of the level function along each line; negative where the line meets the interior."""
        x = np.atleast_2d(x)
        tc = float(frame.to_frame(self.center)[-1])
        span = self.bounding_radius * 1.001 + 1e-9
        _, L = _golden_min(lambda t: self.frame_level(frame, x, t),
                                 np.full(len(x), tc - span), np.full(len(x), tc + span), tol=1e-12)
        return L

    def projection_radial(self, frame: Frame, x0, omegas) -> np.ndarray:
        """Distance from x0 to the relative boundary of the projection along each unit omega."""
        omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
        x0 = np.asarray(x0, dtype=float)
        if self.dim == 2 and self.exact_support:
            e = frame.to_world(np.array([[1.0]]), 0.0)[0]
            b = self.support(e)
            a = -self.support(-e)
            return np.where(omegas[:, 0] > 0, b - x0[0], x0[0] - a)
        hi = np.full(len(omegas), 2 * self.bounding_radius * 1.001 + 1e-9)
        return _bisect(lambda s: self.line_hits(frame, x0 + s[:, None] * omegas),
                       np.zeros(len(omegas)), hi, tol=1e-13)


# --------------------------------------------------------------------------
# Analytic bodies
# --------------------------------------------------------------------------

@register_kind
class Ellipsoid(ConvexBody):
    """A B_2^n + c for a nonsingular n x n matrix A."""

    kind = "Ellipsoid"
    exact_support = True

    def __init__(self, A, center=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError("ellipsoid matrix must be square")
        super().__init__(A.shape[0])
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise InputError("ellipsoid matrix is singular")
        self.A = A
        self.c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float).reshape(self.dim)
        self.M = np.linalg.inv(A @ A.T)
        self._smax = float(s[0])
        self._check_origin()

    @property
    def center(self):
        return self.c

    @property
    def bounding_radius(self):
        return self._smax

    @property
    def is_centered_ellipsoid(self):
        return bool(np.linalg.norm(self.c) < 1e-14)

    def _quad(self, y):
        z = np.atleast_2d(y) - self.c
        return np.einsum("mi,ij,mj->m", z, self.M, z), z

    def level(self, y):
        q, _ = self._quad(y)
        return np.sqrt(q) - 1

    def defining(self, y):
        q, z = self._quad(y)
        H = np.broadcast_to(2 * self.M, (len(z), self.dim, self.dim))
        return q - 1, 2 * z @ self.M, H

    def _support(self, U):
        return U @ self.c + np.linalg.norm(U @ self.A, axis=1)

    def _radial(self, U):
        a = np.einsum("mi,ij,mj->m", U, self.M, U)
        b = U @ (self.M @ self.c)
        cc = self.c @ self.M @ self.c - 1
        return (b + np.sqrt(b * b - a * cc)) / a

    def chord(self, frame, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        Mf = frame.R @ self.M @ frame.R.T
        cf = frame.to_frame(self.c)
        w = x - cf[:-1]
        a = Mf[-1, -1]
        b = w @ Mf[:-1, -1]
        cc = np.einsum("mi,ij,mj->m", w, Mf[:-1, :-1], w) - 1
        disc = b * b - a * cc
        ok = disc > 0
        sq = np.sqrt(np.clip(disc, 0, None))
        return Chord(cf[-1] + (-b - sq) / a, cf[-1] + (-b + sq) / a, ok)

    def projection_radial(self, frame, x0, omegas):
        omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
        RA = frame.R @ self.A
        P = (RA @ RA.T)[:-1, :-1]
        Pinv = np.linalg.inv(P)
        d = np.asarray(x0, dtype=float) - frame.to_frame(self.c)[:-1]
        a = np.einsum("mi,ij,mj->m", omegas, Pinv, omegas)
        b = omegas @ (Pinv @ d)
        cc = d @ Pinv @ d - 1
        return (-b + np.sqrt(b * b - a * cc)) / a

    def volume_exact(self):
        return abs(float(np.linalg.det(self.A))) * unit_ball_volume(self.dim)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "A": self.A.tolist(), "center": self.c.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["A"], d.get("center"))


@register_kind
class Ball(Ellipsoid):
    """Euclidean ball of radius r centered at c."""

    kind = "Ball"

    def __init__(self, radius: float = 1.0, center=None, dim: int | None = None):
        if radius <= 0:
            raise InputError("radius must be positive")
        if dim is None:
            dim = 2 if center is None else len(center)
        self.radius = float(radius)
        super().__init__(self.radius * np.eye(dim), center)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "radius": self.radius, "center": self.c.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["radius"], d.get("center"), d["dim"])


@register_kind
class PNormBall(ConvexBody):
    """{y : sum_i |(y_i - c_i)/a_i|^q <= 1} with q in (1, inf)."""

    kind = "PNormBall"
    exact_support = True

    def __init__(self, q: float, semi_axes, center=None):
        a = np.asarray(semi_axes, dtype=float).ravel()
        super().__init__(a.size)
        if not 1 < q < math.inf:
            raise InputError("q must lie in (1, inf)")
        if np.any(a <= 0):
            raise InputError("semi-axes must be positive")
        self.q = float(q)
        self.a = a
        self.c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float).reshape(self.dim)
        self.positive_curvature = self.q <= 2
        self.flat_order = self.q - 2 if self.q > 2 else None
        self._check_origin()

    @property
    def center(self):
        return self.c

    @property
    def bounding_radius(self):
        return float(np.linalg.norm(self.a))

    def _z(self, y):
        return (np.atleast_2d(y) - self.c) / self.a

    def level(self, y):
        return np.sum(np.abs(self._z(y)) ** self.q, axis=1) ** (1 / self.q) - 1

    def defining(self, y):
        z = self._z(y)
        q = self.q
        az = np.abs(z)
        phi = np.sum(az ** q, axis=1) - 1
        grad = q * az ** (q - 1) * np.sign(z) / self.a
        # for q < 2 the Hessian blows up on the axes; floor |z| there only
        hz = np.maximum(az, 1e-12) if q < 2 else az
        diag = q * (q - 1) * hz ** (q - 2) / self.a ** 2
        H = np.zeros((len(z), self.dim, self.dim))
        idx = np.arange(self.dim)
        H[:, idx, idx] = diag
        return phi, grad, H

    def _support(self, U):
        qs = self.q / (self.q - 1)
        return U @ self.c + np.sum(np.abs(U * self.a) ** qs, axis=1) ** (1 / qs)

    def _radial(self, U):
        if np.linalg.norm(self.c) == 0:
            return 1 / np.sum(np.abs(U / self.a) ** self.q, axis=1) ** (1 / self.q)
        return super()._radial(U)

    def singular_points(self):
        if self.q == 2:
            return np.empty((0, self.dim))
        E = np.diag(self.a)
        return self.c + np.concatenate([E, -E])

    def volume_exact(self):
        n, q = self.dim, self.q
        return float(np.prod(self.a)) * (2 * math.gamma(1 + 1 / q)) ** n / math.gamma(1 + n / q)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "q": self.q, "semi_axes": self.a.tolist(),
                "center": self.c.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["q"], d["semi_axes"], d.get("center"))


def _default_perturbation(n: int):
    if n == 2:
        return np.diag([1.0, -1.0]), np.array([0.6, 0.8])
    if n == 3:
        w = np.array([0.48, 0.6, 0.64])
        return np.diag([1.0, -0.5, -0.5]), w / np.linalg.norm(w)
    B = np.zeros((n, n))
    B[0, 0], B[1, 1] = 1.0, -1.0
    w = np.zeros(n)
    w[0] = 1.0
    return B, w


@register_kind
class PerturbedBall(ConvexBody):
    """Star body c + {rho(u) u} with rho(u) = r (1 + delta s(u)).

    The perturbation is s(u) = <u, B u> + <w, u>^3, a smooth function on the
    sphere; convexity is certified at construction by checking that the
    tangential Hessian of the defining function is positive on a dense set of
    boundary points.
    """

    kind = "PerturbedBall"

    def __init__(self, radius: float = 1.0, delta: float = 0.05, center=None, B=None, w=None,
                 dim: int | None = None):
        if dim is None:
            dim = 2 if center is None else len(center)
        super().__init__(dim)
        if radius <= 0:
            raise InputError("radius must be positive")
        B0, w0 = _default_perturbation(self.dim)
        self.B = B0 if B is None else np.asarray(B, dtype=float)
        self.w = w0 if w is None else np.asarray(w, dtype=float)
        if not np.allclose(self.B, self.B.T):
            raise InputError("perturbation matrix must be symmetric")
        self.r = float(radius)
        self.delta = float(delta)
        self.c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float).reshape(self.dim)
        self._validate_convexity()
        self._check_origin()

    def s(self, z):
        z = np.atleast_2d(z)
        m2 = np.sum(z * z, axis=1)
        return np.einsum("mi,ij,mj->m", z, self.B, z) / m2 + (z @ self.w) ** 3 / m2 ** 1.5

    def rho(self, u):
        return self.r * (1 + self.delta * self.s(u))

    def _validate_convexity(self):
        if self.dim == 2:
            th = 2 * np.pi * np.arange(2048) / 2048
            U = np.stack([np.cos(th), np.sin(th)], axis=1)
        else:
            U, _ = icosphere(4)
        if np.any(1 + self.delta * self.s(U) <= 0):
            raise InputError("perturbation makes the radial function nonpositive")
        y = self.c + U * self.rho(U)[:, None]
        _, g, H = self.defining(y)
        nrm = g / np.linalg.norm(g, axis=1, keepdims=True)
        P = np.eye(self.dim) - nrm[:, :, None] * nrm[:, None, :]
        T = np.einsum("mij,mjk,mkl->mil", P, H, P)
        ev = np.linalg.eigvalsh(T)
        # One eigenvalue per point is the (zero) normal direction.
        tangential = np.sort(ev, axis=1)[:, 1:] if self.dim > 1 else ev
        if np.min(tangential) <= 1e-9 / self.r:
            raise InputError("perturbation too large: body is not convex")

    @property
    def center(self):
        return self.c

    @property
    def bounding_radius(self):
        bound = np.linalg.norm(self.B, 2) + np.linalg.norm(self.w) ** 3
        return self.r * (1 + abs(self.delta) * bound)

    def level(self, y):
        z = np.atleast_2d(y) - self.c
        m = np.linalg.norm(z, axis=1)
        u = np.where(m[:, None] > 0, z, np.eye(self.dim)[0]) / np.where(m > 0, m, 1.0)[:, None]
        return np.where(m > 0, m / self.rho(u), 0.0) - 1

    def defining(self, y):
        z = np.atleast_2d(y) - self.c
        n = self.dim
        I = np.eye(n)
        m2 = np.sum(z * z, axis=1)
        m = np.sqrt(m2)
        Bz = z @ self.B
        Q = np.sum(z * Bz, axis=1)
        a = z @ self.w
        zz = z[:, :, None] * z[:, None, :]
        sym = Bz[:, :, None] * z[:, None, :]
        sym = sym + np.swapaxes(sym, 1, 2)
        s1 = Q / m2
        g1 = 2 * Bz / m2[:, None] - 2 * (Q / m2 ** 2)[:, None] * z
        H1 = (2 * self.B[None] / m2[:, None, None] - 4 * sym / (m2 ** 2)[:, None, None]
              - 2 * (Q / m2 ** 2)[:, None, None] * I + 8 * (Q / m2 ** 3)[:, None, None] * zz)
        s2 = a ** 3 / m ** 3
        g2 = 3 * (a ** 2 / m ** 3)[:, None] * self.w - 3 * (a ** 3 / m ** 5)[:, None] * z
        wz = self.w[None, :, None] * z[:, None, :]
        wz = wz + np.swapaxes(wz, 1, 2)
        H2 = (6 * (a / m ** 3)[:, None, None] * np.outer(self.w, self.w)[None]
              - 9 * (a ** 2 / m ** 5)[:, None, None] * wz
              - 3 * (a ** 3 / m ** 5)[:, None, None] * I
              + 15 * (a ** 3 / m ** 7)[:, None, None] * zz)
        rd = self.r * self.delta
        phi = m - self.r - rd * (s1 + s2)
        grad = z / m[:, None] - rd * (g1 + g2)
        hess = (I - zz / m2[:, None, None]) / m[:, None, None] - rd * (H1 + H2)
        return phi, grad, hess

    def _radial(self, U):
        if np.linalg.norm(self.c) == 0:
            return self.rho(U)
        return super()._radial(U)

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "radius": self.r, "delta": self.delta,
                "center": self.c.tolist(), "B": self.B.tolist(), "w": self.w.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["radius"], d["delta"], d.get("center"), d.get("B"), d.get("w"), d["dim"])


@register_kind
class RadialBody(ConvexBody):
    """Planar star body about the origin with a trigonometric-interpolant radial function.

    Built from ``radii`` sampled at the equispaced angles 2*pi*j/M. Used to
    materialize symmetrals in the plane without losing smoothness.
    """

    kind = "RadialBody"
    polish_chords = False  # the exact interpolant is costly; the spline level is accurate enough

    def __init__(self, radii):
        radii = np.asarray(radii, dtype=float).ravel()
        super().__init__(2)
        if radii.size < 8 or np.any(radii <= 0):
            raise InputError("radial samples must be positive and at least 8")
        self.radii = radii
        M = radii.size
        c = np.fft.rfft(radii) / M
        c[1:] *= 2
        if M % 2 == 0:
            c[-1] = 0.0
        mag = np.abs(c)
        sig = np.flatnonzero(mag > 1e-16 * mag[0])
        K = int(sig[-1]) + 1 if sig.size else 1
        self._coef = c[:K]
        self._k = np.arange(K)
        band = mag[M // 4:]
        kk = np.arange(M // 4, M // 4 + band.size)
        self.representation_error = float(np.sum(band * kk ** 2) / mag[0]) + 1e-12
        # Dense periodic spline of the interpolant for cheap level/radial queries.
        fine = 8 * M
        theta = 2 * np.pi * np.arange(fine + 1) / fine
        vals = self.rho(theta[:-1])
        self._spline = interpolate.CubicSpline(theta, np.append(vals, vals[0]), bc_type="periodic")
        self._check_origin()

    def _rho_fast(self, theta):
        return self._spline(np.mod(theta, 2 * np.pi))

    def rho(self, theta, deriv: int = 0):
        theta = np.asarray(theta, dtype=float)
        E = np.exp(1j * np.multiply.outer(theta, self._k))
        c = self._coef * (1j * self._k) ** deriv
        return np.real(E @ c)

    @property
    def center(self):
        return np.zeros(2)

    @property
    def bounding_radius(self):
        return float(np.max(self.radii)) * 1.01

    def level(self, y):
        y = np.atleast_2d(y)
        m = np.linalg.norm(y, axis=1)
        return m / self._rho_fast(np.arctan2(y[:, 1], y[:, 0])) - 1

    def defining(self, y):
        y = np.atleast_2d(y)
        x1, x2 = y[:, 0], y[:, 1]
        r2 = x1 * x1 + x2 * x2
        r = np.sqrt(r2)
        th = np.arctan2(x2, x1)
        p0, p1, p2 = self.rho(th), self.rho(th, 1), self.rho(th, 2)
        gth = np.stack([-x2, x1], axis=1) / r2[:, None]
        Hth = np.empty((len(y), 2, 2))
        Hth[:, 0, 0] = 2 * x1 * x2 / r2 ** 2
        Hth[:, 1, 1] = -Hth[:, 0, 0]
        Hth[:, 0, 1] = Hth[:, 1, 0] = (x2 * x2 - x1 * x1) / r2 ** 2
        u = y / r[:, None]
        grad = u - p1[:, None] * gth
        H = ((np.eye(2) - u[:, :, None] * u[:, None, :]) / r[:, None, None]
             - p2[:, None, None] * gth[:, :, None] * gth[:, None, :] - p1[:, None, None] * Hth)
        return r - p0, grad, H

    def _radial(self, U):
        return self._rho_fast(np.arctan2(U[:, 1], U[:, 0]))

    @cached_property
    def _cloud(self):
        theta = 2 * np.pi * np.arange(4096) / 4096
        return np.stack([np.cos(theta), np.sin(theta)], axis=1) * self._rho_fast(theta)[:, None]

    def volume_exact(self):
        # (1/2) int rho^2 dtheta by Parseval
        c = self._coef
        return float(np.pi * c[0].real ** 2 + np.pi / 2 * np.sum(np.abs(c[1:]) ** 2))

    def to_dict(self):
        return {"kind": self.kind, "dim": 2, "radii": self.radii.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["radii"])


@register_kind
class AffineImage(ConvexBody):
    """T K + c for a nonsingular linear map T."""

    kind = "AffineImage"

    def __init__(self, base: ConvexBody, T, shift=None):
        T = np.atleast_2d(np.asarray(T, dtype=float))
        super().__init__(base.dim)
        if T.shape != (self.dim, self.dim):
            raise InputError("map has the wrong shape")
        if abs(np.linalg.det(T)) < 1e-14:
            raise InputError("map is singular")
        self.base = base
        self.T = T
        self.Tinv = np.linalg.inv(T)
        self.shift = np.zeros(self.dim) if shift is None else np.asarray(shift, dtype=float).reshape(self.dim)
        self.analytic = base.analytic
        self.exact_support = base.exact_support
        self.positive_curvature = base.positive_curvature
        self.flat_order = base.flat_order
        self.representation_error = base.representation_error
        self._check_origin()

    def _pull(self, y):
        return (np.atleast_2d(y) - self.shift) @ self.Tinv.T

    @property
    def center(self):
        return self.T @ self.base.center + self.shift

    @property
    def bounding_radius(self):
        return float(np.linalg.norm(self.T, 2)) * self.base.bounding_radius

    @property
    def is_centered_ellipsoid(self):
        return self.base.is_centered_ellipsoid and np.linalg.norm(self.shift) < 1e-14

    def level(self, y):
        return self.base.level(self._pull(y))

    def defining(self, y):
        phi, g, H = self.base.defining(self._pull(y))
        return phi, g @ self.Tinv, np.einsum("ji,mjk,kl->mil", self.Tinv, H, self.Tinv)

    def defining_local(self, y):
        phi, g, H, L = self.base.defining_local(self._pull(y))
        return phi, g, H, self.Tinv if L is None else L @ self.Tinv

    def _support(self, U):
        V = U @ self.T
        nv = np.linalg.norm(V, axis=1)
        return U @ self.shift + nv * self.base._support(V / nv[:, None])

    def singular_points(self):
        return self.base.singular_points() @ self.T.T + self.shift

    def volume_exact(self):
        v = self.base.volume_exact()
        return None if v is None else abs(float(np.linalg.det(self.T))) * v

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "base": self.base.to_dict(), "T": self.T.tolist(),
                "shift": self.shift.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(body_from_dict(d["base"]), d["T"], d.get("shift"))


# --------------------------------------------------------------------------
# Grid body
# --------------------------------------------------------------------------

@register_kind
class GraphBody(ConvexBody):
    """Body stored as overgraph/undergraph samples on a regular grid of its own frame.

    Cell centers are ``lower + (i + 1/2) * spacing`` along each axis; ``mask``
    marks the cells whose vertical line meets the body. Values are
    interpolated (cubic) and differentiated by finite differences.
    """

    kind = "GraphBody"
    analytic = False

    def __init__(self, xi, lower, spacing, f, g, mask):
        xi = normalize(np.asarray(xi, dtype=float))
        super().__init__(xi.size)
        self.frame = Frame(xi)
        self.lower = np.asarray(lower, dtype=float).reshape(self.dim - 1)
        self.spacing = np.asarray(spacing, dtype=float).reshape(self.dim - 1)
        self.mask = np.asarray(mask, dtype=bool)
        self.f = np.where(self.mask, np.asarray(f, dtype=float), np.nan)
        self.g = np.where(self.mask, np.asarray(g, dtype=float), np.nan)
        if self.mask.ndim != self.dim - 1 or not self.mask.any():
            raise InputError("grid mask must be a nonempty (n-1)-dimensional array")
        if np.any(self.f[self.mask] + self.g[self.mask] < 0):
            raise InputError("grid body has f + g < 0 inside its mask")
        self.representation_error = float(np.max(self.spacing))
        self._build()
        self._check_origin()

    @classmethod
    def from_body(cls, body: ConvexBody, xi, resolution: int) -> "GraphBody":
        frame = Frame(xi)
        k = body.dim - 1
        axes = frame.to_world(np.eye(k), np.zeros(k))
        hi = body.support(axes)
        lo = -body.support(-axes)
        spacing = (hi - lo) / resolution
        centers = [lo[i] + (np.arange(resolution) + 0.5) * spacing[i] for i in range(k)]
        grid = np.stack(np.meshgrid(*centers, indexing="ij"), axis=-1).reshape(-1, k)
        ch = body.chord(frame, grid)
        shape = (resolution,) * k
        return cls(frame.xi, lo, spacing, ch.hi.reshape(shape), (-ch.lo).reshape(shape), ch.ok.reshape(shape))

    def _build(self):
        mask = self.mask
        dist, inds = ndimage.distance_transform_edt(~mask, return_indices=True)
        fill_f = self.f[tuple(inds)]
        fill_g = self.g[tuple(inds)]
        # Outside the mask the graphs continue downward so that f + g < 0 there.
        drop = dist * float(np.max(self.spacing)) * 10.0
        self._f_ext = fill_f - drop
        self._g_ext = fill_g - drop
        self._inside_dist = ndimage.distance_transform_edt(mask, sampling=self.spacing)
        centers = [self.lower[i] + (np.arange(mask.shape[i]) + 0.5) * self.spacing[i] for i in range(self.dim - 1)]
        self._centers = centers
        method = "cubic" if min(mask.shape) >= 4 else "linear"
        self._fi = interpolate.RegularGridInterpolator(centers, self._f_ext, method=method,
                                                       bounds_error=False, fill_value=None)
        self._gi = interpolate.RegularGridInterpolator(centers, self._g_ext, method=method,
                                                       bounds_error=False, fill_value=None)
        self._fl = interpolate.RegularGridInterpolator(centers, self._f_ext, method="linear",
                                                       bounds_error=False, fill_value=None)
        self._gl = interpolate.RegularGridInterpolator(centers, self._g_ext, method="linear",
                                                       bounds_error=False, fill_value=None)
        top = np.nanmax(self.f)
        bot = np.nanmax(self.g)
        half = np.array([c[-1] - c[0] for c in centers]) / 2 + self.spacing
        self._radius = float(np.linalg.norm(np.concatenate([half, [max(top, bot) + 1e-9]])))

    @property
    def center(self):
        return self.frame.to_world(self._interior_x()[None], np.array([self._interior_t()]))[0]

    def _interior_x(self):
        i = np.unravel_index(np.argmax(np.where(self.mask, self.f + self.g, -np.inf)), self.mask.shape)
        return np.array([self._centers[a][i[a]] for a in range(self.dim - 1)])

    def _interior_t(self):
        i = np.unravel_index(np.argmax(np.where(self.mask, self.f + self.g, -np.inf)), self.mask.shape)
        return float((self.f[i] - self.g[i]) / 2)

    @property
    def bounding_radius(self):
        return 2 * self._radius

    def over(self, x):
        return self._fi(np.atleast_2d(x))

    def under(self, x):
        return self._gi(np.atleast_2d(x))

    def in_domain(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        idx = np.floor((x - self.lower) / self.spacing).astype(int)
        inside = np.all((idx >= 0) & (idx < np.array(self.mask.shape)), axis=1)
        out = np.zeros(len(x), dtype=bool)
        if inside.any():
            out[inside] = self.mask[tuple(idx[inside].T)]
        return out

    def boundary_distance(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        idx = np.clip(np.floor((x - self.lower) / self.spacing).astype(int), 0, np.array(self.mask.shape) - 1)
        return self._inside_dist[tuple(idx.T)]

    def level(self, y):
        z = self.frame.to_frame(np.atleast_2d(y))
        x, t = z[:, :-1], z[:, -1]
        f, g = self._fl(x), self._gl(x)
        lev = np.maximum(t - f, -t - g)
        # Outside the bounding box the level keeps growing with the distance.
        lo = self.lower
        hi = self.lower + self.spacing * np.array(self.mask.shape)
        excess = np.linalg.norm(np.maximum(lo - x, 0) + np.maximum(x - hi, 0), axis=1)
        return lev + excess

    def chord(self, frame, x):
        if frame.same_as(self.frame):
            x = np.atleast_2d(x)
            ok = self.in_domain(x)
            return Chord(-self.under(x), self.over(x), ok)
        return super().chord(frame, x)

    def graph_jets(self, frame, x, chord, h=None):
        if not frame.same_as(self.frame):
            raise NotImplementedError("grid bodies have jets only in their own frame")
        h = h if h is not None else 1e-4 * self.diameter
        return fd_jet(self.over, x, h), fd_jet(self.under, x, h)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.spacing * np.array(self.mask.shape)))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def cell_centers(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self._centers, indexing="ij"), axis=-1)

    def _support(self, U):
        X = self.cell_centers()[self.mask]
        top = self.frame.to_world(X, self.f[self.mask])
        bot = self.frame.to_world(X, -self.g[self.mask])
        cloud = np.concatenate([top, bot])
        return np.max(U @ cloud.T, axis=1)

    def to_dict(self):
        def rows(a):
            return [None if not m else float(v) for v, m in zip(a.ravel(), self.mask.ravel())]
        return {"kind": self.kind, "dim": self.dim, "xi": self.frame.xi.tolist(), "lower": self.lower.tolist(),
                "spacing": self.spacing.tolist(), "shape": list(self.mask.shape), "f": rows(self.f),
                "g": rows(self.g), "mask": [int(v) for v in self.mask.ravel()]}

    @classmethod
    def from_dict(cls, d):
        shape = tuple(d["shape"])
        mask = np.asarray(d["mask"], dtype=bool).reshape(shape)
        f = np.array([np.nan if v is None else v for v in d["f"]], dtype=float).reshape(shape)
        g = np.array([np.nan if v is None else v for v in d["g"]], dtype=float).reshape(shape)
        return cls(d["xi"], d["lower"], d["spacing"], f, g, mask)


def body_from_dict(d: dict) -> ConvexBody:
    kind = d.get("kind")
    if kind not in _REGISTRY:
        raise InputError(f"unknown body kind {kind!r}")
    return _REGISTRY[kind].from_dict(d)


# --------------------------------------------------------------------------
# Graph pairs
# --------------------------------------------------------------------------

class GraphPair:
    """Overgraph f and undergraph g of a body in a frame, with their projection domain."""

    def __init__(self, body: ConvexBody, frame: Frame, q: QuadratureSpec | None = None):
        if body.dim != frame.dim:
            raise InputError("frame and body dimensions differ")
        self.body = body
        self.frame = frame
        self.q = q or QuadratureSpec()
        self.grid = body if isinstance(body, GraphBody) and body.frame.same_as(frame) else None
        self.derivative_mode = ANALYTIC if body.analytic else FINITE_DIFFERENCE
        self.x0 = frame.to_frame(body.center)[:-1]

    @property
    def dim(self) -> int:
        return self.body.dim

    def chord(self, x) -> Chord:
        return self.body.chord(self.frame, np.atleast_2d(np.asarray(x, dtype=float)))

    def over(self, x) -> np.ndarray:
        c = self.chord(x)
        return np.where(c.ok, c.hi, np.nan)

    def under(self, x) -> np.ndarray:
        c = self.chord(x)
        return np.where(c.ok, -c.lo, np.nan)

    def contains(self, x) -> np.ndarray:
        return self.chord(x).ok

    def domain_radial(self, omegas) -> np.ndarray:
        return self.body.projection_radial(self.frame, self.x0, omegas)

    @cached_property
    def extent(self) -> tuple[float, float]:
        """Projection interval [a, b] (n = 2 only)."""
        if self.dim != 2:
            raise InputError("extent is defined for planar bodies only")
        s = self.domain_radial(np.array([[1.0], [-1.0]]))
        return float(self.x0[0] - s[1]), float(self.x0[0] + s[0])

    @cached_property
    def diameter(self) -> float:
        if self.grid is not None:
            return self.grid.diameter
        if self.dim == 2:
            a, b = self.extent
            return b - a
        th = 2 * np.pi * np.arange(64) / 64
        s = self.domain_radial(np.stack([np.cos(th), np.sin(th)], axis=1))
        return float(np.max(s[:32] + s[32:]))

    def fd_step(self) -> float:
        return self.q.fd_step * self.diameter

    def jets(self, x, mode: str | None = None, chord: Chord | None = None):
        """Chord plus over/under jets at frame points x (rows)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ch = self.chord(x) if chord is None else chord
        if not np.all(ch.ok):
            raise DomainError("point outside the projection domain")
        mode = mode or self.derivative_mode
        if self.grid is not None:
            return (ch,) + self.grid.graph_jets(self.frame, x, ch, self.fd_step())
        if mode == ANALYTIC:
            return (ch,) + self.body.graph_jets(self.frame, x, ch)
        h = self.fd_step()
        return ch, fd_jet(self.over, x, h), fd_jet(self.under, x, h)

    def jet(self, side: str, x, mode: str | None = None) -> JetEvaluation:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        _, over, under = self.jets(np.atleast_2d(x), mode)
        j = {"over": over, "under": under}.get(side)
        if j is None:
            raise InputError("side must be 'over' or 'under'")
        return j[0] if single else j

    @cached_property
    def singular_x(self) -> np.ndarray:
        """Projections of the body's singular boundary points inside the domain (sorted for n=2)."""
        xs = self.body.singular_x(self.frame)
        if len(xs) == 0:
            return xs
        if self.dim == 2:
            a, b = self.extent
            tol = 1e-9 * (b - a)
            v = np.sort(xs[:, 0])
            v = v[np.concatenate([[True], np.diff(v) > tol])]
            v = v[(v > a + tol) & (v < b - tol)]
            return v[:, None]
        return xs

    @cached_property
    def rim_singular(self) -> bool:
        """True when a singular boundary point sits on the rim over relbd K0."""
        xs = self.body.singular_x(self.frame)
        if len(xs) == 0:
            return False
        if self.dim == 2:
            a, b = self.extent
            tol = 1e-7 * (b - a)
            return bool(np.any((np.abs(xs[:, 0] - a) < tol) | (np.abs(xs[:, 0] - b) < tol)))
        d = xs - self.x0
        r = np.linalg.norm(d, axis=1)
        inner = r < 1e-12
        om = d / np.where(inner, 1.0, r)[:, None]
        rho = self.domain_radial(np.where(inner[:, None], np.array([1.0, 0.0]), om))
        return bool(np.any(~inner & (r > rho * (1 - 1e-7))))

    def special_distance(self, x) -> np.ndarray:
        """n=2: distance from x to the nearest rim end or interior singular point, relative to the width."""
        a, b = self.extent
        pts = np.concatenate([[a, b], self.singular_x[:, 0]])
        return np.min(np.abs(np.asarray(x)[:, :1] - pts[None]), axis=1) / (b - a)

    def nodes(self, res: int, margin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Boundary-fitted quadrature nodes and weights over the projection domain.

        n = 2: x = mid + half*cos(theta) on offset equispaced theta, so the
        inverse-square-root growth of the integrands at the interval ends is
        absorbed by the Jacobian and the combined over/under integrand is
        smooth and periodic in theta.
        n = 3: polar coordinates about x0 with radial fraction s = sin(beta),
        Gauss-Legendre in beta and the periodic trapezoid rule in angle.
        ``margin`` drops the nodes within that relative distance of the
        projection boundary.
        """
        if self.dim == 2:
            a, b = self.extent
            mid, half = (a + b) / 2, (b - a) / 2
            sing = self.singular_x
            if len(sing) or self.rim_singular:
                # Split at the singular points; tanh-sinh absorbs the power singularities at piece ends.
                xs = np.sort(sing[:, 0])[::-1]
                x_edges = np.concatenate([[b], xs, [a]])
                edges = np.arccos(np.clip((x_edges - mid) / half, -1, 1))
                edges[0], edges[-1] = 0.0, np.pi
                per = max(4, (2 * res) // (len(edges) - 1) // 2)
                xa, th, wt, dx = [], [], [], []
                for i in range(len(edges) - 1):
                    anc, d, ww = tanh_sinh(edges[i], edges[i + 1], per)
                    xe = np.where(anc == edges[i], x_edges[i], x_edges[i + 1])
                    th.append(anc + d)
                    wt.append(ww)
                    # cos(anc + d) - cos(anc) without cancellation
                    dx.append(-2 * half * np.sin(anc + d / 2) * np.sin(d / 2))
                    xa.append(xe)
                theta = np.concatenate(th)
                wt = np.concatenate(wt)
                c = np.cos(theta)
                xa = np.concatenate(xa)
                x = (xa + np.concatenate(dx))[:, None]
                w = half * np.sin(theta) * wt
                # nodes that round onto a cut point carry no usable information
                keep = (np.abs(c) <= 1 - margin) & (w > 0) & (x[:, 0] != xa)
                return x[keep], w[keep]
            M = 4 * res
            theta = (np.arange(M // 2) + 0.5) * 2 * np.pi / M
            wt = np.full(theta.size, 2 * np.pi / M)
            c = np.cos(theta)
            x = (mid + half * c)[:, None]
            w = half * np.sin(theta) * wt
            keep = (np.abs(c) <= 1 - margin) & (w > 0)
            return x[keep], w[keep]
        if self.dim == 3:
            nb = res + (res % 2)
            gl, wl = np.polynomial.legendre.leggauss(nb)
            beta = (gl + 1) * np.pi / 2
            wb = wl * np.pi / 2
            first = beta < np.pi / 2
            beta, wb = beta[first], wb[first]
            s = np.sin(beta)
            wb = wb * s * np.cos(beta)
            M = res
            om = (np.arange(M) + 0.5) * 2 * np.pi / M
            omegas = np.stack([np.cos(om), np.sin(om)], axis=1)
            rho = self.domain_radial(omegas)
            x = self.x0 + (s[:, None, None] * rho[None, :, None]) * omegas[None]
            w = wb[:, None] * rho[None, :] ** 2 * (2 * np.pi / M)
            keep = np.broadcast_to((s <= 1 - margin)[:, None], w.shape)
            return x[keep].reshape(-1, 2), w[keep]
        raise InputError(f"quadrature supports n in {QUADRATURE_DIMS}")


def tanh_sinh(lo: float, hi: float, k: int, t_max: float = 4.0):
    """Double-exponential rule on (lo, hi) with up to 2k+1 nodes.

    Returns (anchor, delta, w): each node is anchor + delta where anchor is the
    nearer endpoint, so distances to the endpoints carry no cancellation.
    """
    h = t_max / k
    t = h * np.arange(-k, k + 1)
    s = np.pi / 2 * np.sinh(t)
    w = h * (np.pi / 2) * np.cosh(t) / np.cosh(s) ** 2
    half = (hi - lo) / 2
    gap = half * 2 / (1 + np.exp(2 * np.abs(s)))  # half * (1 - |tanh s|)
    anchor = np.where(t < 0, lo, hi)
    delta = np.where(t < 0, gap, -gap)
    keep = gap > 0
    return anchor[keep], delta[keep], (w * half)[keep]


def to_graph_pair(body: ConvexBody, xi, q: QuadratureSpec | None = None) -> GraphPair:
    """Overgraph/undergraph of ``body`` in the frame taking ``xi`` to e_n."""
    xi = unit_vector(xi, body.dim)
    return GraphPair(body, Frame(xi), q)


# --------------------------------------------------------------------------
# Functionals
# --------------------------------------------------------------------------

def support(body: ConvexBody, u):
    return body.support(u)


def radial(body: ConvexBody, u):
    return body.radial(u)


def _e_n(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[-1] = 1.0
    return e


def volume_by_quadrature(body: ConvexBody, q: QuadratureSpec | None = None, xi=None) -> float:
    """Integral of f + g over the projection domain."""
    q = q or QuadratureSpec()
    if isinstance(body, GraphBody) and xi is None:
        return float(np.nansum(np.where(body.mask, body.f + body.g, 0.0)) * body.cell_volume)
    native = getattr(body, "native_frame", None)
    frame = native if native is not None and xi is None else Frame(_e_n(body.dim) if xi is None else xi)
    gp = GraphPair(body, frame, q)
    x, w = gp.nodes(q.grid_resolution)
    ch = gp.chord(x)
    return float(np.sum(w * np.where(ch.ok, ch.hi - ch.lo, 0.0)))


def volume(body: ConvexBody, q: QuadratureSpec | None = None) -> float:
    """|K|: closed form where one exists, otherwise quadrature of f + g."""
    v = body.volume_exact()
    if v is not None:
        return v
    if body.dim not in QUADRATURE_DIMS:
        raise InputError(f"quadrature volume supports n in {QUADRATURE_DIMS}")
    return volume_by_quadrature(body, q)


def polar_volume(body: ConvexBody, q: QuadratureSpec | None = None) -> float:
    """|K°| = (1/n) * integral over the sphere of h_K^{-n}."""
    q = q or QuadratureSpec()
    n = body.dim
    if n not in QUADRATURE_DIMS:
        if body.is_centered_ellipsoid and isinstance(body, Ellipsoid):
            return unit_ball_volume(n) / abs(float(np.linalg.det(body.A)))
        raise InputError(f"polar volume quadrature supports n in {QUADRATURE_DIMS}")
    nodes, weights = sphere_quadrature(n, q.sphere_samples)
    h = body._support(nodes)
    if np.any(h <= 0):
        raise GeometryError("support function is nonpositive: origin not interior")
    return float(np.sum(weights * h ** (-n)) / n)


def hausdorff_distance(K: ConvexBody, L: ConvexBody, q: QuadratureSpec | None = None) -> float:
    """max over sampled directions of |h_K - h_L| (q.sphere_samples directions)."""
    q = q or QuadratureSpec()
    if K.dim != L.dim:
        raise InputError("bodies have different dimensions")
    if K.dim in QUADRATURE_DIMS:
        nodes, _ = sphere_quadrature(K.dim, q.sphere_samples)
    else:
        rng = np.random.default_rng(0)
        nodes = rng.standard_normal((q.sphere_samples, K.dim))
        nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    return float(np.max(np.abs(K._support(nodes) - L._support(nodes))))
