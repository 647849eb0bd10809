"""Jets of graph functions and the curvature quantities built from them.

All functions accept batched input: a jet may carry values of shape ``(m,)``,
gradients ``(m, k)`` and Hessians ``(m, k, k)`` with ``k = n - 1``; a single
point is the ``m``-less case.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GeometryError, InputError

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite-difference"

PSD_FLOOR = 1e-10


@dataclass(frozen=True)
class JetEvaluation:
    """Value, gradient and Hessian of a graph function at one or many points."""

    value: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray
    mode: str = ANALYTIC

    @property
    def dim(self) -> int:
        """Ambient dimension n (the graph lives over R^{n-1})."""
        return self.gradient.shape[-1] + 1

    def __getitem__(self, idx) -> "JetEvaluation":
        return JetEvaluation(self.value[idx], self.gradient[idx], self.hessian[idx], self.mode)

    def negate(self) -> "JetEvaluation":
        return JetEvaluation(-self.value, -self.gradient, -self.hessian, self.mode)

    @staticmethod
    def average(a: "JetEvaluation", b: "JetEvaluation") -> "JetEvaluation":
        mode = a.mode if a.mode == b.mode else FINITE_DIFFERENCE
        return JetEvaluation(
            (a.value + b.value) / 2, (a.gradient + b.gradient) / 2, (a.hessian + b.hessian) / 2, mode
        )


def jet(gp, side: str, x) -> JetEvaluation:
    """Jet of the overgraph (``side="over"``) or undergraph (``"under"``) of a GraphPair."""
    return gp.jet(side, x)


def implicit_jet(x: np.ndarray, t: np.ndarray, grad: np.ndarray, hess: np.ndarray) -> JetEvaluation:
    """Jet of the curve t(x) defined implicitly by Phi(x, t(x)) = 0.

    ``grad``/``hess`` are the gradient and Hessian of Phi in frame coordinates
    (last coordinate is t), evaluated at (x, t).
    """
    phi_x, phi_t = grad[..., :-1], grad[..., -1]
    h_xx, h_xt, h_tt = hess[..., :-1, :-1], hess[..., :-1, -1], hess[..., -1, -1]
    g = -phi_x / phi_t[..., None]
    cross = h_xt[..., :, None] * g[..., None, :]
    H = -(h_xx + cross + np.swapaxes(cross, -1, -2) + h_tt[..., None, None] * g[..., :, None] * g[..., None, :])
    H = H / phi_t[..., None, None]
    H = (H + np.swapaxes(H, -1, -2)) / 2
    return JetEvaluation(np.asarray(t, dtype=float), g, H, ANALYTIC)


def implicit_jet_local(x: np.ndarray, t: np.ndarray, grad: np.ndarray, hess: np.ndarray,
                       basis: np.ndarray) -> JetEvaluation:
    """Like ``implicit_jet`` but with Phi given in its own coordinates.

    ``basis`` holds the frame axes expressed in those coordinates (rows, the
    last one is the graph direction). The tangent vectors are formed with
    2x2 minors of the basis, which avoids the cancellation of the plain chain
    rule when the level set is nearly flat along an axis of a diagonal Hessian.
    """
    B = np.asarray(basis, dtype=float)
    bt = B[-1]
    phi_t = grad @ bt
    g = -(grad @ B[:-1].T) / phi_t[:, None]
    W = B[:-1, :, None] * bt[None, None, :] - bt[None, :, None] * B[:-1, None, :]
    V = np.einsum("ikm,pm->pik", W, grad) / phi_t[:, None, None]
    H = -np.einsum("pik,pkl,pjl->pij", V, hess, V) / phi_t[:, None, None]
    H = (H + np.swapaxes(H, -1, -2)) / 2
    return JetEvaluation(np.asarray(t, dtype=float), g, H, ANALYTIC)


def fd_jet(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> JetEvaluation:
    """Finite-difference jet of a scalar function of R^k.

    Gradient by the 5-point central stencil; Hessian by nested central
    differences (5-point on the diagonal), symmetrized.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, k = x.shape
    f0 = func(x)
    grad = np.empty((m, k))
    hess = np.empty((m, k, k))
    E = np.eye(k) * h
    for i in range(k):
        fp1, fm1 = func(x + E[i]), func(x - E[i])
        fp2, fm2 = func(x + 2 * E[i]), func(x - 2 * E[i])
        grad[:, i] = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
        hess[:, i, i] = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
        for j in range(i):
            d = (func(x + E[i] + E[j]) - func(x + E[i] - E[j])
                 - func(x - E[i] + E[j]) + func(x - E[i] - E[j])) / (4 * h * h)
            hess[:, i, j] = hess[:, j, i] = d
    return JetEvaluation(f0, grad, hess, FINITE_DIFFERENCE)


def support_bracket(j: JetEvaluation, x) -> np.ndarray:
    """The support bracket f(x) - <x, grad f(x)>."""
    x = np.asarray(x, dtype=float)
    return j.value - np.sum(x * j.gradient, axis=-1)


def neg_hessian_det(hessian: np.ndarray, clamp: bool = False) -> np.ndarray:
    """det(-d^2 f) for a concave graph; equals |det d^2 f| when d^2 f is negative semi-definite.

    With ``clamp`` the eigenvalues of -d^2 f are floored at zero first, so
    finite-difference noise cannot turn a flat direction into a negative
    determinant.
    """
    A = -np.asarray(hessian, dtype=float)
    if clamp:
        return np.prod(np.clip(np.linalg.eigvalsh(A), 0.0, None), axis=-1)
    if A.shape[-1] == 1:
        return np.clip(A[..., 0, 0], 0.0, None)
    return np.clip(np.linalg.det(A), 0.0, None)


def curvature_ratio(j: JetEvaluation, x) -> np.ndarray:
    """|det d^2 f(x)| / <f(x)>^{n+1}, the affine-invariant curvature of the graph point."""
    bracket = support_bracket(j, x)
    if np.any(bracket <= 0):
        raise GeometryError("nonpositive support bracket: origin is not interior to the body")
    det = neg_hessian_det(j.hessian, clamp=j.mode != ANALYTIC)
    return det / bracket ** (j.dim + 1)


def gauss_curvature(j: JetEvaluation) -> np.ndarray:
    """Gaussian curvature of the graph point (x, f(x))."""
    det = neg_hessian_det(j.hessian, clamp=j.mode != ANALYTIC)
    slope2 = np.sum(j.gradient ** 2, axis=-1)
    return det / (1 + slope2) ** ((j.dim + 1) / 2)


def outer_normal(j: JetEvaluation) -> np.ndarray:
    """Outer unit normal at (x, f(x)) for an overgraph jet."""
    g = np.asarray(j.gradient, dtype=float)
    v = np.concatenate([-g, np.ones(g.shape[:-1] + (1,))], axis=-1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _psd_det(M: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(M)
    if np.any(w < -PSD_FLOOR):
        raise InputError("matrix is not positive semi-definite")
    return np.prod(np.clip(w, 0.0, None), axis=-1)


def det_root_gap(A, B) -> np.ndarray | float:
    """2 det((A+B)/2)^{1/(n+1)} - det(A)^{1/(n+1)} - det(B)^{1/(n+1)} for (n-1)x(n-1) PSD A, B.

    Nonnegative for every PSD pair; zero when A == B. Accepts stacks of
    matrices with shape (..., k, k).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InputError("A and B must be square matrices of the same size")
    for M in (A, B):
        scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
        if not np.allclose(M, np.swapaxes(M, -1, -2), rtol=0.0, atol=1e-12 * scale):
            raise InputError("matrix is not symmetric")
    e = 1.0 / (A.shape[-1] + 2)
    gap = 2 * _psd_det((A + B) / 2) ** e - _psd_det(A) ** e - _psd_det(B) ** e
    return float(gap) if np.ndim(gap) == 0 else gap
