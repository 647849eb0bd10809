import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ball_volume, circle, ellipsoid_support, qnorm_area, sphere_points
from steinerlab import (
    AffineImage, Ball, Ellipsoid, Frame, GraphBody, PerturbedBall, PNormBall, QuadratureSpec, RadialBody,
    body_from_dict, hausdorff_distance, polar_volume, radial, support, to_graph_pair, volume,
)
from steinerlab.errors import DomainError, GeometryError, InputError


def test_support_of_balls_and_ellipsoids():
    U = circle(32)
    assert np.allclose(support(Ball(), U), 1.0)
    assert support(Ellipsoid(np.diag([2.0, 1.0])), [1.0, 0.0]) == pytest.approx(2.0)


def test_support_translation_identity(rng):
    base = PNormBall(3.0, [1.2, 0.8])
    c = np.array([0.2, -0.1])
    moved = AffineImage(base, np.eye(2), c)
    U = sphere_points(rng, 50, 2)
    assert np.allclose(moved.support(U) - base.support(U), U @ c, atol=1e-9)


def test_ellipsoid_support_matches_closed_form(rng):
    A = np.array([[1.4, 0.5, 0.0], [0.0, 0.8, 0.2], [0.1, 0.0, 1.1]])
    c = np.array([0.1, -0.2, 0.05])
    U = sphere_points(rng, 40, 3)
    assert np.allclose(Ellipsoid(A, c).support(U), ellipsoid_support(A, c, U), atol=1e-12)


def test_radial_examples():
    assert radial(Ball(), [0.6, 0.8]) == pytest.approx(1.0)
    assert radial(Ball(2.0), [0.0, 1.0]) == pytest.approx(2.0)
    assert radial(Ellipsoid(np.diag([2.0, 1.0])), [0.0, 1.0]) == pytest.approx(1.0)


def test_radial_of_centered_ellipse(rng):
    A = np.array([[1.5, 0.4], [0.0, 0.7]])
    U = sphere_points(rng, 30, 2)
    M = np.linalg.inv(A @ A.T)
    expected = 1 / np.sqrt(np.einsum("mi,ij,mj->m", U, M, U))
    assert np.allclose(Ellipsoid(A).radial(U), expected, rtol=1e-10)


def test_volume_examples(q2):
    assert volume(Ball(), q2) == pytest.approx(math.pi)
    assert volume(Ellipsoid(np.diag([2.0, 1.0])), q2) == pytest.approx(2 * math.pi)
    grid = GraphBody.from_body(Ball(), [0.0, 1.0], 512)
    assert volume(grid) == pytest.approx(math.pi, rel=1e-3)


@pytest.mark.parametrize("q", [1.5, 3.0, 4.0])
def test_qnorm_volume_quadrature(q, q2):
    body = PNormBall(q, [1.2, 0.8])
    from steinerlab.bodies import volume_by_quadrature
    assert volume_by_quadrature(body, q2) == pytest.approx(qnorm_area(1.2, 0.8, q), rel=1e-6)
    assert body.volume_exact() == pytest.approx(qnorm_area(1.2, 0.8, q), rel=1e-12)


def test_volume_in_three_dimensions(q3):
    from steinerlab.bodies import volume_by_quadrature
    E = Ellipsoid(np.diag([2.0, 1.0, 0.5]))
    assert volume_by_quadrature(E, q3) == pytest.approx(ball_volume(3), rel=1e-3)


def test_polar_volume_examples(q2):
    assert polar_volume(Ball(), q2) == pytest.approx(math.pi, rel=1e-6)
    assert polar_volume(Ball(2.0), q2) == pytest.approx(math.pi / 4, rel=1e-6)
    assert polar_volume(Ellipsoid(np.diag([2.0, 1.0])), q2) == pytest.approx(math.pi / 2, rel=1e-6)


def test_polar_volume_of_ball_3d(q3):
    assert polar_volume(Ball(2.0, dim=3), q3) == pytest.approx(ball_volume(3) / 8, rel=1e-3)


def test_graph_pair_examples():
    x = np.array([[-0.7], [0.0], [0.4]])
    gp = to_graph_pair(Ball(), [0.0, 1.0])
    assert np.allclose(gp.over(x), np.sqrt(1 - x[:, 0] ** 2))
    assert np.allclose(gp.under(x), np.sqrt(1 - x[:, 0] ** 2))
    gp = to_graph_pair(Ball(1.0, [0.0, 0.3]), [0.0, 1.0])
    assert np.allclose(gp.over(x), 0.3 + np.sqrt(1 - x[:, 0] ** 2))
    assert np.allclose(gp.under(x), -0.3 + np.sqrt(1 - x[:, 0] ** 2))
    gp = to_graph_pair(Ellipsoid(np.diag([1.0, 2.0])), [0.0, 1.0])
    assert np.allclose(gp.over(x), 2 * np.sqrt(1 - x[:, 0] ** 2))
    assert gp.extent == pytest.approx((-1.0, 1.0))


def test_graph_pair_in_three_dimensions():
    gp = to_graph_pair(Ball(1.0, dim=3), [0.0, 0.0, 1.0])
    x = np.array([[0.3, -0.2], [0.0, 0.0]])
    assert np.allclose(gp.over(x), np.sqrt(1 - np.sum(x ** 2, axis=1)))


def test_hausdorff_examples(q2):
    assert hausdorff_distance(Ball(), Ball(), q2) == 0.0
    assert hausdorff_distance(Ball(), Ball(2.0), q2) == pytest.approx(1.0)
    c = np.array([0.3, -0.4])
    assert hausdorff_distance(Ball(), Ball(1.0, c), q2) == pytest.approx(0.5, rel=1e-4)


@pytest.mark.parametrize("body", [
    Ball(0.7, [0.1, 0.2]),
    Ellipsoid([[1.4, 0.5], [0.0, 0.8]], [0.15, -0.1]),
    PNormBall(4.0, [1.2, 0.8]),
    PNormBall(1.5, [1.0, 0.9, 0.8]),
    PerturbedBall(1.0, 0.05, [0.1, 0.05]),
    AffineImage(PNormBall(3.0, [1.0, 1.0]), [[1.0, 0.4], [0.0, 1.0]], [0.05, 0.0]),
], ids=["ball", "ellipse", "q4", "q1.5_3d", "perturbed", "affine"])
def test_json_round_trip(body):
    d = json.loads(json.dumps(body.to_dict()))
    back = body_from_dict(d)
    rng = np.random.default_rng(1)
    U = sphere_points(rng, 20, body.dim)
    assert np.allclose(back.support(U), body.support(U), atol=1e-12)


def test_grid_body_round_trip():
    g = GraphBody.from_body(Ball(), [0.6, 0.8], 32)
    back = body_from_dict(json.loads(json.dumps(g.to_dict())))
    assert np.array_equal(back.mask, g.mask)
    assert volume(back) == pytest.approx(volume(g), rel=1e-14)


def test_radial_body_reproduces_samples():
    th = 2 * np.pi * np.arange(64) / 64
    r = 1 + 0.05 * np.cos(2 * th)
    body = RadialBody(r)
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert np.allclose(body.radial(U), r, atol=1e-9)
    assert body.volume_exact() == pytest.approx(0.5 * np.sum(r ** 2) * 2 * np.pi / 64, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 1.0), st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
def test_support_is_sublinear(s, a, b):
    body = PNormBall(3.0, [1.2, 0.8])
    u = np.array([math.cos(a), math.sin(a)])
    v = np.array([math.cos(b), math.sin(b)])
    w = s * u + v
    hw = np.linalg.norm(w) * body.support(w / np.linalg.norm(w)) if np.linalg.norm(w) > 1e-9 else 0.0
    assert hw <= s * body.support(u) + body.support(v) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95), st.floats(0.0, 1.0))
def test_overgraph_is_concave(x1, x2, lam):
    gp = to_graph_pair(PNormBall(4.0, [1.2, 0.8]), [0.6, 0.8])
    a, b = gp.extent
    p, r = a + (b - a) * (x1 + 1) / 2, a + (b - a) * (x2 + 1) / 2
    m = lam * p + (1 - lam) * r
    f = gp.over(np.array([[p], [r], [m]]))
    g = gp.under(np.array([[p], [r], [m]]))
    assert f[2] >= lam * f[0] + (1 - lam) * f[1] - 1e-10
    assert g[2] >= lam * g[0] + (1 - lam) * g[1] - 1e-10


def test_rotated_frame_volume_is_consistent(q2):
    body = PerturbedBall(1.0, 0.05, [0.1, 0.05])
    from steinerlab.bodies import volume_by_quadrature
    vals = [volume_by_quadrature(body, q2, np.array([math.cos(t), math.sin(t)])) for t in (0.3, 1.2, 2.5)]
    assert max(vals) - min(vals) < 1e-8 * vals[0]


def test_frame_is_a_rotation_taking_xi_to_en(rng):
    for xi in list(sphere_points(rng, 5, 3)) + [np.array([0.0, 0.0, -1.0])]:
        F = Frame(xi)
        assert np.allclose(F.R @ F.R.T, np.eye(3))
        assert np.linalg.det(F.R) == pytest.approx(1.0)
        assert np.allclose(F.to_frame(xi), [0.0, 0.0, 1.0])


def test_singular_points_of_qnorm_bodies():
    assert PNormBall(2.0, [1.0, 1.0]).singular_points().shape == (0, 2)
    pts = PNormBall(4.0, [1.2, 0.8]).singular_points()
    assert {tuple(p) for p in np.round(pts, 12)} == {(1.2, 0.0), (0.0, 0.8), (-1.2, 0.0), (0.0, -0.8)}
    T = np.array([[1.0, 0.5], [0.0, 1.0]])
    img = AffineImage(PNormBall(4.0, [1.2, 0.8]), T, [0.1, 0.0])
    assert np.allclose(img.singular_points(), pts @ T.T + [0.1, 0.0])


def test_input_errors():
    with pytest.raises(InputError):
        Ball(-1.0)
    with pytest.raises(InputError):
        PNormBall(0.5, [1.0, 1.0])
    with pytest.raises(InputError):
        AffineImage(Ball(), np.zeros((2, 2)))
    with pytest.raises(InputError):
        Ball().support([1.0, 1.0])
    with pytest.raises(InputError):
        body_from_dict({"kind": "Tetrahedron"})
    with pytest.raises(InputError):
        QuadratureSpec(grid_resolution=4)
    with pytest.raises(InputError):
        hausdorff_distance(Ball(), Ball(dim=3))


def test_geometry_errors():
    with pytest.raises(GeometryError):
        Ball(1.0, [2.0, 0.0])


def test_domain_error_outside_projection():
    gp = to_graph_pair(Ball(), [0.0, 1.0])
    with pytest.raises(DomainError):
        gp.jet("over", np.array([1.5]))
