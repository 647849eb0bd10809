import json
import math

import numpy as np
import pytest

from oracles import circle, sphere_points
from steinerlab import (
    Ball, Ellipsoid, GraphBody, PNormBall, SymmetralBody, hausdorff_distance, midpoint_planarity, power_conc,
    power_conv, steiner_symmetral, successive_symmetrization, to_graph_pair, volume,
)
from steinerlab.bodies import volume_by_quadrature
from steinerlab.errors import InputError
from steinerlab.explab.catalog import catalog_ids, get_body
from steinerlab.steiner import ball_of_equal_volume, direction_schedule, materialize, midpoint_fit


def reflect(U, xi):
    return U - 2 * np.outer(U @ xi, xi)


def test_off_center_ball_is_recentered(q2):
    S = steiner_symmetral(Ball(1.0, [0.0, 0.3]), [0.0, 1.0], q2)
    x = np.array([[-0.8], [0.0], [0.5]])
    gp = to_graph_pair(S, [0.0, 1.0])
    assert np.allclose(gp.over(x), np.sqrt(1 - x[:, 0] ** 2), atol=1e-10)
    assert hausdorff_distance(S, Ball(), q2) < 1e-6


def test_centered_ellipse_symmetral_is_an_ellipse(q2):
    E = Ellipsoid([[1.4, 0.5], [0.0, 0.8]])
    xi = np.array([0.6, 0.8])
    S = steiner_symmetral(E, xi, q2)
    assert volume(S, q2) == pytest.approx(volume(E), rel=1e-9)
    assert midpoint_planarity(S, [1.0, 0.0], q2) < 1e-8
    U = circle(64)
    assert np.allclose(S.support(U), S.support(reflect(U, xi)), atol=1e-8)


@pytest.mark.parametrize("body_id", catalog_ids(2))
def test_symmetral_preserves_volume(body_id, q2):
    body = get_body(body_id, 2)
    v = volume(body, q2)
    for xi in circle(8):
        assert volume(steiner_symmetral(body, xi, q2), q2) == pytest.approx(v, rel=1e-6)


@pytest.mark.parametrize("body_id", ["ball_off", "qball_4", "perturbed"])
def test_symmetral_preserves_volume_in_space(body_id, q3):
    body = get_body(body_id, 3)
    v = volume(body, q3)
    rng = np.random.default_rng(3)
    for xi in sphere_points(rng, 3, 3):
        assert volume(steiner_symmetral(body, xi, q3), q3) == pytest.approx(v, rel=3e-3)


@pytest.mark.parametrize("body_id", ["qball_4", "ellipse_sheared_off", "perturbed"])
def test_symmetral_is_idempotent_and_symmetric(body_id, q2):
    body = get_body(body_id, 2)
    xi = np.array([math.cos(0.7), math.sin(0.7)])
    S = steiner_symmetral(body, xi, q2)
    SS = steiner_symmetral(S, xi, q2)
    cell = to_graph_pair(body, xi, q2).diameter / q2.grid_resolution
    assert hausdorff_distance(S, SS, q2) <= 2 * cell
    U = circle(128)
    assert np.max(np.abs(S.support(U) - S.support(reflect(U, xi)))) < 1e-8


def test_grid_symmetral_in_own_frame():
    g = GraphBody.from_body(Ball(1.0, [0.0, 0.2]), [0.0, 1.0], 128)
    S = steiner_symmetral(g, [0.0, 1.0])
    assert isinstance(S, GraphBody)
    assert np.allclose(S.f[S.mask], S.g[S.mask])
    assert volume(S) == pytest.approx(volume(g), rel=1e-12)


def test_materialize_keeps_shape(q2):
    S = SymmetralBody(get_body("qball_4", 2), np.array([0.6, 0.8]))
    M = materialize(S, q2)
    assert volume(M, q2) == pytest.approx(volume(S, q2), rel=1e-6)
    assert hausdorff_distance(M, S, q2) < 1e-4


def test_materialize_in_space(q3):
    S = SymmetralBody(get_body("ellipsoid_2_1_05", 3), np.array([0.0, 0.6, 0.8]))
    M = materialize(S, q3)
    assert isinstance(M, GraphBody)
    assert volume(M) == pytest.approx(volume(S, q3), rel=3e-3)


@pytest.mark.parametrize("xi", [[1.0, 0.0], [0.6, 0.8], [-0.28, 0.96]])
def test_planarity_of_centered_ellipses(xi, q2):
    E = Ellipsoid([[1.4, 0.5], [0.0, 0.8]])
    assert midpoint_planarity(E, xi, q2) <= 1e-8


def test_planarity_of_off_center_ball(q2):
    coef, resid, m = midpoint_fit(Ball(1.0, [0.0, 0.3]), [0.0, 1.0], q2)
    assert resid < 1e-10
    assert coef[0] == pytest.approx(0.3)
    assert m > 100


def test_planarity_detects_non_ellipse(q2):
    q4 = PNormBall(4.0, [1.2, 0.8])
    assert midpoint_planarity(q4, np.array([1.0, 1.0]) / math.sqrt(2), q2) > 1e-3
    assert midpoint_planarity(q4, [0.0, 1.0], q2) < 1e-10


def test_planarity_in_space(q3):
    E = Ellipsoid(np.diag([2.0, 1.0, 0.5]), [0.1, 0.0, 0.0])
    assert midpoint_planarity(E, np.array([1.0, 1.0, 1.0]) / math.sqrt(3), q3) <= 1e-8


def test_direction_schedule_is_deterministic():
    a = direction_schedule(2, 12, 7)
    b = direction_schedule(2, 12, 7)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert np.array_equal(a[4], [1.0, 0.0])
    assert np.array_equal(a[9], [0.0, 1.0])
    assert np.allclose([np.linalg.norm(u) for u in a], 1.0)
    assert not np.array_equal(direction_schedule(2, 12, 8)[0], a[0])


def test_ball_is_a_fixed_point(q2):
    tr = successive_symmetrization(Ball(0.8), 3, 0, [power_conc(0.5, 2)], q2, "ball")
    assert len(tr.steps) == 4
    assert tr.ball_radius == pytest.approx(0.8)
    for s in tr.steps:
        assert s.hausdorff_to_BK < 1e-6
        assert s.surface_values["p=0.5"].value == pytest.approx(2 * math.pi * 0.8 ** 1.2, rel=1e-6)


def test_trace_monotone_and_jsonl(q2):
    body = Ellipsoid(np.diag([2.0, 0.5]), [0.2, 0.0])
    gens = [power_conc(0.5, 2), power_conv(-1, 2)]
    tr = successive_symmetrization(body, 4, 3, gens, q2, "e")
    up = [r.value for r in tr.series("p=0.5")]
    down = [r.value for r in tr.series("p=-1")]
    assert all(b >= a - 1e-6 for a, b in zip(up, up[1:]))
    assert all(b <= a + 1e-6 for a, b in zip(down, down[1:]))
    lines = tr.to_jsonl().splitlines()
    assert len(lines) == 5
    rec = json.loads(lines[-1])
    assert rec["step"] == 4 and rec["seed"] == 3 and rec["body"] == "e"
    assert set(rec["surface_values"]) == {"p=0.5", "p=-1"}
    assert tr.to_jsonl() == successive_symmetrization(body, 4, 3, gens, q2, "e").to_jsonl()


def test_ball_of_equal_volume(q2):
    B = ball_of_equal_volume(get_body("qball_4", 2), q2)
    assert math.pi * B.radius ** 2 == pytest.approx(volume(get_body("qball_4", 2)), rel=1e-12)


def test_symmetral_round_trip(q2):
    from steinerlab import body_from_dict
    S = SymmetralBody(get_body("qball_3", 2), np.array([0.6, 0.8]))
    back = body_from_dict(json.loads(json.dumps(S.to_dict())))
    U = circle(16)
    assert np.allclose(back.support(U), S.support(U), atol=1e-12)


def test_input_errors():
    with pytest.raises(InputError):
        steiner_symmetral(Ball(), [1.0, 1.0])
    with pytest.raises(InputError):
        successive_symmetrization(Ball(), 0, 0, [power_conc(1, 2)])


def test_grid_volume_quadrature_consistency(q2):
    g = GraphBody.from_body(Ellipsoid(np.diag([1.5, 0.7])), [0.0, 1.0], 256)
    assert volume(g) == pytest.approx(volume_by_quadrature(Ellipsoid(np.diag([1.5, 0.7])), q2), rel=2e-3)
