"""Named test bodies. Center offsets are part of the body id, so origin placement is an input."""
from __future__ import annotations

import numpy as np

from ..bodies import Ball, ConvexBody, Ellipsoid, PerturbedBall, PNormBall
from ..errors import InputError

_CATALOG_2 = {
    "ball": lambda: Ball(1.0, [0.0, 0.0]),
    "ball_r05": lambda: Ball(0.5, [0.0, 0.0]),
    "ball_r2": lambda: Ball(2.0, [0.0, 0.0]),
    "ball_off": lambda: Ball(1.0, [0.0, 0.3]),
    "ellipse_2_05": lambda: Ellipsoid(np.diag([2.0, 0.5])),
    "ellipse_2_1": lambda: Ellipsoid(np.diag([2.0, 1.0])),
    "ellipse_sheared_off": lambda: Ellipsoid([[1.4, 0.5], [0.0, 0.8]], [0.15, -0.1]),
    "qball_1.5": lambda: PNormBall(1.5, [1.2, 0.8]),
    "qball_3": lambda: PNormBall(3.0, [1.2, 0.8]),
    "qball_4": lambda: PNormBall(4.0, [1.2, 0.8]),
    "perturbed": lambda: PerturbedBall(1.0, 0.05, [0.1, 0.05]),
}

_CATALOG_3 = {
    "ball": lambda: Ball(1.0, [0.0, 0.0, 0.0]),
    "ball_r05": lambda: Ball(0.5, [0.0, 0.0, 0.0]),
    "ball_r2": lambda: Ball(2.0, [0.0, 0.0, 0.0]),
    "ball_off": lambda: Ball(1.0, [0.0, 0.0, 0.3]),
    "ellipsoid_2_1_05": lambda: Ellipsoid(np.diag([2.0, 1.0, 0.5])),
    "ellipsoid_2_1_1": lambda: Ellipsoid(np.diag([2.0, 1.0, 1.0])),
    "qball_1.5": lambda: PNormBall(1.5, [1.2, 1.0, 0.8]),
    "qball_3": lambda: PNormBall(3.0, [1.2, 1.0, 0.8]),
    "qball_4": lambda: PNormBall(4.0, [1.2, 1.0, 0.8]),
    "perturbed": lambda: PerturbedBall(1.0, 0.05, [0.1, 0.05, 0.0], dim=3),
}

CATALOG = {2: _CATALOG_2, 3: _CATALOG_3}


def catalog_ids(n: int = 2) -> list[str]:
    return list(CATALOG[n])


def get_body(body_id: str, n: int = 2) -> ConvexBody:
    if n not in CATALOG:
        raise InputError(f"no catalog for dimension {n}")
    try:
        return CATALOG[n][body_id]()
    except KeyError:
        raise InputError(f"unknown body id {body_id!r} for n={n}") from None


def is_centered_ellipsoid(body: ConvexBody) -> bool:
    return bool(body.is_centered_ellipsoid)
