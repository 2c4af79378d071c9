import itertools
import math

import numpy as np
import pytest

import heilbronn.lifting as lifting
from heilbronn.errors import PreconditionError
from heilbronn.geometry import PointSet, lift_affine, simplex_volume, vol_k
from heilbronn.harness import generate
from heilbronn.lifting import HEMISPHERE_CUTOFF, central_project, lift_to_sphere


def test_lift_origin_and_corner():
    res = lift_to_sphere(PointSet([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], "unit-cube"))
    np.testing.assert_array_equal(res.sphere_points.coords[0], [0, 0, 0, 1])
    assert res.norm_factors[0] == 1.0
    assert res.norm_factors[1] == pytest.approx(2.0, rel=1e-15)
    assert res.sphere_points.space_tag == "unit-sphere"
    assert res.sphere_points.dim == 4


def test_lift_norm_factor_range():
    for d in (1, 2, 5, 8):
        x = generate("uniform-cube", d, 200, seed=d)
        res = lift_to_sphere(x)
        assert res.norm_factors.min() >= 1.0
        assert res.norm_factors.max() <= math.sqrt(d + 1)
        np.testing.assert_allclose(np.linalg.norm(res.sphere_points.coords, axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(
            res.sphere_points.coords * res.norm_factors[:, None], lift_affine(x.coords), rtol=1e-15
        )


def test_lift_rejects_non_cube():
    with pytest.raises(PreconditionError):
        lift_to_sphere(PointSet([[2.0, 0.0]], "raw"))
    with pytest.raises(PreconditionError):
        PointSet([[1.2, 0.0]], "unit-cube")


def test_determinant_correspondence():
    rng_seeds = range(5)
    for seed in rng_seeds:
        d = 3
        x = generate("uniform-cube", d, 8, seed)
        res = lift_to_sphere(x)
        raw = lift_affine(x.coords)
        for k in range(1, d + 1):
            for idx in itertools.combinations(range(x.n), k + 1):
                idx = list(idx)
                lifted = vol_k(res.sphere_points.coords[idx])
                scaled = lifted * np.prod(res.norm_factors[idx])
                assert scaled == pytest.approx(vol_k(raw[idx]), rel=1e-9)
                ratio = math.factorial(k) * simplex_volume(x.coords[idx]) / lifted
                if k == d:
                    # full-dimensional: raw lift determinant is exactly k! * volume
                    assert math.factorial(k) * simplex_volume(x.coords[idx]) == pytest.approx(
                        vol_k(raw[idx]), rel=1e-9
                    )
                assert 1 - 1e-9 <= ratio <= (d + 1) ** ((k + 1) / 2) + 1e-9


def _identity_rotation(monkeypatch):
    monkeypatch.setattr(lifting, "random_rotation", lambda dim, seed: np.eye(dim))


def test_central_project_north_pole(monkeypatch):
    _identity_rotation(monkeypatch)
    y = PointSet([[0.0, 0.0, 1.0]], "unit-sphere")
    res = central_project(y, seed=0)
    assert res.indices == (0,)
    np.testing.assert_array_equal(res.points.coords, [[0.0, 0.0]])


def test_central_project_drops_lower_hemisphere(monkeypatch):
    _identity_rotation(monkeypatch)
    s = 1 / math.sqrt(2)
    y = PointSet(
        [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [s, 0.0, s], [0.0, 1.0, HEMISPHERE_CUTOFF / 2]],
        "unit-sphere",
    )
    res = central_project(y, seed=0)
    # only (s, 0, s) survives, and it lands on (1, 0)
    assert res.indices == (2,)
    np.testing.assert_allclose(res.points.coords, [[1.0, 0.0]], rtol=1e-15)


def test_central_project_inverts_lift(monkeypatch):
    _identity_rotation(monkeypatch)
    x = generate("uniform-cube", 3, 20, seed=4)
    res = central_project(lift_to_sphere(x).sphere_points, seed=0)
    assert res.indices == tuple(range(20))
    np.testing.assert_allclose(res.points.coords, x.coords, atol=1e-14)


def test_central_project_deterministic_and_in_cube():
    y = generate("uniform-sphere", 3, 300, seed=1)
    a = central_project(y, seed=5)
    b = central_project(y, seed=5)
    assert a.indices == b.indices and a.points == b.points
    assert a.points.space_tag == "unit-cube"
    if not a.empty:
        assert a.points.coords.min() >= 0 and a.points.coords.max() <= 1
        np.testing.assert_allclose(
            a.points.coords,
            _manual_project(y.coords[list(a.indices)], 5),
            atol=1e-12,
        )


def _manual_project(pts, seed):
    from heilbronn.geometry import random_rotation

    r = pts @ random_rotation(pts.shape[1], seed).T
    return r[:, :-1] / r[:, -1:]


def test_central_project_empty_flag():
    y = PointSet([[0.0, 0.0, -1.0]], "unit-sphere")
    # a single point on the sphere lands in the cube for few rotations; find an empty one
    res = next(r for r in (central_project(y, s) for s in range(50)) if r.empty)
    assert res.points.n == 0 and res.empty


def test_central_project_rejects_non_sphere():
    with pytest.raises(PreconditionError):
        central_project(PointSet([[0.5, 0.5]], "unit-cube"), 0)


def test_retained_fraction_monte_carlo():
    y = generate("uniform-sphere", 2, 500, seed=0)
    fracs = [len(central_project(y, s).indices) / y.n for s in range(100)]
    assert np.mean(fracs) > 0.01
