"""Passing between point sets in the cube [0,1]^d and unit vectors on S^d.

``lift_to_sphere`` sends x to (x, 1)/sqrt(|x|^2 + 1).  Simplex volumes of the
cube set then become determinants of the lifted unit vectors, up to the
product of the norm factors and a k! (each factor lies in [1, sqrt(d+1)]).
``central_project`` goes the other way: rotate at random, project centrally
onto the hyperplane x_{d+1} = 1 and keep what lands in the cube.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .geometry import PointSet, lift_affine, random_rotation

# rotated points whose last coordinate is at most this are dropped
HEMISPHERE_CUTOFF = 1e-6


@dataclass(frozen=True)
class LiftResult:
    sphere_points: PointSet
    norm_factors: np.ndarray


@dataclass(frozen=True)
class ProjectionResult:
    points: PointSet
    indices: tuple[int, ...]

    @property
    def empty(self) -> bool:
        return len(self.indices) == 0


def lift_to_sphere(x: PointSet) -> LiftResult:
    if x.space_tag != "unit-cube":
        raise PreconditionError("lift_to_sphere expects a unit-cube point set")
    raw = lift_affine(x.coords) if x.n else np.empty((0, x.dim + 1))
    norms = np.linalg.norm(raw, axis=1)
    y = raw / norms[:, None] if x.n else raw
    norms.setflags(write=False)
    return LiftResult(PointSet(y, "unit-sphere"), norms)


def central_project(y: PointSet, seed: int) -> ProjectionResult:
    """Rotate ``y`` by a Haar rotation and project centrally into ``[0,1]^d``.

    The returned indices refer to rows of ``y``.  An empty result is legal;
    re-seeding is left to the caller.
    """
    if y.space_tag != "unit-sphere":
        raise PreconditionError("central_project expects a unit-sphere point set")
    d = y.dim - 1
    if d < 1:
        raise PreconditionError("need points on S^d with d >= 1")
    rotated = y.coords @ random_rotation(y.dim, seed).T
    last = rotated[:, -1]
    upper = last > HEMISPHERE_CUTOFF
    images = np.zeros((y.n, d))
    images[upper] = rotated[upper, :d] / last[upper, None]
    keep = upper & np.all((images >= 0) & (images <= 1), axis=1)
    idx = tuple(int(i) for i in np.flatnonzero(keep))
    return ProjectionResult(PointSet(images[keep].reshape(len(idx), d), "unit-cube"), idx)
