"""Volumes of vector collections, orthogonal-complement projections, rotations.

Everything here works in double precision.  A collection of ``k`` vectors in
``R^d`` is passed either as a sequence of 1-d arrays or as a ``(k, d)`` array,
one vector per row.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    BudgetExceededError,
    DegenerateBasisError,
    DimensionMismatchError,
    PreconditionError,
)

SPACE_TAGS = ("unit-cube", "unit-sphere", "raw")

# vol is reported as exactly 0 when it falls below this multiple of the
# product of the vector norms.
RANK_TOL = 1e-12
SPHERE_NORM_TOL = 1e-12
BASIS_RANK_TOL = 1e-10
PERTURB_RETRIES = 100
FULL_GP_CHECK_MAX_N = 16


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator; ``stream`` derives independent substreams."""
    if seed < 0:
        raise PreconditionError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


@dataclass(frozen=True, eq=False)
class PointSet:
    coords: np.ndarray
    space_tag: str = "raw"

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float)
        if arr.ndim != 2:
            raise DimensionMismatchError("coords must be an (n, d) array")
        if arr.shape[1] < 1:
            raise DimensionMismatchError("ambient dimension must be positive")
        if self.space_tag not in SPACE_TAGS:
            raise PreconditionError(f"unknown space tag {self.space_tag!r}")
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("coordinates must be finite")
        if self.space_tag == "unit-cube" and arr.size and (arr.min() < 0 or arr.max() > 1):
            raise PreconditionError("unit-cube point outside [0,1]^d")
        if self.space_tag == "unit-sphere" and len(arr):
            err = np.abs(np.linalg.norm(arr, axis=1) - 1.0).max()
            if err > SPHERE_NORM_TOL:
                raise PreconditionError(f"unit-sphere point off the sphere by {err:.3g}")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.space_tag == other.space_tag and np.array_equal(self.coords, other.coords)

    def subset(self, indices: Iterable[int]) -> "PointSet":
        idx = list(indices)
        return PointSet(self.coords[idx].reshape(len(idx), self.dim), self.space_tag)


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, PointSet):
        return vectors.coords
    if isinstance(vectors, np.ndarray):
        arr = vectors.astype(float)
        if arr.ndim == 1:
            arr = arr[None, :]
    else:
        rows = [np.asarray(v, dtype=float).ravel() for v in vectors]
        if not rows:
            raise PreconditionError("empty vector collection")
        if len({len(r) for r in rows}) != 1:
            raise DimensionMismatchError("vectors have different ambient dimensions")
        arr = np.vstack(rows)
    if arr.shape[0] == 0:
        raise PreconditionError("empty vector collection")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("vectors must be finite")
    return arr


def gram_matrix(vectors) -> np.ndarray:
    a = _as_matrix(vectors)
    g = a @ a.T
    return (g + g.T) / 2


def vol_k(vectors) -> float:
    """k-volume of the parallelepiped spanned by ``k`` vectors in ``R^d``.

    Equals ``sqrt(det(gram_matrix(vectors)))``, computed as the product of the
    diagonal of a column-pivoted QR factor so that near-dependent collections
    do not suffer the cancellation of forming the Gram matrix.
    """
    a = _as_matrix(vectors)
    k, d = a.shape
    if k > d:
        raise PreconditionError(f"{k} vectors in dimension {d}: volume only defined for k <= d")
    r = scipy.linalg.qr(a.T, mode="r", pivoting=True)[0]
    vol = float(abs(np.prod(np.diag(r))))
    norms = float(np.prod(np.linalg.norm(a, axis=1)))
    if vol <= RANK_TOL * norms:
        return 0.0
    return vol


def batch_volumes(stack: np.ndarray, rtol: float = RANK_TOL) -> np.ndarray:
    """Vectorised ``vol_k`` for a ``(B, k, d)`` stack of collections."""
    stack = np.asarray(stack, dtype=float)
    b, k, d = stack.shape
    if k > d:
        raise PreconditionError(f"{k} vectors in dimension {d}")
    if b == 0:
        return np.empty(0)
    if k == 0:
        return np.ones(b)
    r = np.linalg.qr(np.swapaxes(stack, 1, 2), mode="r")
    vols = np.abs(np.prod(np.diagonal(r, axis1=1, axis2=2), axis=1))
    norms = np.prod(np.linalg.norm(stack, axis=2), axis=1)
    vols[vols <= rtol * norms] = 0.0
    return vols


def batch_simplex_volumes(stack: np.ndarray) -> np.ndarray:
    """Simplex volumes for a ``(B, k+1, d)`` stack of vertex sets."""
    stack = np.asarray(stack, dtype=float)
    k = stack.shape[1] - 1
    return batch_volumes(stack[:, 1:] - stack[:, :1]) / math.factorial(k)


def lift_affine(points) -> np.ndarray:
    """Append a coordinate equal to 1 to each point: x -> (x, 1)."""
    a = _as_matrix(points)
    return np.hstack([a, np.ones((a.shape[0], 1))])


def simplex_volume(points) -> float:
    """k-volume of the simplex on ``k+1`` points: ``vol_k`` of the edge vectors over k!.

    For ``k = d`` this is ``vol_{k+1}((x_i, 1)) / k!``.  For ``k < d`` the lifted
    form carries an extra factor, the distance from the origin to the affine
    hull of the lifted points, which lies in ``[1, sqrt(d+1)]``.
    """
    a = _as_matrix(points)
    if a.shape[0] < 2:
        raise PreconditionError("a simplex needs at least 2 points")
    k = a.shape[0] - 1
    if k > a.shape[1]:
        raise PreconditionError(f"{k}-simplex in dimension {a.shape[1]}")
    return vol_k(a[1:] - a[0]) / math.factorial(k)


def _orthonormal_span(basis) -> tuple[np.ndarray, np.ndarray]:
    """Return (Q_span, Q_complement) as column blocks of a full orthogonal matrix."""
    b = _as_matrix(basis)
    r_count, d = b.shape
    if r_count > d:
        raise DegenerateBasisError(f"{r_count} basis vectors in dimension {d}")
    s = np.linalg.svd(b, compute_uv=False)
    if s[0] == 0 or s[-1] < BASIS_RANK_TOL * s[0]:
        raise DegenerateBasisError(
            f"basis is rank deficient (singular values {s[-1]:.3g} / {s[0]:.3g})"
        )
    q, _ = np.linalg.qr(b.T, mode="complete")
    return q[:, :r_count], q[:, r_count:]


def project_complement(basis, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto the complement of ``span(basis)``."""
    q_span, _ = _orthonormal_span(basis)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != q_span.shape[0]:
        raise DimensionMismatchError("x and basis live in different dimensions")
    # second pass removes what rounding left in the span
    for _ in range(2):
        x = x - q_span @ (q_span.T @ x)
    return x


def complement_coordinates(basis, points) -> np.ndarray:
    """Project rows of ``points`` onto the complement of ``span(basis)``,
    expressed in an orthonormal basis of that complement (dimension d - rank)."""
    q_span, q_perp = _orthonormal_span(basis)
    p = _as_matrix(points)
    for _ in range(2):
        p = p - (p @ q_span) @ q_span.T
    return p @ q_perp


def random_rotation(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal ``dim x dim`` matrix, deterministic in ``seed``."""
    if dim < 1:
        raise PreconditionError("dim must be >= 1")
    z = make_rng(seed, 1).standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    # sign fix makes the distribution exactly Haar
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _gp_vectors(ps: PointSet) -> np.ndarray:
    if ps.space_tag == "unit-sphere":
        return ps.coords
    return lift_affine(ps.coords)


def is_general_position(ps: PointSet, seed: int = 0, rtol: float = RANK_TOL) -> bool:
    """Every subset of at most ``dim`` of the (lifted) vectors is independent.

    Sphere sets are checked as they are; cube and raw sets are lifted to
    ``(x, 1)`` first.  Exhaustive for ``n <= 16``, otherwise ``10 n`` random
    subsets are sampled.  ``rtol`` is the relative volume below which a
    subset counts as dependent.
    """
    vecs = _gp_vectors(ps)
    n, dim = vecs.shape
    if n == 0:
        return True
    # independence of every maximal subset implies it for the smaller ones
    m = min(n, dim)
    if n <= FULL_GP_CHECK_MAX_N:
        idx = np.array(list(itertools.combinations(range(n), m)), dtype=np.intp)
    else:
        rng = make_rng(seed, 2)
        idx = np.array([np.sort(rng.choice(n, size=m, replace=False)) for _ in range(10 * n)])
    return bool(np.all(batch_volumes(vecs[idx], rtol) > 0))


def perturb(ps: PointSet, seed: int, magnitude: float) -> PointSet:
    """Move each coordinate by at most ``magnitude`` until the set is in general position.

    Cube points that would leave ``[0,1]`` are reflected back inside; sphere
    points are renormalised afterwards.  Independence is judged relative to
    the perturbation scale: m coincident points can only be separated into a
    volume of order ``magnitude^(m-1)``.
    """
    if not magnitude > 0:
        raise PreconditionError("perturbation magnitude must be positive")
    m = min(ps.n, ps.dim if ps.space_tag == "unit-sphere" else ps.dim + 1)
    rtol = RANK_TOL * min(1.0, magnitude) ** max(m - 1, 0)
    for attempt in range(PERTURB_RETRIES + 1):
        rng = make_rng(seed, 3, attempt)
        noise = rng.uniform(-magnitude, magnitude, size=ps.coords.shape)
        coords = ps.coords + noise
        if ps.space_tag == "unit-cube":
            coords = np.where(coords < 0, -coords, coords)
            coords = np.where(coords > 1, 2 - coords, coords)
            coords = np.clip(coords, 0.0, 1.0)
        elif ps.space_tag == "unit-sphere":
            coords = coords / np.linalg.norm(coords, axis=1, keepdims=True)
        out = PointSet(coords, ps.space_tag)
        if is_general_position(out, seed=seed + attempt, rtol=rtol):
            return out
    raise BudgetExceededError(f"no general-position perturbation after {PERTURB_RETRIES} retries")


def write_pointset(ps: PointSet, path) -> None:
    Path(path).write_text(format_pointset(ps), encoding="utf-8")


def format_pointset(ps: PointSet) -> str:
    lines = [f"{ps.dim} {ps.n} {ps.space_tag}"]
    lines += [" ".join(format(float(c), ".17g") for c in row) for row in ps.coords]
    return "\n".join(lines) + "\n"


def parse_pointset(text: str) -> PointSet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PreconditionError("empty point-set file")
    head = lines[0].split()
    if len(head) != 3:
        raise PreconditionError("header must be 'd n space_tag'")
    d, n, tag = int(head[0]), int(head[1]), head[2]
    rows = [[float(t) for t in ln.split()] for ln in lines[1:]]
    if len(rows) != n:
        raise PreconditionError(f"header declares {n} points, found {len(rows)}")
    if any(len(r) != d for r in rows):
        raise DimensionMismatchError(f"every point must have {d} coordinates")
    return PointSet(np.array(rows, dtype=float).reshape(n, d), tag)


def read_pointset(path) -> PointSet:
    return parse_pointset(Path(path).read_text(encoding="utf-8"))


def as_pointset(points: Sequence, space_tag: str = "raw") -> PointSet:
    if isinstance(points, PointSet):
        return points
    return PointSet(np.asarray(points, dtype=float), space_tag)
