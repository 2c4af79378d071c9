"""Searching point sets for (k+1)-tuples of small determinant.

Two strategies live here:

* exhaustive enumeration (``brute_force_min_determinant`` on the sphere,
  ``brute_force_min_simplex`` in the cube), exact up to float rounding and
  limited by a combinatorial budget;
* ``recursive_find``, which splits a (k+1)-tuple into an (l+1)-tuple of small
  determinant and a (k-l)-tuple found among the remaining points after
  projecting them onto the orthogonal complement of the first tuple's span and
  renormalising.  The determinant of the union is at most the product of the
  two stage values, and that inequality is checked on every result.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    BudgetExceededError,
    CertificateError,
    DegenerateError,
    PreconditionError,
)
from .geometry import (
    PointSet,
    batch_simplex_volumes,
    batch_volumes,
    complement_coordinates,
    simplex_volume,
    vol_k,
)
from .lifting import lift_to_sphere

EXHAUSTIVE = "exhaustive"
DEFAULT_BUDGET = 50_000_000
DEFAULT_BASE_BUDGET = 100_000
PROJECTION_TOL = 1e-10
CHAIN_RTOL = 1e-9
_CHUNK = 100_000

Schedule = Union[str, Sequence[int]]


def default_budget() -> int:
    """Enumeration budget, overridable through ``HEILBRONN_BUDGET``."""
    env = os.environ.get("HEILBRONN_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


@dataclass(frozen=True)
class Stage:
    split: int
    role: str  # "anchor": the (l+1)-tuple; "projected": the (k-l)-tuple found after projecting
    selection: "SimplexSelection"

    @property
    def indices(self) -> tuple[int, ...]:
        return self.selection.indices

    @property
    def value(self) -> float:
        return self.selection.value


@dataclass(frozen=True)
class SimplexSelection:
    indices: tuple[int, ...]
    value: float
    method: str = "brute"
    certificate: tuple[Stage, ...] = field(default=())

    @property
    def k(self) -> int:
        return len(self.indices) - 1

    @property
    def certified_bound(self) -> float:
        if not self.certificate:
            return self.value
        return math.prod(s.value for s in self.certificate)

    def to_record(self) -> str:
        lines = [" ".join([str(self.k), repr(self.value), *map(str, self.indices)])]
        for s in self.certificate:
            lines.append(" ".join(["stage", str(s.split), repr(s.value), *map(str, s.indices)]))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "indices": list(self.indices),
            "value": self.value,
            "method": self.method,
            "certified_bound": self.certified_bound,
            "certificate": [
                {"split": s.split, "role": s.role, "selection": s.selection.to_dict()}
                for s in self.certificate
            ],
        }


def parse_record(text: str) -> tuple[int, float, tuple[int, ...], list[tuple[int, float, tuple[int, ...]]]]:
    """Inverse of ``SimplexSelection.to_record`` (top-level stages only)."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    head = lines[0]
    k, value, idx = int(head[0]), float(head[1]), tuple(int(t) for t in head[2:])
    if len(idx) != k + 1:
        raise PreconditionError("record index count does not match k")
    stages = []
    for ln in lines[1:]:
        if ln[0] != "stage":
            raise PreconditionError(f"unexpected record line {' '.join(ln)!r}")
        stages.append((int(ln[1]), float(ln[2]), tuple(int(t) for t in ln[3:])))
    return k, value, idx, stages


# -- enumeration -----------------------------------------------------------


def _blocks(n: int, m: int, lead: int):
    """(B, m) index blocks of the m-combinations of range(n) starting at ``lead``, in lex order."""
    if m == 1:
        yield np.array([[lead]], dtype=np.intp)
        return
    rest = itertools.combinations(range(lead + 1, n), m - 1)
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(rest, _CHUNK)), dtype=np.intp
        )
        if not flat.size:
            return
        block = flat.reshape(-1, m - 1)
        yield np.hstack([np.full((block.shape[0], 1), lead, dtype=np.intp), block])


def _volumes(vectors: np.ndarray, block: np.ndarray, affine: bool) -> np.ndarray:
    if affine:
        return batch_simplex_volumes(vectors[block])
    return batch_volumes(vectors[block])


def _scan_lead(vectors: np.ndarray, m: int, lead: int, stop_at_zero: bool, affine: bool):
    best_val, best_idx = math.inf, None
    for block in _blocks(vectors.shape[0], m, lead):
        vals = _volumes(vectors, block, affine)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_idx = float(vals[j]), tuple(int(i) for i in block[j])
            if stop_at_zero and best_val == 0.0:
                break
    return best_val, best_idx


def _check_budget(n: int, m: int, budget: int | None) -> None:
    budget = default_budget() if budget is None else budget
    count = math.comb(n, m)
    if count > budget:
        raise BudgetExceededError(
            f"C({n},{m}) = {count} tuples exceeds the enumeration budget {budget}; "
            "use recursive_find instead"
        )


def _min_tuple(
    vectors: np.ndarray, m: int, workers: int = 1, affine: bool = False
) -> tuple[tuple[int, ...], float]:
    """Lexicographically first minimiser over all m-subsets of rows.

    The objective is vol_m of the rows, or with ``affine`` the volume of the
    simplex they span.
    """
    n = vectors.shape[0]
    leads = range(n - m + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _scan_lead(vectors, m, i, False, affine), leads))
        val, idx = min(results, key=lambda r: (r[0], r[1]))
        return idx, val
    best_val, best_idx = math.inf, None
    for lead in leads:
        val, idx = _scan_lead(vectors, m, lead, True, affine)
        if val < best_val:
            best_val, best_idx = val, idx
        if best_val == 0.0:
            # nothing beats an exact zero and later leads are lexicographically larger
            break
    return best_idx, best_val


def _pruned_min_tuple(
    vectors: np.ndarray, m: int, factor: float, affine: bool = False
) -> tuple[tuple[int, ...], float]:
    """Depth-first search that drops prefixes whose volume exceeds ``factor`` times
    the best complete value.  Heuristic: it can miss the optimum."""
    n = vectors.shape[0]
    best = [math.inf, None]

    def extend(prefix: tuple[int, ...]):
        start = prefix[-1] + 1 if prefix else 0
        cands = np.arange(start, n - (m - len(prefix)) + 1)
        if not cands.size:
            return
        stack = np.array([list(prefix) + [c] for c in cands], dtype=np.intp)
        vals = _volumes(vectors, stack, affine)
        if len(prefix) + 1 == m:
            j = int(np.argmin(vals))
            if vals[j] < best[0]:
                best[0], best[1] = float(vals[j]), tuple(int(i) for i in stack[j])
            return
        for c, v in zip(cands, vals):
            if len(prefix) + 1 >= 2 and v > factor * best[0]:
                continue
            extend(prefix + (int(c),))

    extend(())
    return best[1], best[0]


def _validate_m(n: int, dim: int, m: int) -> None:
    if m < 1:
        raise PreconditionError("tuple size must be at least 1")
    if m > n:
        raise PreconditionError(f"cannot choose {m} of {n} points")
    if m > dim:
        raise PreconditionError(f"{m} vectors in dimension {dim}")


def brute_force_min_determinant(
    y: PointSet,
    m: int,
    budget: int | None = None,
    workers: int = 1,
    prune_factor: float | None = None,
) -> SimplexSelection:
    """Exact minimiser of vol_m over all m-subsets of the unit vectors ``y``.

    Ties go to the lexicographically smallest index tuple.  ``prune_factor``
    switches to a heuristic pruned search that is not guaranteed exact.
    """
    if y.space_tag != "unit-sphere":
        raise PreconditionError("brute_force_min_determinant expects a unit-sphere point set")
    _validate_m(y.n, y.dim, m)
    _check_budget(y.n, m, budget)
    if prune_factor is not None:
        idx, _ = _pruned_min_tuple(y.coords, m, prune_factor)
    else:
        idx, _ = _min_tuple(y.coords, m, workers)
    return SimplexSelection(idx, vol_k(y.coords[list(idx)]), "brute")


def brute_force_min_simplex(
    x: PointSet,
    k: int,
    budget: int | None = None,
    workers: int = 1,
    prune_factor: float | None = None,
) -> SimplexSelection:
    """Exact minimiser of the k-simplex volume over all (k+1)-subsets of ``x``."""
    if x.space_tag == "unit-sphere":
        raise PreconditionError("brute_force_min_simplex expects cube (or raw) points")
    m = k + 1
    if k < 1:
        raise PreconditionError("k must be at least 1")
    _validate_m(x.n, x.dim + 1, m)
    _check_budget(x.n, m, budget)
    if prune_factor is not None:
        idx, _ = _pruned_min_tuple(x.coords, m, prune_factor, affine=True)
    else:
        idx, _ = _min_tuple(x.coords, m, workers, affine=True)
    return SimplexSelection(idx, simplex_volume(x.coords[list(idx)]), "brute")


# -- recursive projection search --------------------------------------------


@dataclass(frozen=True, eq=False)
class _Node:
    key: frozenset
    indices: np.ndarray  # original indices of the remaining points, ascending
    coords: np.ndarray  # unit vectors in an orthonormal frame of the current complement

    @property
    def n(self) -> int:
        return self.coords.shape[0]


def _normalize_schedule(schedule: Schedule):
    if isinstance(schedule, str):
        if schedule != EXHAUSTIVE:
            raise PreconditionError(f"unknown schedule {schedule!r}")
        return EXHAUSTIVE
    splits = tuple(int(s) for s in schedule)
    if any(s < 0 for s in splits):
        raise PreconditionError("split values must be non-negative")
    return splits


class _Search:
    def __init__(self, coords: np.ndarray, budget: int):
        self.budget = budget
        root = _Node(frozenset(), np.arange(coords.shape[0]), coords)
        self.nodes = {root.key: root}
        self.memo: dict = {}
        self.root = root

    def child(self, node: _Node, chosen: tuple[int, ...]) -> _Node:
        key = node.key | frozenset(chosen)
        if key in self.nodes:
            return self.nodes[key]
        pos = np.searchsorted(node.indices, chosen)
        keep = np.ones(node.n, dtype=bool)
        keep[pos] = False
        proj = complement_coordinates(node.coords[pos], node.coords[keep])
        norms = np.linalg.norm(proj, axis=1)
        if norms.size and norms.min() < PROJECTION_TOL:
            bad = int(node.indices[keep][np.argmin(norms)])
            raise DegenerateError(
                f"point {bad} projects to norm {norms.min():.3g}: input is not in general "
                "position; perturb and retry"
            )
        out = _Node(key, node.indices[keep], proj / norms[:, None])
        self.nodes[key] = out
        return out

    def solve(self, node: _Node, m: int, schedule) -> SimplexSelection:
        if m == 1:
            return SimplexSelection(
                (int(node.indices[0]),), float(np.linalg.norm(node.coords[0])), "single"
            )
        memo_key = (node.key, m, schedule)
        if memo_key in self.memo:
            return self.memo[memo_key]
        if math.comb(node.n, m) <= self.budget:
            pos, _ = _min_tuple(node.coords, m)
            result = SimplexSelection(
                tuple(int(node.indices[p]) for p in pos), vol_k(node.coords[list(pos)]), "brute"
            )
        elif schedule == ():
            raise BudgetExceededError(
                f"C({node.n},{m}) exceeds base budget {self.budget} and the schedule is exhausted"
            )
        else:
            result = self.split(node, m - 1, schedule)
        self.memo[memo_key] = result
        return result

    def split(self, node: _Node, k: int, schedule) -> SimplexSelection:
        if k == 0:
            return self.solve(node, 1, schedule)
        if schedule == EXHAUSTIVE:
            splits, tail = range(k), EXHAUSTIVE
        else:
            if not schedule:
                raise PreconditionError(f"no split available for k = {k}")
            splits, tail = (schedule[0],), schedule[1:]
            if not 0 <= schedule[0] < k:
                raise PreconditionError(f"split {schedule[0]} invalid for k = {k}")
        best, best_key = None, None
        for l in splits:
            anchor = self.solve(node, l + 1, tail)
            sub = self.child(node, anchor.indices)
            projected = self.solve(sub, k - l, tail)
            chosen = tuple(sorted(anchor.indices + projected.indices))
            value = vol_k(node.coords[np.searchsorted(node.indices, chosen)])
            bound = anchor.value * projected.value
            if value > bound * (1 + CHAIN_RTOL) + 1e-15:
                raise CertificateError(
                    f"chain inequality violated: {value!r} > {anchor.value!r} * {projected.value!r}"
                )
            cand = SimplexSelection(
                chosen,
                value,
                "recursive",
                (Stage(l, "anchor", anchor), Stage(l, "projected", projected)),
            )
            key = (bound, chosen)
            if best_key is None or key < best_key:
                best, best_key = cand, key
        return best


def recursive_find(
    y: PointSet,
    k: int,
    schedule: Schedule = EXHAUSTIVE,
    base_budget: int = DEFAULT_BASE_BUDGET,
) -> SimplexSelection:
    """Find k+1 unit vectors of small determinant by projecting and recursing.

    With a fixed schedule ``[l1, l2, ...]`` the top level splits at ``l1`` and
    both stages that are too large for brute force recurse with
    ``[l2, ...]``.  With ``"exhaustive"`` every split is tried at each level
    and the smallest certified product wins.
    """
    if y.space_tag != "unit-sphere":
        raise PreconditionError("recursive_find expects a unit-sphere point set")
    if not 0 <= k <= y.dim - 1:
        raise PreconditionError(f"k = {k} out of range for S^{y.dim - 1}")
    if y.n <= k:
        raise PreconditionError(f"need more than k = {k} points, got {y.n}")
    search = _Search(y.coords, base_budget)
    return search.split(search.root, k, _normalize_schedule(schedule))


@dataclass(frozen=True)
class CubeSelection:
    indices: tuple[int, ...]
    volume: float
    sphere: SimplexSelection
    norm_product: float

    @property
    def k(self) -> int:
        return len(self.indices) - 1

    @property
    def certified_volume(self) -> float:
        """Upper bound on ``volume`` implied by the sphere-side certificate."""
        return self.sphere.certified_bound * self.norm_product / math.factorial(self.k)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "indices": list(self.indices),
            "volume": self.volume,
            "certified_volume": self.certified_volume,
            "norm_product": self.norm_product,
            "sphere": self.sphere.to_dict(),
        }


def find_small_simplex(
    x: PointSet,
    k: int,
    schedule: Schedule = EXHAUSTIVE,
    base_budget: int = DEFAULT_BASE_BUDGET,
) -> CubeSelection:
    """Lift ``x`` to the sphere, run ``recursive_find`` and report the cube volume."""
    if x.space_tag != "unit-cube":
        raise PreconditionError("find_small_simplex expects a unit-cube point set")
    if not 1 <= k <= x.dim:
        raise PreconditionError(f"k = {k} out of range for d = {x.dim}")
    if x.n <= k:
        raise PreconditionError(f"need more than k = {k} points, got {x.n}")
    lifted = lift_to_sphere(x)
    sel = recursive_find(lifted.sphere_points, k, schedule, base_budget)
    idx = list(sel.indices)
    return CubeSelection(
        sel.indices,
        simplex_volume(x.coords[idx]),
        sel,
        float(np.prod(lifted.norm_factors[idx])),
    )
