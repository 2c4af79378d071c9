import itertools
import math

import numpy as np
import pytest

from heilbronn.errors import BudgetExceededError, DegenerateError, PreconditionError
from heilbronn.finder import (
    EXHAUSTIVE,
    brute_force_min_determinant,
    brute_force_min_simplex,
    find_small_simplex,
    parse_record,
    recursive_find,
)
from heilbronn.geometry import PointSet, lift_affine, simplex_volume, vol_k
from heilbronn.harness import generate
from oracles import oracle_min_determinant, oracle_min_simplex


def sphere(n, dim_sphere, seed):
    return generate("uniform-sphere", dim_sphere, n, seed)


def test_brute_full_subset():
    y = sphere(3, 2, 0)
    sel = brute_force_min_determinant(y, 3)
    assert sel.indices == (0, 1, 2)
    assert sel.value == pytest.approx(vol_k(y.coords), rel=1e-12)


def test_brute_antipodal_pair():
    v = np.array([0.6, 0.8, 0.0])
    y = PointSet([[0, 0, 1.0], v, [1.0, 0, 0], -v], "unit-sphere")
    sel = brute_force_min_determinant(y, 2)
    assert sel.indices == (1, 3)
    assert sel.value == 0.0


def test_brute_matches_oracle_small():
    for seed in range(10):
        y = sphere(6, 2, seed)
        sel = brute_force_min_determinant(y, 3)
        idx, val = oracle_min_determinant(y.coords.tolist(), 3)
        assert sel.indices == idx
        assert sel.value == pytest.approx(val, abs=1e-12)


def test_brute_simplex_examples():
    x = PointSet([[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]], "unit-cube")
    sel = brute_force_min_simplex(x, 2)
    assert sel.indices == (0, 1, 2)
    assert sel.value == simplex_volume(x.coords)
    grid = generate("grid", 2, 9)
    assert brute_force_min_simplex(grid, 2).value == 0.0
    for seed in range(5):
        x = generate("uniform-cube", 2, 8, seed)
        sel = brute_force_min_simplex(x, 2)
        idx, val = oracle_min_simplex(x.coords.tolist(), 2)
        assert sel.indices == idx
        assert sel.value == pytest.approx(val, abs=1e-12)


def test_brute_simplex_lower_dimensional_faces():
    # k < d: triangles in the unit cube of R^3
    for seed in range(3):
        x = generate("uniform-cube", 3, 7, seed)
        sel = brute_force_min_simplex(x, 2)
        best = min(
            (simplex_volume(x.coords[list(c)]), c)
            for c in itertools.combinations(range(7), 3)
        )
        assert sel.indices == best[1]


def test_brute_budget():
    y = sphere(30, 3, 0)
    with pytest.raises(BudgetExceededError, match="recursive_find"):
        brute_force_min_determinant(y, 4, budget=100)


def test_brute_budget_env_override(monkeypatch):
    monkeypatch.setenv("HEILBRONN_BUDGET", "10")
    with pytest.raises(BudgetExceededError):
        brute_force_min_determinant(sphere(10, 3, 0), 3)


def test_brute_preconditions():
    y = sphere(4, 2, 0)
    with pytest.raises(PreconditionError):
        brute_force_min_determinant(y, 5)
    with pytest.raises(PreconditionError):
        brute_force_min_determinant(sphere(6, 1, 0), 3)
    with pytest.raises(PreconditionError):
        brute_force_min_simplex(generate("uniform-cube", 2, 5), 0)
    with pytest.raises(PreconditionError):
        brute_force_min_simplex(y, 2)


def test_brute_workers_agree():
    y = sphere(25, 3, 7)
    a = brute_force_min_determinant(y, 3)
    b = brute_force_min_determinant(y, 3, workers=4)
    assert a.indices == b.indices
    x = generate("uniform-cube", 2, 30, 3)
    assert brute_force_min_simplex(x, 2).indices == brute_force_min_simplex(x, 2, workers=3).indices


def test_brute_pruned_mode_is_valid():
    y = sphere(14, 3, 2)
    exact = brute_force_min_determinant(y, 3)
    pruned = brute_force_min_determinant(y, 3, prune_factor=4.0)
    assert pruned.value >= exact.value
    assert pruned.value == pytest.approx(vol_k(y.coords[list(pruned.indices)]), rel=1e-12)


def test_brute_monotone_under_point_addition():
    y = sphere(12, 2, 3)
    values = [brute_force_min_determinant(y.subset(range(n)), 3).value for n in range(3, 13)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_brute_permutation_equivariance():
    y = sphere(10, 3, 4)
    perm = np.random.default_rng(0).permutation(10)
    a = brute_force_min_determinant(y, 3)
    b = brute_force_min_determinant(y.subset(perm), 3)
    assert sorted(int(perm[i]) for i in b.indices) == list(a.indices)
    assert b.value == pytest.approx(a.value, abs=1e-12)


def test_recursive_k0():
    y = sphere(5, 3, 0)
    sel = recursive_find(y, 0)
    assert len(sel.indices) == 1
    assert sel.value == pytest.approx(1.0, abs=1e-15)


def test_recursive_single_split_vs_brute():
    for seed in range(10):
        y = sphere(12, 3, seed)
        for k in (1, 2, 3):
            sel = recursive_find(y, k, schedule=[k - 1])
            assert sel.value >= brute_force_min_determinant(y, k + 1).value - 1e-15
            assert sel.value <= sel.certified_bound * (1 + 1e-9)
            assert len(set(sel.indices)) == k + 1


def test_recursive_exhaustive_d3_k3_n40():
    y = sphere(40, 3, 123)
    sel = recursive_find(y, 3, EXHAUSTIVE, base_budget=10_000)
    assert sel.value <= sel.certified_bound * (1 + 1e-9)
    prod = math.prod(s.value for s in sel.certificate)
    assert sel.certified_bound == prod
    true_min = brute_force_min_determinant(y, 4).value
    assert sel.value >= true_min
    assert sel.value == pytest.approx(vol_k(y.coords[list(sel.indices)]), rel=1e-12)


def _walk(sel):
    yield sel
    for st in sel.certificate:
        yield from _walk(st.selection)


def test_certificate_structure():
    y = sphere(30, 5, 9)
    sel = recursive_find(y, 5, EXHAUSTIVE, base_budget=2_000)
    for node in _walk(sel):
        if node.certificate:
            a, b = node.certificate
            assert a.role == "anchor" and b.role == "projected"
            assert a.split == b.split
            assert len(a.indices) == a.split + 1
            assert len(b.indices) == node.k - a.split
            assert not set(a.indices) & set(b.indices)
            assert tuple(sorted(a.indices + b.indices)) == node.indices
            assert node.value <= a.value * b.value * (1 + 1e-9)


def test_recursive_fixed_schedule_depth():
    y = sphere(40, 4, 1)
    sel = recursive_find(y, 4, schedule=[1, 0], base_budget=1_000)
    assert sel.certificate[0].split == 1
    with pytest.raises(BudgetExceededError):
        recursive_find(y, 4, schedule=[1], base_budget=100)
    with pytest.raises(PreconditionError):
        recursive_find(y, 4, schedule=[4])
    with pytest.raises(PreconditionError):
        recursive_find(y, 4, schedule="greedy")


def test_recursive_degenerate_input():
    v = [0.0, 0.6, 0.8]
    y = PointSet([v, v, [1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]], "unit-sphere")
    # the anchor is point 0; its duplicate projects to the zero vector
    with pytest.raises(DegenerateError, match="point 1"):
        recursive_find(y, 2, schedule=[0])


def test_recursive_preconditions():
    y = sphere(3, 3, 0)
    with pytest.raises(PreconditionError):
        recursive_find(y, 3)
    with pytest.raises(PreconditionError):
        recursive_find(sphere(10, 2, 0), 3)
    with pytest.raises(PreconditionError):
        recursive_find(generate("uniform-cube", 2, 5), 1)


def test_recursive_deterministic():
    y = sphere(25, 4, 5)
    a = recursive_find(y, 4, base_budget=3000)
    b = recursive_find(y, 4, base_budget=3000)
    assert a == b


def test_find_small_simplex_forced():
    x = generate("uniform-cube", 2, 3, 0)
    res = find_small_simplex(x, 2)
    assert res.indices == (0, 1, 2)
    assert res.volume == simplex_volume(x.coords)


def test_find_small_simplex_vs_oracle():
    for seed in range(10):
        x = generate("uniform-cube", 2, 10, seed)
        res = find_small_simplex(x, 2)
        assert res.volume == simplex_volume(x.coords[list(res.indices)])
        _, best = oracle_min_simplex(x.coords.tolist(), 2)
        assert res.volume >= best - 1e-15
        assert res.volume <= res.certified_volume * (1 + 1e-9)


def test_find_small_simplex_certified_volume_k_below_d():
    x = generate("uniform-cube", 4, 20, 2)
    for k in (1, 2, 3):
        res = find_small_simplex(x, k, base_budget=500)
        assert res.volume <= res.certified_volume * (1 + 1e-9)


def test_record_roundtrip():
    y = sphere(20, 3, 8)
    sel = recursive_find(y, 3, base_budget=500)
    k, value, idx, stages = parse_record(sel.to_record())
    assert (k, value, idx) == (3, sel.value, sel.indices)
    assert [(l, v, i) for l, v, i in stages] == [(s.split, s.value, s.indices) for s in sel.certificate]
    d = sel.to_dict()
    assert d["certified_bound"] == sel.certified_bound and d["method"] == "recursive"


def test_lifted_brute_consistency():
    # for k = d, minimising the lifted determinant is the same as minimising the volume
    x = generate("uniform-cube", 2, 9, 11)
    lifted = lift_affine(x.coords)
    best_lift = min(
        (vol_k(lifted[list(c)]), c) for c in itertools.combinations(range(9), 3)
    )
    assert brute_force_min_simplex(x, 2).indices == best_lift[1]
