"""Point-set generators, resumable experiment sweeps and log-log exponent fits."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateError, HeilbronnError, InsufficientDataError, PreconditionError
from .exponents import dp_table
from .finder import (
    DEFAULT_BASE_BUDGET,
    EXHAUSTIVE,
    brute_force_min_determinant,
    brute_force_min_simplex,
    find_small_simplex,
    recursive_find,
)
from .geometry import PointSet, make_rng, perturb

log = logging.getLogger(__name__)

GENERATORS = ("uniform-cube", "uniform-sphere", "grid")
METHODS = ("brute", "recursive")
PERTURB_MAGNITUDE = 1e-9


def _grid_sides(d: int, n: int) -> list[int]:
    side = max(1, int(math.floor(n ** (1.0 / d) + 1e-9)))
    sides = [side] * d
    i = 0
    while math.prod(sides) < n:
        sides[i] += 1
        i = (i + 1) % d
    return sides


def generate(generator: str, d: int, n: int, seed: int = 0) -> PointSet:
    """Seeded point set.  ``uniform-sphere`` returns n points on S^d (in R^{d+1})."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if d < 1:
        raise PreconditionError("d must be at least 1")
    if generator == "uniform-cube":
        return PointSet(make_rng(seed, 10).random((n, d)), "unit-cube")
    if generator == "uniform-sphere":
        z = make_rng(seed, 11).standard_normal((n, d + 1))
        return PointSet(z / np.linalg.norm(z, axis=1, keepdims=True), "unit-sphere")
    if generator == "grid":
        sides = _grid_sides(d, n)
        axes = [np.linspace(0.0, 1.0, s) if s > 1 else np.zeros(1) for s in sides]
        pts = list(itertools.islice(itertools.product(*axes), n))
        return PointSet(np.array(pts, dtype=float), "unit-cube")
    raise PreconditionError(f"unknown generator {generator!r}")


@dataclass
class ExperimentConfig:
    d: int
    k: int
    n_values: Sequence[int]
    seeds: Sequence[int]
    generator: str = "uniform-cube"
    method: str = "both"
    schedule: str | Sequence[int] = EXHAUSTIVE
    output_path: str | os.PathLike | None = None
    budget: int | None = None
    base_budget: int = DEFAULT_BASE_BUDGET

    def validate(self) -> None:
        if not 1 <= self.k <= self.d:
            raise PreconditionError("need 1 <= k <= d")
        ns = list(self.n_values)
        if not ns or any(n < 1 for n in ns) or ns != sorted(set(ns)):
            raise PreconditionError("n_values must be positive and strictly ascending")
        if self.generator not in GENERATORS:
            raise PreconditionError(f"unknown generator {self.generator!r}")
        if self.method not in (*METHODS, "both"):
            raise PreconditionError(f"unknown method {self.method!r}")
        if self.method in ("brute", "both") and self.budget is not None:
            worst = math.comb(max(ns), self.k + 1)
            if worst > self.budget:
                raise PreconditionError(f"C({max(ns)},{self.k + 1}) exceeds budget {self.budget}")

    @property
    def methods(self) -> tuple[str, ...]:
        return METHODS if self.method == "both" else (self.method,)


@dataclass
class ExperimentRecord:
    n: int
    d: int
    k: int
    method: str
    seed: int
    min_volume: float
    certificate_product: float | None = None
    wall_time_ms: float = 0.0
    error: str = ""

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.n, self.seed, self.method)


CSV_FIELDS = [f.name for f in fields(ExperimentRecord)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def parse_csv(text: str) -> list[ExperimentRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append(
            ExperimentRecord(
                n=int(row["n"]),
                d=int(row["d"]),
                k=int(row["k"]),
                method=row["method"],
                seed=int(row["seed"]),
                min_volume=float(row["min_volume"]),
                certificate_product=float(row["certificate_product"]) if row["certificate_product"] else None,
                wall_time_ms=float(row["wall_time_ms"]),
                error=row.get("error") or "",
            )
        )
    return out


def read_records(path) -> list[ExperimentRecord]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


def write_records(records: Iterable[ExperimentRecord], path) -> None:
    """Sort by (n, seed, method) and replace ``path`` atomically."""
    path = Path(path)
    ordered = sorted(records, key=lambda r: r.key)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(emit_csv(ordered))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _run_method(ps: PointSet, cfg: ExperimentConfig, method: str) -> tuple[float, float | None]:
    sphere = ps.space_tag == "unit-sphere"
    if method == "brute":
        if sphere:
            sel = brute_force_min_determinant(ps, cfg.k + 1, budget=cfg.budget)
        else:
            sel = brute_force_min_simplex(ps, cfg.k, budget=cfg.budget)
        return sel.value, None
    if sphere:
        sel = recursive_find(ps, cfg.k, cfg.schedule, cfg.base_budget)
        return sel.value, sel.certified_bound
    res = find_small_simplex(ps, cfg.k, cfg.schedule, cfg.base_budget)
    return res.volume, res.certified_volume


def run_cell(cfg: ExperimentConfig, n: int, seed: int, method: str) -> ExperimentRecord:
    """One (n, seed, method) cell; failures come back as error rows."""
    t0 = time.perf_counter()
    try:
        ps = generate(cfg.generator, cfg.d, n, seed)
        try:
            vol, cert = _run_method(ps, cfg, method)
        except DegenerateError:
            ps = perturb(ps, seed, PERTURB_MAGNITUDE)
            vol, cert = _run_method(ps, cfg, method)
        err = ""
    except HeilbronnError as exc:
        log.warning("cell n=%d seed=%d method=%s failed: %s", n, seed, method, exc)
        vol, cert, err = math.nan, None, f"{type(exc).__name__}: {exc}"
    ms = (time.perf_counter() - t0) * 1000.0
    return ExperimentRecord(n, cfg.d, cfg.k, method, seed, vol, cert, ms, err)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[ExperimentRecord]:
    """Run every missing cell of the sweep; rows already in ``output_path`` are kept.

    The CSV is rewritten atomically after each finished cell so an interrupted
    sweep resumes where it stopped.
    """
    cfg.validate()
    out = Path(cfg.output_path) if cfg.output_path is not None else None
    records: dict[tuple, ExperimentRecord] = {}
    if out is not None and out.exists():
        for r in read_records(out):
            records[r.key] = r
    todo = [
        (n, seed, m)
        for n in cfg.n_values
        for seed in cfg.seeds
        for m in cfg.methods
        if (n, seed, m) not in records
    ]

    def finish(rec: ExperimentRecord) -> None:
        records[rec.key] = rec
        if out is not None:
            write_records(records.values(), out)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # results are consumed (and written) by this thread only
            for rec in pool.map(lambda c: run_cell(cfg, *c), todo):
                finish(rec)
    else:
        for cell in todo:
            finish(run_cell(cfg, *cell))
    if out is not None and not todo and not out.exists():
        write_records(records.values(), out)
    return sorted(records.values(), key=lambda r: r.key)


@dataclass
class FitResult:
    slope: float
    intercept: float
    residual: float
    n_values: list[int]
    excluded_zero: int
    excluded_error: int
    reference_exponent: float | None = None
    reference_label: str = ""
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def fit_exponent(records: Sequence[ExperimentRecord], method: str | None = None) -> FitResult:
    """Least squares of ln(geometric-mean min volume) against ln n.

    Zero-volume and error rows are left out and counted.  The table exponent
    -delta(k, d) is attached for comparison only.
    """
    rows = [r for r in records if method is None or r.method == method]
    errors = [r for r in rows if r.error or not math.isfinite(r.min_volume)]
    ok = [r for r in rows if r not in errors]
    zeros = [r for r in ok if r.min_volume <= 0]
    pos = [r for r in ok if r.min_volume > 0]
    by_n: dict[int, list[float]] = {}
    for r in pos:
        by_n.setdefault(r.n, []).append(math.log(r.min_volume))
    ns = sorted(by_n)
    if len(ns) < 3:
        raise InsufficientDataError(f"need at least 3 distinct n with positive volumes, got {len(ns)}")
    x = np.log(np.array(ns, dtype=float))
    y = np.array([np.mean(by_n[n]) for n in ns])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    res = FitResult(float(slope), float(intercept), resid, ns, len(zeros), len(errors))
    kd = {(r.k, r.d) for r in pos}
    if len(kd) == 1:
        k, d = kd.pop()
        b = dp_table(d).bound(k, d)
        res.reference_exponent = -float(b.q)
        res.reference_label = f"-delta({k},{d}) >= -({b}) from the bound table (reference only)"
    return res
