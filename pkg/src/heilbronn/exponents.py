"""Exact lower bounds on the exponents delta_{k,d}.

delta_{k,d} is the largest exponent with Delta_{k,d}(n) << n^{-delta}.  The
table combines three base bounds

* packing:  delta_{k,d} >= k/d,
* Lefmann:  delta_{k,d} >= k/d + (k-1)/(2d(d-1)) for odd k,
* KPS:      delta_{2,2} >= 8/7 - eps,

with the splitting recursion delta_{k,d} >= delta_{l,d} + delta_{k-l-1,d-l-1}
for 0 <= l < k.  All arithmetic is in ``fractions.Fraction``; an ``eps_coeff``
counts how many times the KPS bound (which carries an arbitrarily small loss
eps) went into a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PreconditionError

BASE_PACKING = "base-packing"
BASE_LEFMANN = "base-lefmann"
BASE_KPS = "base-kps"
RECURSION = "recursion"
LOG_MARGIN = 1e-9


@dataclass(frozen=True, order=False)
class ExponentBound:
    """Lower bound ``q - eps_coeff * eps`` valid for every eps > 0."""

    q: Fraction
    eps_coeff: int = 0

    def __post_init__(self):
        object.__setattr__(self, "q", Fraction(self.q))
        if self.eps_coeff < 0:
            raise PreconditionError("eps_coeff must be non-negative")

    def __add__(self, other: "ExponentBound") -> "ExponentBound":
        return ExponentBound(self.q + other.q, self.eps_coeff + other.eps_coeff)

    def sort_key(self):
        # larger q is better; at equal q fewer eps losses is better
        return (self.q, -self.eps_coeff)

    def __lt__(self, other: "ExponentBound") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        s = f"{self.q.numerator}/{self.q.denominator}" if self.q.denominator != 1 else str(self.q.numerator)
        if self.eps_coeff == 1:
            s += " - eps"
        elif self.eps_coeff:
            s += f" - {self.eps_coeff}*eps"
        return s

    def to_json(self) -> dict:
        return {"q": f"{self.q.numerator}/{self.q.denominator}", "eps_coeff": self.eps_coeff}


@dataclass(frozen=True)
class Derivation:
    rule: str
    split: int | None = None
    children: tuple[tuple[int, int], ...] = ()

    @property
    def label(self) -> str:
        return f"{RECURSION}({self.split})" if self.rule == RECURSION else self.rule


@dataclass(frozen=True)
class Cell:
    bound: ExponentBound
    derivation: Derivation


@dataclass
class BoundTable:
    D: int
    entries: dict[tuple[int, int], Cell] = field(default_factory=dict)

    def __getitem__(self, kd: tuple[int, int]) -> Cell:
        return self.entries[kd]

    def bound(self, k: int, d: int) -> ExponentBound:
        return self.entries[(k, d)].bound

    def restrict(self, d_max: int) -> "BoundTable":
        return BoundTable(d_max, {kd: c for kd, c in self.entries.items() if kd[1] <= d_max})

    def tree(self, k: int, d: int) -> dict:
        """Derivation tree of cell (k, d) as nested dicts."""
        cell = self.entries[(k, d)]
        return {
            "k": k,
            "d": d,
            **cell.bound.to_json(),
            "rule": cell.derivation.label,
            "children": [self.tree(*c) for c in cell.derivation.children],
        }

    def reevaluate(self, k: int, d: int) -> ExponentBound:
        """Recompute cell (k, d) bottom-up from its derivation tree alone."""
        der = self.entries[(k, d)].derivation
        if der.rule == RECURSION:
            a, b = der.children
            return self.reevaluate(*a) + self.reevaluate(*b)
        return base_candidates(k, d)[der.rule]


def base_candidates(k: int, d: int) -> dict[str, ExponentBound]:
    """Every base bound that applies to (k, d)."""
    if d < 0 or not 0 <= k <= d:
        raise PreconditionError(f"need 0 <= k <= d, got (k, d) = ({k}, {d})")
    if k == 0:
        return {BASE_PACKING: ExponentBound(Fraction(0))}
    out = {BASE_PACKING: ExponentBound(Fraction(k, d))}
    if k % 2 == 1 and d >= 2:
        out[BASE_LEFMANN] = ExponentBound(Fraction(k, d) + Fraction(k - 1, 2 * d * (d - 1)))
    if (k, d) == (2, 2):
        out[BASE_KPS] = ExponentBound(Fraction(8, 7), 1)
    return out


def _best_base(k: int, d: int) -> tuple[ExponentBound, str]:
    # dict order is packing, lefmann, kps: on ties the earlier (simpler) rule stays
    best_rule, best = None, None
    for rule, b in base_candidates(k, d).items():
        if best is None or best < b:
            best_rule, best = rule, b
    return best, best_rule


def base_bound(k: int, d: int) -> ExponentBound:
    if d < 1:
        raise PreconditionError("d must be at least 1")
    return _best_base(k, d)[0]


def dp_table(D: int) -> BoundTable:
    """Best bounds for all 0 <= k <= d <= D, with the argmax derivation of each cell.

    Ties prefer base rules, then the smallest split.  Candidates are compared
    with integer cross-multiplication; only winners become Fractions.
    """
    if D < 1:
        raise PreconditionError("D must be at least 1")
    table = BoundTable(D)
    entries = table.entries
    # (num, den, eps) mirrors of the stored bounds, for fast comparisons
    raw: dict[tuple[int, int], tuple[int, int, int]] = {}
    for d in range(D + 1):
        entries[(0, d)] = Cell(ExponentBound(Fraction(0)), Derivation(BASE_PACKING))
        raw[(0, d)] = (0, 1, 0)
    for k in range(1, D + 1):
        for d in range(k, D + 1):
            bound, rule = _best_base(k, d)
            bn, bd, be = bound.q.numerator, bound.q.denominator, bound.eps_coeff
            best_l = None
            for l in range(k):
                an, ad, ae = raw[(l, d)]
                cn, cd, ce = raw[(k - l - 1, d - l - 1)]
                num, den, eps = an * cd + cn * ad, ad * cd, ae + ce
                lhs, rhs = num * bd, bn * den
                if lhs > rhs or (lhs == rhs and eps < be):
                    bn, bd, be, best_l = num, den, eps, l
            if best_l is None:
                der = Derivation(rule)
            else:
                bound = ExponentBound(Fraction(bn, bd), be)
                der = Derivation(RECURSION, best_l, ((best_l, d), (k - best_l - 1, d - best_l - 1)))
            entries[(k, d)] = Cell(bound, der)
            raw[(k, d)] = (bound.q.numerator, bound.q.denominator, bound.eps_coeff)
    return table


@dataclass(frozen=True)
class SplitOption:
    rule: str
    split: int | None
    bound: ExponentBound


def best_split(k: int, d: int, table: BoundTable) -> list[SplitOption]:
    """Every base rule and every split for cell (k, d), best first."""
    if (k, d) not in table.entries:
        raise PreconditionError(f"cell ({k}, {d}) not in table")
    opts = [SplitOption(rule, None, b) for rule, b in base_candidates(k, d).items()]
    for l in range(k):
        opts.append(SplitOption(RECURSION, l, table.bound(l, d) + table.bound(k - l - 1, d - l - 1)))
    # stable sort: base rules before splits, small l before large l on ties
    return sorted(opts, key=lambda o: o.bound.sort_key(), reverse=True)


def log_bound_rhs(d: int) -> float:
    """ln d - 6 + 10 / sqrt(d), natural logarithm."""
    return math.log(d) - 6 + 10 / math.sqrt(d)


@dataclass(frozen=True)
class LogCheck:
    d: int
    q: Fraction
    rhs: float
    margin: float
    passed: bool


def check_log_bound(table: BoundTable, d_min: int = 3, d_max: int | None = None) -> list[LogCheck]:
    """Compare the diagonal against ln d - 6 + 10 d^{-1/2}; only d >= 3 is in range.

    ``eps_coeff`` is ignored: a fixed small enough eps keeps any positive
    margin positive.
    """
    d_max = table.D if d_max is None else d_max
    if d_max > table.D:
        raise PreconditionError(f"d_max = {d_max} exceeds table size {table.D}")
    out = []
    for d in range(max(d_min, 3), d_max + 1):
        q = table.bound(d, d).q
        rhs = log_bound_rhs(d)
        margin = float(q) - rhs
        out.append(LogCheck(d, q, rhs, margin, margin > LOG_MARGIN))
    return out


@dataclass(frozen=True)
class InductionCheck:
    d: int
    t: int
    log_margin: float
    inv_sqrt_margin: float
    remainder: float

    @property
    def holds(self) -> bool:
        return self.log_margin >= 0 and self.inv_sqrt_margin >= 0 and self.remainder >= 0


def induction_step_check(d: int, t: int) -> InductionCheck:
    """Check the three elementary inequalities of the d > 100 induction step at (d, t).

    Margins (left minus right side):
      ln(d-t) - (ln d - t/d - t^2/d^2)
      (d-t)^{-1/2} - (d^{-1/2} + t d^{-3/2} / 2)
      -1/d - t^2/d^2 + 5 t d^{-3/2}
    The first two are evaluated in factored form to avoid cancellation.
    """
    if d <= 100:
        raise PreconditionError("induction step needs d > 100")
    if not (t * t >= d and t * t <= 4 * d):
        raise PreconditionError(f"t = {t} outside [sqrt(d), 2 sqrt(d)]")
    if 2 * t > d:
        raise PreconditionError("t must be at most d/2")
    x = t / d
    log_margin = math.log1p(-x) + x + x * x
    inv_sqrt_margin = d ** -0.5 * ((1 - x) ** -0.5 - 1 - x / 2)
    remainder = -1 / d - x * x + 5 * t * d ** -1.5
    return InductionCheck(d, t, log_margin, inv_sqrt_margin, remainder)
