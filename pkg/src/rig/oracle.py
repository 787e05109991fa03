"""Brute-force ground truth for small instances.

Everything here enumerates: subsets for set-function properties and
worst-case removals, joint control assignments for the max-min optimum.
Nothing is sampled, and guards fail loudly instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import BudgetError, NotInClassError, UndefinedCurvatureError
from .objectives import PlanSet, SetFunctionView, evaluator_for, restrict
from .planning import _sequences
from .scenario import Scenario

MAX_GROUND = 16
MAX_MAXMIN_ROBOTS = 3
MAX_MAXMIN_HORIZON = 2
MAX_MAXMIN_CONTROLS = 3
#: Absolute slack for class membership checks (monotone / submodular).
CLASS_TOL = 1e-10
#: Marginals at or below this magnitude count as exactly zero in curvature ratios.
ZERO_TOL = 1e-12
LEMMA_TOL = 1e-9


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True, eq=False)
class EnumeratedSetFunction:
    """A set function on ``n`` elements stored as a table over bitmasks."""

    n: int
    values: np.ndarray
    labels: tuple = ()

    def __post_init__(self) -> None:
        if not 0 <= self.n <= MAX_GROUND:
            raise BudgetError(f"ground set of size {self.n} exceeds {MAX_GROUND}")
        values = np.asarray(self.values, dtype=float)
        if values.shape != (1 << self.n,):
            raise ValueError("table must have 2**n entries")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite set-function value")
        if values[0] != 0.0:
            raise ValueError("f(empty set) must be 0")
        object.__setattr__(self, "values", values)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(self.n)))

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[frozenset[int]], float]) -> "EnumeratedSetFunction":
        vals = [fn(frozenset(k for k in range(n) if m >> k & 1)) for m in range(1 << n)]
        return cls(n, np.array(vals))

    @classmethod
    def from_view(cls, view: SetFunctionView) -> "EnumeratedSetFunction":
        if view.n > MAX_GROUND:
            raise BudgetError(f"{view.n} robots exceed the enumeration guard")
        vals = np.array([view.value_mask(m) for m in range(1 << view.n)])
        return cls(view.n, vals, view.ground)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def __call__(self, mask: int) -> float:
        return float(self.values[mask])

    def singleton(self, k: int) -> float:
        return float(self.values[1 << k])

    def marginal(self, k: int, mask: int) -> float:
        return float(self.values[mask | 1 << k] - self.values[mask])

    def restricted(self, keep: Sequence[int]) -> "EnumeratedSetFunction":
        """The function on the elements ``keep`` only."""
        keep = list(keep)
        vals = []
        for m in range(1 << len(keep)):
            vals.append(self.values[sum(1 << keep[j] for j in range(len(keep)) if m >> j & 1)])
        return EnumeratedSetFunction(len(keep), np.array(vals), tuple(self.labels[k] for k in keep))


class Violation(NamedTuple):
    kind: str
    detail: dict


def _scale(f: EnumeratedSetFunction) -> float:
    return max(1.0, float(np.max(np.abs(f.values))))


def monotonicity_violation(f: EnumeratedSetFunction, tol: float = CLASS_TOL) -> Violation | None:
    """First (set, element) whose marginal is negative beyond ``tol``, if any."""
    tol *= _scale(f)
    for mask in range(1 << f.n):
        for k in range(f.n):
            if not mask >> k & 1 and f.marginal(k, mask) < -tol:
                return Violation("monotone", {"set": mask, "element": k, "marginal": f.marginal(k, mask)})
    return None


def submodularity_violation(f: EnumeratedSetFunction, tol: float = CLASS_TOL) -> Violation | None:
    """First (A subset of B, v) with increasing returns beyond ``tol``, if any."""
    tol *= _scale(f)
    for k in range(f.n):
        bit = 1 << k
        others = f.full & ~bit
        sub = others
        # all B not containing k, then all A subset of B
        while True:
            b = sub
            mb = f.marginal(k, b)
            a = b
            while True:
                if f.marginal(k, a) < mb - tol:
                    return Violation(
                        "submodular", {"A": a, "B": b, "element": k, "gap": mb - f.marginal(k, a)}
                    )
                if a == 0:
                    break
                a = (a - 1) & b
            if sub == 0:
                break
            sub = (sub - 1) & others
    return None


def is_monotone(f: EnumeratedSetFunction, tol: float = CLASS_TOL) -> bool:
    return monotonicity_violation(f, tol) is None


def is_submodular(f: EnumeratedSetFunction, tol: float = CLASS_TOL) -> bool:
    return submodularity_violation(f, tol) is None


def _clean(x: float, scale: float) -> float:
    return 0.0 if abs(x) <= ZERO_TOL * scale else x


def curvature(f: EnumeratedSetFunction) -> float:
    """Curvature ``1 - min_v f(v | V - v) / f(v)`` of a monotone submodular function."""
    if f.n == 0:
        raise NotInClassError("empty ground set")
    if not is_monotone(f):
        raise NotInClassError("function is not non-decreasing")
    if not is_submodular(f):
        raise NotInClassError("function is not submodular")
    scale = _scale(f)
    ratios = []
    for k in range(f.n):
        single = _clean(f.singleton(k), scale)
        if single == 0.0:
            raise NotInClassError(f"f({{{f.labels[k]}}}) = 0")
        last = max(_clean(f.marginal(k, f.full & ~(1 << k)), scale), 0.0)
        ratios.append(last / single)
    return min(max(1.0 - min(ratios), 0.0), 1.0)


def total_curvature(f: EnumeratedSetFunction) -> float:
    """Total curvature ``1 - min_v min_{A,B} f(v|A) / f(v|B)`` of a monotone function.

    Pairs with a zero denominator impose no constraint and are skipped.  If
    no pair anywhere has a positive denominator the ratio is undefined.
    """
    if f.n == 0:
        raise NotInClassError("empty ground set")
    if not is_monotone(f):
        raise NotInClassError("function is not non-decreasing")
    scale = _scale(f)
    best = math.inf
    for k in range(f.n):
        others = f.full & ~(1 << k)
        margins = []
        sub = others
        while True:
            margins.append(max(_clean(f.marginal(k, sub), scale), 0.0))
            if sub == 0:
                break
            sub = (sub - 1) & others
        top = max(margins)
        if top == 0.0:
            continue
        best = min(best, min(margins) / top)
    if best is math.inf:
        raise UndefinedCurvatureError("every marginal is zero")
    return min(max(1.0 - best, 0.0), 1.0)


def null_elements(f: EnumeratedSetFunction) -> list[int]:
    """Elements whose singleton value is (numerically) zero."""
    scale = _scale(f)
    return [k for k in range(f.n) if _clean(f.singleton(k), scale) == 0.0]


# --------------------------------------------------------------------------
# worst-case removal and the max-min optimum


@dataclass(frozen=True)
class AttackReport:
    A_star: frozenset[int]
    value: float
    ratio: float | None = None


def _attack_candidates(n: int, alpha: int) -> list[int]:
    # larger removals first, then ascending bitmask
    masks = [m for m in range(1 << n) if popcount(m) <= alpha]
    return sorted(masks, key=lambda m: (-popcount(m), m))


def worst_case_attack(
    view: SetFunctionView | EnumeratedSetFunction,
    alpha: int,
    j_star: float | None = None,
) -> AttackReport:
    """Exact minimizer of ``f(V - A)`` over removals with ``|A| <= alpha``.

    Among equal values the largest removal wins, then the smallest bitmask,
    so a monotone function always reports exactly ``min(alpha, |V|)`` robots.
    """
    n = view.n
    if n > MAX_GROUND:
        raise BudgetError(f"{n} robots exceed the enumeration guard")
    alpha = min(max(alpha, 0), n)
    full = (1 << n) - 1
    value_of = view.value_mask if isinstance(view, SetFunctionView) else view
    best_mask, best_val = None, math.inf
    for mask in _attack_candidates(n, alpha):
        val = value_of(full & ~mask)
        if val < best_val:
            best_mask, best_val = mask, val
    if isinstance(view, SetFunctionView):
        removed = view.robots_of(best_mask)
    else:
        removed = frozenset(view.labels[k] for k in range(n) if best_mask >> k & 1)
    ratio = None
    if j_star is not None and j_star > 0:
        ratio = best_val / j_star
    return AttackReport(removed, best_val, ratio)


def _check_maxmin_guard(scenario: Scenario) -> None:
    n, T, U = scenario.n_robots, scenario.horizon, len(scenario.controls)
    if n > MAX_MAXMIN_ROBOTS or T > MAX_MAXMIN_HORIZON or U > MAX_MAXMIN_CONTROLS:
        raise BudgetError(
            f"max-min enumeration limited to |V|<={MAX_MAXMIN_ROBOTS}, T<={MAX_MAXMIN_HORIZON}, "
            f"|U|<={MAX_MAXMIN_CONTROLS}; got {n}, {T}, {U}"
        )


def exhaustive_maxmin(
    scenario: Scenario, alpha: int | None = None, *, reverse: bool = False
) -> tuple[float, PlanSet]:
    """Exact value of the resilient max-min problem and one maximizing plan set.

    ``reverse=True`` walks the joint assignments in the opposite order; the
    optimum value must not depend on it.
    """
    alpha = scenario.alpha if alpha is None else alpha
    _check_maxmin_guard(scenario)
    ev = evaluator_for(scenario)
    robots = scenario.robot_ids
    n = len(robots)
    seqs = list(_sequences(scenario))
    combos: Iterable = itertools.product(seqs, repeat=n)
    if reverse:
        combos = reversed(list(combos))
    removals = _attack_candidates(n, min(alpha, n))
    full = (1 << n) - 1
    best_val, best_plans = -math.inf, None
    for combo in combos:
        plans = dict(zip(robots, combo))
        worst = math.inf
        for mask in removals:
            keep = [robots[k] for k in range(n) if (full & ~mask) >> k & 1]
            worst = min(worst, ev.value(restrict(plans, keep)))
            if worst <= best_val:
                break
        if worst > best_val:
            best_val, best_plans = worst, plans
    return best_val, best_plans


# --------------------------------------------------------------------------
# appendix lemma checks


@dataclass
class LemmaResult:
    name: str
    status: str  # "pass", "fail", "not_applicable"
    checked: int = 0
    counterexample: dict | None = None


@dataclass
class LemmaReport:
    monotone: bool
    submodular: bool
    normalized: bool
    results: dict[str, LemmaResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.results.values())

    @property
    def rejected(self) -> bool:
        return all(r.status == "not_applicable" for r in self.results.values())


def _subsets(mask: int) -> Iterable[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _elements(mask: int) -> list[int]:
    return [k for k in range(mask.bit_length()) if mask >> k & 1]


def check_lemmas(
    f: EnumeratedSetFunction, *, tol: float = LEMMA_TOL, scale_guarantee: float = 1.0
) -> LemmaReport:
    """Verify the curvature inequalities on every quantified subset pair.

    ``scale_guarantee`` multiplies each right-hand side; values above 1 are a
    self-test hook that must produce failures.
    """
    monotone = is_monotone(f)
    submodular = monotone and is_submodular(f)
    normalized = bool(f.values[0] == 0.0 and np.all(f.values >= -CLASS_TOL * _scale(f)))
    report = LemmaReport(monotone, submodular, normalized)
    names = ["lemma1", "lemma2", "lemma3", "lemma4", "corollary1"]
    if not (monotone and normalized):
        for name in names:
            report.results[name] = LemmaResult(name, "not_applicable")
        return report

    n, full = f.n, f.full
    single = [f.singleton(k) for k in range(n)]
    sum_single = [sum(single[k] for k in _elements(m)) for m in range(1 << n)]
    s = scale_guarantee

    def run(name: str, cases: Iterable[tuple[dict, float, float]]) -> LemmaResult:
        res = LemmaResult(name, "pass")
        for ctx, lhs, rhs in cases:
            res.checked += 1
            if lhs < s * rhs - tol:
                res.status = "fail"
                res.counterexample = {**ctx, "lhs": lhs, "rhs": s * rhs}
                break
        return res

    try:
        c = total_curvature(f)
    except UndefinedCurvatureError:
        c = 0.0  # f is identically zero; every inequality is 0 >= 0

    if submodular and not null_elements(f):
        kappa = curvature(f)
        report.results["lemma1"] = run(
            "lemma1",
            (({"A": a}, f(a), (1 - kappa) * sum_single[a]) for a in range(1 << n)),
        )
    else:
        report.results["lemma1"] = LemmaResult("lemma1", "not_applicable")

    if submodular:
        def lemma2():
            for y in range(1, 1 << n):
                ymin = min(single[k] for k in _elements(y))
                for p in range(1, 1 << n):
                    if max(single[k] for k in _elements(p)) > ymin:
                        continue
                    # f(P | Y) <= |P| f(Y), written as |P| f(Y) >= f(P | Y)
                    yield {"P": p, "Y": y}, popcount(p) * f(y), f(p | y) - f(y)
        report.results["lemma2"] = run("lemma2", lemma2())
    else:
        report.results["lemma2"] = LemmaResult("lemma2", "not_applicable")

    def disjoint_pairs():
        for a in range(1 << n):
            for b in _subsets(full & ~a):
                yield a, b

    report.results["lemma3"] = run(
        "lemma3",
        (({"A": a, "B": b}, f(a | b), (1 - c) * (f(a) + sum_single[b])) for a, b in disjoint_pairs()),
    )
    report.results["lemma4"] = run(
        "lemma4",
        (
            ({"A": a, "B": b}, f(a) + (1 - c) * f(b), (1 - c) * f(a | b) + f(a & b))
            for a in range(1 << n)
            for b in range(1 << n)
            if a & ~b
        ),
    )
    report.results["corollary1"] = run(
        "corollary1",
        (({"A": a, "B": b}, f(a) + sum_single[b], (1 - c) * f(a | b)) for a, b in disjoint_pairs()),
    )
    return report


# --------------------------------------------------------------------------
# random set-function generators


def random_coverage_function(n: int, rng: np.random.Generator, universe: int = 8) -> EnumeratedSetFunction:
    """Weighted coverage: monotone submodular by construction, every singleton positive."""
    weights = rng.uniform(0.1, 1.0, size=universe)
    covers = rng.random((n, universe)) < 0.4
    for k in range(n):
        if not covers[k].any():
            covers[k, rng.integers(universe)] = True

    def fn(s: frozenset[int]) -> float:
        if not s:
            return 0.0
        union = np.any(covers[sorted(s)], axis=0)
        return float(weights[union].sum())

    return EnumeratedSetFunction.from_callable(n, fn)


def random_monotone_function(n: int, rng: np.random.Generator) -> EnumeratedSetFunction:
    """Monotone, normalized, typically not submodular: a convex power of a modular sum."""
    w = rng.uniform(0.2, 1.0, size=n)
    p = rng.uniform(1.2, 2.5)
    return EnumeratedSetFunction.from_callable(n, lambda s: float(sum(w[k] for k in s)) ** p)


def modular_function(weights: Sequence[float]) -> EnumeratedSetFunction:
    w = list(weights)
    return EnumeratedSetFunction.from_callable(len(w), lambda s: float(sum(w[k] for k in s)))
