"""Size-alpha test functions and generalized p-values as exact linear forms.

Construction scans tie classes from most to least extreme and keeps the
last class whose strictly-more-extreme null mass does not exceed alpha;
the randomization fraction gamma then makes the null expectation exactly
alpha.  A test keeps its threshold/gamma pair (not just the collapsed
per-point value), so decisions distinguish "strictly below threshold"
from "at threshold with gamma = 0"; that is what makes the indicator
identity  I(P(x,u) <= alpha) == decide(x,u)  exact for every u in [0,1],
including u = 0 and boundary alphas.

A p-value is stored per point as the pair (a, b) with a the null mass
strictly more extreme and b the null tie mass, evaluated as P(x,u) =
a(x) + u*b(x):  u=1 gives the natural p-value, u=1/2 the mid-p-value,
and a uniform draw the randomized p-value.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .model import DiscreteModel, SupportPoint
from .ranking import Ranking, Statistic
from .rational import decimal_string, format_rational

T_BASED = "t-based"
MD = "md"


class TestingError(ValueError):
    """Invalid size, randomization input, or family construction."""

    __test__ = False  # keep pytest's collector away from the Test* name


def _as_unit(u: object, what: str = "u") -> Fraction:
    if isinstance(u, float):
        value = Fraction(u)
    else:
        try:
            value = Fraction(u)  # type: ignore[arg-type]
        except (TypeError, ValueError) as exc:
            raise TestingError(f"{what} must be a number in [0, 1], got {u!r}") from exc
    if not 0 <= value <= 1:
        raise TestingError(f"{what}={u} lies outside [0, 1]")
    return value


def _extremity_classes(
    model: DiscreteModel, source: Statistic | Ranking
) -> list[tuple[object, Fraction, list[SupportPoint]]]:
    """Tie classes as (key, null mass, members), most extreme first.

    For a statistic the key is the value (larger first); for a ranking the
    classes are the singleton ranks (smaller first).
    """
    null_row = model.probs(model.null)
    if isinstance(source, Ranking):
        return [
            (rank, null_row[index], [model.support[index]])
            for rank, index in enumerate(source.order(), start=1)
        ]
    classes: dict[Fraction, list[SupportPoint]] = {}
    for pt in model.support:
        classes.setdefault(source.value(pt), []).append(pt)
    out = []
    for value in sorted(classes, reverse=True):
        members = classes[value]
        out.append((value, sum((null_row[pt.index] for pt in members), Fraction(0)), members))
    return out


@dataclass(frozen=True)
class TestFunction:
    """Piecewise test at exact size alpha.

    ``threshold`` is the statistic value k(alpha) for a t-based test or
    the rank k*(alpha) for a minimally discrete one; ``gamma`` is the
    rejection probability on the threshold class.
    """

    __test__ = False  # keep pytest's collector away from the Test* name

    model: DiscreteModel
    kind: str
    alpha: Fraction
    threshold: Fraction | int
    gamma: Fraction
    statistic: Statistic | None = None
    ranking: Ranking | None = None

    def zone(self, point: SupportPoint) -> int:
        """+1 strictly more extreme than the threshold, 0 at it, -1 below."""
        if self.kind == T_BASED:
            value = self.statistic.value(point)
            return 1 if value > self.threshold else (0 if value == self.threshold else -1)
        rank = self.ranking.rank(point)
        return 1 if rank < self.threshold else (0 if rank == self.threshold else -1)

    def phi(self, point: SupportPoint) -> Fraction:
        """Rejection probability phi_alpha(x) in {0, gamma, 1}."""
        zone = self.zone(point)
        if zone > 0:
            return Fraction(1)
        return self.gamma if zone == 0 else Fraction(0)

    def decide(self, point: SupportPoint, u: object) -> bool:
        """Randomized decision: True means reject."""
        uu = _as_unit(u)
        zone = self.zone(point)
        return zone > 0 or (zone == 0 and uu <= self.gamma)


def size_alpha_test(
    model: DiscreteModel, source: Statistic | Ranking, alpha: object
) -> TestFunction:
    """Solve k(alpha) and gamma(alpha) by the cumulative extremity scan.

    gamma equals 0 or 1 exactly at boundary alphas; the exact size identity
    E_0[phi_alpha] = alpha holds by construction and is asserted.
    """
    alpha_f = _as_unit(alpha, "alpha")
    strict = Fraction(0)
    chosen: tuple[object, Fraction, Fraction] | None = None
    for key, mass, _members in _extremity_classes(model, source):
        if strict <= alpha_f:
            chosen = (key, mass, strict)
            strict += mass
        else:
            break
    assert chosen is not None
    key, mass, before = chosen
    gamma = (alpha_f - before) / mass
    assert before + gamma * mass == alpha_f, "size identity violated"
    kind = MD if isinstance(source, Ranking) else T_BASED
    return TestFunction(
        model=model,
        kind=kind,
        alpha=alpha_f,
        threshold=key,
        gamma=gamma,
        statistic=None if kind == MD else source,
        ranking=source if kind == MD else None,
    )


def power(test: TestFunction, theta: str) -> Fraction:
    """Exact E_theta[phi_alpha(X)] by direct enumeration."""
    row = test.model.probs(theta)
    return sum((row[pt.index] * test.phi(pt) for pt in test.model.support), Fraction(0))


def decision(test: TestFunction, point: SupportPoint, u: object) -> str:
    """Non/randomized decision for a realized (x, u): "reject" or "retain"."""
    return "reject" if test.decide(point, u) else "retain"


@dataclass(frozen=True)
class PValueFamily:
    """Per-point linear forms P(x,u) = a(x) + u*b(x) for one construction."""

    kind: str
    source_name: str
    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]

    @property
    def size(self) -> int:
        return len(self.a)

    def _index(self, point: SupportPoint | int) -> int:
        return point if isinstance(point, int) else point.index

    def evaluate(self, point: SupportPoint | int, u: object) -> Fraction:
        i = self._index(point)
        return self.a[i] + _as_unit(u) * self.b[i]

    def natural(self, point: SupportPoint | int) -> Fraction:
        i = self._index(point)
        return self.a[i] + self.b[i]

    def mid(self, point: SupportPoint | int) -> Fraction:
        i = self._index(point)
        return self.a[i] + Fraction(1, 2) * self.b[i]


def pvalue_family(model: DiscreteModel, source: Statistic | Ranking) -> PValueFamily:
    """Exact (a, b) pairs: a = Pr_0{strictly more extreme}, b = Pr_0{tied}."""
    a = [Fraction(0)] * model.size
    b = [Fraction(0)] * model.size
    strict = Fraction(0)
    for _key, mass, members in _extremity_classes(model, source):
        for pt in members:
            a[pt.index] = strict
            b[pt.index] = mass
        strict += mass
    assert strict == 1
    kind = MD if isinstance(source, Ranking) else T_BASED
    name = source.agrees_with if isinstance(source, Ranking) else source.name
    family = PValueFamily(kind, name, tuple(a), tuple(b))
    null_row = model.probs(model.null)
    for i in range(model.size):
        assert family.b[i] > 0 and family.a[i] + family.b[i] <= 1
        if kind == MD:
            assert family.b[i] == null_row[i], "MD tie mass must equal the null pmf"
    return family


def draw_randomized_pvalue(
    family: PValueFamily, point: SupportPoint | int, rng: random.Random
) -> tuple[float, float]:
    """Draw u ~ Uniform(0,1) from the caller's stream; return (p-value, u)."""
    u = rng.random()
    i = family._index(point)
    return float(family.a[i]) + u * float(family.b[i]), u


def alpha_breakpoints(*families: PValueFamily, midpoints: bool = True) -> tuple[Fraction, ...]:
    """Canonical alpha grid: attained null tails of every family plus 0 and 1.

    Every asserted quantity is piecewise linear in alpha with kinks at these
    values, so checking the grid (optionally with the midpoints between
    consecutive entries) discharges a "for all alpha" claim exactly.
    """
    points = {Fraction(0), Fraction(1)}
    for family in families:
        points.update(family.a)
        points.update(av + bv for av, bv in zip(family.a, family.b))
    grid = sorted(points)
    if midpoints:
        mids = [(x + y) / 2 for x, y in zip(grid, grid[1:])]
        grid = sorted(set(grid) | set(mids))
    return tuple(grid)


_DEFAULT_US = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))


def decision_coherence_witness(
    model: DiscreteModel,
    source: Statistic | Ranking,
    us: Sequence[object] = _DEFAULT_US,
    alphas: Sequence[Fraction] | None = None,
) -> tuple[str, Fraction, Fraction] | None:
    """First (label, alpha, u) where I(P(x,u) <= alpha) != decide(x,u), else None."""
    family = pvalue_family(model, source)
    grid = alphas if alphas is not None else alpha_breakpoints(family)
    u_values = [_as_unit(u) for u in us]
    for alpha in grid:
        test = size_alpha_test(model, source, alpha)
        for pt in model.support:
            for u in u_values:
                if (family.evaluate(pt, u) <= alpha) != test.decide(pt, u):
                    return pt.label, alpha, u
    return None


def audit_unbiasedness(
    model: DiscreteModel,
    source: Statistic | Ranking,
    thetas: Sequence[str],
    alphas: Sequence[Fraction] | None = None,
) -> list[tuple[str, Fraction, Fraction]]:
    """Report (theta, alpha, E_theta[phi_alpha]) wherever the power dips below alpha.

    Unbiasedness is an assumption of the ordering theory, not a construction
    guarantee; arbitrary user models may violate it.
    """
    grid = alphas if alphas is not None else alpha_breakpoints(pvalue_family(model, source))
    violations = []
    for alpha in grid:
        test = size_alpha_test(model, source, alpha)
        for theta in thetas:
            value = power(test, theta)
            if value < alpha:
                violations.append((theta, alpha, value))
    return violations


def write_pvalue_table(
    path: str | Path,
    model: DiscreteModel,
    statistic: Statistic,
    ranking: Ranking,
    kind: str = MD,
) -> None:
    """CSV p-value table: label, rank, statistic, a, b, natural, mid.

    Rationals are "num/den"; the trailing columns repeat natural/mid as
    6-place decimals for plotting.
    """
    if kind not in (T_BASED, MD):
        raise TestingError(f"unknown family kind {kind!r}")
    family = pvalue_family(model, ranking if kind == MD else statistic)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "rank", "statistic", "a", "b", "natural", "mid", "natural_dec", "mid_dec"])
        for pt in sorted(model.support, key=ranking.rank):
            writer.writerow(
                [
                    pt.label,
                    ranking.rank(pt),
                    format_rational(statistic.value(pt)),
                    format_rational(family.a[pt.index]),
                    format_rational(family.b[pt.index]),
                    format_rational(family.natural(pt)),
                    format_rational(family.mid(pt)),
                    decimal_string(family.natural(pt)),
                    decimal_string(family.mid(pt)),
                ]
            )
