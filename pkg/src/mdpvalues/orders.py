"""Exact verification of the ordering claims C1-C9.

Universally quantified claims ("for all alpha", "for all t") are discharged
on finite grids: every asserted quantity is piecewise linear in the grid
variable, with kinks only at attained null tail probabilities (or CDF jump
points), so checking kinks plus midpoints is equivalent to checking
everywhere.  All comparisons are exact rational identities or inequalities;
each claim returns an OrderReport carrying the grid, a signed worst margin
(pass iff >= 0) and a witness on failure.

Claim summary, for a statistic T and an agreeing one-to-one ranking R:
  C1  natural MD decisions dominate in power at every theta and alpha
  C2  level sandwich under the null: E0[dT] <= E0[dMD] <= alpha
  C3  usual stochastic order of natural p-values at every theta
  C4  null sandwich of natural p-value CDFs: F_T <= F_MD <= t
  C5  randomized p-values are exactly uniform under the null
  C6  equal power functions when T is sufficient
  C7  tie mass (hence auxiliary-u variance) is minimal pointwise for MD
  C8  martingale projection of the MD test onto the T test, per alpha
  C9  convex-order chain of mid-p-values via integrated CDFs
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import DiscreteModel, SupportPoint
from .ranking import Ranking, Statistic, verify_agreement
from .rational import decimal_string, format_rational
from .testing import (
    MD,
    T_BASED,
    PValueFamily,
    TestFunction,
    _as_unit,
    alpha_breakpoints,
    pvalue_family,
    size_alpha_test,
)

CLAIM_IDS = tuple(f"C{i}" for i in range(1, 10))


class OrdersError(ValueError):
    """Precondition failure in an ordering check."""


@dataclass(frozen=True)
class StepCDF:
    """Right-continuous step CDF with exact rational jumps in [0, 1]."""

    jumps: tuple[Fraction, ...]
    cum: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.jumps) != len(self.cum) or not self.jumps:
            raise OrdersError("step CDF needs aligned, non-empty jump/mass arrays")
        if list(self.jumps) != sorted(set(self.jumps)):
            raise OrdersError("jump locations must be strictly increasing")
        if any(not 0 <= t <= 1 for t in self.jumps):
            raise OrdersError("jump locations must lie in [0, 1]")
        if any(x > y for x, y in zip(self.cum, self.cum[1:])):
            raise OrdersError("cumulative masses must be nondecreasing")
        if self.cum[-1] != 1:
            raise OrdersError(f"final mass is {self.cum[-1]}, not 1")

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[Fraction, Fraction]]) -> "StepCDF":
        masses: dict[Fraction, Fraction] = {}
        for location, mass in atoms:
            masses[location] = masses.get(location, Fraction(0)) + mass
        jumps = sorted(masses)
        cum = []
        total = Fraction(0)
        for loc in jumps:
            total += masses[loc]
            cum.append(total)
        return cls(tuple(jumps), tuple(cum))

    def evaluate(self, t: object) -> Fraction:
        tt = Fraction(t)  # type: ignore[arg-type]
        i = bisect_right(self.jumps, tt)
        return Fraction(0) if i == 0 else self.cum[i - 1]

    def plateau_heights_inside(self) -> list[Fraction]:
        """Plateau heights c with jump_i < c < jump_{i+1} (or < 1 after the last).

        These are the interior critical points of s -> s^2/2 - integral(F),
        needed when comparing a step CDF against the uniform in convex order.
        """
        out = []
        for i, c in enumerate(self.cum):
            left = self.jumps[i]
            right = self.jumps[i + 1] if i + 1 < len(self.jumps) else Fraction(1)
            if left < c < right:
                out.append(c)
        return out


def pvalue_cdf(model: DiscreteModel, theta: str, family: PValueFamily, u: object) -> StepCDF:
    """Exact distribution of P(X, u) under theta for a fixed u."""
    uu = _as_unit(u)
    row = model.probs(theta)
    return StepCDF.from_atoms(
        (family.a[i] + uu * family.b[i], row[i]) for i in range(model.size)
    )


def randomized_pvalue_cdf_at(
    model: DiscreteModel, theta: str, family: PValueFamily, t: object
) -> Fraction:
    """Pr_theta{P(X, U) <= t} with U uniform: sum of clamped linear pieces."""
    tt = _as_unit(t, "t")
    row = model.probs(theta)
    total = Fraction(0)
    for i in range(model.size):
        a, b = family.a[i], family.b[i]
        if tt >= a + b:
            total += row[i]
        elif tt > a:
            total += row[i] * (tt - a) / b
    return total


def integrated_cdf(cdf: StepCDF, s: object) -> Fraction:
    """Exact integral of F over [0, s]: a sum of rectangles between jumps."""
    ss = _as_unit(s, "s")
    total = Fraction(0)
    for i, location in enumerate(cdf.jumps):
        if location >= ss:
            break
        right = cdf.jumps[i + 1] if i + 1 < len(cdf.jumps) else Fraction(1)
        total += cdf.cum[i] * (min(right, ss) - location)
    return total


def uniform_integrated(s: object) -> Fraction:
    """Integral of the uniform CDF over [0, s], exactly s^2/2."""
    ss = _as_unit(s, "s")
    return ss * ss / 2


@dataclass(frozen=True)
class OrderReport:
    """Outcome of one exact ordering verification."""

    claim: str
    verdict: str  # "pass" | "fail" | "skipped"
    grid: tuple[Fraction, ...]
    worst_margin: Fraction | None
    witness: str | None = None
    note: str | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "verdict": self.verdict,
            "grid": [format_rational(g) for g in self.grid],
            "worst_margin": None if self.worst_margin is None else format_rational(self.worst_margin),
            "worst_margin_dec": None if self.worst_margin is None else decimal_string(self.worst_margin, 9),
            "witness": self.witness,
            "note": self.note,
        }


def _verdict(margin: Fraction, witness: str | None) -> tuple[str, str | None]:
    if margin >= 0:
        return "pass", None
    return "fail", witness


def check_usual_order(
    cdf_a: StepCDF,
    cdf_b: StepCDF | None = None,
    relation: str = "le",
    *,
    claim: str = "usual-order",
    labels: tuple[str, str] = ("A", "B"),
) -> OrderReport:
    """Verify F_A(t) <= F_B(t) at every jump of either CDF (plus t = 1).

    With ``cdf_b=None`` the comparison is against the diagonal, F_A(t) <= t;
    ``relation="ge"`` flips the inequality.  Both sides are constant (resp.
    increasing) between grid points, so the grid check is exact for all t.
    """
    if relation not in ("le", "ge"):
        raise OrdersError(f"unknown relation {relation!r}: use 'le' or 'ge'")
    grid_set = set(cdf_a.jumps) | {Fraction(1)}
    if cdf_b is not None:
        grid_set |= set(cdf_b.jumps)
    grid = tuple(sorted(grid_set))
    sign = 1 if relation == "le" else -1
    worst = None
    witness = None
    for t in grid:
        bound = cdf_b.evaluate(t) if cdf_b is not None else t
        margin = sign * (bound - cdf_a.evaluate(t))
        if worst is None or margin < worst:
            worst = margin
            witness = f"F_{labels[0]}({t}) = {cdf_a.evaluate(t)} vs {labels[1]} bound {bound}"
    verdict, wit = _verdict(worst, witness)
    return OrderReport(claim, verdict, grid, worst, wit)


def conditional_variance(family: PValueFamily, point: SupportPoint | int) -> Fraction:
    """Var(P(x, U) | X = x) = b(x)^2 / 12 exactly (Var of U times tie mass squared)."""
    i = family._index(point)
    return family.b[i] ** 2 / 12


def _mid_mean(model: DiscreteModel, family: PValueFamily) -> Fraction:
    row = model.probs(model.null)
    return sum((row[i] * family.mid(i) for i in range(model.size)), Fraction(0))


def _hinge_expectation(model: DiscreteModel, family: PValueFamily, c: Fraction) -> Fraction:
    row = model.probs(model.null)
    return sum(
        (row[i] * max(family.mid(i) - c, Fraction(0)) for i in range(model.size)), Fraction(0)
    )


def _square_expectation(model: DiscreteModel, family: PValueFamily) -> Fraction:
    row = model.probs(model.null)
    return sum((row[i] * family.mid(i) ** 2 for i in range(model.size)), Fraction(0))


def _log_probe(model: DiscreteModel, family: PValueFamily, eps: float = 1e-12) -> float:
    row = model.probs(model.null)
    return sum(
        float(row[i]) * (-2.0 * math.log(max(float(family.mid(i)), eps)))
        for i in range(model.size)
    )


def check_convex_order_chain(
    model: DiscreteModel, statistic: Statistic, ranking: Ranking, *, claim: str = "C9"
) -> OrderReport:
    """Convex-order chain of mid-p-values under the null.

    Authoritative test: both mid-p means equal 1/2 exactly, and at every
    jump of either mid-p CDF (plus interior plateau critical points and
    s = 1) the integrated CDFs satisfy

        int_0^s F_T-mid  <=  int_0^s F_MD-mid  <=  s^2 / 2.

    Probe convex functions (hinges over a c-grid, square, clipped -2*log)
    are advisory diagnostics recorded in the note.
    """
    ok, witness = verify_agreement(model, statistic, ranking)
    if not ok:
        raise OrdersError(f"ranking does not agree with statistic: witness {witness}")
    t_family = pvalue_family(model, statistic)
    md_family = pvalue_family(model, ranking)
    null = model.null
    cdf_t = pvalue_cdf(model, null, t_family, Fraction(1, 2))
    cdf_md = pvalue_cdf(model, null, md_family, Fraction(1, 2))

    margins: list[tuple[Fraction, str]] = []
    mean_t = _mid_mean(model, t_family)
    mean_md = _mid_mean(model, md_family)
    margins.append((-abs(mean_t - Fraction(1, 2)), f"mean of T mid-p is {mean_t}"))
    margins.append((-abs(mean_md - Fraction(1, 2)), f"mean of MD mid-p is {mean_md}"))

    grid_set = set(cdf_t.jumps) | set(cdf_md.jumps) | {Fraction(1)}
    grid_set.update(cdf_t.plateau_heights_inside())
    grid_set.update(cdf_md.plateau_heights_inside())
    grid = tuple(sorted(grid_set))
    for s in grid:
        lower = integrated_cdf(cdf_t, s)
        middle = integrated_cdf(cdf_md, s)
        upper = uniform_integrated(s)
        margins.append((middle - lower, f"integrated CDFs at s={s}: T {lower} vs MD {middle}"))
        margins.append((upper - middle, f"integrated CDFs at s={s}: MD {middle} vs uniform {upper}"))

    for c in [Fraction(k, 8) for k in range(8)]:
        e_t = _hinge_expectation(model, t_family, c)
        e_md = _hinge_expectation(model, md_family, c)
        e_u = (1 - c) ** 2 / 2
        margins.append((e_md - e_t, f"hinge probe c={c}: T {e_t} vs MD {e_md}"))
        margins.append((e_u - e_md, f"hinge probe c={c}: MD {e_md} vs uniform {e_u}"))
    sq_t, sq_md = _square_expectation(model, t_family), _square_expectation(model, md_family)
    margins.append((sq_md - sq_t, f"square probe: T {sq_t} vs MD {sq_md}"))
    margins.append((Fraction(1, 3) - sq_md, f"square probe: MD {sq_md} vs uniform 1/3"))

    log_t, log_md = _log_probe(model, t_family), _log_probe(model, md_family)
    log_ordered = log_t <= log_md + 1e-9 and log_md <= 2.0 + 1e-9
    note = (
        f"means ({mean_t}, {mean_md}); "
        f"log probe E0[-2 log P]: T {log_t:.9f}, MD {log_md:.9f}, uniform 2.0 "
        f"({'ordered' if log_ordered else 'NOT ordered (advisory only)'})"
    )

    worst, witness_text = min(margins, key=lambda mw: mw[0])
    verdict, wit = _verdict(worst, witness_text)
    return OrderReport(claim, verdict, grid, worst, wit, note)


def check_martingale_projection(
    model: DiscreteModel,
    t_test: TestFunction,
    md_test: TestFunction,
    alpha: object | None = None,
    *,
    claim: str = "C8",
) -> OrderReport:
    """Exact conditional-expectation identity E0[phi_MD | phi_T] = phi_T.

    Grouped by the T test's threshold zones: the sure-rejection class must
    have phi_MD = 1 pointwise, the sure-retention class phi_MD = 0, and on
    the threshold class the null-conditional average of phi_MD must equal
    gamma(alpha).
    """
    if t_test.kind != T_BASED or md_test.kind != MD:
        raise OrdersError("martingale projection needs a t-based test and an MD test")
    if t_test.alpha != md_test.alpha:
        raise OrdersError("tests must be built at the same alpha")
    if alpha is not None and _as_unit(alpha, "alpha") != t_test.alpha:
        raise OrdersError("alpha argument disagrees with the tests")
    alpha_f = t_test.alpha
    row = model.probs(model.null)
    margins: list[tuple[Fraction, str]] = []
    notes = []
    tie_mass = Fraction(0)
    tie_value = Fraction(0)
    tie_seen = False
    for pt in model.support:
        zone = t_test.zone(pt)
        phi_md = md_test.phi(pt)
        if zone > 0:
            margins.append((-abs(phi_md - 1), f"phi_MD({pt.label}) = {phi_md} on the sure-rejection class"))
        elif zone < 0:
            margins.append((-abs(phi_md), f"phi_MD({pt.label}) = {phi_md} on the sure-retention class"))
        else:
            tie_seen = True
            tie_mass += row[pt.index]
            tie_value += row[pt.index] * phi_md
    if tie_seen and tie_mass > 0:
        average = tie_value / tie_mass
        margins.append(
            (-abs(average - t_test.gamma), f"threshold class average {average} vs gamma {t_test.gamma}")
        )
    else:
        notes.append("threshold class carries no null mass; projection on it skipped")
    if not margins:
        return OrderReport(claim, "pass", (alpha_f,), Fraction(0), None, "; ".join(notes) or None)
    worst, witness_text = min(margins, key=lambda mw: mw[0])
    verdict, wit = _verdict(worst, witness_text)
    return OrderReport(claim, verdict, (alpha_f,), worst, wit, "; ".join(notes) or None)


def check_sufficiency(
    model: DiscreteModel, statistic: Statistic, thetas: Sequence[str]
) -> tuple[bool, str | None]:
    """True iff conditional laws given each statistic value match across thetas.

    Division-free cross-ratio test within each tie class:
    p_theta(x) * m_base(class) == p_base(x) * m_theta(class), which also
    handles classes with zero mass under some theta (vacuously equal).
    """
    if len(thetas) < 2:
        raise OrdersError("sufficiency check needs a grid of at least two parameters")
    classes: dict[Fraction, list[SupportPoint]] = {}
    for pt in model.support:
        classes.setdefault(statistic.value(pt), []).append(pt)
    base = thetas[0]
    base_row = model.probs(base)
    for theta in thetas[1:]:
        row = model.probs(theta)
        for value, members in classes.items():
            mass_base = sum((base_row[pt.index] for pt in members), Fraction(0))
            mass_theta = sum((row[pt.index] for pt in members), Fraction(0))
            for pt in members:
                if row[pt.index] * mass_base != base_row[pt.index] * mass_theta:
                    return False, (
                        f"conditional law given [{statistic.name}={value}] differs: "
                        f"point {pt.label!r} under {theta} vs {base}"
                    )
    return True, None


def _phi_expectation_by_tails(model: DiscreteModel, test: TestFunction, theta: str) -> Fraction:
    """E_theta[phi] via tail events (independent of the pointwise sum in power())."""
    more = model.event_prob(theta, lambda pt: test.zone(pt) > 0)
    tied = model.event_prob(theta, lambda pt: test.zone(pt) == 0)
    return more + test.gamma * tied


def verify_all_claims(
    model: DiscreteModel,
    statistic: Statistic,
    ranking: Ranking,
    thetas: Sequence[str],
    *,
    t_grid_size: int = 200,
    extra_alphas: Sequence[object] = (),
) -> list[OrderReport]:
    """Run the full C1-C9 suite; one report per claim.

    ``thetas`` is the parameter grid for the claims quantified over theta
    (C1, C3, C6); null-only claims always run against the model's null.
    C6 and C8 are gated on sufficiency of the statistic and report
    "skipped" with a note when the hypothesis is unmet.
    """
    ok, witness = verify_agreement(model, statistic, ranking)
    if not ok:
        raise OrdersError(f"ranking does not agree with statistic: witness {witness}")
    thetas = list(thetas)
    for theta in thetas:
        model.probs(theta)
    null = model.null
    t_family = pvalue_family(model, statistic)
    md_family = pvalue_family(model, ranking)
    alphas = tuple(sorted(set(alpha_breakpoints(t_family, md_family)) | {_as_unit(a, "alpha") for a in extra_alphas}))
    nat_t = {theta: pvalue_cdf(model, theta, t_family, 1) for theta in set(thetas) | {null}}
    nat_md = {theta: pvalue_cdf(model, theta, md_family, 1) for theta in set(thetas) | {null}}

    sufficiency_grid = list(dict.fromkeys([null, *thetas]))
    if len(sufficiency_grid) >= 2:
        sufficient, suff_witness = check_sufficiency(model, statistic, sufficiency_grid)
    else:
        sufficient, suff_witness = True, None

    reports: list[OrderReport] = []

    # C1: natural MD decisions dominate in power, every theta and alpha.
    if not thetas:
        reports.append(OrderReport("C1", "skipped", (), None, None, "empty theta grid"))
    else:
        margins = [
            (nat_md[theta].evaluate(alpha) - nat_t[theta].evaluate(alpha),
             f"theta={theta}, alpha={alpha}")
            for theta in thetas
            for alpha in alphas
        ]
        worst, wit_text = min(margins, key=lambda mw: mw[0])
        verdict, wit = _verdict(worst, wit_text)
        reports.append(OrderReport("C1", verdict, alphas, worst, wit))

    # C2: level sandwich under the null.
    margins = []
    for alpha in alphas:
        f_t = nat_t[null].evaluate(alpha)
        f_md = nat_md[null].evaluate(alpha)
        margins.append((f_md - f_t, f"alpha={alpha}: E0[dT]={f_t} vs E0[dMD]={f_md}"))
        margins.append((alpha - f_md, f"alpha={alpha}: E0[dMD]={f_md} exceeds alpha"))
    worst, wit_text = min(margins, key=lambda mw: mw[0])
    verdict, wit = _verdict(worst, wit_text)
    reports.append(OrderReport("C2", verdict, alphas, worst, wit))

    # C3: usual stochastic order of natural p-values per theta.
    if not thetas:
        reports.append(OrderReport("C3", "skipped", (), None, None, "empty theta grid"))
    else:
        sub = [
            check_usual_order(nat_t[theta], nat_md[theta], claim="C3", labels=("T", "MD"))
            for theta in thetas
        ]
        worst_report = min(sub, key=lambda r: r.worst_margin)
        grid = tuple(sorted(set().union(*(set(r.grid) for r in sub))))
        reports.append(
            OrderReport("C3", worst_report.verdict, grid, worst_report.worst_margin, worst_report.witness)
        )

    # C4: null sandwich of natural p-value CDFs.
    lower = check_usual_order(nat_t[null], nat_md[null], claim="C4", labels=("T", "MD"))
    upper = check_usual_order(nat_md[null], None, claim="C4", labels=("MD", "t"))
    worst_report = min((lower, upper), key=lambda r: r.worst_margin)
    grid = tuple(sorted(set(lower.grid) | set(upper.grid)))
    reports.append(OrderReport("C4", worst_report.verdict, grid, worst_report.worst_margin, worst_report.witness))

    # C5: randomized p-values exactly uniform under the null, both families.
    t_grid = tuple(Fraction(i, t_grid_size) for i in range(t_grid_size + 1))
    margins = []
    for t in t_grid:
        for name, family in (("T", t_family), ("MD", md_family)):
            value = randomized_pvalue_cdf_at(model, null, family, t)
            margins.append((-abs(value - t), f"{name} family at t={t}: CDF {value}"))
    worst, wit_text = min(margins, key=lambda mw: mw[0])
    verdict, wit = _verdict(worst, wit_text)
    reports.append(OrderReport("C5", verdict, t_grid, worst, wit))

    # C6: equal power functions under sufficiency.
    if not thetas:
        reports.append(OrderReport("C6", "skipped", (), None, None, "empty theta grid"))
    elif not sufficient:
        reports.append(OrderReport("C6", "skipped", (), None, None, f"hypothesis unmet: {suff_witness}"))
    else:
        margins = []
        for alpha in alphas:
            t_test = size_alpha_test(model, statistic, alpha)
            md_test = size_alpha_test(model, ranking, alpha)
            for theta in thetas:
                e_t = _phi_expectation_by_tails(model, t_test, theta)
                e_md = _phi_expectation_by_tails(model, md_test, theta)
                margins.append((-abs(e_t - e_md), f"theta={theta}, alpha={alpha}: {e_t} vs {e_md}"))
        worst, wit_text = min(margins, key=lambda mw: mw[0])
        verdict, wit = _verdict(worst, wit_text)
        reports.append(OrderReport("C6", verdict, alphas, worst, wit))

    # C7: pointwise minimal tie mass, hence minimal auxiliary-u variance.
    margins = [
        (t_family.b[i] - md_family.b[i], f"point {model.support[i].label!r}")
        for i in range(model.size)
    ]
    worst, wit_text = min(margins, key=lambda mw: mw[0])
    verdict, wit = _verdict(worst, wit_text)
    reports.append(OrderReport("C7", verdict, (), worst, wit, "checked at every support point"))

    # C8: martingale projection at every breakpoint alpha (gated on sufficiency).
    if not sufficient:
        reports.append(OrderReport("C8", "skipped", (), None, None, f"hypothesis unmet: {suff_witness}"))
    else:
        worst = None
        wit = None
        for alpha in alphas:
            report = check_martingale_projection(
                model,
                size_alpha_test(model, statistic, alpha),
                size_alpha_test(model, ranking, alpha),
            )
            if report.worst_margin is not None and (worst is None or report.worst_margin < worst):
                worst = report.worst_margin
                wit = None if report.passed else f"alpha={alpha}: {report.witness}"
        verdict, wit = _verdict(worst if worst is not None else Fraction(0), wit)
        reports.append(OrderReport("C8", verdict, alphas, worst, wit))

    # C9: convex-order chain of mid-p-values.
    reports.append(check_convex_order_chain(model, statistic, ranking))

    return reports


def reports_to_json(reports: Sequence[OrderReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def reports_to_text(reports: Sequence[OrderReport]) -> str:
    lines = [f"{'claim':<6} {'verdict':<8} {'worst margin':<24} {'grid':>6}  note"]
    for r in reports:
        if r.worst_margin is None:
            margin = "-"
        else:
            margin = f"{format_rational(r.worst_margin)} ({decimal_string(r.worst_margin, 9)})"
        detail = r.witness if r.verdict == "fail" else (r.note or "-")
        lines.append(f"{r.claim:<6} {r.verdict:<8} {margin:<24} {len(r.grid):>6}  {detail}")
    return "\n".join(lines) + "\n"
