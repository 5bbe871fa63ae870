"""Multiple testing and meta-analysis on p-value families, plus a seeded
Monte Carlo harness.

The harness isolates the discreteness/randomization effects: per-hypothesis
p-values come from the exact families (no resampling noise in the p-value
itself); only the data draws and the auxiliary uniforms are random.  Random
numbers use numpy's Philox generator with a documented substream scheme:
replicate r draws from Generator(Philox(SeedSequence(master_seed,
spawn_key=(r,)))), and within a replicate hypothesis i consumes component i
of each vectorized draw (data first, then auxiliary u, then the regenerated
u used for the dependence rate).  Identical configs therefore reproduce
bit-identical reports, and runs sharing a master seed see identical data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .model import DiscreteModel
from .ranking import Ranking, build_agreeing_ranking, likelihood_ratio_statistic
from .rational import format_rational, parse_rational
from .special import chi2_upper_quantile
from .testing import MD, T_BASED, TestFunction, pvalue_family

PROCEDURES = ("bh", "bonferroni", "fisher", "geometric-mean")
U_POLICIES = ("natural", "mid", "randomized")
RNG_IDENTITY = (
    "numpy Philox4x64 via SeedSequence(master_seed, spawn_key=(replicate,)); "
    "hypothesis i uses component i of each vectorized replicate draw"
)


class ConfigError(ValueError):
    """Invalid procedure input or simulation configuration."""


def _check_pvalues(pvalues: Sequence[float], positive: bool = False) -> list[float]:
    out = [float(p) for p in pvalues]
    for p in out:
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"p-value {p} lies outside [0, 1]")
        if positive and p == 0.0:
            raise ConfigError("p-values must be strictly positive here")
    return out


def bh_threshold(pvalues: Sequence[float], alpha: float) -> tuple[float, tuple[int, ...]]:
    """Benjamini-Hochberg step-up threshold and rejection set.

    The threshold is the largest attained p-value s whose estimated false
    discovery proportion s*M / #{P_i <= s} stays at or below alpha (0 when
    no candidate qualifies, the convention for an empty feasible set);
    every P_i <= threshold is rejected.  The scan below over sorted
    p-values is the classical step-up rule, which attains that supremum.
    """
    ps = _check_pvalues(pvalues)
    alpha = float(alpha)
    m = len(ps)
    if m == 0:
        return 0.0, ()
    threshold = 0.0
    feasible = False
    for i, p in enumerate(sorted(ps), start=1):
        if p * m <= alpha * i:
            threshold = p
            feasible = True
    if not feasible:
        return 0.0, ()
    return threshold, tuple(i for i, p in enumerate(ps) if p <= threshold)


def bonferroni(pvalues: Sequence[float], alpha: float) -> tuple[int, ...]:
    """Reject every P_i <= alpha / M."""
    ps = _check_pvalues(pvalues)
    if not ps:
        return ()
    cut = float(alpha) / len(ps)
    return tuple(i for i, p in enumerate(ps) if p <= cut)


class FisherResult(NamedTuple):
    statistic: float
    critical_value: float
    reject: bool
    note: str | None = None


def fisher_test(pvalues: Sequence[float], alpha: float) -> FisherResult:
    """Fisher combination: -2 sum log P_i against the chi-squared(2n) upper-alpha point."""
    ps = _check_pvalues(pvalues)
    if not ps:
        raise ConfigError("fisher_test needs at least one p-value")
    critical = chi2_upper_quantile(float(alpha), 2 * len(ps))
    if any(p == 0.0 for p in ps):
        return FisherResult(math.inf, critical, True, "zero p-value: statistic diverges")
    statistic = -2.0 * sum(math.log(p) for p in ps)
    return FisherResult(statistic, critical, statistic >= critical, None)


class GeometricMeanResult(NamedTuple):
    combined: float

    def rejects_at(self, alpha: float) -> bool:
        """Level-alpha rule backed by the e*alpha bound: reject iff P~ <= alpha/e."""
        return self.combined <= float(alpha) / math.e


def geometric_mean_combination(
    pvalues: Sequence[float], weights: Sequence[float] | None = None
) -> GeometricMeanResult:
    """Weighted geometric mean exp(sum w_i log P_i) of strictly positive p-values."""
    ps = _check_pvalues(pvalues, positive=True)
    if not ps:
        raise ConfigError("geometric mean needs at least one p-value")
    if weights is None:
        ws = [1.0 / len(ps)] * len(ps)
    else:
        ws = [float(w) for w in weights]
        if len(ws) != len(ps):
            raise ConfigError("weights and p-values must have the same length")
        if any(w < 0 for w in ws):
            raise ConfigError("weights must be nonnegative")
        if not math.isclose(sum(ws), 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise ConfigError(f"weights sum to {sum(ws)}, not 1")
    return GeometricMeanResult(math.exp(sum(w * math.log(p) for w, p in zip(ws, ps))))


def evalue_calibrate(p: float, method: str, k: float | None = None) -> float:
    """Calibrate a p-value into an E-value.

    "power-k": E = k * p^(k-1) with k in (0, 1); "inverse-sqrt":
    E = p^(-1/2) - 1.  p = 0 yields +inf (the calibrators diverge there).
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"p-value {p} lies outside [0, 1]")
    if method == "power-k":
        if k is None or not 0.0 < float(k) < 1.0:
            raise ConfigError("power-k calibration needs k strictly inside (0, 1)")
        k = float(k)
        if p == 0.0:
            return math.inf
        return k * p ** (k - 1.0)
    if method == "inverse-sqrt":
        if p == 0.0:
            return math.inf
        return p ** (-0.5) - 1.0
    raise ConfigError(f"unknown calibration method {method!r}")


def randomization_dependence_prob(
    model: DiscreteModel, theta: str, test: TestFunction
) -> Fraction:
    """Exact Pr_theta{phi(X) in (0,1)}: how often the decision hinges on u."""
    if not 0 < test.gamma < 1:
        return Fraction(0)
    return model.event_prob(theta, lambda pt: test.zone(pt) == 0)


@dataclass(frozen=True)
class SimulationConfig:
    model: DiscreteModel
    model_id: str
    hypotheses: int
    pi0: Fraction
    family: str
    u_policy: str
    procedure: str
    alpha: Fraction
    replicates: int
    seed: int
    tie_break: str = "lexicographic"
    null_name: str | None = None
    alt_name: str | None = None

    def __post_init__(self) -> None:
        if self.hypotheses < 1:
            raise ConfigError("hypotheses must be >= 1")
        if not 0 <= self.pi0 <= 1:
            raise ConfigError("pi0 must lie in [0, 1]")
        if self.family not in (T_BASED, MD):
            raise ConfigError(f"unknown family {self.family!r} (use 't-based' or 'md')")
        if self.u_policy not in U_POLICIES:
            raise ConfigError(f"unknown u policy {self.u_policy!r}")
        if self.procedure not in PROCEDURES:
            raise ConfigError(f"unknown procedure {self.procedure!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie strictly in (0, 1)")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")

    @property
    def null(self) -> str:
        return self.null_name or self.model.parameter_names[0]

    @property
    def alt(self) -> str:
        if self.alt_name:
            return self.alt_name
        names = self.model.parameter_names
        if len(names) < 2:
            raise ConfigError("simulation needs a model with a null and an alternative")
        return names[1]

    @property
    def n_null(self) -> int:
        """floor(pi0 * M), the number of true-null hypotheses."""
        return int(self.pi0 * self.hypotheses)

    def to_dict(self) -> dict:
        return {
            "model": self.model_id,
            "hypotheses": self.hypotheses,
            "pi0": format_rational(self.pi0),
            "family": self.family,
            "u_policy": self.u_policy,
            "procedure": self.procedure,
            "alpha": format_rational(self.alpha),
            "replicates": self.replicates,
            "seed": self.seed,
            "tie_break": self.tie_break,
            "null": self.null,
            "alt": self.alt,
        }


_FAMILY_ALIASES = {"t": T_BASED, "t-based": T_BASED, "md": MD}


def config_from_dict(data: Mapping, model: DiscreteModel, model_id: str) -> SimulationConfig:
    try:
        family = _FAMILY_ALIASES.get(str(data["family"]), str(data["family"]))
        return SimulationConfig(
            model=model,
            model_id=model_id,
            hypotheses=int(data["hypotheses"]),
            pi0=parse_rational(data["pi0"]),
            family=family,
            u_policy=str(data["u_policy"]),
            procedure=str(data["procedure"]),
            alpha=parse_rational(data["alpha"]),
            replicates=int(data["replicates"]),
            seed=int(data["seed"]),
            tie_break=str(data.get("tie_break", "lexicographic")),
            null_name=data.get("null"),
            alt_name=data.get("alt"),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from None


@dataclass(frozen=True)
class SimulationReport:
    config: dict
    m_null: int
    fdr: float
    fdr_mcse: float
    power: float
    power_mcse: float
    mean_rejections: float
    mean_threshold: float
    dependence_rate: float | None
    rng: str

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "m_null": self.m_null,
            "fdr": self.fdr,
            "fdr_mcse": self.fdr_mcse,
            "power": self.power,
            "power_mcse": self.power_mcse,
            "mean_rejections": self.mean_rejections,
            "mean_threshold": self.mean_threshold,
            "dependence_rate": self.dependence_rate,
            "rng": self.rng,
        }

    def summary_row(self) -> list:
        """The CSV summary: procedure, family, u_policy, alpha, fdr, fdr_mcse, power, dep_rate."""
        return [
            self.config["procedure"],
            self.config["family"],
            self.config["u_policy"],
            self.config["alpha"],
            self.fdr,
            self.fdr_mcse,
            self.power,
            "" if self.dependence_rate is None else self.dependence_rate,
        ]


def _mean_and_mcse(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    if len(values) < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(len(values)))


def _replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replicate,))))


def simulate(config: SimulationConfig) -> SimulationReport:
    """Run the seeded Monte Carlo study described by ``config``.

    Each replicate draws M independent datasets (the first floor(pi0*M)
    hypotheses from the null, the rest from the alternative), forms exact
    per-point p-values for the configured family and u policy, applies the
    procedure, and records false/true discoveries.  With the randomized
    policy, u is regenerated once per replicate and the fraction of
    per-hypothesis decisions that flip is reported.
    """
    model = config.model
    statistic = likelihood_ratio_statistic(model, config.null, config.alt)
    if config.family == MD:
        source: Ranking | object = build_agreeing_ranking(model, statistic, config.tie_break)
    else:
        source = statistic
    family = pvalue_family(model, source)

    a_arr = np.array([float(v) for v in family.a])
    b_arr = np.array([float(v) for v in family.b])
    natural = a_arr + b_arr
    mid = a_arr + 0.5 * b_arr
    cum_null = np.cumsum([float(p) for p in model.probs(config.null)])
    cum_alt = np.cumsum([float(p) for p in model.probs(config.alt)])
    cum_null[-1] = cum_alt[-1] = 1.0

    m = config.hypotheses
    m0 = config.n_null
    m1 = m - m0
    is_null = np.zeros(m, dtype=bool)
    is_null[:m0] = True
    alpha = float(config.alpha)
    global_procedure = config.procedure in ("fisher", "geometric-mean")
    critical = chi2_upper_quantile(alpha, 2 * m) if config.procedure == "fisher" else math.nan

    def pvals(idx: np.ndarray, u: np.ndarray) -> np.ndarray:
        if config.u_policy == "natural":
            return natural[idx]
        if config.u_policy == "mid":
            return mid[idx]
        return a_arr[idx] + u * b_arr[idx]

    def decide(ps: np.ndarray) -> tuple[np.ndarray, float]:
        if config.procedure == "bh":
            threshold, rejected = bh_threshold(ps.tolist(), alpha)
            mask = np.zeros(m, dtype=bool)
            mask[list(rejected)] = True
            return mask, threshold
        if config.procedure == "bonferroni":
            mask = ps <= alpha / m
            return mask, alpha / m
        if config.procedure == "fisher":
            result = fisher_test(ps.tolist(), alpha)
            return np.full(m, result.reject), critical
        combined = geometric_mean_combination(ps.tolist())
        return np.full(m, combined.rejects_at(alpha)), alpha / math.e

    fdp = np.zeros(config.replicates)
    tdp = np.zeros(config.replicates)
    rejection_counts = np.zeros(config.replicates)
    thresholds = np.zeros(config.replicates)
    flips = np.zeros(config.replicates)

    for r in range(config.replicates):
        rng = _replicate_rng(config.seed, r)
        data_u = rng.random(m)
        idx = np.empty(m, dtype=np.int64)
        idx[:m0] = np.searchsorted(cum_null, data_u[:m0], side="right")
        idx[m0:] = np.searchsorted(cum_alt, data_u[m0:], side="right")
        np.clip(idx, 0, model.size - 1, out=idx)
        aux_u = rng.random(m)
        ps = pvals(idx, aux_u)
        rejected, threshold = decide(ps)

        if global_procedure:
            # One global decision per replicate: a rejection is false only
            # when every hypothesis is null.
            globally_rejected = bool(rejected[0]) if m else False
            fdp[r] = float(globally_rejected) if m1 == 0 else 0.0
            tdp[r] = float(globally_rejected) if m1 > 0 else 0.0
            rejection_counts[r] = float(globally_rejected)
        else:
            n_rej = int(rejected.sum())
            fdp[r] = rejected[is_null].sum() / max(n_rej, 1)
            tdp[r] = rejected[~is_null].sum() / m1 if m1 > 0 else 0.0
            rejection_counts[r] = n_rej
        thresholds[r] = threshold

        if config.u_policy == "randomized":
            flip_u = rng.random(m)
            rejected2, _ = decide(pvals(idx, flip_u))
            flips[r] = float((rejected != rejected2).mean())

    fdr, fdr_mcse = _mean_and_mcse(fdp)
    pw, pw_mcse = _mean_and_mcse(tdp)
    return SimulationReport(
        config=config.to_dict(),
        m_null=m0,
        fdr=fdr,
        fdr_mcse=fdr_mcse,
        power=pw,
        power_mcse=pw_mcse,
        mean_rejections=float(rejection_counts.mean()),
        mean_threshold=float(thresholds.mean()),
        dependence_rate=float(flips.mean()) if config.u_policy == "randomized" else None,
        rng=RNG_IDENTITY,
    )


def report_to_json(report: SimulationReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
