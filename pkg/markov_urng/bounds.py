"""Finite-length and asymptotic security bounds for uniform random number
generation from Markov sources, with and without side information.

Achievability quantities lower-bound -log Delta-bar (the two-universal
family average); converse quantities upper-bound -log Delta or
-log Delta-bar. Rates are in nats per symbol, ``log_m`` is log M in nats.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.stats import norm

from .errors import (
    DegenerateVariance,
    Infeasible,
    InfeasibleQuery,
    OutOfWindow,
    ValidationError,
)
from .legendre import (
    InverseMaps,
    build_inverse_maps,
    legendre_sup,
    markov_tail_converse,
    one_shot_tail_converse,
    profile_cgf,
)
from .markov_core import TransitionModel, check_assumption, require_assumption
from .renyi_measures import (
    RenyiProfile,
    _joint,
    conditional_entropy,
    optimal_conditioning,
    renyi_profile,
    shannon_entropy,
    single_shot_profile,
)

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
LOG_THREE_HALVES = math.log(1.5)
RATE_TOL = 1e-6
WINDOW_MARGIN = 1e-6
SCAN_POINTS = 48
SCAN_FLOOR = 1e-7

URNG_THEOREMS = ("ach", "conv_sphere", "conv_strong")
SURNG_THEOREMS = ("ach_a1", "ach_a2", "conv_a1", "conv_a2")
THEOREM_QUANTITY = {
    "ach": "neg_log_delta_bar_lower",
    "conv_sphere": "neg_log_delta_upper",
    "conv_strong": "neg_log_delta_bar_upper",
    "ach_a1": "neg_log_delta_bar_lower",
    "ach_a2": "neg_log_delta_bar_lower",
    "conv_a1": "neg_log_delta_upper",
    "conv_a2": "neg_log_delta_bar_upper",
}
THEOREM_VARIANT = {
    "ach": "single",
    "conv_sphere": "single",
    "conv_strong": "single",
    "ach_a1": "lower_cond",
    "conv_a1": "lower_cond",
    "ach_a2": "upper_cond",
    "conv_a2": "upper_cond",
}

SINGLE_SHOT_KINDS = (
    "han",
    "leftover_loose",
    "exp_ach",
    "sphere_conv",
    "han_conv",
    "strong_conv",
    "strong_tail",
    "exp_conv",
    "exp_conv_strong",
    "rer_upper",
    "rer_lower",
)
SINGLE_SHOT_MULTI_KINDS = (
    "info_spectrum",
    "exp_ach_multi",
    "sphere_conv_multi",
    "han_conv_multi",
    "strong_tail_multi",
    "exp_conv_multi",
    "exp_conv_strong_multi",
    "mmir_upper",
    "mmir_lower",
)
REGIMES = ("ld", "ld_conv", "ld_delta", "md", "second_order", "rer")

CSV_HEADER = ("n", "R", "epsilon", "theorem", "value", "theta_star", "s_star", "feasible", "clamped")


class StdNormal:
    """Standard Gaussian cdf and quantile."""

    @staticmethod
    def cdf(x: float) -> float:
        return float(norm.cdf(x))

    @staticmethod
    def quantile(p: float) -> float:
        if not 0 < p < 1:
            raise ValidationError(f"quantile needs 0 < p < 1, got {p}")
        return float(norm.ppf(p))


STD_NORMAL = StdNormal()


@dataclass
class BoundQuery:
    n: int
    rate: Optional[float] = None
    log_m: Optional[float] = None
    epsilon: Optional[float] = None
    theorem: str = "ach"
    nu: float = 0.5

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"block length must be at least 2, got {self.n}")
        if self.rate is None and self.log_m is None and self.epsilon is None:
            raise ValidationError("query needs a rate, log M or epsilon")
        if self.rate is not None and self.rate <= 0:
            raise ValidationError(f"rate must be positive, got {self.rate}")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.nu < 1:
            raise ValidationError(f"nu must lie in (0, 1), got {self.nu}")

    @property
    def log_size(self) -> float:
        """log M_n in nats."""
        if self.log_m is not None:
            return self.log_m
        if self.rate is None:
            raise ValidationError("query has neither a rate nor log M")
        return self.n * self.rate

    @property
    def per_symbol_rate(self) -> Optional[float]:
        if self.rate is None and self.log_m is None:
            return None
        return self.log_size / self.n


@dataclass
class BoundReport:
    quantity: str
    theorem: str
    value: Optional[float]
    theta_star: Optional[float] = None
    s_star: Optional[float] = None
    theta_tilde_star: Optional[float] = None
    feasible: bool = True
    clamped: bool = False
    query: Optional[BoundQuery] = field(default=None, repr=False)

    @property
    def delta(self) -> Optional[float]:
        """exp(-value) for the -log Delta quantities."""
        if self.value is None or not self.quantity.startswith("neg_log"):
            return None
        return math.exp(-self.value) if self.value > -700 else math.inf

    def to_dict(self) -> dict:
        data = asdict(self)
        data["query"] = asdict(self.query) if self.query is not None else None
        return data

    def csv_row(self) -> Tuple:
        q = self.query
        return (
            q.n if q else "",
            "" if q is None or q.per_symbol_rate is None else q.per_symbol_rate,
            q.epsilon if q and q.epsilon is not None else "",
            self.theorem,
            "" if self.value is None else self.value,
            "" if self.theta_star is None else self.theta_star,
            "" if self.s_star is None else self.s_star,
            self.feasible,
            self.clamped,
        )


@dataclass
class SingleShotBound:
    kind: str
    value: float
    measure: str
    direction: str
    optimizer: Dict[str, float] = field(default_factory=dict)
    clamped: bool = False


@dataclass
class AsymptoticValue:
    regime: str
    value: float
    theta_star: Optional[float] = None
    exact: bool = True
    note: str = ""


class SourceAnalysis:
    """Per-model cache of profiles and inverse maps shared across queries."""

    def __init__(self, model: TransitionModel):
        self.model = model
        self._profiles: Dict[Tuple[str, Optional[float]], RenyiProfile] = {}
        self._maps: Dict[str, InverseMaps] = {}

    def profile(self, variant: str, theta_prime: Optional[float] = None) -> RenyiProfile:
        key = (variant, theta_prime)
        if key not in self._profiles:
            self._profiles[key] = renyi_profile(self.model, variant, theta_prime)
        return self._profiles[key]

    def maps(self, variant: str) -> InverseMaps:
        if variant not in self._maps:
            self._maps[variant] = build_inverse_maps(self.profile(variant))
        return self._maps[variant]


# ---------------------------------------------------------------------------
# single-shot bounds


def _info_values(joint: np.ndarray, q_y: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(values, probabilities) of log Q_Y(y)/P_XY(x,y) on the support; Q_Y = 1 for 1-D input."""
    support = joint > 0
    if q_y is None:
        q_y = np.ones(joint.shape[1])
    values = (np.log(np.where(q_y > 0, q_y, 1.0))[None, :] - np.log(np.where(support, joint, 1.0)))[support]
    return values, joint[support]


def _spectrum(values: np.ndarray, probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct values with P{v < value} and P{v <= value}."""
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    distinct, starts = np.unique(values, return_index=True)
    cumulative = np.concatenate([[0.0], np.cumsum(probs)])
    ends = np.concatenate([starts[1:], [values.size]])
    return distinct, cumulative[starts], cumulative[ends]


def _spectrum_inf(values, probs, penalty: Callable[[float], float]) -> Tuple[float, float]:
    """inf over gamma >= 0 of P{v < gamma} + penalty(gamma)."""
    distinct, below, _ = _spectrum(values, probs)
    candidates = [(float(np.sum(probs[values < 0.0])) + penalty(0.0), 0.0)]
    for v, p in zip(distinct, below):
        if v > 0:
            candidates.append((float(p) + penalty(float(v)), float(v)))
    mids = (distinct[:-1] + distinct[1:]) / 2
    for v in mids[mids > 0]:
        candidates.append((float(np.sum(probs[values < v])) + penalty(float(v)), float(v)))
    candidates.append((1.0, math.inf))
    return min(candidates)


def _spectrum_sup(values, probs, gain: Callable[[float, float], float], log_m: float) -> Tuple[float, float]:
    """sup over gamma >= 0 of gain(P{v < gamma}, gamma), taking right limits at atoms.

    Raises Infeasible when no gamma with e^gamma < M(1 - margin) carries mass.
    """
    distinct, _, upto = _spectrum(values, probs)
    if not distinct[0] < log_m + math.log1p(-WINDOW_MARGIN):
        raise Infeasible(f"every information value is at least log M = {log_m:.9g}; the converse is empty")
    candidates = [(gain(float(np.sum(probs[values < 0.0])), 0.0), 0.0)]
    for v, p in zip(distinct, upto):
        if v >= 0:
            candidates.append((gain(float(p), float(v)), float(v)))
    mids = (distinct[:-1] + distinct[1:]) / 2
    for v in mids[mids > 0]:
        candidates.append((gain(float(np.sum(probs[values < v])), float(v)), float(v)))
    return max(candidates)


def _exp_ach(profile: RenyiProfile, log_m: float) -> Tuple[float, float]:
    """inf over theta in [0,1] of (3/2) exp(theta/(1+theta) (log M - H_{1+theta}))."""

    def exponent(theta: float) -> float:
        return (theta * log_m - profile.scaled(theta)) / (1 + theta)

    result = minimize_scalar(exponent, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    best = min([(float(result.fun), float(result.x)), (exponent(0.0), 0.0), (exponent(1.0), 1.0)])
    return 1.5 * math.exp(best[0]), best[1]


def _rer_upper(profile: RenyiProfile, log_m: float) -> Tuple[float, float]:
    """inf over theta in (0,1] of (1/theta) log(1 + M^theta e^{-theta H_{1+theta}})."""

    def value(theta: float) -> float:
        return float(np.logaddexp(0.0, theta * log_m - profile.scaled(theta))) / theta

    result = minimize_scalar(value, bounds=(1e-6, 1.0), method="bounded", options={"xatol": 1e-12})
    return min((float(result.fun), float(result.x)), (value(1.0), 1.0))


def _tail_single(profile: RenyiProfile, a: float) -> "object":
    return one_shot_tail_converse(profile_cgf(profile), -a, ">=")


def single_shot_bound(dist, M: float, kind: str, nu: float = 0.5, q_y=None) -> SingleShotBound:
    """Single-shot bound of ``kind`` for an explicit distribution.

    ``dist`` is P_X (1-D) for the plain kinds and P_XY indexed [x, y] for
    the ``*_multi`` / ``mmir_*`` / ``info_spectrum`` kinds.
    """
    if M < 2:
        raise ValidationError(f"M must be at least 2, got {M}")
    log_m = math.log(M)
    if kind in SINGLE_SHOT_KINDS:
        p = np.asarray(dist, dtype=float)
        if p.ndim != 1:
            raise ValidationError(f"kind '{kind}' expects a 1-D distribution")
        joint = _joint(p)
    elif kind in SINGLE_SHOT_MULTI_KINDS:
        joint = _joint(dist)
    else:
        raise ValueError(f"unknown single-shot kind '{kind}'")
    p_y = joint.sum(axis=0)

    if kind in ("han", "leftover_loose", "info_spectrum"):
        if kind == "han":
            values, probs = _info_values(joint)
            penalty = lambda g: math.exp(log_m - g)
            measure = "delta"
        else:
            if kind == "leftover_loose":
                values, probs = _info_values(joint)
            else:
                values, probs = _info_values(joint, p_y if q_y is None else np.asarray(q_y, dtype=float))
            penalty = lambda g: 0.5 * math.exp((log_m - g) / 2)
            measure = "delta_bar"
        value, gamma = _spectrum_inf(values, probs, penalty)
        return SingleShotBound(kind, value, measure, "upper", {"gamma": gamma}, clamped=value >= 1.0)

    if kind in ("sphere_conv", "han_conv", "sphere_conv_multi", "han_conv_multi"):
        values, probs = _info_values(joint, p_y if kind.endswith("multi") else None)
        if kind.startswith("sphere"):
            gain = lambda p, g: p * (1 - math.exp(g - log_m))
        else:
            gain = lambda p, g: p - math.exp(g - log_m)
        value, gamma = _spectrum_sup(values, probs, gain, log_m)
        return SingleShotBound(kind, value, "delta", "lower", {"gamma": gamma}, clamped=value <= 0.0)

    if kind == "strong_conv":
        masses = np.sort(joint.ravel())[::-1]
        limit = min(int(math.floor(M)), masses.size)
        prefix = np.concatenate([[0.0], np.cumsum(masses[:limit])])
        ks = np.arange(limit + 1)
        gains = (1 - ks / M) ** 2 * prefix
        k = int(np.argmax(gains))
        return SingleShotBound(kind, float(gains[k]), "delta_bar", "lower", {"k": float(k)}, clamped=gains[k] <= 0)

    if kind in ("exp_ach", "exp_ach_multi"):
        variant = "upper" if kind == "exp_ach_multi" else "lower"
        value, theta = _exp_ach(single_shot_profile(joint, variant), log_m)
        return SingleShotBound(kind, value, "delta_bar", "upper", {"theta": theta}, clamped=value >= 1.0)

    if kind in ("strong_tail", "strong_tail_multi"):
        upper = single_shot_profile(joint, "upper")
        maps = build_inverse_maps(upper)
        a = maps.a_of_R(log_m + math.log(nu))
        theta = maps.theta_of_a(a)
        q = np.ones(joint.shape[1]) if kind == "strong_tail" else optimal_conditioning(joint, theta)
        values, probs = _info_values(joint, q)
        mass = float(np.sum(probs[values <= a]))
        value = (1 - nu) ** 2 * mass
        return SingleShotBound(kind, value, "delta_bar", "lower", {"a": a, "theta": theta}, clamped=value <= 0)

    if kind in ("exp_conv", "exp_conv_multi"):
        profile = single_shot_profile(joint, "lower")
        tail = _tail_single(profile, log_m - LOG2)
        return SingleShotBound(
            kind,
            tail.value + LOG2,
            "neg_log_delta",
            "upper",
            {"theta": tail.rho_a, "s": tail.s, "theta_tilde": tail.rho_tilde},
        )

    if kind in ("exp_conv_strong", "exp_conv_strong_multi"):
        upper = single_shot_profile(joint, "upper")
        maps = build_inverse_maps(upper)
        a = maps.a_of_R(log_m - LOG2)
        theta = maps.theta_of_a(a)
        frozen = single_shot_profile(joint, "two_param", theta_prime=theta)
        tail = _tail_single(frozen, a)
        return SingleShotBound(
            kind,
            tail.value + 2 * LOG2,
            "neg_log_delta_bar",
            "upper",
            {"theta": theta, "s": tail.s, "theta_tilde": tail.rho_tilde, "a": a},
        )

    if kind in ("rer_upper", "mmir_upper"):
        value, theta = _rer_upper(single_shot_profile(joint, "lower"), log_m)
        return SingleShotBound(kind, value, "divergence", "upper", {"theta": theta})

    # rer_lower / mmir_lower
    entropy = shannon_entropy(joint.ravel()) if kind == "rer_lower" else conditional_entropy(joint)
    value = log_m - entropy
    return SingleShotBound(kind, value, "divergence", "lower", clamped=value <= 0)


# ---------------------------------------------------------------------------
# Markov finite-length bounds


def _achievability(profile: RenyiProfile, n: int, log_m: float, xi_form: bool) -> Tuple[float, float]:
    """sup over theta in [0,1] of the direct exponent, minus log(3/2)."""

    def objective(theta: float) -> float:
        terms = profile.corrections(theta)
        scaled = (n - 1) * profile.scaled(theta)
        if xi_form:
            return (-theta * log_m + scaled) / (1 + theta) + terms.lower
        return (-theta * log_m + scaled + terms.lower) / (1 + theta)

    result = minimize_scalar(lambda t: -objective(t), bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    best = max([(float(-result.fun), float(result.x)), (objective(0.0), 0.0), (objective(1.0), 1.0)])
    return best[0] - LOG_THREE_HALVES, best[1]


def _ach_report(analysis: SourceAnalysis, query: BoundQuery, theorem: str) -> BoundReport:
    variant = THEOREM_VARIANT[theorem]
    profile = analysis.profile(variant)
    value, theta = _achievability(profile, query.n, query.log_size, xi_form=variant == "upper_cond")
    clamped = value <= 0
    if clamped:
        logger.warning("%s bound is vacuous at R=%.6g (value %.6g)", theorem, query.per_symbol_rate, value)
    return BoundReport(
        quantity=THEOREM_QUANTITY[theorem],
        theorem=theorem,
        value=value,
        theta_star=theta,
        clamped=clamped,
        query=query,
    )


def _sphere_report(analysis: SourceAnalysis, query: BoundQuery, theorem: str) -> BoundReport:
    variant = THEOREM_VARIANT[theorem]
    profile = analysis.profile(variant)
    maps = analysis.maps(variant)
    rate = (query.log_size - LOG2) / query.n
    if not maps.a_lower < rate < profile.entropy_rate:
        raise OutOfWindow(
            f"shifted rate {rate:.9g} outside ({maps.a_lower:.9g}, {profile.entropy_rate:.9g})"
        )
    tail = markov_tail_converse(profile_cgf(profile), -rate, query.n, ">=")
    return BoundReport(
        quantity=THEOREM_QUANTITY[theorem],
        theorem=theorem,
        value=tail.value + LOG2,
        theta_star=tail.rho_a,
        s_star=tail.s,
        theta_tilde_star=tail.rho_tilde,
        query=query,
    )


def _strong_log_size(analysis: SourceAnalysis, n: int, rate: float, variant: str) -> float:
    """log M_n implied by the internal rate R of the strong-universal converse."""
    maps = analysis.maps(variant)
    profile = analysis.profile(variant)
    a = maps.a_of_R(rate)
    theta = maps.theta_of_a(a)
    lower = profile.corrections(theta).lower
    if variant == "upper_cond":
        return (n - 1) * rate + (1 + theta) * (a - lower) + LOG2
    return (n - 1) * rate + (1 + theta) * a - lower + LOG2


def _strong_window(analysis: SourceAnalysis, variant: str) -> Tuple[float, float]:
    maps = analysis.maps(variant)
    lo = maps.rate_lower
    hi = analysis.profile(variant).entropy_rate
    span = hi - lo
    return lo + WINDOW_MARGIN * span, hi - WINDOW_MARGIN * span


def _solve_strong_rate(analysis: SourceAnalysis, query: BoundQuery, variant: str) -> float:
    lo, hi = _strong_window(analysis, variant)
    target = query.log_size
    f_lo = _strong_log_size(analysis, query.n, lo, variant) - target
    f_hi = _strong_log_size(analysis, query.n, hi, variant) - target
    if f_lo > 0 or f_hi < 0:
        raise OutOfWindow(f"log M = {target:.9g} has no strong-converse rate in ({lo:.9g}, {hi:.9g})")
    return brentq(lambda r: _strong_log_size(analysis, query.n, r, variant) - target, lo, hi, xtol=1e-12)


def _strong_report(analysis: SourceAnalysis, query: BoundQuery, theorem: str) -> BoundReport:
    variant = THEOREM_VARIANT[theorem]
    rate = _solve_strong_rate(analysis, query, variant)
    maps = analysis.maps(variant)
    a = maps.a_of_R(rate)
    theta = maps.theta_of_a(a)
    if variant == "upper_cond":
        profile = analysis.profile("two_param", theta_prime=theta)
    else:
        profile = analysis.profile(variant)
    tail = markov_tail_converse(profile_cgf(profile), -a, query.n, ">=")
    return BoundReport(
        quantity=THEOREM_QUANTITY[theorem],
        theorem=theorem,
        value=tail.value + 2 * LOG2,
        theta_star=theta,
        s_star=tail.s,
        theta_tilde_star=tail.rho_tilde,
        query=query,
    )


_DISPATCH = {
    "ach": _ach_report,
    "ach_a1": _ach_report,
    "ach_a2": _ach_report,
    "conv_sphere": _sphere_report,
    "conv_a1": _sphere_report,
    "conv_strong": _strong_report,
    "conv_a2": _strong_report,
}


def _require_single_terminal(model: TransitionModel) -> None:
    if model.has_side_info:
        raise ValidationError("URNG bounds need a single-terminal model (y_size = 1)")


def urng_markov_bound(
    model: TransitionModel,
    query: BoundQuery,
    analysis: Optional[SourceAnalysis] = None,
) -> BoundReport:
    if query.theorem not in URNG_THEOREMS:
        raise ValidationError(f"unknown URNG theorem '{query.theorem}'")
    _require_single_terminal(model)
    analysis = analysis or SourceAnalysis(model)
    return _DISPATCH[query.theorem](analysis, query, query.theorem)


def surng_markov_bound(
    model: TransitionModel,
    query: BoundQuery,
    analysis: Optional[SourceAnalysis] = None,
) -> BoundReport:
    if query.theorem not in SURNG_THEOREMS:
        raise ValidationError(f"unknown SURNG theorem '{query.theorem}'")
    require_assumption(model, "A2" if query.theorem.endswith("a2") else "A1")
    analysis = analysis or SourceAnalysis(model)
    return _DISPATCH[query.theorem](analysis, query, query.theorem)


def markov_bound(model: TransitionModel, query: BoundQuery, analysis: Optional[SourceAnalysis] = None) -> BoundReport:
    if query.theorem in URNG_THEOREMS:
        return urng_markov_bound(model, query, analysis)
    return surng_markov_bound(model, query, analysis)


# ---------------------------------------------------------------------------
# relative entropy rate / modified mutual information rate


def _divergence_rate_bound(
    profile: RenyiProfile,
    n: int,
    rate: float,
    direction: str,
    theta: Optional[float],
    quantity: str,
) -> BoundReport:
    query = BoundQuery(n=n, rate=rate, theorem=quantity)

    def upper(t: float) -> Optional[float]:
        if rate < profile.value_at(t):
            return None
        lower = profile.corrections(t).lower
        return rate - (n - 1) / n * profile.value_at(t) + (LOG2 - lower) / (t * n)

    def lower_fn(t: float) -> float:
        return rate - (n - 1) / n * profile.value_at(-t) + profile.corrections(-t).lower / (t * n)

    if direction == "upper":
        grid = [theta] if theta is not None else list(np.linspace(1e-3, 1.0, 200))
        values = [(v, t) for t in grid for v in [upper(float(t))] if v is not None]
        if not values:
            raise OutOfWindow(f"R = {rate:.9g} is below H_(1+theta) for every theta in (0, 1]")
        value, best = min(values)
        return BoundReport(quantity=quantity, theorem=quantity, value=value, theta_star=best, query=query)
    if direction != "lower":
        raise ValueError(f"unknown direction '{direction}'")
    grid = [theta] if theta is not None else list(np.linspace(1e-3, 1.0, 200))
    value, best = max((lower_fn(float(t)), float(t)) for t in grid)
    return BoundReport(
        quantity=quantity, theorem=quantity, value=value, theta_star=best, clamped=value <= 0, query=query
    )


def urng_rer_bound(
    model: TransitionModel,
    n: int,
    rate: float,
    direction: str = "upper",
    theta: Optional[float] = None,
    analysis: Optional[SourceAnalysis] = None,
) -> BoundReport:
    """Per-symbol bounds on (1/n) D(e^{nR}); theta is scanned over (0, 1] when not given."""
    _require_single_terminal(model)
    analysis = analysis or SourceAnalysis(model)
    if theta is not None and not 0 < theta <= 1:
        raise ValidationError(f"theta must lie in (0, 1], got {theta}")
    quantity = "rer_upper" if direction == "upper" else "rer_lower"
    return _divergence_rate_bound(analysis.profile("single"), n, rate, direction, theta, quantity)


def surng_mmir_bound(
    model: TransitionModel,
    n: int,
    rate: float,
    direction: str = "upper",
    theta: Optional[float] = None,
    analysis: Optional[SourceAnalysis] = None,
) -> BoundReport:
    """MMIR analogue of ``urng_rer_bound`` with the lower conditional entropy rates."""
    require_assumption(model, "A1")
    analysis = analysis or SourceAnalysis(model)
    if theta is not None and not 0 < theta <= 1:
        raise ValidationError(f"theta must lie in (0, 1], got {theta}")
    quantity = "mmir_upper" if direction == "upper" else "mmir_lower"
    return _divergence_rate_bound(analysis.profile("lower_cond"), n, rate, direction, theta, quantity)


# ---------------------------------------------------------------------------
# asymptotics


_CONDITIONAL_VARIANT = {"none": "single", "lower": "lower_cond", "upper": "upper_cond"}


def asymptotic(
    model: TransitionModel,
    regime: str,
    rate: Optional[float] = None,
    n: Optional[int] = None,
    epsilon: Optional[float] = None,
    delta: Optional[float] = None,
    conditional: str = "none",
    analysis: Optional[SourceAnalysis] = None,
) -> AsymptoticValue:
    """Large/moderate deviation exponents, second-order log M and the RER hinge."""
    if regime not in REGIMES:
        raise ValidationError(f"unknown regime '{regime}'")
    if conditional not in _CONDITIONAL_VARIANT:
        raise ValidationError(f"unknown conditional mode '{conditional}'")
    variant = _CONDITIONAL_VARIANT[conditional]
    if variant == "single":
        _require_single_terminal(model)
    analysis = analysis or SourceAnalysis(model)
    profile = analysis.profile(variant)
    entropy = profile.entropy_rate

    if regime == "rer":
        _need(rate, "rate")
        return AsymptoticValue(regime, max(rate - entropy, 0.0))

    if regime in ("md", "second_order"):
        if profile.variance_rate <= 1e-12:
            raise DegenerateVariance("moderate deviation and second order need a positive variance")
        if regime == "md":
            _need(delta, "delta")
            return AsymptoticValue(regime, delta**2 / (2 * profile.variance_rate))
        _need(n, "n")
        _need(epsilon, "epsilon")
        value = n * entropy + math.sqrt(n * profile.variance_rate) * STD_NORMAL.quantile(epsilon)
        return AsymptoticValue(regime, value, note="log M")

    _need(rate, "rate")
    if regime == "ld":
        value, theta = legendre_sup(profile, rate, constrained=True)
        return AsymptoticValue(regime, value, theta_star=theta)

    maps = analysis.maps(variant)
    if regime == "ld_conv":
        if not maps.rate_lower < rate < entropy:
            raise OutOfWindow(f"R = {rate:.9g} outside ({maps.rate_lower:.9g}, {entropy:.9g})")
        a = maps.a_of_R(rate)
        theta = maps.theta_of_a(a)
        value = -theta * a + profile.scaled(theta)
        return AsymptoticValue(
            regime,
            value,
            theta_star=theta,
            exact=rate >= maps.critical_rate,
            note="matches achievability above the critical rate",
        )

    # ld_delta
    if not maps.a_lower < rate < entropy:
        raise OutOfWindow(f"R = {rate:.9g} outside ({maps.a_lower:.9g}, {entropy:.9g})")
    theta = maps.theta_of_a(rate)
    return AsymptoticValue(regime, -theta * rate + profile.scaled(theta), theta_star=theta)


def _need(value, name: str) -> None:
    if value is None:
        raise ValidationError(f"regime needs '{name}'")


def md_finite_exponent(
    model: TransitionModel,
    n: int,
    t: float,
    delta: float,
    analysis: Optional[SourceAnalysis] = None,
) -> float:
    """Direct bound at R = H - n^{-t} delta, divided by n^{1-2t}."""
    if not 0 < t < 0.5:
        raise ValidationError(f"t must lie in (0, 1/2), got {t}")
    analysis = analysis or SourceAnalysis(model)
    rate = analysis.profile("single").entropy_rate - n ** (-t) * delta
    report = urng_markov_bound(model, BoundQuery(n=n, rate=rate, theorem="ach"), analysis)
    return report.value / n ** (1 - 2 * t)


# ---------------------------------------------------------------------------
# rate for a target epsilon


def _rate_window(analysis: SourceAnalysis, n: int, theorem: str) -> Tuple[float, float]:
    """Per-symbol rates log M / n on which ``theorem`` is defined."""
    variant = THEOREM_VARIANT[theorem]
    entropy = analysis.profile(variant).entropy_rate
    if theorem.startswith("ach"):
        return 1e-9, entropy + LOG2
    if theorem in ("conv_sphere", "conv_a1"):
        a_lower = analysis.maps(variant).a_lower
        span = entropy - a_lower
        lo, hi = a_lower + WINDOW_MARGIN * span, entropy - WINDOW_MARGIN * span
        return lo + LOG2 / n, hi + LOG2 / n
    lo, hi = _strong_window(analysis, variant)
    return _strong_log_size(analysis, n, lo, variant) / n, _strong_log_size(analysis, n, hi, variant) / n


def _scan_rates(lo: float, hi: float) -> np.ndarray:
    """Window points from ``lo`` up to ``hi``, geometrically denser toward the top."""
    offsets = (hi - lo) * np.geomspace(1.0, SCAN_FLOOR, SCAN_POINTS)
    return np.append(hi - offsets, hi)


def _feasibility_edge(gap: Callable[[float], float], feasible: float, infeasible: float) -> float:
    """Bisect to the last rate, moving from ``feasible`` toward ``infeasible``, where the bound exists."""
    while abs(infeasible - feasible) > RATE_TOL:
        mid = 0.5 * (feasible + infeasible)
        try:
            gap(mid)
            feasible = mid
        except InfeasibleQuery:
            infeasible = mid
    return feasible


def rate_for_epsilon(
    model: TransitionModel,
    n: int,
    epsilon: float,
    theorem: str = "ach",
    analysis: Optional[SourceAnalysis] = None,
) -> float:
    """Per-symbol rate at which the chosen bound meets epsilon (within 1e-6 nats).

    The window is scanned for points where the bound exists; the root is
    bracketed between adjacent feasible points. When the bound stays above
    -log epsilon up to where it stops existing, that edge is returned.
    """
    if not 0 < epsilon < 1:
        raise ValidationError(f"epsilon must lie in (0, 1), got {epsilon}")
    analysis = analysis or SourceAnalysis(model)
    target = -math.log(epsilon)
    lo, hi = _rate_window(analysis, n, theorem)
    lo = max(lo, 1e-9)

    def gap(rate: float) -> float:
        report = markov_bound(model, BoundQuery(n=n, rate=rate, theorem=theorem, epsilon=epsilon), analysis)
        return report.value - target

    last_ok: Optional[Tuple[float, float]] = None
    for rate in _scan_rates(lo, hi):
        rate = float(rate)
        try:
            g = gap(rate)
        except InfeasibleQuery:
            if last_ok is not None:
                logger.warning("%s meets epsilon=%g up to where it stops existing", theorem, epsilon)
                return _feasibility_edge(gap, last_ok[0], rate)
            continue
        if g < 0:
            if last_ok is None:
                raise OutOfWindow(f"epsilon {epsilon:g} unreachable for {theorem} at n={n}")
            root = brentq(gap, last_ok[0], rate, xtol=RATE_TOL)
            logger.debug("rate_for_epsilon %s n=%d eps=%g -> %.9g", theorem, n, epsilon, root)
            return root
        last_ok = (rate, g)
    if last_ok is None:
        raise OutOfWindow(f"{theorem} has no feasible rate at n={n}")
    logger.warning("%s meets epsilon=%g across its whole window; returning its top", theorem, epsilon)
    return last_ok[0]


def default_theorems(model: TransitionModel) -> List[str]:
    """URNG theorems for single-terminal models; A1 (plus A2 when it holds) theorems otherwise."""
    if not model.has_side_info:
        return list(URNG_THEOREMS)
    theorems = ["ach_a1", "conv_a1"]
    if check_assumption(model, "A2").holds:
        theorems += ["ach_a2", "conv_a2"]
    return theorems


def sweep(
    model: TransitionModel,
    n: int,
    neg_log10_eps: List[float],
    theorems: Optional[List[str]] = None,
    analysis: Optional[SourceAnalysis] = None,
) -> List[BoundReport]:
    """rate_for_epsilon over a grid of -log10 epsilon, sorted by epsilon then theorem.

    Infeasible points come back as reports with ``feasible=False`` and no value.
    """
    analysis = analysis or SourceAnalysis(model)
    theorems = sorted(theorems or default_theorems(model))
    reports = []
    for exponent in sorted(neg_log10_eps):
        epsilon = 10.0 ** (-exponent)
        for theorem in theorems:
            try:
                rate = rate_for_epsilon(model, n, epsilon, theorem, analysis)
                query = BoundQuery(n=n, rate=rate, epsilon=epsilon, theorem=theorem)
                reports.append(markov_bound(model, query, analysis))
            except InfeasibleQuery as e:
                logger.debug("sweep %s eps=1e-%g infeasible: %s", theorem, exponent, e)
                reports.append(
                    BoundReport(
                        quantity=THEOREM_QUANTITY[theorem],
                        theorem=theorem,
                        value=None,
                        feasible=False,
                        query=BoundQuery(n=n, epsilon=epsilon, theorem=theorem),
                    )
                )
    return reports
