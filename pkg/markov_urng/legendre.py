"""Legendre-type inverse maps of theta*H_{1+theta} curves and the CGF tail converse."""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import logsumexp

from .errors import DegenerateVariance, NoFeasiblePoint, OutOfWindow, ValidationError
from .markov_core import TransitionModel, log_perron, scaled_exp
from .renyi_measures import THETA_ZERO, RenyiProfile

logger = logging.getLogger(__name__)

THETA_LOW = -0.999
THETA_CAP = 50.0
DEGENERATE_VARIANCE = 1e-12
ROOT_XTOL = 1e-13

S_GRID = np.logspace(-3, 1, 25)
RHO_OFFSETS = np.logspace(-4, math.log10(20.0), 40)
INFEASIBLE_PENALTY = 1e300

DIRECTIONS = (">=", "<=")


def theta_derivative(profile: RenyiProfile, theta: float) -> float:
    """d[theta * H_{1+theta}]/dtheta.

    Analytic (Hellmann-Feynman) when the profile carries it, otherwise a
    central difference with step 1e-5*max(1, |theta|).
    """
    if theta <= -1:
        raise ValidationError(f"theta must exceed -1, got {theta}")
    if profile.derivative_fn is not None:
        return float(profile.derivative_fn(theta))
    if abs(theta) < THETA_ZERO and profile.kind != "two_param":
        return profile.entropy_rate
    h = 1e-5 * max(1.0, abs(theta))
    h = min(h, (theta + 1) / 2)
    return (profile.scaled(theta + h) - profile.scaled(theta - h)) / (2 * h)


@dataclass
class InverseMaps:
    """theta(a), a(R) and R(a) for one profile, with the critical rate.

    ``a`` ranges over derivative values in (a_lower, a_upper); R(a) is
    (1+theta(a))a - theta(a)H_{1+theta(a)} and increases in a.
    """

    profile: RenyiProfile = field(repr=False)
    a_lower: float
    a_upper: float
    critical_rate: float

    def __post_init__(self):
        self.theta_of_a = lru_cache(maxsize=1024)(self._theta_of_a)
        self.a_of_R = lru_cache(maxsize=1024)(self._a_of_R)

    @property
    def source(self) -> str:
        return self.profile.kind

    @property
    def rate_lower(self) -> float:
        """R(a_lower), the bottom of the converse window."""
        return self.R_of_a(self.a_lower)

    def derivative(self, theta: float) -> float:
        return theta_derivative(self.profile, theta)

    def _theta_of_a(self, a: float) -> float:
        if abs(a - self.profile.entropy_rate) <= 1e-15:
            return 0.0
        if not self.a_lower <= a <= self.a_upper:
            raise OutOfWindow(
                f"a = {a:.9g} outside ({self.a_lower:.9g}, {self.a_upper:.9g})"
            )
        if a == self.a_lower:
            return THETA_CAP
        if a == self.a_upper:
            return THETA_LOW
        return brentq(lambda t: self.derivative(t) - a, THETA_LOW, THETA_CAP, xtol=ROOT_XTOL)

    def R_of_a(self, a: float) -> float:
        theta = self.theta_of_a(a)
        return (1 + theta) * a - self.profile.scaled(theta)

    def _a_of_R(self, rate: float) -> float:
        lo, hi = self.R_of_a(self.a_lower), self.R_of_a(self.a_upper)
        if not lo < rate < hi:
            raise OutOfWindow(f"R = {rate:.9g} outside ({lo:.9g}, {hi:.9g})")
        return brentq(lambda a: self.R_of_a(a) - rate, self.a_lower, self.a_upper, xtol=ROOT_XTOL)

    def theta_of_R(self, rate: float) -> float:
        """theta(a(R))."""
        return self.theta_of_a(self.a_of_R(rate))


def build_inverse_maps(profile: RenyiProfile) -> InverseMaps:
    if profile.variance_rate <= DEGENERATE_VARIANCE:
        raise DegenerateVariance(
            f"variance {profile.variance_rate:.3g} is too small for inverse maps"
        )
    a_lower = theta_derivative(profile, THETA_CAP)
    a_upper = theta_derivative(profile, THETA_LOW)
    maps = InverseMaps(profile=profile, a_lower=a_lower, a_upper=a_upper, critical_rate=math.nan)
    a_one = theta_derivative(profile, 1.0)
    maps.critical_rate = 2 * a_one - profile.scaled(1.0)
    logger.debug(
        "inverse maps %s: a in (%.9g, %.9g), R_cr=%.9g",
        profile.kind,
        a_lower,
        a_upper,
        maps.critical_rate,
    )
    return maps


def _legendre_objective(profile: RenyiProfile, rate: float, theta: float) -> float:
    return (profile.scaled(theta) - theta * rate) / (1 + theta)


def legendre_sup(
    profile: RenyiProfile,
    rate: float,
    constrained: bool = True,
    maps: Optional[InverseMaps] = None,
) -> Tuple[float, float]:
    """sup over theta of [-theta R + theta H_{1+theta}]/(1+theta).

    The range is [0, 1] when ``constrained`` and [0, inf) otherwise. Returns
    (exponent, maximiser).
    """
    if rate >= profile.entropy_rate:
        return 0.0, 0.0
    if not constrained:
        if maps is None:
            maps = build_inverse_maps(profile)
        try:
            theta = maps.theta_of_R(rate)
        except OutOfWindow:
            theta = None
        if theta is not None and theta >= 0:
            return _legendre_objective(profile, rate, theta), theta
        upper = THETA_CAP
    else:
        upper = 1.0

    result = minimize_scalar(
        lambda t: -_legendre_objective(profile, rate, t),
        bounds=(0.0, upper),
        method="bounded",
        options={"xatol": 1e-12},
    )
    best_theta, best = float(result.x), float(-result.fun)
    edge = _legendre_objective(profile, rate, upper)
    if edge > best:
        best_theta, best = upper, edge
    return best, best_theta


# ---------------------------------------------------------------------------
# CGF tail converse


@dataclass(eq=False)
class CgfSpec:
    """Per-step CGF phi(rho) of S_n = g~(Z_1) + sum g(Z_i, Z_{i-1}).

    ``corrections(rho)`` returns (lower, upper) with
    (n-1)phi + lower <= log E[e^{rho S_n}] <= (n-1)phi + upper.
    """

    phi: Callable[[float], float]
    mean: float
    corrections: Callable[[float], Tuple[float, float]] = field(default=lambda rho: (0.0, 0.0))
    domain: Tuple[float, float] = (-THETA_CAP, THETA_CAP)
    derivative: Optional[Callable[[float], float]] = None

    def phi_prime(self, rho: float) -> float:
        if self.derivative is not None:
            return float(self.derivative(rho))
        lo, hi = self.domain
        h = 1e-5 * max(1.0, abs(rho))
        h = min(h, (rho - lo) / 2, (hi - rho) / 2)
        return (self.phi(rho + h) - self.phi(rho - h)) / (2 * h)

    def contains(self, rho: float) -> bool:
        lo, hi = self.domain
        return lo < rho < hi


@dataclass(frozen=True)
class TailBound:
    """Upper bound on -log P of a tail event, with the optimisers used."""

    value: float
    s: float
    rho_tilde: float
    rho_a: float

    def __float__(self) -> float:
        return self.value


def rho_of_a(cgf: CgfSpec, a: float) -> float:
    """Solve phi'(rho) = a inside the CGF domain."""
    lo, hi = cgf.domain
    lo_in = lo + 1e-9 * max(1.0, abs(lo))
    hi_in = hi - 1e-9 * max(1.0, abs(hi))
    f_lo, f_hi = cgf.phi_prime(lo_in) - a, cgf.phi_prime(hi_in) - a
    if f_lo * f_hi > 0:
        raise OutOfWindow(f"threshold {a:.9g} is not attained by phi' on {cgf.domain}")
    return brentq(lambda r: cgf.phi_prime(r) - a, lo_in, hi_in, xtol=ROOT_XTOL)


def _tail_objective(cgf: CgfSpec, a: float, rho_a: float, steps: float, n_markov: bool, s: float, rho: float) -> Optional[float]:
    scaled_rho = (1 + s) * rho
    if s <= 0 or not cgf.contains(rho) or not cgf.contains(scaled_rho):
        return None
    if n_markov:
        low_r, _ = cgf.corrections(rho)
        _, up_scaled = cgf.corrections(scaled_rho)
        _, up_a = cgf.corrections(rho_a)
        delta1 = up_scaled - (1 + s) * low_r
        delta2 = (rho - rho_a) * a + up_a - low_r
    else:
        delta1 = delta2 = 0.0
    phi_rho = cgf.phi(rho)
    exponent = steps * ((rho - rho_a) * a + cgf.phi(rho_a) - phi_rho) + delta2
    if not exponent < 0:
        return None
    body = steps * (cgf.phi(scaled_rho) - (1 + s) * phi_rho) + delta1
    return (body - (1 + s) * math.log(-math.expm1(exponent))) / s


def _minimise_tail(cgf: CgfSpec, a: float, direction: str, steps: float, n_markov: bool) -> TailBound:
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction '{direction}'")
    if direction == ">=" and not a > cgf.mean:
        raise OutOfWindow(f"upper tail needs a > mean ({a:.9g} <= {cgf.mean:.9g})")
    if direction == "<=" and not a < cgf.mean:
        raise OutOfWindow(f"lower tail needs a < mean ({a:.9g} >= {cgf.mean:.9g})")
    rho_a = rho_of_a(cgf, a)
    sign = 1.0 if direction == ">=" else -1.0

    def objective(s: float, rho: float) -> Optional[float]:
        if sign * (rho - rho_a) <= 0:
            return None
        return _tail_objective(cgf, a, rho_a, steps, n_markov, s, rho)

    best: Optional[Tuple[float, float, float]] = None
    for s in S_GRID:
        for offset in RHO_OFFSETS:
            rho = rho_a + sign * offset
            value = objective(float(s), float(rho))
            if value is None or not math.isfinite(value):
                continue
            # strict comparison keeps the lowest s, then the lowest offset
            if best is None or value < best[0]:
                best = (value, float(s), float(rho))
    if best is None:
        raise NoFeasiblePoint(f"no feasible (s, rho) for threshold {a:.9g} ({direction})")

    def penalised(point: np.ndarray) -> float:
        value = objective(math.exp(point[0]), float(point[1]))
        return INFEASIBLE_PENALTY if value is None or not math.isfinite(value) else value

    start = np.array([math.log(best[1]), best[2]])
    refined = minimize(penalised, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    if refined.fun < best[0]:
        best = (float(refined.fun), math.exp(float(refined.x[0])), float(refined.x[1]))
    logger.debug("tail converse a=%.6g %s: value=%.9g s=%.4g rho=%.6g", a, direction, *best)
    return TailBound(value=best[0], s=best[1], rho_tilde=best[2], rho_a=rho_a)


def one_shot_tail_converse(cgf: CgfSpec, a: float, direction: str = ">=") -> TailBound:
    """Upper bound on -log P{Z >= a} (or P{Z <= a}) from the CGF of Z alone."""
    return _minimise_tail(cgf, a, direction, steps=1.0, n_markov=False)


def markov_tail_converse(cgf: CgfSpec, a: float, n: int, direction: str = ">=") -> TailBound:
    """Upper bound on -log P{S_n >= a n} (or <= a n) using per-step CGF and corrections."""
    if n < 2:
        raise ValidationError("Markov tail converse needs n >= 2")
    return _minimise_tail(cgf, a, direction, steps=float(n - 1), n_markov=True)


# ---------------------------------------------------------------------------
# CGF constructors


def distribution_cgf(values: Sequence[float], probs: Sequence[float]) -> CgfSpec:
    """CGF of a finitely supported Z with P{Z = values[i]} = probs[i]."""
    vals = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    keep = p > 0
    vals, log_p = vals[keep], np.log(p[keep])
    if vals.size == 0:
        raise ValidationError("distribution has no mass")
    mean = float(np.sum(np.exp(log_p) * vals))
    if float(np.max(vals) - np.min(vals)) <= 0:
        raise DegenerateVariance("constant random variable has no tail converse")

    def phi(rho: float) -> float:
        return float(logsumexp(log_p + rho * vals))

    def derivative(rho: float) -> float:
        tilted = log_p + rho * vals
        return float(np.sum(np.exp(tilted - logsumexp(tilted)) * vals))

    return CgfSpec(phi=phi, mean=mean, derivative=derivative)


def markov_cgf(model: TransitionModel, g, g_initial) -> CgfSpec:
    """CGF of S_n = g_initial(Z_1) + sum g(Z_i, Z_{i-1}) with the finite-n sandwich."""
    g = np.asarray(g, dtype=float)
    g_init = np.asarray(g_initial, dtype=float)
    if g.shape != model.kernel.shape or g_init.shape != model.initial.shape:
        raise ValidationError("g must match the kernel and g_initial the initial distribution")
    support = model.kernel > 0
    log_w = np.where(support, np.log(np.where(support, model.kernel, 1.0)), -np.inf)
    log_init = np.where(model.initial > 0, np.log(np.where(model.initial > 0, model.initial, 1.0)), -np.inf)

    def log_tilted(rho: float) -> np.ndarray:
        return np.where(support, log_w + rho * g, -np.inf)

    @lru_cache(maxsize=4096)
    def perron_at(rho: float):
        return log_perron(log_tilted(rho), normalization="min_entry_one")

    def phi(rho: float) -> float:
        return perron_at(rho)[0]

    def derivative(rho: float) -> float:
        _, result = perron_at(rho)
        scaled, _ = scaled_exp(log_tilted(rho))
        left, right = result.left_vec, result.right_vec
        return float(left @ ((scaled * np.where(support, g, 0.0)) @ right) / (result.eigenvalue * (left @ right)))

    @lru_cache(maxsize=4096)
    def corrections(rho: float) -> Tuple[float, float]:
        _, result = perron_at(rho)
        log_wr = log_init + rho * g_init
        finite = np.isfinite(log_wr)
        upper = float(logsumexp(log_wr[finite] + np.log(result.left_vec[finite])))
        return upper - float(np.log(result.left_vec.max())), upper

    return CgfSpec(
        phi=phi,
        mean=derivative(0.0),
        corrections=corrections,
        domain=(-THETA_CAP, THETA_CAP),
        derivative=derivative,
    )


def profile_cgf(profile: RenyiProfile) -> CgfSpec:
    """CGF of the log-likelihood Z = log P (or log P/Q) behind a theta-profile.

    phi(rho) = -rho H_{1+rho}; the entropy sandwich (lower, upper) maps to
    (-upper, -lower).
    """

    def corrections(rho: float) -> Tuple[float, float]:
        if profile.correction_fn is None:
            return 0.0, 0.0
        terms = profile.corrections(rho)
        return -terms.upper, -terms.lower

    return CgfSpec(
        phi=profile.phi,
        mean=-profile.entropy_rate,
        corrections=corrections,
        domain=(-1.0, THETA_CAP),
        derivative=lambda rho: -theta_derivative(profile, rho),
    )
