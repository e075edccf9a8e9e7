"""Single-shot and transition-matrix Renyi measures, min-entropy rates and
the finite-length correction constants that sandwich n-letter entropies.

All values are in nats. Transition-matrix measures come from the
Perron-Frobenius eigenvalue of a tilted kernel:

* ``single``      -(1/theta) log lambda_theta,      lambda_theta = PF(W^{1+theta})
* ``lower_cond``  the same with W^{1+theta} W_Y^{-theta}  (needs A1)
* ``upper_cond``  -((1+theta)/theta) log kappa_theta, kappa_theta = PF(K_theta)  (needs A2)
* ``two_param``   -(1/theta) log nu_{theta,theta'} + theta'/(1+theta') H^up_{1+theta'}  (needs A2)
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.special import logsumexp

from .errors import StateSpaceTooLarge, SupportViolation, ValidationError
from .markov_core import (
    TransitionModel,
    check_assumption,
    log_perron,
    log_pf_eigenvalue,
    log_ratio,
    log_tilted_matrix,
    require_assumption,
    scaled_exp,
    stationary_distribution,
    y_kernel,
)

logger = logging.getLogger(__name__)

THETA_ZERO = 1e-6
THETA_NEAR_MINUS_ONE = -1 + 1e-4
VARIANCE_STEP = 1e-3
ZERO_ORDER_STEP = 1e-5
MAX_CYCLE_STATES = 10

RATE_VARIANTS = ("single", "lower_cond", "upper_cond", "two_param")
SINGLE_SHOT_VARIANTS = ("relative", "lower", "upper", "two_param")
CORRECTION_KINDS = ("delta", "xi", "zeta", "delta_inf")


@dataclass(frozen=True)
class CorrectionTerms:
    kind: str
    lower: float
    upper: float
    theta: Optional[float] = None
    theta_prime: Optional[float] = None


@dataclass(frozen=True)
class MinEntropyCertificate:
    rate: float
    best_cycle: Tuple[int, ...]
    cycle_length: int
    path_constant: Optional[float]


@dataclass(eq=False)
class RenyiProfile:
    """theta -> entropy rate for one variant, with its zero-order data.

    ``scaled_fn`` returns theta * H_{1+theta}; ``derivative_fn`` (when the
    variant has an analytic form) returns d[theta * H_{1+theta}]/dtheta.
    """

    kind: str
    entropy_rate: float
    variance_rate: float
    scaled_fn: Callable[[float], float] = field(repr=False)
    derivative_fn: Optional[Callable[[float], float]] = field(default=None, repr=False)
    correction_fn: Optional[Callable[[float], CorrectionTerms]] = field(default=None, repr=False)
    theta_prime: Optional[float] = None
    label: str = ""

    def scaled(self, theta: float) -> float:
        if theta <= -1:
            raise ValidationError(f"theta must exceed -1, got {theta}")
        if theta == 0:
            return 0.0
        return self.scaled_fn(theta)

    def value_at(self, theta: float) -> float:
        if abs(theta) < THETA_ZERO:
            return self.entropy_rate
        return self.scaled(theta) / theta

    def phi(self, theta: float) -> float:
        """CGF of log-likelihood: -theta H_{1+theta}."""
        return -self.scaled(theta)

    def corrections(self, theta: float) -> CorrectionTerms:
        if self.correction_fn is None:
            raise ValidationError(f"profile '{self.kind}' carries no correction terms")
        return self.correction_fn(theta)


# ---------------------------------------------------------------------------
# single-shot measures


def _as_probabilities(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
        raise ValidationError("not a probability distribution")
    return arr


def _safe_log(arr: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(arr > 0, np.log(np.where(arr > 0, arr, 1.0)), -np.inf)


def shannon_entropy(p) -> float:
    arr = _as_probabilities(p).ravel()
    arr = arr[arr > 0]
    return float(-np.sum(arr * np.log(arr)))


def renyi_entropy(p, theta: float) -> float:
    """H_{1+theta}(P) = -(1/theta) log sum P^{1+theta}; Shannon at theta = 0."""
    if theta <= -1:
        raise ValidationError(f"theta must exceed -1, got {theta}")
    arr = _as_probabilities(p).ravel()
    if abs(theta) < THETA_ZERO:
        return shannon_entropy(arr)
    support = arr[arr > 0]
    return float(-logsumexp((1 + theta) * np.log(support)) / theta)


def _joint(p_xy) -> np.ndarray:
    arr = _as_probabilities(p_xy)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError("joint distribution must be indexed as P[x, y]")
    return arr


def optimal_conditioning(p_xy, theta: float) -> np.ndarray:
    """P_Y^{(1+theta)}(y), proportional to [sum_x P(x,y)^{1+theta}]^{1/(1+theta)}."""
    joint = _joint(p_xy)
    log_joint = _safe_log(joint)
    log_mass = logsumexp((1 + theta) * log_joint, axis=0) / (1 + theta)
    return np.exp(log_mass - logsumexp(log_mass))


def _relative_scaled(joint: np.ndarray, q_y: np.ndarray, theta: float) -> float:
    """theta * H_{1+theta}(P_XY | Q_Y)."""
    log_joint = _safe_log(joint)
    log_q = _safe_log(q_y)
    support = joint > 0
    terms = (1 + theta) * log_joint - theta * log_q[None, :]
    return float(-logsumexp(terms[support]))


def _relative_shannon(joint: np.ndarray, q_y: np.ndarray) -> float:
    support = joint > 0
    log_q = np.broadcast_to(_safe_log(q_y)[None, :], joint.shape)
    return float(np.sum(joint[support] * (log_q[support] - np.log(joint[support]))))


def _conditioning_for(joint: np.ndarray, theta: float, variant: str, q_y, theta_prime) -> np.ndarray:
    p_y = joint.sum(axis=0)
    if variant == "relative":
        if q_y is None:
            raise ValidationError("relative variant needs Q_Y")
        q = np.asarray(q_y, dtype=float)
        if q.shape != p_y.shape:
            raise ValidationError("Q_Y has the wrong length")
        if np.any((p_y > 0) & (q <= 0)):
            raise SupportViolation("supp(P_Y) is not contained in supp(Q_Y)")
        return q
    if variant == "lower":
        return p_y
    if variant == "upper":
        return optimal_conditioning(joint, theta)
    if variant == "two_param":
        if theta_prime is None:
            raise ValidationError("two_param variant needs theta_prime")
        if theta_prime <= -1:
            raise ValidationError(f"theta_prime must exceed -1, got {theta_prime}")
        return optimal_conditioning(joint, theta_prime)
    raise ValueError(f"unknown conditional variant '{variant}'")


def cond_renyi(
    p_xy,
    theta: float,
    variant: str = "lower",
    q_y=None,
    theta_prime: Optional[float] = None,
) -> float:
    """Conditional Renyi entropy of order 1+theta; ``p_xy`` is indexed P[x, y]."""
    if theta <= -1:
        raise ValidationError(f"theta must exceed -1, got {theta}")
    joint = _joint(p_xy)
    q = _conditioning_for(joint, theta, variant, q_y, theta_prime)
    if abs(theta) < THETA_ZERO:
        return _relative_shannon(joint, q)
    return _relative_scaled(joint, q, theta) / theta


def conditional_entropy(p_xy) -> float:
    joint = _joint(p_xy)
    return _relative_shannon(joint, joint.sum(axis=0))


def conditional_variance(p_xy, q_y=None) -> float:
    """Var[log Q_Y(Y)/P_XY(X,Y)], with Q_Y = P_Y by default."""
    joint = _joint(p_xy)
    q = joint.sum(axis=0) if q_y is None else np.asarray(q_y, dtype=float)
    support = joint > 0
    info = (_safe_log(q)[None, :] - _safe_log(joint))[support]
    weights = joint[support]
    mean = np.sum(weights * info)
    return float(np.sum(weights * (info - mean) ** 2))


def min_entropy(p, variant: str = "plain") -> float:
    if variant == "plain":
        return float(-np.log(np.max(_as_probabilities(p))))
    joint = _joint(p)
    p_y = joint.sum(axis=0)
    cols = p_y > 0
    cond = joint[:, cols] / p_y[cols]
    if variant == "lower":
        return float(-np.log(np.max(cond)))
    if variant == "upper":
        return float(-np.log(np.sum(p_y[cols] * cond.max(axis=0))))
    raise ValueError(f"unknown min-entropy variant '{variant}'")


def smooth_min_entropy(p, epsilon: float) -> float:
    """Max min-entropy over sub-normalised P' with (1/2)||P - P'||_1 <= epsilon.

    The optimum caps the largest masses at a common level; removing mass m
    costs m/2 in the half-L1 distance, so 2*epsilon of mass is trimmed.
    """
    if not 0 <= epsilon < 1:
        raise ValidationError(f"epsilon must lie in [0, 1), got {epsilon}")
    masses = np.sort(_as_probabilities(p).ravel())[::-1]
    budget = 2 * epsilon
    if budget >= masses.sum():
        return math.inf
    prefix = np.cumsum(masses)
    for k in range(1, masses.size + 1):
        level = (prefix[k - 1] - budget) / k
        nxt = masses[k] if k < masses.size else 0.0
        if level >= nxt:
            return float(-np.log(level))
    return math.inf


def single_shot_profile(p_xy, variant: str = "lower", theta_prime: Optional[float] = None) -> RenyiProfile:
    """Profile theta -> H_{1+theta}(X|Y) of an explicit distribution.

    A 1-D ``p_xy`` is an unconditional distribution; all variants then coincide.
    """
    joint = _joint(p_xy)
    if variant not in ("lower", "upper", "two_param"):
        raise ValueError(f"unknown single-shot profile variant '{variant}'")
    p_y = joint.sum(axis=0)
    fixed_q = None
    if variant == "lower":
        fixed_q = p_y
    elif variant == "two_param":
        fixed_q = _conditioning_for(joint, 0.0, "two_param", None, theta_prime)

    @lru_cache(maxsize=4096)
    def scaled(theta: float) -> float:
        q = fixed_q if fixed_q is not None else optimal_conditioning(joint, theta)
        return _relative_scaled(joint, q, theta)

    derivative = None
    if fixed_q is not None:
        support = joint > 0
        info = (_safe_log(fixed_q)[None, :] - _safe_log(joint))[support]
        log_weights = np.log(joint[support])

        def derivative(theta: float) -> float:
            tilted = log_weights - theta * info
            tilted = np.exp(tilted - logsumexp(tilted))
            return float(np.sum(tilted * info))

    if fixed_q is None:
        entropy = _relative_shannon(joint, p_y)
        variance = conditional_variance(joint)
    else:
        entropy = _relative_shannon(joint, fixed_q)
        variance = conditional_variance(joint, fixed_q)
    return RenyiProfile(
        kind=variant,
        entropy_rate=entropy,
        variance_rate=variance,
        scaled_fn=scaled,
        derivative_fn=derivative,
        theta_prime=theta_prime,
        label="single-shot",
    )


# ---------------------------------------------------------------------------
# transition-matrix measures


def _log_joint4(model: TransitionModel) -> np.ndarray:
    """log W[x, y, x', y'], -inf off support."""
    return _safe_log(model.joint_kernel())


def _log_y_moment(model: TransitionModel, theta: float) -> np.ndarray:
    """log W_{Y,theta}(y|y') = log sum_x W(x,y|x',y')^{1+theta}, read at x' = 0."""
    require_assumption(model, "A2")
    log_w = _log_joint4(model)[:, :, 0, :]
    return logsumexp((1 + theta) * log_w, axis=0)


def _log_k_matrix(model: TransitionModel, theta: float) -> np.ndarray:
    return _log_y_moment(model, theta) / (1 + theta)


def _log_n_matrix(model: TransitionModel, theta: float, theta_prime: float) -> np.ndarray:
    log_num = _log_y_moment(model, theta)
    log_den = _log_y_moment(model, theta_prime)
    ratio = np.where(np.isfinite(log_den), log_den, 0.0)
    return np.where(np.isfinite(log_num), log_num - theta * ratio / (1 + theta_prime), -np.inf)


def _check_variant(model: TransitionModel, variant: str) -> None:
    if variant not in RATE_VARIANTS:
        raise ValueError(f"unknown rate variant '{variant}'")
    if variant == "lower_cond":
        require_assumption(model, "A1")
    elif variant in ("upper_cond", "two_param"):
        require_assumption(model, "A2")


def _log_lambda(model: TransitionModel, theta: float, variant: str) -> float:
    return log_pf_eigenvalue(log_tilted_matrix(model, theta, variant))


def _upper_scaled(model: TransitionModel, theta: float) -> float:
    """theta * H^{up,W}_{1+theta} = -(1+theta) log kappa_theta."""
    return -(1 + theta) * log_pf_eigenvalue(_log_k_matrix(model, theta))


def _two_param_scaled(model: TransitionModel, theta: float, theta_prime: float) -> float:
    log_nu = log_pf_eigenvalue(_log_n_matrix(model, theta, theta_prime))
    if abs(theta_prime) < THETA_ZERO:
        shift = 0.0
    else:
        shift = _upper_scaled(model, theta_prime) / (1 + theta_prime)
    return -log_nu + theta * shift


def entropy_rate(model: TransitionModel, conditional: bool = False) -> float:
    """H^W (or H^W(X|Y) under A1) from stationary-weighted one-step entropies."""
    variant = "lower_cond" if conditional else "single"
    if conditional:
        require_assumption(model, "A1")
    pi = stationary_distribution(model)
    g = log_ratio(model, variant)
    return float(-np.sum(model.kernel * g * pi[None, :]))


def _phi_derivative(model: TransitionModel, theta: float, variant: str) -> float:
    """d/dtheta log lambda_theta = <l, (W~ o g) r> / (lambda <l, r>)."""
    log_lambda, result = log_perron(log_tilted_matrix(model, theta, variant), normalization="sum_one")
    scaled, _ = scaled_exp(log_tilted_matrix(model, theta, variant))
    g = log_ratio(model, variant)
    left, right = result.left_vec, result.right_vec
    numerator = left @ ((scaled * g) @ right)
    return float(numerator / (result.eigenvalue * (left @ right)))


def _richardson_second(fn: Callable[[float], float], h: float) -> float:
    """Second derivative at 0 of fn with fn(0) = 0, central differences plus Richardson."""

    def second(step: float) -> float:
        return (fn(step) + fn(-step)) / (step * step)

    return (4 * second(h / 2) - second(h)) / 3


def variance_rate(model: TransitionModel, conditional: bool = False) -> float:
    """V^W as the second derivative of phi(theta) = log lambda_theta at 0."""
    variant = "lower_cond" if conditional else "single"
    if conditional:
        require_assumption(model, "A1")
    value = _richardson_second(lambda t: _log_lambda(model, t, variant), VARIANCE_STEP)
    return max(value, 0.0)


def renyi_rate(
    model: TransitionModel,
    theta: float,
    variant: str = "single",
    theta_prime: Optional[float] = None,
) -> float:
    """Transition-matrix Renyi entropy rate H^W_{1+theta} in nats."""
    if theta <= -1:
        raise ValidationError(f"theta must exceed -1, got {theta}")
    _check_variant(model, variant)
    if variant == "two_param":
        if theta_prime is None or theta_prime <= -1:
            raise ValidationError("two_param needs theta_prime > -1")
    if abs(theta) < THETA_ZERO:
        if variant == "two_param":
            h = ZERO_ORDER_STEP
            scaled = _two_param_scaled
            return (scaled(model, h, theta_prime) - scaled(model, -h, theta_prime)) / (2 * h)
        return entropy_rate(model, conditional=variant != "single")
    if variant == "upper_cond":
        return _upper_scaled(model, theta) / theta
    if variant == "two_param":
        return _two_param_scaled(model, theta, theta_prime) / theta
    return -_log_lambda(model, theta, variant) / theta


def zero_order_rate(model: TransitionModel, variant: str = "single") -> float:
    """H_0^W approximated at theta = -1 + 1e-4 (the order-0 rate is only a limit)."""
    return renyi_rate(model, THETA_NEAR_MINUS_ONE, variant)


# ---------------------------------------------------------------------------
# correction terms


def _initial_log_w(model: TransitionModel, theta: float, conditional: bool) -> np.ndarray:
    """log w_theta = log P_{Z1}^{1+theta} P_{Y1}^{-theta} over flat states."""
    log_p = _safe_log(model.initial)
    values = (1 + theta) * log_p
    if conditional:
        p_y = model.initial_y()
        ys = np.arange(model.size) % model.y_size
        values = values - theta * np.where(p_y[ys] > 0, np.log(np.where(p_y[ys] > 0, p_y[ys], 1.0)), 0.0)
    return np.where(model.initial > 0, values, -np.inf)


def _sandwich_pair(left_min_one: np.ndarray, log_w: np.ndarray) -> Tuple[float, float]:
    """(-log <v|w>, -log <v|w> + log max v) for a min-entry-one vector v."""
    support = np.isfinite(log_w)
    log_inner = float(logsumexp(log_w[support] + np.log(left_min_one[support])))
    lower = -log_inner
    return lower, lower + float(np.log(np.max(left_min_one)))


def _delta(model: TransitionModel, theta: float, conditional: bool) -> CorrectionTerms:
    variant = "lower_cond" if conditional else "single"
    _, result = log_perron(log_tilted_matrix(model, theta, variant), normalization="min_entry_one")
    lower, upper = _sandwich_pair(result.left_vec, _initial_log_w(model, theta, conditional))
    return CorrectionTerms(kind="delta", lower=lower, upper=upper, theta=theta)


def _xi(model: TransitionModel, theta: float) -> CorrectionTerms:
    _, result = log_perron(_log_k_matrix(model, theta), normalization="min_entry_one")
    log_p = _safe_log(model.initial_joint())
    log_w = logsumexp((1 + theta) * log_p, axis=0) / (1 + theta)
    lower, upper = _sandwich_pair(result.left_vec, log_w)
    return CorrectionTerms(kind="xi", lower=lower, upper=upper, theta=theta)


def _zeta(model: TransitionModel, theta: float, theta_prime: float) -> CorrectionTerms:
    _, result = log_perron(_log_n_matrix(model, theta, theta_prime), normalization="min_entry_one")
    log_p = _safe_log(model.initial_joint())
    log_num = logsumexp((1 + theta) * log_p, axis=0)
    log_den = logsumexp((1 + theta_prime) * log_p, axis=0)
    log_w = np.where(
        np.isfinite(log_num),
        log_num - theta * np.where(np.isfinite(log_den), log_den, 0.0) / (1 + theta_prime),
        -np.inf,
    )
    base_lower, base_upper = _sandwich_pair(result.left_vec, log_w)
    xi = _xi(model, theta_prime)
    if theta > 0:
        lower, upper = base_lower + theta * xi.lower, base_upper + theta * xi.upper
    else:
        lower, upper = base_lower + theta * xi.upper, base_upper + theta * xi.lower
    return CorrectionTerms(kind="zeta", lower=lower, upper=upper, theta=theta, theta_prime=theta_prime)


def correction_terms(
    model: TransitionModel,
    theta: Optional[float] = None,
    kind: str = "delta",
    theta_prime: Optional[float] = None,
    conditional: Optional[bool] = None,
) -> CorrectionTerms:
    """Initial-distribution constants that sandwich the n-letter quantity.

    ``conditional`` selects the lower conditional tilt for ``delta``; it
    defaults to whether the model carries side information.
    """
    if kind not in CORRECTION_KINDS:
        raise ValueError(f"unknown correction kind '{kind}'")
    if kind == "delta_inf":
        certificate = min_entropy_rate(model, "single")
        top = float(np.max(model.initial))
        a = certificate.path_constant
        lower = -np.log(top) + np.log(a)
        upper = (
            certificate.cycle_length * certificate.rate
            - np.log(top)
            - np.log(min(a, np.exp(-certificate.rate)))
        )
        return CorrectionTerms(kind="delta_inf", lower=float(lower), upper=float(upper))

    if theta is None or theta <= -1:
        raise ValidationError("correction terms need theta > -1")
    if kind == "delta":
        cond = model.has_side_info if conditional is None else conditional
        if cond:
            require_assumption(model, "A1")
        return _delta(model, theta, cond)
    require_assumption(model, "A2")
    if kind == "xi":
        return _xi(model, theta)
    if theta_prime is None or theta_prime <= -1:
        raise ValidationError("zeta needs theta_prime > -1")
    return _zeta(model, theta, theta_prime)


# ---------------------------------------------------------------------------
# profiles


def renyi_profile(
    model: TransitionModel,
    variant: str = "single",
    theta_prime: Optional[float] = None,
) -> RenyiProfile:
    """Memoised theta -> H^W_{1+theta} curve with its corrections and zero-order data."""
    _check_variant(model, variant)
    conditional = variant != "single"
    if variant == "two_param" and (theta_prime is None or theta_prime <= -1):
        raise ValidationError("two_param needs theta_prime > -1")

    derivative = None
    if variant in ("single", "lower_cond"):

        @lru_cache(maxsize=4096)
        def scaled(theta: float) -> float:
            return -_log_lambda(model, theta, variant)

        @lru_cache(maxsize=4096)
        def derivative(theta: float) -> float:
            return -_phi_derivative(model, theta, variant)

        @lru_cache(maxsize=4096)
        def corrections(theta: float) -> CorrectionTerms:
            return _delta(model, theta, conditional)

    elif variant == "upper_cond":

        @lru_cache(maxsize=4096)
        def scaled(theta: float) -> float:
            return _upper_scaled(model, theta)

        @lru_cache(maxsize=4096)
        def corrections(theta: float) -> CorrectionTerms:
            return _xi(model, theta)

    else:

        @lru_cache(maxsize=4096)
        def scaled(theta: float) -> float:
            return _two_param_scaled(model, theta, theta_prime)

        @lru_cache(maxsize=4096)
        def corrections(theta: float) -> CorrectionTerms:
            return _zeta(model, theta, theta_prime)

    if variant == "two_param":
        h = ZERO_ORDER_STEP
        entropy = (scaled(h) - scaled(-h)) / (2 * h)
    else:
        entropy = entropy_rate(model, conditional=conditional)
    if variant in ("single", "lower_cond"):
        variance = variance_rate(model, conditional=conditional)
    else:
        variance = max(_richardson_second(lambda t: -scaled(t), VARIANCE_STEP), 0.0)
    logger.debug("profile %s: H=%.9g V=%.9g", variant, entropy, variance)
    return RenyiProfile(
        kind=variant,
        entropy_rate=entropy,
        variance_rate=variance,
        scaled_fn=scaled,
        derivative_fn=derivative,
        correction_fn=corrections,
        theta_prime=theta_prime,
        label="transition-matrix",
    )


# ---------------------------------------------------------------------------
# min-entropy rates


def _weight_graph(log_weights: np.ndarray) -> nx.DiGraph:
    """Edge a -> b carrying log weight for every finite (to=b, from=a) entry."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(log_weights.shape[0]))
    to_idx, from_idx = np.nonzero(np.isfinite(log_weights))
    for b, a in zip(to_idx.tolist(), from_idx.tolist()):
        graph.add_edge(a, b, weight=float(log_weights[b, a]))
    return graph


def _best_cycle(graph: nx.DiGraph) -> Tuple[float, Tuple[int, ...]]:
    """Maximum mean log weight over simple cycles (self-loops included)."""
    best_mean, best = -math.inf, ()
    for cycle in nx.simple_cycles(graph):
        closed = list(cycle) + [cycle[0]]
        total = sum(graph[u][v]["weight"] for u, v in zip(closed, closed[1:]))
        mean = total / len(cycle)
        if mean > best_mean + 1e-15:
            best_mean, best = mean, tuple(closed)
    return best_mean, best


def _path_constant(log_weights: np.ndarray) -> float:
    """min over ordered pairs of the max-probability simple path between them."""
    size = log_weights.shape[0]
    if size == 1:
        return 1.0
    # edge[a, b] = log weight of a -> b
    edge = log_weights.T
    worst = math.inf
    for start in range(size):
        best = np.full((1 << size, size), -np.inf)
        best[1 << start, start] = 0.0
        for mask in range(1 << size):
            if not (mask >> start) & 1:
                continue
            row = best[mask]
            ends = np.nonzero(np.isfinite(row))[0]
            for v in ends:
                candidates = row[v] + edge[v]
                for w in np.nonzero(np.isfinite(candidates))[0]:
                    if (mask >> w) & 1:
                        continue
                    nxt = mask | (1 << w)
                    if candidates[w] > best[nxt, w]:
                        best[nxt, w] = candidates[w]
        reach = best.max(axis=0)
        for end in range(size):
            if end != start:
                worst = min(worst, float(reach[end]))
    return float(np.exp(worst))


def min_entropy_rate(model: TransitionModel, variant: str = "single") -> MinEntropyCertificate:
    """H_inf^W via the best simple cycle (single, lower_cond) or kappa_inf (upper_cond)."""
    if variant == "upper_cond":
        require_assumption(model, "A2")
        log_w = _log_joint4(model)
        wy = y_kernel(model)
        log_wy = _safe_log(wy)
        log_t = np.max(log_w[:, :, 0, :], axis=0) - np.where(np.isfinite(log_wy), log_wy, 0.0)
        log_m = np.where(np.isfinite(log_wy), log_wy + log_t, -np.inf)
        rate = -log_pf_eigenvalue(log_m)
        return MinEntropyCertificate(rate=rate, best_cycle=(), cycle_length=0, path_constant=None)

    if variant not in ("single", "lower_cond"):
        raise ValueError(f"unknown min-entropy variant '{variant}'")
    if model.size > MAX_CYCLE_STATES:
        raise StateSpaceTooLarge(
            f"cycle enumeration supports at most {MAX_CYCLE_STATES} states, model has {model.size}"
        )
    if variant == "lower_cond":
        require_assumption(model, "A1")
    with np.errstate(divide="ignore"):
        base = np.where(model.kernel > 0, np.log(np.where(model.kernel > 0, model.kernel, 1.0)), -np.inf)
    g = log_ratio(model, variant)
    log_weights = np.where(model.kernel > 0, g, -np.inf) if variant == "lower_cond" else base

    best_mean, cycle = _best_cycle(_weight_graph(log_weights))
    constant = _path_constant(log_weights)
    rate = float(-best_mean)
    logger.debug("min-entropy cycle %s rate %.9g path constant %.6g", cycle, rate, constant)
    return MinEntropyCertificate(
        rate=rate, best_cycle=cycle, cycle_length=len(cycle) - 1, path_constant=constant
    )


# ---------------------------------------------------------------------------
# two-state closed form


@dataclass(frozen=True)
class BinaryClosedForm:
    eigenvalue: float
    tilted_stationary: np.ndarray
    left_vec: np.ndarray


def binary_closed_form(p: float, q: float, theta: float) -> BinaryClosedForm:
    """lambda_theta and PF vectors of [[(1-p)^a, q^a], [p^a, (1-q)^a]], a = 1+theta."""
    a = 1 + theta
    stay0, stay1 = (1 - p) ** a, (1 - q) ** a
    flip0, flip1 = p**a, q**a
    eigenvalue = (stay0 + stay1) / 2 + math.sqrt((stay0 - stay1) ** 2 + 4 * flip0 * flip1) / 2
    gap = eigenvalue - stay0
    right = np.array([flip1, gap]) / (flip1 + gap)
    # W~^T v = lambda v  =>  v proportional to (p^a, lambda - (1-p)^a)
    left = np.array([flip0, gap])
    left = left / left.min()
    return BinaryClosedForm(eigenvalue=eigenvalue, tilted_stationary=right, left_vec=left)


def spectrum_table(model: TransitionModel, thetas) -> Dict[str, object]:
    """Per-theta rates of every variant the model supports, plus zero-order data."""
    variants = ["single"]
    if model.has_side_info:
        if check_assumption(model, "A1").holds:
            variants.append("lower_cond")
        if check_assumption(model, "A2").holds:
            variants.append("upper_cond")
    rows = []
    for theta in thetas:
        row = {"theta": float(theta)}
        for variant in variants:
            row[variant] = renyi_rate(model, float(theta), variant)
        rows.append(row)
    conditional = "lower_cond" in variants
    summary = {
        "entropy_rate": entropy_rate(model),
        "variance_rate": variance_rate(model),
    }
    if conditional:
        summary["cond_entropy_rate"] = entropy_rate(model, conditional=True)
        summary["cond_variance_rate"] = variance_rate(model, conditional=True)
    if model.size <= MAX_CYCLE_STATES:
        summary["min_entropy_rate"] = min_entropy_rate(model).rate
    return {"variants": variants, "rows": rows, "summary": summary}
