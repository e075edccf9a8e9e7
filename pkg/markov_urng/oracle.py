"""Brute-force ground truth: exact path distributions, exact n-letter
entropies and tails, exhaustive optimal Delta(M), and sandwich checks.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .markov_core import TransitionModel, check_assumption
from .renyi_measures import (
    cond_renyi,
    correction_terms,
    min_entropy_rate,
    renyi_entropy,
    renyi_rate,
)

logger = logging.getLogger(__name__)

ENUMERATION_BUDGET = 2**24
EXHAUSTIVE_BUDGET = 10**7
FLUSH_LOG = -700.0
SANDWICH_TOL = 1e-9

SANDWICH_KINDS = ("delta", "xi", "zeta", "delta_inf")
TAIL_DIRECTIONS = ("<", "<=", ">", ">=")


@dataclass
class ExactDistribution:
    """P over all length-n paths; outcome index has the first symbol most significant."""

    n: int
    x_size: int
    y_size: int
    probabilities: np.ndarray
    log_probs: np.ndarray
    flushed: int = 0

    def joint_xy(self) -> np.ndarray:
        """P[x^n, y^n] with both sequences indexed first-symbol-major."""
        shape = (self.x_size, self.y_size) * self.n
        axes = tuple(range(0, 2 * self.n, 2)) + tuple(range(1, 2 * self.n, 2))
        cube = self.probabilities.reshape(shape).transpose(axes)
        return cube.reshape(self.x_size**self.n, self.y_size**self.n)

    def x_marginal(self) -> np.ndarray:
        return self.joint_xy().sum(axis=1)

    def y_marginal(self) -> np.ndarray:
        return self.joint_xy().sum(axis=0)

    def position_marginal(self, t: int) -> np.ndarray:
        """Distribution of the flat state at position t (0-based)."""
        size = self.x_size * self.y_size
        cube = self.probabilities.reshape((size,) * self.n)
        axes = tuple(i for i in range(self.n) if i != t)
        return cube.sum(axis=axes)


def enumerate_paths(model: TransitionModel, n: int) -> ExactDistribution:
    """Exact P_{Z_1} prod W over all (|X||Y|)^n paths, accumulated in log space."""
    if n < 1:
        raise ValidationError("path length must be at least 1")
    size = model.size
    if size**n > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"{size}^{n} outcomes exceed the enumeration budget of 2^24")
    with np.errstate(divide="ignore"):
        log_kernel = np.log(model.kernel.T)  # [from, to]
        log_probs = np.log(model.initial)
    for _ in range(1, n):
        log_probs = (log_probs.reshape(-1, size)[:, :, None] + log_kernel[None]).ravel()
    underflow = np.isfinite(log_probs) & (log_probs < FLUSH_LOG)
    flushed = int(np.count_nonzero(underflow))
    probabilities = np.where(underflow, 0.0, np.exp(log_probs))
    if flushed:
        logger.debug("enumerate n=%d flushed %d outcomes below e^%g", n, flushed, FLUSH_LOG)
    return ExactDistribution(
        n=n,
        x_size=model.x_size,
        y_size=model.y_size,
        probabilities=probabilities,
        log_probs=log_probs,
        flushed=flushed,
    )


def exact_renyi_n(
    model: TransitionModel,
    n: int,
    theta: float,
    variant: str = "single",
    theta_prime: Optional[float] = None,
    dist: Optional[ExactDistribution] = None,
) -> float:
    """Exact n-letter Renyi entropy in nats.

    ``single`` is H_{1+theta}(Z^n) of the whole path (X^n for single-terminal
    models), ``lower``/``upper``/``two_param`` are conditional on Y^n and
    ``min`` is H_inf(X^n).
    """
    dist = dist or enumerate_paths(model, n)
    if variant == "single":
        return renyi_entropy(dist.probabilities, theta)
    if variant == "min":
        return float(-np.log(np.max(dist.x_marginal())))
    if variant in ("lower", "upper", "two_param"):
        return cond_renyi(dist.joint_xy(), theta, variant, theta_prime=theta_prime)
    raise ValueError(f"unknown n-letter variant '{variant}'")


def exact_tail(
    model: TransitionModel,
    n: int,
    gamma: float,
    direction: str = "<",
    conditional: bool = False,
    dist: Optional[ExactDistribution] = None,
) -> float:
    """P{-log P(X^n) <direction> gamma}, or with -log P(X^n|Y^n) when ``conditional``."""
    if direction not in TAIL_DIRECTIONS:
        raise ValueError(f"unknown tail direction '{direction}'")
    dist = dist or enumerate_paths(model, n)
    joint = dist.joint_xy()
    if conditional:
        p_y = joint.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            info = np.log(p_y)[None, :] - np.log(joint)
        mass = joint
    else:
        mass = joint.sum(axis=1)
        with np.errstate(divide="ignore"):
            info = -np.log(mass)
    support = mass > 0
    info, mass = info[support], mass[support]
    selectors = {
        "<": info < gamma,
        "<=": info <= gamma,
        ">": info > gamma,
        ">=": info >= gamma,
    }
    return float(np.sum(mass[selectors[direction]]))


@dataclass
class OptimalDelta:
    value: float
    assignment: Tuple[int, ...]
    rigorous: bool = True

    def __float__(self) -> float:
        return self.value


def _greedy_assignment(masses: np.ndarray, M: int) -> Tuple[float, List[int]]:
    """Heaviest mass to the lightest bin."""
    bins = np.zeros(M)
    assignment = []
    for mass in masses:
        k = int(np.argmin(bins))
        bins[k] += mass
        assignment.append(k)
    return float(np.sum(np.maximum(bins - 1.0 / M, 0.0))), assignment


def optimal_delta(p, M: int) -> OptimalDelta:
    """min over f of the variational distance between P_{f(X)} and uniform on M.

    Exhaustive depth-first search over bin assignments in mixed-radix order.
    The excess mass above 1/M can only grow as masses are added, so it prunes
    any branch that already reaches the incumbent. Bins are interchangeable,
    so each mass may open at most one new bin.
    """
    if M < 1:
        raise ValidationError(f"M must be positive, got {M}")
    arr = np.asarray(p, dtype=float).ravel()
    if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-10:
        raise ValidationError("optimal_delta needs a probability vector")
    order = np.argsort(-arr, kind="stable")
    masses = arr[order][arr[order] > 0]
    level = 1.0 / M

    best_value, best = _greedy_assignment(masses, M)
    if float(M) ** masses.size > EXHAUSTIVE_BUDGET:
        logger.warning(
            "optimal_delta: %d^%d assignments exceed the exhaustive budget; greedy value is not rigorous",
            M,
            masses.size,
        )
        return OptimalDelta(best_value, _restore(best, order, arr), rigorous=False)

    bins = np.zeros(M)
    current: List[int] = []

    def search(index: int, used: int, excess: float) -> None:
        nonlocal best_value, best
        if excess >= best_value:
            return
        if index == masses.size:
            best_value, best = excess, list(current)
            return
        mass = masses[index]
        for k in range(min(used + 1, M)):
            before = max(bins[k] - level, 0.0)
            bins[k] += mass
            after = max(bins[k] - level, 0.0)
            current.append(k)
            search(index + 1, max(used, k + 1), excess + after - before)
            current.pop()
            bins[k] -= mass

    search(0, 0, 0.0)
    return OptimalDelta(float(best_value), _restore(best, order, arr), rigorous=True)


def _restore(assignment: Sequence[int], order: np.ndarray, arr: np.ndarray) -> Tuple[int, ...]:
    """Map bins back to the caller's outcome order; zero-mass outcomes go to bin 0."""
    result = [0] * arr.size
    for k, idx in zip(assignment, order[: len(assignment)]):
        result[int(idx)] = int(k)
    return tuple(result)


@dataclass
class SandwichReport:
    kind: str
    n: int
    theta: Optional[float]
    theta_prime: Optional[float]
    exact: float
    lower: float
    upper: float
    slack_low: float
    slack_high: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def verify_sandwich(
    model: TransitionModel,
    n: int,
    theta: Optional[float] = None,
    kind: str = "delta",
    theta_prime: Optional[float] = None,
    dist: Optional[ExactDistribution] = None,
) -> SandwichReport:
    """Check (n-1)*rate + lower <= exact n-letter value <= (n-1)*rate + upper.

    Values are theta*H for ``delta`` and ``zeta``, theta/(1+theta)*H for
    ``xi`` and H_inf for ``delta_inf``.
    """
    if kind not in SANDWICH_KINDS:
        raise ValueError(f"unknown sandwich kind '{kind}'")
    if n < 2:
        raise ValidationError("sandwich checks need n >= 2")
    if kind != "delta_inf" and theta is None:
        raise ValidationError(f"kind '{kind}' needs theta")
    dist = dist or enumerate_paths(model, n)

    if kind == "delta_inf":
        terms = correction_terms(model, kind="delta_inf")
        rate = min_entropy_rate(model, "single").rate
        exact = exact_renyi_n(model, n, math.inf, "min", dist=dist)
    elif kind == "delta":
        terms = correction_terms(model, theta, "delta")
        variant = "lower_cond" if model.has_side_info else "single"
        rate = theta * renyi_rate(model, theta, variant)
        exact = theta * exact_renyi_n(model, n, theta, "lower" if model.has_side_info else "single", dist=dist)
    elif kind == "xi":
        terms = correction_terms(model, theta, "xi")
        scale = theta / (1 + theta)
        rate = scale * renyi_rate(model, theta, "upper_cond")
        exact = scale * exact_renyi_n(model, n, theta, "upper", dist=dist)
    else:
        if theta_prime is None:
            raise ValidationError("zeta needs theta_prime")
        terms = correction_terms(model, theta, "zeta", theta_prime=theta_prime)
        rate = theta * renyi_rate(model, theta, "two_param", theta_prime=theta_prime)
        exact = theta * exact_renyi_n(model, n, theta, "two_param", theta_prime=theta_prime, dist=dist)

    lower = (n - 1) * rate + terms.lower
    upper = (n - 1) * rate + terms.upper
    slack_low, slack_high = exact - lower, upper - exact
    holds = slack_low >= -SANDWICH_TOL and slack_high >= -SANDWICH_TOL
    if not holds:
        logger.warning("sandwich %s fails at n=%d theta=%s: slacks %.3g / %.3g", kind, n, theta, slack_low, slack_high)
    return SandwichReport(
        kind=kind,
        n=n,
        theta=theta,
        theta_prime=theta_prime,
        exact=exact,
        lower=lower,
        upper=upper,
        slack_low=slack_low,
        slack_high=slack_high,
        holds=holds,
    )


DEFAULT_NS = (8, 10, 12)
DEFAULT_THETAS = (-0.5, -0.2, 0.3, 1.0, 2.0)
SIDE_INFO_NS = (6, 8)


def run_verification(
    model: TransitionModel,
    ns: Sequence[int] = DEFAULT_NS,
    thetas: Sequence[float] = DEFAULT_THETAS,
) -> Dict[str, object]:
    """Full sandwich matrix for a model; pass/fail summary plus every cell."""
    cells: List[SandwichReport] = []
    delta_ok = not model.has_side_info or check_assumption(model, "A1").holds
    for n in ns if delta_ok else ():
        try:
            dist = enumerate_paths(model, n)
        except BudgetExceeded as e:
            logger.warning("skipping n=%d: %s", n, e)
            continue
        for theta in thetas:
            cells.append(verify_sandwich(model, n, theta, "delta", dist=dist))
        if not model.has_side_info:
            cells.append(verify_sandwich(model, n, kind="delta_inf", dist=dist))

    if model.has_side_info and check_assumption(model, "A2").holds:
        for n in SIDE_INFO_NS:
            dist = enumerate_paths(model, n)
            for theta in thetas:
                cells.append(verify_sandwich(model, n, theta, "xi", dist=dist))
                cells.append(verify_sandwich(model, n, theta, "zeta", theta_prime=theta, dist=dist))

    passed = sum(cell.holds for cell in cells)
    return {
        "passed": passed,
        "failed": len(cells) - passed,
        "holds": passed == len(cells),
        "cells": [cell.to_dict() for cell in cells],
    }
