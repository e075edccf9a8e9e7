"""Transition-matrix data model, validation and Perron-Frobenius machinery.

Kernels are stored in (to, from) orientation: ``kernel[z, z_prev]`` is the
probability of moving from ``z_prev`` to ``z``, so every column sums to one.
Joint states over X x Y are flattened as ``z = x * y_size + y``.
"""

import json
import logging
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path
from typing import Optional, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    AssumptionViolated,
    ConvergenceFailure,
    MalformedDocument,
    NotIrreducible,
    NotStochastic,
    ValidationError,
)

logger = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-12
PERRON_TOL = 1e-14
PERRON_MAX_ITER = 100_000
RAYLEIGH_OFFSET = 1e-12
RAYLEIGH_SLACK = 1e-12
RAYLEIGH_HANDOFF = 1e-8

NORMALIZATIONS = ("min_entry_one", "sum_one")
TILT_VARIANTS = ("single", "lower_cond")


@dataclass(frozen=True)
class TransitionModel:
    x_size: int
    y_size: int
    kernel: np.ndarray
    initial: np.ndarray
    period: int = 1

    @property
    def size(self) -> int:
        return self.x_size * self.y_size

    @property
    def has_side_info(self) -> bool:
        return self.y_size > 1

    def state(self, z: int) -> Tuple[int, int]:
        """Decode a flat state index into (x, y)."""
        return divmod(z, self.y_size)

    def joint_kernel(self) -> np.ndarray:
        """Kernel reshaped to W[x, y, x_prev, y_prev]."""
        return self.kernel.reshape(self.x_size, self.y_size, self.x_size, self.y_size)

    def initial_joint(self) -> np.ndarray:
        """Initial distribution reshaped to P[x, y]."""
        return self.initial.reshape(self.x_size, self.y_size)

    def initial_y(self) -> np.ndarray:
        return self.initial_joint().sum(axis=0)


@dataclass(frozen=True)
class PerronResult:
    eigenvalue: float
    right_vec: np.ndarray
    left_vec: np.ndarray
    normalization: str = "sum_one"


@dataclass
class AssumptionReport:
    assumption: str
    holds: bool
    max_deviation: float
    tolerance: float
    witness: Optional[Tuple[int, int, int, int]] = None

    def to_dict(self) -> dict:
        return {
            "assumption": self.assumption,
            "holds": self.holds,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "witness": list(self.witness) if self.witness is not None else None,
        }


def _support_graph(matrix: np.ndarray) -> nx.DiGraph:
    """Directed graph with an edge from -> to for every positive (to, from) entry."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(matrix.shape[0]))
    to_idx, from_idx = np.nonzero(matrix > 0)
    graph.add_edges_from(zip(from_idx.tolist(), to_idx.tolist()))
    return graph


def is_irreducible(matrix: np.ndarray) -> bool:
    support = csr_matrix((np.asarray(matrix) > 0).astype(np.int8))
    n_components, _ = connected_components(support, directed=True, connection="strong")
    return n_components == 1


def chain_period(matrix: np.ndarray) -> int:
    """Period of an irreducible support graph from BFS levels."""
    graph = _support_graph(matrix)
    levels = nx.single_source_shortest_path_length(graph, 0)
    period = 0
    for u, v in graph.edges():
        period = gcd(period, levels[u] + 1 - levels[v])
    return abs(period) or 1


def build_model(
    kernel,
    initial,
    x_size: Optional[int] = None,
    y_size: int = 1,
    convention: str = "to_from",
) -> TransitionModel:
    """Validate arrays and return a TransitionModel in (to, from) orientation."""
    try:
        matrix = np.array(kernel, dtype=float)
        init = np.array(initial, dtype=float)
    except (TypeError, ValueError) as e:
        raise MalformedDocument(f"kernel and initial must be numeric arrays: {e}")

    if convention not in ("to_from", "from_to"):
        raise MalformedDocument(f"unknown convention '{convention}'")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise MalformedDocument(f"kernel must be square, got shape {matrix.shape}")
    if convention == "from_to":
        matrix = matrix.T.copy()

    size = matrix.shape[0]
    if y_size < 1:
        raise MalformedDocument("y_size must be positive")
    if x_size is None:
        x_size = size // y_size
    if x_size < 1 or x_size * y_size != size:
        raise MalformedDocument(
            f"kernel size {size} does not match x_size*y_size = {x_size}*{y_size}"
        )
    if init.shape != (size,):
        raise MalformedDocument(f"initial must have {size} entries, got shape {init.shape}")
    if not np.all(np.isfinite(matrix)) or not np.all(np.isfinite(init)):
        raise MalformedDocument("kernel and initial must be finite")

    negative = np.argwhere(matrix < 0)
    if negative.size:
        column = int(negative[0][1])
        raise NotStochastic(f"negative entry in column {column}", column=column)
    sums = matrix.sum(axis=0)
    bad = np.nonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)[0]
    if bad.size:
        column = int(bad[0])
        raise NotStochastic(
            f"column {column} sums to {sums[column]:.15g}, expected 1", column=column
        )
    if np.any(init < 0) or abs(init.sum() - 1.0) > STOCHASTIC_TOL:
        raise NotStochastic(f"initial distribution sums to {init.sum():.15g}, expected 1")
    if not is_irreducible(matrix):
        raise NotIrreducible("kernel is not irreducible")

    period = chain_period(matrix)
    matrix.setflags(write=False)
    init.setflags(write=False)
    return TransitionModel(x_size=x_size, y_size=y_size, kernel=matrix, initial=init, period=period)


def parse_model(document: str) -> TransitionModel:
    """Parse the JSON model document."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"invalid JSON: {e}")
    if not isinstance(data, dict):
        raise MalformedDocument("model document must be a JSON object")
    missing = [k for k in ("x_size", "kernel", "initial") if k not in data]
    if missing:
        raise MalformedDocument(f"missing keys: {', '.join(missing)}")
    x_size, y_size = data["x_size"], data.get("y_size", 1)
    if not isinstance(x_size, int) or not isinstance(y_size, int):
        raise MalformedDocument("x_size and y_size must be integers")
    return build_model(
        data["kernel"],
        data["initial"],
        x_size=x_size,
        y_size=y_size,
        convention=data.get("convention", "to_from"),
    )


def load_model(path: str) -> TransitionModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise MalformedDocument(f"cannot read model file {path}: {e}")
    return parse_model(text)


def model_document(model: TransitionModel) -> dict:
    return {
        "x_size": model.x_size,
        "y_size": model.y_size,
        "convention": "to_from",
        "kernel": model.kernel.tolist(),
        "initial": model.initial.tolist(),
    }


def binary_kernel(p: float, q: float) -> np.ndarray:
    """Two-state kernel with flip probabilities p (from 0) and q (from 1)."""
    return np.array([[1.0 - p, q], [p, 1.0 - q]])


def binary_model(p: float, q: float, initial=(1.0, 0.0)) -> TransitionModel:
    return build_model(binary_kernel(p, q), initial)


def iid_model(dist, initial=None) -> TransitionModel:
    """Memoryless chain: every column equals ``dist``."""
    dist = np.asarray(dist, dtype=float)
    kernel = np.tile(dist[:, None], (1, dist.size))
    return build_model(kernel, dist if initial is None else initial)


def _rayleigh_step(matrix: np.ndarray, vec: np.ndarray) -> Optional[np.ndarray]:
    """Inverse iteration shifted just above the Rayleigh quotient of ``vec``.

    None when the solve is singular or the result leaves the nonnegative cone.
    """
    rho = float(vec @ matrix @ vec) / float(vec @ vec)
    try:
        nxt = np.linalg.solve(matrix - (rho + RAYLEIGH_OFFSET) * np.eye(matrix.shape[0]), vec)
    except np.linalg.LinAlgError:
        return None
    total = nxt.sum()
    if not np.isfinite(total) or total == 0:
        return None
    nxt = nxt / total
    if nxt.min() < -RAYLEIGH_SLACK:
        return None
    return np.maximum(nxt, 0.0)


def _dominant_vector(matrix: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Sum-one PF vector of ``matrix`` (entries scaled to max 1)."""
    size = matrix.shape[0]
    values, vectors = np.linalg.eig(matrix)
    start = np.abs(vectors[:, int(np.argmax(values.real))].real)
    if not np.all(np.isfinite(start)) or start.sum() <= 0:
        start = np.ones(size)
    vec = start / start.sum()

    # I + M is primitive whenever M is irreducible, so plain power steps converge
    shifted = matrix + np.eye(size)
    polishing = False
    for iteration in range(max_iter):
        nxt = None if polishing else _rayleigh_step(matrix, vec)
        if nxt is None:
            nxt = shifted @ vec
            nxt /= nxt.sum()
        change = np.max(np.abs(nxt - vec))
        if change <= tol:
            logger.debug("power iteration converged after %d steps", iteration + 1)
            return nxt
        # inverse steps stall at rounding level; finish with power steps
        polishing = polishing or change <= RAYLEIGH_HANDOFF
        vec = nxt
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} steps")


def perron(
    matrix,
    normalization: str = "sum_one",
    tol: float = PERRON_TOL,
    max_iter: int = PERRON_MAX_ITER,
) -> PerronResult:
    """Perron-Frobenius eigenvalue with right (M r) and left (M^T l) eigenvectors."""
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization '{normalization}'")
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {m.shape}")
    if np.any(m < 0):
        raise ValidationError("matrix must be nonnegative")
    scale = m.max()
    if scale <= 0:
        raise ConvergenceFailure("zero matrix has no Perron-Frobenius eigenvector")

    scaled = m / scale
    right = _dominant_vector(scaled, tol, max_iter)
    left = _dominant_vector(scaled.T, tol, max_iter)
    eigenvalue = float(left @ scaled @ right / (left @ right)) * scale

    if normalization == "min_entry_one":
        if right.min() <= 0 or left.min() <= 0:
            raise ConvergenceFailure("eigenvector is not strictly positive")
        right = right / right.min()
        left = left / left.min()
    return PerronResult(eigenvalue=eigenvalue, right_vec=right, left_vec=left, normalization=normalization)


def pf_eigenvalue(matrix) -> float:
    return perron(matrix).eigenvalue


def stationary_distribution(model: TransitionModel) -> np.ndarray:
    """Stationary distribution pi with W pi = pi."""
    return perron(model.kernel).right_vec


def y_marginal_by_column(model: TransitionModel) -> np.ndarray:
    """S[y, x_prev, y_prev] = sum_x W(x, y | x_prev, y_prev)."""
    return model.joint_kernel().sum(axis=0)


def y_kernel(model: TransitionModel) -> np.ndarray:
    """W_Y(y | y_prev); meaningful when the non-hidden condition holds."""
    return y_marginal_by_column(model)[:, 0, :]


def check_assumption(model: TransitionModel, which: str, tol: float = 1e-10) -> AssumptionReport:
    """Check the non-hidden (A1) or strongly non-hidden (A2) condition on Y."""
    if which not in ("A1", "A2"):
        raise ValueError(f"unknown assumption '{which}'")

    marginal = y_marginal_by_column(model)  # [y, x', y']
    spread = marginal.max(axis=1) - marginal.min(axis=1)  # [y, y']
    deviation = float(spread.max()) if spread.size else 0.0
    witness = None
    if deviation > 0:
        y, y_prev = np.unravel_index(int(np.argmax(spread)), spread.shape)
        column = marginal[y, :, y_prev]
        witness = (int(np.argmax(column)), int(np.argmin(column)), int(y_prev), int(y))

    if which == "A2":
        w4 = model.joint_kernel()
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = np.where(marginal[None] > 0, w4 / marginal[None], 0.0)  # V[x, y, x', y']
        ordered = np.sort(cond, axis=0)
        for y in range(model.y_size):
            for y_prev in range(model.y_size):
                block = ordered[:, y, :, y_prev]  # [rank, x']
                gaps = np.abs(block - block[:, :1]).max(axis=0)
                worst = int(np.argmax(gaps))
                if gaps[worst] > deviation:
                    deviation = float(gaps[worst])
                    witness = (0, worst, y_prev, y)

    holds = deviation <= tol
    report = AssumptionReport(
        assumption=which,
        holds=holds,
        max_deviation=deviation,
        tolerance=tol,
        witness=None if holds else witness,
    )
    logger.debug("assumption %s: holds=%s deviation=%.3g", which, holds, deviation)
    return report


def require_assumption(model: TransitionModel, which: str) -> None:
    report = check_assumption(model, which)
    if not report.holds:
        raise AssumptionViolated(
            f"assumption {which} violated (max deviation {report.max_deviation:.3g})",
            report=report,
        )


def log_ratio(model: TransitionModel, variant: str) -> np.ndarray:
    """Generator g(z, z_prev): log W for 'single', log W/W_Y for 'lower_cond'; 0 off support."""
    matrix = model.kernel
    with np.errstate(divide="ignore"):
        g = np.where(matrix > 0, np.log(np.where(matrix > 0, matrix, 1.0)), 0.0)
    if variant == "lower_cond":
        wy = _expanded_y_kernel(model)
        g = np.where(matrix > 0, g - np.log(np.where(wy > 0, wy, 1.0)), 0.0)
    return g


def _expanded_y_kernel(model: TransitionModel) -> np.ndarray:
    """W_Y(y | y_prev) laid out on the flat (z, z_prev) grid."""
    wy = y_kernel(model)
    ys = np.arange(model.size) % model.y_size
    return wy[ys[:, None], ys[None, :]]


def _check_tilt(model: TransitionModel, theta: float, variant: str) -> None:
    if theta <= -1:
        raise ValidationError(f"theta must exceed -1, got {theta}")
    if variant not in TILT_VARIANTS:
        raise ValueError(f"unknown tilt variant '{variant}'")
    if variant == "lower_cond":
        require_assumption(model, "A1")
        wy = _expanded_y_kernel(model)
        if np.any((model.kernel > 0) & (wy <= 0)):
            raise AssumptionViolated("joint kernel has mass where W_Y vanishes")


def tilted_matrix(model: TransitionModel, theta: float, variant: str = "single") -> np.ndarray:
    """W^{1+theta} (single) or W^{1+theta} W_Y^{-theta} (lower_cond); zeros preserved."""
    _check_tilt(model, theta, variant)
    matrix = model.kernel
    if theta == 0:
        return matrix.copy()
    g = log_ratio(model, variant)
    return np.where(matrix > 0, matrix * np.exp(theta * g), 0.0)


def log_tilted_matrix(model: TransitionModel, theta: float, variant: str = "single") -> np.ndarray:
    """Elementwise log of ``tilted_matrix``; -inf off the support."""
    _check_tilt(model, theta, variant)
    matrix = model.kernel
    with np.errstate(divide="ignore"):
        log_w = np.log(matrix)
    g = log_ratio(model, variant)
    return np.where(matrix > 0, log_w + theta * g, -np.inf)


def scaled_exp(log_matrix: np.ndarray) -> Tuple[np.ndarray, float]:
    """exp(L - max L) and the shift max L, so large tilts do not underflow."""
    shift = float(np.max(log_matrix))
    if not np.isfinite(shift):
        raise ConvergenceFailure("matrix has no positive entry")
    return np.exp(log_matrix - shift), shift


def log_pf_eigenvalue(log_matrix: np.ndarray) -> float:
    """log of the Perron-Frobenius eigenvalue of exp(log_matrix)."""
    scaled, shift = scaled_exp(np.asarray(log_matrix, dtype=float))
    values = np.linalg.eigvals(scaled)
    radius = float(np.max(values.real))
    if radius <= 0:
        raise ConvergenceFailure("nonpositive dominant eigenvalue")
    return float(np.log(radius)) + shift


def log_perron(log_matrix: np.ndarray, normalization: str = "min_entry_one") -> Tuple[float, PerronResult]:
    """Perron vectors of exp(log_matrix); eigenvalue reported as a log, vectors unscaled."""
    scaled, shift = scaled_exp(np.asarray(log_matrix, dtype=float))
    result = perron(scaled, normalization=normalization)
    return float(np.log(result.eigenvalue)) + shift, result


def sample_path(model: TransitionModel, n: int, seed: Optional[int] = None) -> np.ndarray:
    """Draw Z_1..Z_n; Z_1 from the initial distribution, then kernel columns."""
    if n < 1:
        raise ValidationError("path length must be at least 1")
    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(model.kernel, axis=0)
    cumulative[-1, :] = 1.0
    first_cdf = np.cumsum(model.initial)
    first_cdf[-1] = 1.0
    draws = rng.random(n)
    path = np.empty(n, dtype=np.int64)
    path[0] = int(np.searchsorted(first_cdf, draws[0], side="right"))
    for i in range(1, n):
        path[i] = int(np.searchsorted(cumulative[:, path[i - 1]], draws[i], side="right"))
    return path


def sample_paths(model: TransitionModel, n: int, count: int, seed: Optional[int] = None) -> np.ndarray:
    """``count`` independent paths as a (count, n) array of flat states."""
    if n < 1 or count < 1:
        raise ValidationError("n and count must be positive")
    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(model.kernel, axis=0)
    cumulative[-1, :] = 1.0
    first_cdf = np.cumsum(model.initial)
    first_cdf[-1] = 1.0
    paths = np.empty((count, n), dtype=np.int64)
    paths[:, 0] = np.searchsorted(first_cdf, rng.random(count), side="right")
    for i in range(1, n):
        u = rng.random(count)
        paths[:, i] = (u[:, None] >= cumulative[:, paths[:, i - 1]].T).sum(axis=1)
    return paths


def sample_log_likelihoods(
    model: TransitionModel,
    n: int,
    count: int,
    seed: Optional[int] = None,
    variant: str = "single",
) -> np.ndarray:
    """-log P(Z^n) (or -log P(X^n|Y^n) for 'lower_cond') for ``count`` independent paths."""
    if n < 1 or count < 1:
        raise ValidationError("n and count must be positive")
    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(model.kernel, axis=0)
    cumulative[-1, :] = 1.0
    g = log_ratio(model, variant)

    init = model.initial
    with np.errstate(divide="ignore"):
        first = np.where(init > 0, np.log(np.where(init > 0, init, 1.0)), 0.0)
    if variant == "lower_cond":
        py = model.initial_y()
        ys = np.arange(model.size) % model.y_size
        first = first - np.log(np.where(py[ys] > 0, py[ys], 1.0))

    first_cdf = np.cumsum(init)
    first_cdf[-1] = 1.0
    state = np.searchsorted(first_cdf, rng.random(count), side="right")
    total = first[state].copy()
    for _ in range(1, n):
        u = rng.random(count)
        nxt = (u[:, None] >= cumulative[:, state].T).sum(axis=1)
        total += g[nxt, state]
        state = nxt
    return -total
