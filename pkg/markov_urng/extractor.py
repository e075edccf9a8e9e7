"""Toeplitz two-universal hashing over GF(2) and the extraction pipeline.

``ToeplitzSpec`` fixes the indexing T[i][j] = seed[i + (n-1) - j]. Bits are
read and written with numpy ``packbits``/``unpackbits`` in little-endian bit
order. Non-binary symbols use ceil(log2 |X|) bits, least significant first.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import toeplitz

from .bounds import BoundQuery, BoundReport, SourceAnalysis, markov_bound
from .errors import BudgetExceeded, InfeasibleQuery, LengthMismatch, ValidationError
from .markov_core import TransitionModel, sample_paths
from .oracle import ENUMERATION_BUDGET, enumerate_paths

logger = logging.getLogger(__name__)

BOOTSTRAP_RESAMPLES = 200
MIN_SAMPLES = 1000
MODES = ("single_function", "family_average")
AUDITS = ("none", "exact", "mc")
METHODS = ("exact_enumeration", "family_exact", "monte_carlo")


@dataclass(frozen=True)
class ToeplitzSpec:
    n: int
    m: int
    seed: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 < self.m <= self.n:
            raise ValidationError(f"need 0 < m <= n, got n={self.n}, m={self.m}")
        seed = np.asarray(self.seed, dtype=np.uint8).ravel()
        if seed.size != self.n + self.m - 1:
            raise LengthMismatch(f"seed needs {self.n + self.m - 1} bits, got {seed.size}")
        if np.any(seed > 1):
            raise ValidationError("seed entries must be bits")
        object.__setattr__(self, "seed", seed)

    @classmethod
    def from_hex(cls, n: int, m: int, seed_hex: str) -> "ToeplitzSpec":
        """First n+m-1 bits of the hex string's bytes, little-endian within each byte."""
        try:
            raw = bytes.fromhex(seed_hex)
        except ValueError as e:
            raise ValidationError(f"bad seed hex: {e}")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        need = n + m - 1
        if bits.size < need:
            raise LengthMismatch(f"seed hex carries {bits.size} bits, need {need}")
        return cls(n, m, bits[:need])

    @classmethod
    def from_index(cls, n: int, m: int, index: int) -> "ToeplitzSpec":
        """Seed whose bit k is bit k of ``index``."""
        bits = (index >> np.arange(n + m - 1)) & 1
        return cls(n, m, bits.astype(np.uint8))

    @classmethod
    def random(cls, n: int, m: int, rng: Optional[np.random.Generator] = None) -> "ToeplitzSpec":
        rng = rng or np.random.default_rng()
        return cls(n, m, rng.integers(0, 2, size=n + m - 1, dtype=np.uint8))

    @property
    def matrix(self) -> np.ndarray:
        """m x n matrix with T[i, j] = seed[i + n - 1 - j]."""
        column = self.seed[self.n - 1 : self.n - 1 + self.m]
        row = self.seed[self.n - 1 :: -1]
        return toeplitz(column, row).astype(np.uint8)

    @property
    def seed_hex(self) -> str:
        return np.packbits(self.seed, bitorder="little").tobytes().hex()


@dataclass
class DistanceEstimate:
    value: float
    method: str
    ci95: Optional[float] = None
    rigorous: bool = True
    member_range: Optional[tuple] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown estimate method '{self.method}'")
        if self.method == "monte_carlo" and self.rigorous:
            raise ValidationError("monte carlo estimates are never rigorous")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "ci95": self.ci95,
            "rigorous": self.rigorous,
            "member_range": list(self.member_range) if self.member_range else None,
        }


def _row_words(matrix: np.ndarray) -> list:
    """Each row of T as a Python int, bit j = T[i, j]."""
    weights = 1 << np.arange(matrix.shape[1], dtype=object)
    return [int(np.dot(row.astype(object), weights)) for row in matrix]


def hash_bits(spec: ToeplitzSpec, bits: Sequence[int]) -> np.ndarray:
    """y = T x over GF(2): AND each row word with the input word, output the parity."""
    x = np.asarray(bits, dtype=np.uint8).ravel()
    if x.size != spec.n:
        raise LengthMismatch(f"input has {x.size} bits, spec expects {spec.n}")
    word = int(np.dot(x.astype(object), 1 << np.arange(spec.n, dtype=object)))
    return np.array([(row & word).bit_count() & 1 for row in _row_words(spec.matrix)], dtype=np.uint8)


def hash_blocks(spec: ToeplitzSpec, blocks: np.ndarray) -> np.ndarray:
    """Hash every row of a (count, n) bit array; returns (count, m)."""
    blocks = np.asarray(blocks, dtype=np.uint8)
    if blocks.ndim != 2 or blocks.shape[1] != spec.n:
        raise LengthMismatch(f"blocks must have shape (count, {spec.n})")
    return ((blocks.astype(np.int64) @ spec.matrix.T.astype(np.int64)) & 1).astype(np.uint8)


def _output_index(outputs: np.ndarray) -> np.ndarray:
    """(count, m) output bits to integer cells, bit i weighted 2^i."""
    return outputs.astype(np.int64) @ (1 << np.arange(outputs.shape[1], dtype=np.int64))


def bits_per_symbol(model: TransitionModel) -> int:
    if model.x_size & (model.x_size - 1):
        raise ValidationError(f"extraction needs |X| to be a power of 2, got {model.x_size}")
    return max(int(math.log2(model.x_size)), 1)


def _symbols_to_bits(symbols: np.ndarray, width: int) -> np.ndarray:
    """(count, n) symbols to (count, n*width) bits, least significant bit first per symbol."""
    shifts = np.arange(width)
    bits = (symbols[:, :, None] >> shifts) & 1
    return bits.reshape(symbols.shape[0], -1).astype(np.uint8)


def _all_x_sequences(x_size: int, n: int) -> np.ndarray:
    """Every x^n as a row, first symbol most significant in the row index."""
    index = np.arange(x_size**n)
    powers = x_size ** np.arange(n - 1, -1, -1)
    return (index[:, None] // powers) % x_size


def _tv_to_uniform(cells: np.ndarray, side_info: bool) -> float:
    """cells is P[k, y]; distance to U_M x P_Y (or U_M when not side_info)."""
    M = cells.shape[0]
    if not side_info:
        marginal = cells.sum(axis=1)
        return float(0.5 * np.sum(np.abs(marginal - 1.0 / M)))
    p_y = cells.sum(axis=0)
    return float(0.5 * np.sum(np.abs(cells - p_y[None, :] / M)))


def _cells(joint: np.ndarray, index: np.ndarray, M: int) -> np.ndarray:
    cells = np.zeros((M, joint.shape[1]))
    np.add.at(cells, index, joint)
    return cells


def exact_delta(
    model: TransitionModel,
    n: int,
    spec: Optional[ToeplitzSpec] = None,
    table: Optional[Sequence[int]] = None,
    mode: str = "single_function",
    side_info: bool = False,
) -> DistanceEstimate:
    """Exact variational distance of f(X^n) (jointly with Y^n when ``side_info``) to uniform.

    ``n`` counts source symbols. ``single_function`` evaluates the given
    Toeplitz spec or function table (output cell per x^n, first symbol most
    significant); ``family_average`` averages over every seed of an
    m x (n*bits) Toeplitz matrix.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode '{mode}'")
    if side_info and not model.has_side_info:
        raise ValidationError("side_info needs a model with y_size > 1")
    width = bits_per_symbol(model)
    n_bits = n * width
    if model.size**n > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"{model.size}^{n} outcomes exceed the enumeration budget")
    joint = enumerate_paths(model, n).joint_xy()
    inputs = _symbols_to_bits(_all_x_sequences(model.x_size, n), width)

    if mode == "single_function":
        if table is not None:
            index = np.asarray(table, dtype=np.int64)
            if index.size != joint.shape[0]:
                raise LengthMismatch(f"function table needs {joint.shape[0]} entries")
            M = int(index.max()) + 1
        else:
            if spec is None:
                raise ValidationError("single_function needs a spec or a function table")
            if spec.n != n_bits:
                raise LengthMismatch(f"spec takes {spec.n} bits, source block has {n_bits}")
            index = _output_index(hash_blocks(spec, inputs))
            M = 2**spec.m
        value = _tv_to_uniform(_cells(joint, index, M), side_info)
        return DistanceEstimate(value=value, method="exact_enumeration")

    if spec is None:
        raise ValidationError("family_average needs a spec for its dimensions")
    if spec.n != n_bits:
        raise LengthMismatch(f"spec takes {spec.n} bits, source block has {n_bits}")
    seeds = 2 ** (spec.n + spec.m - 1)
    if seeds * 2**n_bits > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"{seeds} seeds x 2^{n_bits} inputs exceed the enumeration budget")
    M = 2**spec.m
    values = np.empty(seeds)
    for s in range(seeds):
        member = ToeplitzSpec.from_index(spec.n, spec.m, s)
        index = _output_index(hash_blocks(member, inputs))
        values[s] = _tv_to_uniform(_cells(joint, index, M), side_info)
    logger.debug("family average over %d seeds: min %.6g max %.6g", seeds, values.min(), values.max())
    return DistanceEstimate(
        value=float(np.mean(values)),
        method="family_exact",
        member_range=(float(values.min()), float(values.max())),
    )


def _plug_in_tv(counts: np.ndarray, total: int) -> float:
    return float(0.5 * np.sum(np.abs(counts / total - 1.0 / counts.size)))


def mc_delta(
    model: TransitionModel,
    n: int,
    spec: ToeplitzSpec,
    samples: int = 100_000,
    seed: Optional[int] = None,
) -> DistanceEstimate:
    """Plug-in distance of the hashed-output histogram to uniform with a bootstrap 95% half-width."""
    if samples < MIN_SAMPLES:
        raise ValidationError(f"mc_delta needs at least {MIN_SAMPLES} samples")
    width = bits_per_symbol(model)
    if spec.n != n * width:
        raise LengthMismatch(f"spec takes {spec.n} bits, source block has {n * width}")
    rng = np.random.default_rng(seed)
    paths = sample_paths(model, n, samples, seed=int(rng.integers(2**32)))
    symbols = paths // model.y_size
    index = _output_index(hash_blocks(spec, _symbols_to_bits(symbols, width)))
    M = 2**spec.m
    counts = np.bincount(index, minlength=M)
    value = _plug_in_tv(counts, samples)

    replicas = np.empty(BOOTSTRAP_RESAMPLES)
    for b in range(BOOTSTRAP_RESAMPLES):
        resampled = rng.multinomial(samples, counts / samples)
        replicas[b] = _plug_in_tv(resampled, samples)
    low, high = np.percentile(replicas, [2.5, 97.5])
    return DistanceEstimate(
        value=value,
        method="monte_carlo",
        ci95=float((high - low) / 2),
        rigorous=False,
    )


def read_bits(path: Union[str, Path]) -> np.ndarray:
    return np.unpackbits(np.fromfile(str(path), dtype=np.uint8), bitorder="little")


def pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def write_bits(path: Union[str, Path], bits: np.ndarray) -> None:
    Path(path).write_bytes(pack_bits(bits))


@dataclass
class ExtractionResult:
    bits: np.ndarray = field(repr=False)
    blocks: int
    n: int
    m: int
    seed_hex: str
    bound: Optional[BoundReport] = None
    audit: Optional[DistanceEstimate] = None

    def summary(self) -> dict:
        return {
            "blocks": self.blocks,
            "n": self.n,
            "m": self.m,
            "output_bits": int(self.bits.size),
            "seed_hex": self.seed_hex,
            "bound": self.bound.to_dict() if self.bound else None,
            "audit": self.audit.to_dict() if self.audit else None,
        }


def extract_stream(
    source: Union[TransitionModel, np.ndarray],
    n: int,
    m: int,
    spec: ToeplitzSpec,
    blocks: Optional[int] = None,
    audit: str = "none",
    sample_seed: Optional[int] = None,
    mc_samples: int = 100_000,
) -> ExtractionResult:
    """Hash consecutive n-bit blocks down to m bits each.

    ``source`` is either raw bits (length a multiple of n) or a model, in
    which case ``blocks`` paths are sampled with ``sample_seed``. With a
    model the report carries the direct bound at rate m log 2 / n (per
    source symbol); ``audit`` optionally attaches the exact or Monte-Carlo
    distance for this seed.
    """
    if audit not in AUDITS:
        raise ValueError(f"unknown audit '{audit}'")
    if spec.n != n or spec.m != m:
        raise LengthMismatch(f"spec is {spec.m}x{spec.n}, extraction asks for {m}x{n}")

    model = source if isinstance(source, TransitionModel) else None
    if model is None:
        raw = np.asarray(source, dtype=np.uint8).ravel()
        if raw.size % n:
            raise LengthMismatch(f"input has {raw.size} bits, not a multiple of n={n}")
        data = raw.reshape(-1, n)
    else:
        width = bits_per_symbol(model)
        if n % width:
            raise LengthMismatch(f"n={n} is not a multiple of {width} bits per symbol")
        if blocks is None or blocks < 1:
            raise ValidationError("sampling from a model needs a positive block count")
        symbols = sample_paths(model, n // width, blocks, seed=sample_seed) // model.y_size
        data = _symbols_to_bits(symbols, width)

    output = hash_blocks(spec, data).ravel()
    result = ExtractionResult(bits=output, blocks=data.shape[0], n=n, m=m, seed_hex=spec.seed_hex)
    logger.info("extracted %d bits from %d blocks", output.size, data.shape[0])

    if model is not None:
        length = n // bits_per_symbol(model)
        result.bound = _extraction_bound(model, length, m)
        if audit == "exact":
            result.audit = exact_delta(model, length, spec, side_info=model.has_side_info)
        elif audit == "mc":
            result.audit = mc_delta(model, length, spec, samples=mc_samples, seed=sample_seed)
    elif audit != "none":
        raise ValidationError("audits need a model source")
    return result


def _extraction_bound(model: TransitionModel, length: int, m: int) -> Optional[BoundReport]:
    theorem = "ach_a1" if model.has_side_info else "ach"
    query = BoundQuery(n=length, log_m=m * math.log(2), theorem=theorem)
    try:
        return markov_bound(model, query, SourceAnalysis(model))
    except (InfeasibleQuery, ValidationError) as e:
        logger.warning("no finite-length bound for this extraction: %s", e)
        return None
