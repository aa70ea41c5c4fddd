"""Reproducible stochastic demand sequences.

Random numbers come from numpy's PCG64 bit generator seeded through a
SeedSequence, so a (params, T, seed) triple always regenerates the same
values, and streams derived with `derive_seed` are statistically independent.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from src.errors import InputError, ParameterError

DISTRIBUTIONS = ("normal", "gamma", "uniform")

RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence"

SEED_MASK = (1 << 64) - 1


# =============================================================================
# Domain Types
# =============================================================================

@dataclass(frozen=True)
class DemandParams:
    """Per-period demand law: mean m, variance sigma2, shape, AR(1) coefficient."""

    mean: float
    sigma2: float
    distribution: str = "normal"
    phi: float = 0.0

    def problems(self, ignore_phi: bool = False) -> list[Tuple[str, str]]:
        """Return (field, message) pairs for every violated invariant."""
        found = []
        if not math.isfinite(self.mean):
            found.append(("mean", "must be finite"))
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            found.append(("sigma2", f"must be > 0 (got {self.sigma2})"))
        if self.distribution not in DISTRIBUTIONS:
            found.append((
                "distribution",
                f"must be one of {', '.join(DISTRIBUTIONS)} (got {self.distribution!r})",
            ))
        elif self.distribution == "gamma" and not self.mean > 0:
            found.append(("mean", f"must be > 0 for gamma demand (got {self.mean})"))
        if not ignore_phi and not abs(self.phi) < 1:
            found.append(("phi", f"must satisfy |phi| < 1 (got {self.phi})"))
        return found

    def validate(self, ignore_phi: bool = False) -> None:
        """Raise ParameterError naming the first offending field."""
        found = self.problems(ignore_phi=ignore_phi)
        if found:
            name, message = found[0]
            raise ParameterError(name, message)

    @property
    def std(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True, eq=False)
class DemandSequence:
    """A realized demand path xi_1..xi_T. Values are read-only."""

    values: np.ndarray
    params: Optional[DemandParams] = None
    seed: Optional[int] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise InputError("demand sequence must be a non-empty 1-D array")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def T(self) -> int:
        return self.values.size

    def shifted(self, c: float) -> "DemandSequence":
        return DemandSequence(self.values + c, params=None, seed=self.seed)

    def scaled(self, k: float) -> "DemandSequence":
        return DemandSequence(self.values * k, params=None, seed=self.seed)


SequenceLike = Union[DemandSequence, np.ndarray, Sequence[float]]


def as_array(seq: SequenceLike) -> np.ndarray:
    """Return the demand values of a sequence or array-like as a float array."""
    if isinstance(seq, DemandSequence):
        return seq.values
    values = np.asarray(seq, dtype=float)
    if values.ndim != 1:
        raise InputError(f"expected a 1-D series, got shape {values.shape}")
    return values


# =============================================================================
# Seeding
# =============================================================================

def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed & SEED_MASK)))


def derive_seed(master: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from a master seed and integer keys.

    Uses SeedSequence(master, spawn_key=keys): the result depends only on
    (master, keys), so adding replications never perturbs existing ones.
    """
    seq = np.random.SeedSequence(master & SEED_MASK, spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def standard_draws(params: DemandParams, T: int, rng: np.random.Generator) -> np.ndarray:
    """T i.i.d. draws with mean 0 and variance 1 in the shape of params.distribution.

    For gamma the draws are standardized gamma(k, 1) variables with
    k = m^2 / sigma2 (moment matching), so m + sigma * z is exactly gamma.
    """
    if params.distribution == "normal":
        return rng.standard_normal(T)
    if params.distribution == "gamma":
        shape = params.mean ** 2 / params.sigma2
        return (rng.standard_gamma(shape, T) - shape) / math.sqrt(shape)
    if params.distribution == "uniform":
        half_width = math.sqrt(3.0)
        return rng.uniform(-half_width, half_width, T)
    raise ParameterError("distribution", f"unknown distribution {params.distribution!r}")


def _check_length(T: int) -> None:
    if int(T) != T or T < 1:
        raise InputError(f"T must be a positive integer (got {T})")


# =============================================================================
# Generators
# =============================================================================

def gen_iid(params: DemandParams, T: int, seed: int) -> DemandSequence:
    """T independent draws with mean params.mean and variance params.sigma2.

    phi is ignored. Normal draws are never truncated, so negative demand can
    occur; truncating would move the mean and variance.
    """
    params.validate(ignore_phi=True)
    _check_length(T)
    z = standard_draws(params, int(T), make_rng(seed))
    return DemandSequence(params.mean + params.std * z, params=params, seed=seed)


def gen_ar1(params: DemandParams, T: int, seed: int) -> DemandSequence:
    """Stationary AR(1) path with marginal mean m and marginal variance sigma2.

    x_1 = z_1 and x_t = phi * x_{t-1} + sqrt(1 - phi^2) * z_t on the same
    standardized innovation stream gen_iid uses, so phi=0 reproduces gen_iid.
    Only the first two moments are matched for non-normal shapes.
    """
    params.validate()
    _check_length(T)
    z = standard_draws(params, int(T), make_rng(seed))
    gain = math.sqrt(1.0 - params.phi ** 2)
    # zi makes the first output equal z_1 (stationary start)
    x, _ = lfilter([gain], [1.0, -params.phi], z, zi=[(1.0 - gain) * z[0]])
    return DemandSequence(params.mean + params.std * x, params=params, seed=seed)


def generate(params: DemandParams, T: int, seed: int) -> DemandSequence:
    """gen_ar1 when phi is non-zero, gen_iid otherwise."""
    if params.phi:
        return gen_ar1(params, T, seed)
    return gen_iid(params, T, seed)


# =============================================================================
# Statistics
# =============================================================================

def sequence_stats(seq: SequenceLike) -> Tuple[float, float]:
    """Arithmetic mean and population variance (divisor T)."""
    values = as_array(seq)
    if values.size == 0:
        raise InputError("sequence_stats needs at least one value")
    if values.min() == values.max():
        return float(values[0]), 0.0
    return float(values.mean()), float(values.var())


# =============================================================================
# CSV interface
# =============================================================================

def write_sequence_csv(seq: SequenceLike, path: Union[str, Path]) -> Path:
    """Write one `xi` column, one row per period."""
    from src.exporters import write_csv

    return write_csv({"xi": as_array(seq)}, path)


def read_sequence_csv(path: Union[str, Path]) -> DemandSequence:
    """Read a sequence written by write_sequence_csv (header row `xi` required)."""
    from src.exporters import read_csv

    frame = read_csv(path)
    if "xi" not in frame.columns:
        raise InputError(f"{path}: missing required column 'xi' (found {list(frame.columns)})")
    column = pd.to_numeric(frame["xi"], errors="coerce")
    if column.isna().any():
        raise InputError(f"{path}: column 'xi' has empty or non-numeric rows")
    if column.empty:
        raise InputError(f"{path}: no demand rows")
    return DemandSequence(column.to_numpy(dtype=float))
