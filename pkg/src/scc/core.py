"""Shared domain types, validation, and the seeded random-number contract.

Numeric conventions used across the package:

* every real value is IEEE-754 float64,
* a dictionary is a (p, m) column-major matrix so that one atom (one
  column) is contiguous in memory,
* sparse codes store exactly their nonzero entries, as sorted
  (index, value) pairs,
* all randomness flows through :func:`rng_from_seed`, which pins the bit
  generator (PCG64), so equal seeds give bit-identical streams.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

FEASIBILITY_TOL = 1e-12   # slack on unit-ball membership of atoms
PREPROCESS_TOL = 1e-9     # slack on zero-mean / unit-norm of samples
DEFAULT_PRUNE_TOL = 1e-12  # magnitude below which dense entries are dropped
DEFAULT_LAMBDA_SCALE = 1.2  # lambda defaults to this over sqrt(p)

INIT_RANDOM_PATCHES = "random_patches"
INIT_RANDOM_GAUSSIAN = "random_gaussian"
ORDER_SEQUENTIAL = "sequential"
ORDER_SHUFFLED = "shuffled"
RATE_ADAPTIVE = "adaptive_hessian"
RATE_NATURAL = "natural"

_SHUFFLE_STREAM = 1  # substream key for per-epoch visit permutations


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class SCCError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SCCError):
    """Operands disagree on p, m, or n."""


class NonFinite(SCCError):
    """A value that must be finite is NaN or infinite."""


class Empty(SCCError):
    """An operation received zero samples or zero codes."""


class ZeroCurvature(SCCError):
    """Adaptive rate requested for a column with no accumulated curvature."""


class MaxIterationsExceeded(SCCError):
    """An iterative solver hit its iteration cap before converging."""


class ConfigInvalid(SCCError):
    """A parameter value violates its documented range."""


class DegenerateSample(SCCError):
    """Sample has zero variance and cannot be normalized."""


class ImageTooSmall(SCCError):
    """Image is smaller than the extraction window."""


class InvariantViolation(SCCError):
    """A value object failed one of its structural invariants."""


class FormatError(SCCError):
    """A serialized artifact does not follow its documented layout."""


class BadMagic(FormatError):
    """Leading magic bytes do not identify a known format."""


class Truncated(FormatError):
    """A serialized artifact ends before its declared payload."""


# ---------------------------------------------------------------------------
# Randomness and environment
# ---------------------------------------------------------------------------

def _require_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigInvalid(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ConfigInvalid(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def rng_from_seed(seed: int, *stream: int) -> np.random.Generator:
    """Return the PCG64 generator for ``seed``.

    Extra integers select documented independent substreams: the trainer
    draws its epoch-``k`` shuffle from ``rng_from_seed(seed, 1, k)`` while
    initializers consume the root stream.  Equal arguments always
    reproduce the same bit stream, on every platform.
    """
    seed = _require_seed(seed)
    key = tuple(int(s) for s in stream)
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def thread_cap() -> int:
    """Worker cap for sample-parallel phases, from ``SCC_THREADS`` (default 1)."""
    raw = os.environ.get("SCC_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigInvalid(f"SCC_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise ConfigInvalid(f"SCC_THREADS must be >= 1, got {value}")
    return value


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Sample:
    """One p-dimensional data vector.

    ``preprocessed`` marks a vector that has been centered to zero mean
    and scaled to unit Euclidean norm; :func:`validate_dataset` enforces
    that claim to within ``PREPROCESS_TOL``.
    """

    values: np.ndarray
    preprocessed: bool = False

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DimensionMismatch("a sample must be a nonempty 1-D vector")
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class DataSet:
    """Ordered sample collection, stored one sample per column of ``X``.

    Index ``i`` always refers to column ``i``.  The payload is held
    read-only; build a new DataSet instead of editing in place.
    """

    X: np.ndarray
    preprocessed: bool = False

    def __post_init__(self) -> None:
        arr = np.array(self.X, dtype=np.float64, order="F")
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise DimensionMismatch(
                f"dataset payload must be (p, n) with p >= 1, got shape {np.shape(self.X)}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "X", arr)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample]) -> "DataSet":
        samples = list(samples)
        if not samples:
            raise Empty("cannot build a dataset from zero samples")
        p = samples[0].p
        for s in samples:
            if s.p != p:
                raise DimensionMismatch(f"sample lengths differ: {s.p} vs {p}")
        X = np.empty((p, len(samples)), order="F")
        for i, s in enumerate(samples):
            X[:, i] = s.values
        return cls(X, preprocessed=all(s.preprocessed for s in samples))

    @property
    def p(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def column(self, i: int) -> np.ndarray:
        """Read-only view of sample ``i``."""
        return self.X[:, i]

    def sample(self, i: int) -> Sample:
        return Sample(self.X[:, i], preprocessed=self.preprocessed)

    def samples(self) -> Iterator[Sample]:
        for i in range(self.n):
            yield self.sample(i)


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Atom matrix of shape (p, m); every column lies in the unit ball.

    Construction copies and validates.  The atom matrix stays writable
    because a trainer advances its own dictionary in place (single
    writer); all other holders must treat it as read-only.
    """

    atoms: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.atoms, dtype=np.float64, order="F")
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise DimensionMismatch(
                f"dictionary must be a (p, m) matrix with p, m >= 1, got {np.shape(self.atoms)}"
            )
        if not np.isfinite(arr).all():
            raise NonFinite("dictionary contains NaN or Inf")
        norms = np.sqrt((arr * arr).sum(axis=0))
        worst = float(norms.max(initial=0.0))
        if worst > 1.0 + FEASIBILITY_TOL:
            raise InvariantViolation(f"atom norm {worst} exceeds the unit ball")
        object.__setattr__(self, "atoms", arr)

    @property
    def p(self) -> int:
        return self.atoms.shape[0]

    @property
    def m(self) -> int:
        return self.atoms.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.atoms[:, j]

    def copy(self) -> "Dictionary":
        return Dictionary(self.atoms)


@dataclass(frozen=True, eq=False)
class SparseCode:
    """Sparse vector over [0, m) stored as sorted (index, value) pairs.

    Exactly the nonzeros are stored: no explicit zero is retained, and
    indices are strictly increasing so support iteration is
    deterministic.
    """

    indices: np.ndarray
    values: np.ndarray
    m: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or idx.size != val.size:
            raise DimensionMismatch("indices and values must be 1-D and equal length")
        if self.m < 1:
            raise DimensionMismatch(f"ambient dimension must be >= 1, got {self.m}")
        if idx.size:
            if not np.all(np.diff(idx) > 0):
                raise InvariantViolation("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.m:
                raise InvariantViolation("index out of range")
            if not np.isfinite(val).all():
                raise NonFinite("sparse code contains NaN or Inf")
            if np.any(val == 0.0):
                raise InvariantViolation("explicit zeros are not stored")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def zero(cls, m: int) -> "SparseCode":
        return cls(np.empty(0, dtype=np.int64), np.empty(0), m)

    @classmethod
    def from_dense(cls, dense: np.ndarray, prune_tol: float = DEFAULT_PRUNE_TOL) -> "SparseCode":
        """Collect entries with magnitude above ``prune_tol``.

        Coordinate descent produces exact zeros, so its callers pass
        ``prune_tol=0.0``; solvers whose iterates merely approach zero
        use the default cutoff.
        """
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 1 or dense.size == 0:
            raise DimensionMismatch("dense code must be a nonempty 1-D vector")
        idx = np.flatnonzero(np.abs(dense) > prune_tol)
        return cls(idx.astype(np.int64), dense[idx], dense.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.m)
        if self.indices.size:
            out[self.indices] = self.values
        return out

    @property
    def support(self) -> np.ndarray:
        return self.indices

    @property
    def nnz(self) -> int:
        return self.indices.size

    def l1(self) -> float:
        return float(np.abs(self.values).sum())


@dataclass(eq=False)
class HessianDiag:
    """Accumulated squared code entries, one cell per atom.

    Entries only ever grow, so their reciprocals form a decaying
    per-atom learning-rate schedule.  Single writer: the owning trainer.
    """

    diag: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.diag, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionMismatch("curvature diagonal must be a nonempty 1-D vector")
        if not np.isfinite(arr).all():
            raise NonFinite("curvature diagonal contains NaN or Inf")
        if np.any(arr < 0.0):
            raise InvariantViolation("curvature entries must be nonnegative")
        self.diag = arr

    @classmethod
    def zeros(cls, m: int) -> "HessianDiag":
        return cls(np.zeros(m))

    @property
    def m(self) -> int:
        return self.diag.size


@dataclass(frozen=True)
class TrainConfig:
    """All knobs of a training run.

    ``lam=None`` selects the default regularization 1.2/sqrt(p) once the
    data dimension is known.  ``rate_a`` and ``rate_b`` only matter for
    the ``natural`` schedule.
    """

    dict_size: int
    lam: Union[float, None] = None
    epochs: int = 10
    cd_steps: int = 3
    init: str = INIT_RANDOM_PATCHES
    ordering: str = ORDER_SEQUENTIAL
    seed: int = 0
    rate_schedule: str = RATE_ADAPTIVE
    rate_a: float = 1.0
    rate_b: float = 0.0

    def validate(self) -> None:
        if self.dict_size < 1:
            raise ConfigInvalid(f"dict_size must be >= 1, got {self.dict_size}")
        if self.lam is not None and not (self.lam > 0):
            raise ConfigInvalid(f"lambda must be > 0, got {self.lam}")
        if self.epochs < 1:
            raise ConfigInvalid(f"epochs must be >= 1, got {self.epochs}")
        if self.cd_steps < 1:
            raise ConfigInvalid(f"cd_steps must be >= 1, got {self.cd_steps}")
        if self.init not in (INIT_RANDOM_PATCHES, INIT_RANDOM_GAUSSIAN):
            raise ConfigInvalid(f"unknown init method {self.init!r}")
        if self.ordering not in (ORDER_SEQUENTIAL, ORDER_SHUFFLED):
            raise ConfigInvalid(f"unknown ordering {self.ordering!r}")
        if self.rate_schedule not in (RATE_ADAPTIVE, RATE_NATURAL):
            raise ConfigInvalid(f"unknown rate schedule {self.rate_schedule!r}")
        if self.rate_schedule == RATE_NATURAL:
            if not (self.rate_a > 0):
                raise ConfigInvalid(f"rate_a must be > 0, got {self.rate_a}")
            if self.rate_b < 0:
                raise ConfigInvalid(f"rate_b must be >= 0, got {self.rate_b}")
        _require_seed(self.seed)

    def effective_lambda(self, p: int) -> float:
        if self.lam is not None:
            return float(self.lam)
        return DEFAULT_LAMBDA_SCALE / math.sqrt(p)


@dataclass(frozen=True)
class EpochStats:
    """Per-epoch measurements recorded by every trainer.

    ``objective`` is the dataset average of the penalized reconstruction
    cost, evaluated at epoch end with the then-current dictionary and
    the codes stored during the epoch (no extra solves).  Wall times
    split the epoch into its encoding and dictionary-update phases.
    """

    epoch: int
    objective: float
    time_code_update: float
    time_dict_update: float
    mean_support: float
    max_support: int


@dataclass(eq=False)
class CDWorkspace:
    """Caller-owned scratch for coordinate descent.

    ``residual`` must hold x - D z on entry to any cycle; the cycle
    updates it in place and leaves it consistent on exit.
    """

    residual: np.ndarray
    scratch: np.ndarray

    @classmethod
    def for_dim(cls, p: int) -> "CDWorkspace":
        return cls(np.zeros(p), np.zeros(p))

    @classmethod
    def prepared(cls, D: Dictionary, z: SparseCode, x) -> "CDWorkspace":
        """Workspace whose residual is computed fresh as x - D z."""
        xv = as_vector(x)
        if xv.size != D.p:
            raise DimensionMismatch(f"sample has length {xv.size}, dictionary expects {D.p}")
        if z.m != D.m:
            raise DimensionMismatch(f"code ambient {z.m} != dictionary atoms {D.m}")
        residual = xv.astype(np.float64, copy=True)
        if z.nnz:
            residual -= D.atoms[:, z.indices] @ z.values
        return cls(residual, np.zeros(D.p))


def as_vector(x) -> np.ndarray:
    """Accept a Sample or a 1-D array-like; return its float64 vector."""
    if isinstance(x, Sample):
        return x.values
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    return v


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_flagged(values: np.ndarray, where: str) -> None:
    mean = float(values.mean())
    norm = float(np.linalg.norm(values))
    if abs(mean) > PREPROCESS_TOL:
        raise InvariantViolation(f"{where}: flagged preprocessed but mean is {mean}")
    if abs(norm - 1.0) > PREPROCESS_TOL:
        raise InvariantViolation(f"{where}: flagged preprocessed but norm is {norm}")


def validate_dataset(ds: Union[DataSet, Sequence[Sample]]) -> None:
    """Check every sample invariant; raise the first violation found.

    Accepts either a DataSet or a raw sequence of Samples (the latter is
    how unequal lengths can be detected at all).
    """
    if isinstance(ds, DataSet):
        if ds.n == 0:
            raise Empty("dataset has no samples")
        if not np.isfinite(ds.X).all():
            raise NonFinite("dataset contains NaN or Inf")
        if ds.preprocessed:
            for i in range(ds.n):
                _check_flagged(ds.X[:, i], f"sample {i}")
        return
    samples = list(ds)
    if not samples:
        raise Empty("no samples to validate")
    p = samples[0].p
    for i, s in enumerate(samples):
        if s.p != p:
            raise DimensionMismatch(f"sample {i} has length {s.p}, expected {p}")
    for i, s in enumerate(samples):
        if not np.isfinite(s.values).all():
            raise NonFinite(f"sample {i} contains NaN or Inf")
        if s.preprocessed:
            _check_flagged(s.values, f"sample {i}")
