"""Seeded entry matrices, data conditioning, and sample covariance formation.

Entry generation is counter-based: entry (i, j) of a matrix consumes
positions 2c and 2c+1 of the SplitMix64 stream (see :mod:`specdist.rng`),
where c = j*n + i is the column-major entry counter.  The matrix is
therefore a pure function of (kind, n, N, seed) and independent of how the
work is scheduled: generating by column blocks in parallel reproduces the
serial result bit for bit, and a matrix with more columns extends one with
fewer without disturbing the shared prefix.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtrit

from . import rng
from .errors import DegenerateInputError, DomainError

__all__ = [
    "EntryDistribution",
    "EntryMatrix",
    "CovarianceMatrix",
    "sample_entries",
    "condition_entries",
    "sample_covariance",
    "default_eta",
    "dump_matrix_binary",
    "load_matrix_binary",
    "dump_matrix_csv",
]

_KINDS = ("real-gaussian", "complex-gaussian", "rademacher", "uniform-centered", "student-t")
_CSV_ENTRY_LIMIT = 10_000


@dataclass(frozen=True)
class EntryDistribution:
    """A standardized entry law: mean 0, variance 1 (complex: E|X|^2 = 1).

    ``student-t`` takes a degrees-of-freedom parameter df > 2 and is
    rescaled to unit variance; low df values are the intended way to probe
    behavior when higher moments blow up.
    """

    kind: str
    df: float = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown entry distribution {self.kind!r}; choose from {_KINDS}")
        if self.kind == "student-t":
            if self.df is None or not self.df > 2:
                raise DomainError("student-t requires df > 2 for a finite variance")
        elif self.df is not None:
            raise DomainError(f"{self.kind} takes no df parameter")

    @property
    def is_complex(self):
        return self.kind == "complex-gaussian"

    def label(self):
        if self.kind == "student-t":
            return f"student-t({self.df:g})"
        return self.kind

    @classmethod
    def parse(cls, text):
        """Parse a CLI token such as ``complex-gaussian`` or ``student-t(4)``."""
        t = text.strip()
        for sep in ("(", ":"):
            if t.startswith("student-t" + sep):
                raw = t[len("student-t" + sep):].rstrip(")")
                try:
                    return cls("student-t", df=float(raw))
                except ValueError:
                    raise DomainError(f"bad student-t parameter in {text!r}") from None
        return cls(t)


@dataclass(frozen=True)
class EntryMatrix:
    """An n x N array of i.i.d.-sampled entries plus its reproducibility token."""

    entries: np.ndarray
    seed: int
    dist: EntryDistribution = None
    conditioned: bool = False

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise DomainError("entries must be a nonempty 2-d array")
        if e.shape[0] > e.shape[1]:
            raise DomainError(
                f"n = {e.shape[0]} rows exceed N = {e.shape[1]} columns (y_n > 1 unsupported)"
            )
        e = e.astype(complex if np.iscomplexobj(e) else float, copy=False)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def N(self):
        return self.entries.shape[1]

    @property
    def y_n(self):
        return self.n / self.N


@dataclass(frozen=True)
class CovarianceMatrix:
    """Hermitian PSD matrix S = X X* / N, with the sample count kept around."""

    entries: np.ndarray
    samples: int

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise DomainError("covariance entries must be square")
        scale = max(1.0, np.abs(e).max(initial=0.0))
        if np.abs(e - e.conj().T).max(initial=0.0) > 1e-13 * scale:
            raise DomainError("covariance entries are not Hermitian")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self):
        return self.entries.shape[0]


def default_eta(N):
    """Default truncation scale: eta_N = max(0.5, 2 N^(-1/20)).

    Decays (very) slowly while eta_N * N^(1/4) still grows, and the floor
    keeps desk-scale thresholds away from the bulk of any standardized law.
    """
    return max(0.5, 2.0 * float(N) ** -0.05)


def sample_entries(dist, n, N, seed):
    """Draw an n x N matrix of i.i.d. entries from ``dist``, deterministically.

    Identical (dist, n, N, seed) always reproduces the same matrix.
    Requires n <= N so the aspect ratio stays in (0, 1].
    """
    if not isinstance(dist, EntryDistribution):
        dist = EntryDistribution.parse(str(dist))
    n, N = int(n), int(N)
    if n < 1 or N < 1:
        raise DomainError("matrix dimensions must be positive")
    if n > N:
        raise DomainError(f"n = {n} exceeds N = {N} (y_n > 1 unsupported)")
    counters = (np.arange(N, dtype=np.uint64)[None, :] * np.uint64(n)
                + np.arange(n, dtype=np.uint64)[:, None])
    u1 = rng.uniform_at(seed, counters * np.uint64(2))
    u2 = rng.uniform_at(seed, counters * np.uint64(2) + np.uint64(1))
    kind = dist.kind
    if kind == "real-gaussian":
        entries = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    elif kind == "complex-gaussian":
        # Polar Box-Muller: radius^2 ~ Exp(1) gives E|X|^2 = 1 directly.
        entries = np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)
    elif kind == "rademacher":
        entries = np.where(u1 < 0.5, -1.0, 1.0)
    elif kind == "uniform-centered":
        entries = (u1 - 0.5) * np.sqrt(12.0)
    else:  # student-t
        entries = stdtrit(dist.df, u1) / np.sqrt(dist.df / (dist.df - 2.0))
    return EntryMatrix(entries=entries, seed=int(seed), dist=dist)


def condition_entries(X, eta):
    """Truncate, centralize, and rescale the entries of ``X``.

    Stage 1 zeroes every entry with |X_ij| > eta * N^(1/4) (an indicator
    truncation, not a clip).  Stage 2 subtracts the empirical mean of the
    truncated entries; stage 3 divides by their empirical standard
    deviation.  The output has empirical mean 0 and variance 1.
    """
    if eta <= 0:
        raise DomainError(f"truncation scale eta must be positive, got {eta}")
    e = X.entries
    threshold = eta * X.N**0.25
    truncated = np.where(np.abs(e) <= threshold, e, 0.0)
    centered = truncated - truncated.mean()
    sigma = np.sqrt(np.mean(np.abs(centered) ** 2))
    if sigma == 0.0:
        raise DegenerateInputError(
            f"conditioning collapsed all entries (threshold {threshold:.4g})"
        )
    return EntryMatrix(entries=centered / sigma, seed=X.seed, dist=X.dist, conditioned=True)


def sample_covariance(X):
    """Sample covariance S = X X* / N, symmetrized to Hermitian at fp level."""
    e = X.entries
    s = e @ e.conj().T / X.N
    s = (s + s.conj().T) / 2.0
    if not np.iscomplexobj(e):
        s = s.real
    return CovarianceMatrix(entries=s, samples=X.N)


# -- matrix dumps ------------------------------------------------------------

_HEADER = struct.Struct("<QQ")


def dump_matrix_binary(X, path):
    """Write entries as little-endian f64 (re, im) pairs after an (n, N) header.

    Entries are laid out in column-major order, matching the generation
    counter.
    """
    flat = np.asarray(X.entries, dtype=complex).flatten(order="F")
    buf = np.empty(2 * flat.size, dtype="<f8")
    buf[0::2] = flat.real
    buf[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(X.n, X.N))
        fh.write(buf.tobytes())


def load_matrix_binary(path):
    """Read a matrix written by :func:`dump_matrix_binary`."""
    with open(path, "rb") as fh:
        n, N = _HEADER.unpack(fh.read(_HEADER.size))
        buf = np.frombuffer(fh.read(), dtype="<f8")
    if buf.size != 2 * n * N:
        raise DomainError(f"matrix dump truncated: expected {2 * n * N} floats, got {buf.size}")
    flat = buf[0::2] + 1j * buf[1::2]
    entries = flat.reshape((n, N), order="F")
    if not entries.imag.any():
        entries = entries.real.copy()
    return EntryMatrix(entries=entries, seed=0)


def dump_matrix_csv(X, path):
    """Write a small matrix (n*N <= 10^4) as CSV with re/im column pairs."""
    if X.n * X.N > _CSV_ENTRY_LIMIT:
        raise DomainError(
            f"CSV dump is limited to {_CSV_ENTRY_LIMIT} entries, matrix has {X.n * X.N}"
        )
    e = np.asarray(X.entries, dtype=complex)
    with open(path, "w", encoding="utf-8") as fh:
        cols = []
        for j in range(X.N):
            cols += [f"re{j}", f"im{j}"]
        fh.write(",".join(cols) + "\n")
        for i in range(X.n):
            cells = []
            for j in range(X.N):
                cells += [format(e[i, j].real, ".17g"), format(e[i, j].imag, ".17g")]
            fh.write(",".join(cells) + "\n")
