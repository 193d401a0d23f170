"""Eigendecomposition, step distributions (ESD / VESD), and the bridge process.

A :class:`StepDistribution` is the shared representation of every empirical
CDF in the package: sorted jump locations with nonnegative masses, exact
ties merged into a single jump so sup computations are well defined.
"""

from dataclasses import dataclass, field
from math import floor, sqrt

import numpy as np

from . import rng
from .ensemble import CovarianceMatrix, sample_covariance
from .errors import DomainError, NumericError

__all__ = [
    "StepDistribution",
    "DirectionSpec",
    "Spectrum",
    "hermitian_eig",
    "projection_weights",
    "make_esd",
    "make_vesd",
    "empirical_stieltjes",
    "companion_empirical_stieltjes",
    "bridge_process",
    "haar_statistic",
    "spectrum_of",
    "dump_spectrum_csv",
]

_MASS_TOL = 1e-8


@dataclass(frozen=True)
class StepDistribution:
    """A right-continuous step CDF: jump locations plus nonnegative masses."""

    locations: np.ndarray
    masses: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        mass = np.asarray(self.masses, dtype=float)
        if loc.ndim != 1 or loc.size == 0 or loc.shape != mass.shape:
            raise DomainError("locations and masses must be matching nonempty 1-d arrays")
        if np.any(np.diff(loc) <= 0):
            raise DomainError("jump locations must be strictly increasing; merge ties first")
        if np.any(mass < 0):
            raise DomainError("jump masses must be nonnegative")
        cum = np.cumsum(mass)
        if cum[-1] > 1.0 + 1e-10:
            raise DomainError(f"total mass {cum[-1]} exceeds 1")
        for name, arr in (("locations", loc), ("masses", mass), ("cumulative", cum)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_jumps(cls, locations, masses):
        """Build a step CDF, sorting and merging exactly tied locations."""
        loc = np.asarray(locations, dtype=float)
        mass = np.asarray(masses, dtype=float)
        if loc.shape != mass.shape or loc.ndim != 1 or loc.size == 0:
            raise DomainError("locations and masses must be matching nonempty 1-d arrays")
        order = np.argsort(loc, kind="stable")
        loc, mass = loc[order], mass[order]
        uniq, start = np.unique(loc, return_index=True)
        merged = np.add.reduceat(mass, start)
        return cls(locations=uniq, masses=merged)

    @property
    def total_mass(self):
        return float(self.cumulative[-1])

    def cdf(self, x):
        """Right-continuous evaluation H(x)."""
        idx = np.searchsorted(self.locations, np.asarray(x, dtype=float), side="right")
        padded = np.concatenate([[0.0], self.cumulative])
        out = padded[idx]
        return out if out.ndim else float(out)

    def cdf_left(self, x):
        """Left limit H(x-)."""
        idx = np.searchsorted(self.locations, np.asarray(x, dtype=float), side="left")
        padded = np.concatenate([[0.0], self.cumulative])
        out = padded[idx]
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class DirectionSpec:
    """How to pick the unit vector a VESD projects onto.

    Kinds: ``basis`` (k-th canonical vector, 1-based), ``uniform`` (every
    coordinate n^-1/2), ``random-unit`` (Haar-uniform on the sphere, seeded),
    and ``explicit`` (caller-supplied values).
    """

    kind: str
    index: int = None
    seed: int = None
    values: tuple = None

    @classmethod
    def basis(cls, k):
        if int(k) < 1:
            raise DomainError(f"basis index must be >= 1, got {k}")
        return cls(kind="basis", index=int(k))

    @classmethod
    def uniform(cls):
        return cls(kind="uniform")

    @classmethod
    def random_unit(cls, seed):
        return cls(kind="random-unit", seed=int(seed))

    @classmethod
    def explicit(cls, values):
        vec = np.asarray(values, dtype=complex).ravel()
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"explicit direction has norm {norm}, expected 1")
        return cls(kind="explicit", values=tuple(vec.tolist()))

    def label(self):
        if self.kind == "basis":
            return f"basis:{self.index}"
        if self.kind == "random-unit":
            return f"random-unit:{self.seed}"
        return self.kind

    @classmethod
    def parse(cls, text):
        """Parse a CLI token: ``uniform``, ``basis:K``, or ``random-unit:SEED``."""
        t = text.strip()
        if t == "uniform":
            return cls.uniform()
        head, _, arg = t.partition(":")
        if head == "basis" and arg:
            try:
                return cls.basis(int(arg))
            except ValueError:
                raise DomainError(f"bad basis index in {text!r}") from None
        if head == "random-unit":
            try:
                return cls.random_unit(int(arg) if arg else 0)
            except ValueError:
                raise DomainError(f"bad seed in {text!r}") from None
        raise DomainError(f"unknown direction {text!r}")

    def resolve(self, n, complex_field=True):
        """Materialize the unit vector in dimension n.

        ``random-unit`` draws on the sphere of the field the data lives in:
        normalized i.i.d. complex Gaussians when ``complex_field``, real
        ones otherwise.  (The bridge normalization sqrt(n/2) is calibrated
        for the real/orthogonal case, so real data must get real
        directions.)
        """
        n = int(n)
        if n < 1:
            raise DomainError("dimension must be positive")
        if self.kind == "basis":
            if self.index > n:
                raise DomainError(f"basis index {self.index} exceeds dimension {n}")
            vec = np.zeros(n, dtype=float)
            vec[self.index - 1] = 1.0
            return vec
        if self.kind == "uniform":
            return np.full(n, 1.0 / sqrt(n))
        if self.kind == "random-unit":
            u1 = rng.uniform_at(self.seed, np.arange(2 * n, dtype=np.uint64) * np.uint64(2))
            u2 = rng.uniform_at(self.seed, np.arange(2 * n, dtype=np.uint64) * np.uint64(2) + np.uint64(1))
            g = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
            vec = g[:n] + 1j * g[n:] if complex_field else g[:n]
            return vec / np.linalg.norm(vec)
        vec = np.asarray(self.values, dtype=complex)
        if vec.size != n:
            raise DomainError(f"explicit direction has dimension {vec.size}, expected {n}")
        return vec


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with projection weights for one direction."""

    eigenvalues: np.ndarray
    weights: np.ndarray
    n: int
    N: int
    direction: str = ""
    seed: int = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if lam.shape != w.shape or lam.ndim != 1:
            raise DomainError("eigenvalues and weights must be matching 1-d arrays")
        if np.any(np.diff(lam) < 0):
            raise DomainError("eigenvalues must be ascending")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise DomainError("weights must be nonnegative and sum to 1")
        lam.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "weights", w)

    @property
    def y_n(self):
        return self.n / self.N


def hermitian_eig(S):
    """Full eigendecomposition of a Hermitian matrix.

    Accepts a :class:`CovarianceMatrix` or a raw square array.  Returns
    ascending eigenvalues and the orthonormal eigenvector columns, with the
    residual and orthonormality contracts of a dense Hermitian solver.
    """
    entries = S.entries if isinstance(S, CovarianceMatrix) else np.asarray(S)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DomainError("expected a square matrix")
    scale = max(1.0, float(np.abs(entries).max(initial=0.0)))
    if np.abs(entries - entries.conj().T).max(initial=0.0) > 1e-10 * scale:
        raise DomainError("matrix is not Hermitian")
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed to converge: {exc}") from exc
    return eigenvalues, eigenvectors


def projection_weights(eigenvectors, x):
    """Squared projections |u_k* x|^2 of a unit vector on the eigenbasis."""
    U = np.asarray(eigenvectors)
    n = U.shape[0]
    if isinstance(x, DirectionSpec):
        x = x.resolve(n, complex_field=np.iscomplexobj(U))
    vec = np.asarray(x)
    if vec.shape != (n,):
        raise DomainError(f"direction has shape {vec.shape}, expected ({n},)")
    d = U.conj().T @ vec
    return np.abs(d) ** 2


def make_esd(eigenvalues):
    """Empirical spectral distribution: mass 1/n at each eigenvalue."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise DomainError("eigenvalues must be a nonempty 1-d array")
    return StepDistribution.from_jumps(lam, np.full(lam.size, 1.0 / lam.size))


def make_vesd(eigenvalues, weights):
    """Eigenvector empirical spectral distribution: mass w_i at eigenvalue i."""
    lam = np.asarray(eigenvalues, dtype=float)
    w = np.asarray(weights, dtype=float)
    if lam.shape != w.shape or lam.ndim != 1 or lam.size == 0:
        raise DomainError("eigenvalues and weights must be matching nonempty 1-d arrays")
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > _MASS_TOL:
        raise DomainError(f"weights sum to {w.sum()}, expected 1 within {_MASS_TOL}")
    return StepDistribution.from_jumps(lam, w)


def empirical_stieltjes(dist, z):
    """Stieltjes transform of a step CDF: sum of mass_i / (lambda_i - z)."""
    zs = np.asarray(z, dtype=complex)
    if np.any(zs.imag <= 0):
        raise DomainError("z must lie strictly in the upper half plane")
    out = np.sum(dist.masses / (dist.locations - zs[..., None]), axis=-1)
    return out if out.ndim else complex(out)


def companion_empirical_stieltjes(m_n, y_n, z):
    """Transform of the companion spectrum (the N-n zero eigenvalues restored)."""
    if not 0 < y_n <= 1:
        raise DomainError(f"y_n must lie in (0, 1], got {y_n}")
    return -(1.0 - y_n) / z + y_n * m_n


def bridge_process(weights, t):
    """Partial-sum bridge sqrt(n/2) * sum_{j <= floor(n t)} (w_j - 1/n)."""
    w = np.asarray(weights, dtype=float)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    n = w.size
    k = min(floor(n * t), n)
    return sqrt(n / 2.0) * float(np.sum(w[:k] - 1.0 / n))


def haar_statistic(H, F, n):
    """T_n = sqrt(n/2) * sup_x |H(x) - F(x)| over the shared jump set.

    Requires H and F to be built from the same eigenvalues, so the sup is
    exact: both one-sided limits at every shared jump.
    """
    if not np.array_equal(H.locations, F.locations):
        raise DomainError("step functions do not share jump locations")
    right = np.abs(H.cumulative - F.cumulative)
    ch = np.concatenate([[0.0], H.cumulative[:-1]])
    cf = np.concatenate([[0.0], F.cumulative[:-1]])
    left = np.abs(ch - cf)
    return sqrt(n / 2.0) * float(max(right.max(), left.max()))


def spectrum_of(X, direction):
    """Full pipeline: covariance, eigendecomposition, projection weights."""
    S = sample_covariance(X)
    eigenvalues, eigenvectors = hermitian_eig(S)
    w = projection_weights(eigenvectors, direction)
    label = direction.label() if isinstance(direction, DirectionSpec) else "explicit"
    return Spectrum(
        eigenvalues=eigenvalues,
        weights=w,
        n=X.n,
        N=X.N,
        direction=label,
        seed=X.seed,
    )


def dump_spectrum_csv(spectrum, path):
    """CSV dump: metadata header, then (index, eigenvalue, weight) rows."""
    with open(path, "w", encoding="utf-8") as fh:
        seed = spectrum.seed if spectrum.seed is not None else ""
        fh.write(f"# n={spectrum.n},N={spectrum.N},seed={seed},direction={spectrum.direction}\n")
        fh.write("index,eigenvalue,weight\n")
        for i, (lam, w) in enumerate(zip(spectrum.eigenvalues, spectrum.weights), start=1):
            fh.write(f"{i},{format(lam, '.17g')},{format(w, '.17g')}\n")
