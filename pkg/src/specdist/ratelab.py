"""Monte Carlo experiment driver: replication sweeps, rate fits, Haar diagnostic.

Replication (N, r) always runs on the seed ``derive(base_seed, N, r)``, so
the full sweep is a pure function of its configuration.  Replications
within one sample size are independent tasks; the driver may spread them
over a thread pool (capped by the SPECDIST_THREADS environment variable,
0 = auto) and aggregates in (N, r) order, which keeps every report
bit-identical regardless of the worker count.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

import numpy as np

from . import _jsonfmt, rng
from .ensemble import EntryDistribution, condition_entries, default_eta, sample_entries
from .errors import DomainError, NumericError
from .metrics import RateFit, ks_step_vs_cdf, rate_fit
from .mp_law import MPLaw
from .spectra import DirectionSpec, StepDistribution, haar_statistic, make_esd, make_vesd, spectrum_of

__all__ = [
    "ExperimentConfig",
    "PointStats",
    "RateReport",
    "SweepError",
    "run_pathwise_sweep",
    "run_expected_sweep",
    "run_haar_experiment",
    "kolmogorov_cdf",
    "replication_seed",
]

SCHEMA = "specdist.ratereport/v1"

METRICS = ("vesd-expected", "vesd-pathwise", "esd")

# One-sided exponent targets for the fitted log-log slope.
TARGET_EXPONENT = {
    "vesd-expected": -0.5,
    "vesd-pathwise": -0.25,
    "esd": -0.5,
}


class SweepError(NumericError):
    """A sweep aborted; ``partial`` holds the flagged partial report."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; hashable and JSON round-trippable."""

    distribution: EntryDistribution
    y: float
    sample_sizes: tuple
    replications: int
    direction: DirectionSpec
    base_seed: int
    condition: bool = False
    eta: float = None
    metric: str = "vesd-pathwise"

    def __post_init__(self):
        if not 0 < self.y <= 1:
            raise DomainError(f"y must lie in (0, 1], got {self.y}")
        sizes = tuple(int(N) for N in self.sample_sizes)
        if len(sizes) < 1 or any(N < 1 for N in sizes):
            raise DomainError("sample_sizes must be positive integers")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise DomainError("sample_sizes must be strictly increasing")
        if any(self.dim_of(N) < 1 for N in sizes):
            raise DomainError("y * N rounds to zero rows for some sample size")
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if self.metric not in METRICS:
            raise DomainError(f"unknown metric {self.metric!r}; choose from {METRICS}")
        if self.eta is not None and self.eta <= 0:
            raise DomainError("eta must be positive when given")
        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "base_seed", int(self.base_seed))

    def dim_of(self, N):
        """Realized row count n = round(y * N)."""
        return int(round(self.y * N))

    def to_dict(self):
        return {
            "distribution": self.distribution.label(),
            "y": self.y,
            "sample_sizes": list(self.sample_sizes),
            "replications": self.replications,
            "direction": self.direction.label(),
            "base_seed": self.base_seed,
            "condition": self.condition,
            "eta": self.eta,
            "metric": self.metric,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                distribution=EntryDistribution.parse(data["distribution"]),
                y=float(data["y"]),
                sample_sizes=tuple(data["sample_sizes"]),
                replications=int(data["replications"]),
                direction=DirectionSpec.parse(data["direction"]),
                base_seed=int(data["base_seed"]),
                condition=bool(data.get("condition", False)),
                eta=(None if data.get("eta") is None else float(data["eta"])),
                metric=data.get("metric", "vesd-pathwise"),
            )
        except KeyError as exc:
            raise DomainError(f"config is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class PointStats:
    """Distance statistics at one sample size."""

    N: int
    n: int
    y_n: float
    a: float
    mean: float
    median: float
    q05: float
    q95: float
    wallclock_ms: float
    distances: tuple

    def to_dict(self, include_timing=True):
        return {
            "N": self.N,
            "n": self.n,
            "y_n": self.y_n,
            "a": self.a,
            "mean": self.mean,
            "median": self.median,
            "q05": self.q05,
            "q95": self.q95,
            "wallclock_ms": self.wallclock_ms if include_timing else None,
            "distances": list(self.distances),
        }


@dataclass(frozen=True)
class RateReport:
    """Results of one sweep: per-N statistics plus the fitted exponent."""

    config: ExperimentConfig
    points: tuple
    fit: RateFit
    target_exponent: float
    complete: bool = True

    def to_dict(self, include_timing=True):
        return {
            "schema": SCHEMA,
            "complete": self.complete,
            "config": self.config.to_dict(),
            "target_exponent": self.target_exponent,
            "points": [p.to_dict(include_timing) for p in self.points],
            "fit": self.fit.to_dict() if self.fit is not None else None,
        }

    def to_json(self, include_timing=True):
        return _jsonfmt.dumps(self.to_dict(include_timing)) + "\n"

    def to_csv(self, include_timing=True):
        lines = ["N,n,y_n,a,stat_mean,stat_median,q05,q95,wallclock_ms"]
        for p in self.points:
            clock = _jsonfmt.format_float(p.wallclock_ms) if include_timing else ""
            cells = [str(p.N), str(p.n)] + [
                _jsonfmt.format_float(v) for v in (p.y_n, p.a, p.mean, p.median, p.q05, p.q95)
            ] + [clock]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def replication_seed(base_seed, N, r):
    """Seed of replication (N, r): derive(base_seed, N, r)."""
    return rng.derive(base_seed, N, r)


def _direction_for(cfg, N, r):
    # random-unit directions are redrawn per replication from a derived
    # seed so replications stay i.i.d.; deterministic kinds are shared.
    d = cfg.direction
    if d.kind == "random-unit":
        return DirectionSpec.random_unit(rng.derive(d.seed, N, r))
    return d


def _replicate(cfg, N, r):
    X = sample_entries(cfg.distribution, cfg.dim_of(N), N, replication_seed(cfg.base_seed, N, r))
    if cfg.condition:
        X = condition_entries(X, cfg.eta if cfg.eta is not None else default_eta(N))
    return spectrum_of(X, _direction_for(cfg, N, r))


def _worker_count():
    raw = os.environ.get("SPECDIST_THREADS", "0")
    try:
        count = int(raw)
    except ValueError:
        raise DomainError(f"SPECDIST_THREADS must be an integer, got {raw!r}") from None
    if count < 0:
        raise DomainError(f"SPECDIST_THREADS must be >= 0, got {count}")
    return count or min(32, os.cpu_count() or 1)


def _map_tasks(fn, args):
    workers = _worker_count()
    if workers == 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))


def _summarize(cfg, N, distances, elapsed_ms):
    n = cfg.dim_of(N)
    y_n = n / N
    d = np.asarray(distances, dtype=float)
    return PointStats(
        N=N,
        n=n,
        y_n=y_n,
        a=(1.0 - sqrt(y_n)) ** 2,
        mean=float(d.mean()),
        median=float(np.median(d)),
        q05=float(np.quantile(d, 0.05)),
        q95=float(np.quantile(d, 0.95)),
        wallclock_ms=elapsed_ms,
        distances=tuple(d.tolist()),
    )


def _fit_or_none(pairs):
    if len(pairs) < 3 or any(d <= 0 for _, d in pairs):
        return None
    return rate_fit(pairs)


def _sweep(cfg, per_replication, per_size):
    points = []
    for N in cfg.sample_sizes:
        t0 = time.perf_counter()
        try:
            results = _map_tasks(lambda r: per_replication(cfg, N, r), range(cfg.replications))
            distances = per_size(cfg, N, results)
        except NumericError as exc:
            partial = RateReport(
                config=cfg,
                points=tuple(points),
                fit=None,
                target_exponent=TARGET_EXPONENT[cfg.metric],
                complete=False,
            )
            raise SweepError(f"sweep aborted at N={N}: {exc}", partial=partial) from exc
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        points.append(_summarize(cfg, N, distances, elapsed_ms))
    fit = _fit_or_none([(p.N, p.median) for p in points])
    return RateReport(
        config=cfg,
        points=tuple(points),
        fit=fit,
        target_exponent=TARGET_EXPONENT[cfg.metric],
    )


def _pathwise_distance(cfg, N, r):
    spec = _replicate(cfg, N, r)
    if cfg.metric == "esd":
        H = make_esd(spec.eigenvalues)
    else:
        H = make_vesd(spec.eigenvalues, spec.weights)
    return ks_step_vs_cdf(H, MPLaw(spec.y_n).cdf)


def run_pathwise_sweep(cfg):
    """Per-replication Kolmogorov distances to the limit law, medians fitted.

    Metric must be ``vesd-pathwise`` or ``esd``; distances are always taken
    against the law with the realized index y_n = n/N.
    """
    if cfg.metric not in ("vesd-pathwise", "esd"):
        raise DomainError(f"pathwise sweep needs metric vesd-pathwise or esd, got {cfg.metric!r}")
    return _sweep(cfg, _pathwise_distance, lambda cfg_, N_, dists: dists)


def run_expected_sweep(cfg):
    """Estimate ||E H - F|| by averaging the replication VESDs pointwise.

    The estimator averages the R step functions on the union of their jump
    sets (exact, no smoothing) and takes a single Kolmogorov distance per
    sample size; with R = 1 this reduces to the pathwise distance.
    """
    if cfg.metric != "vesd-expected":
        raise DomainError(f"expected sweep needs metric vesd-expected, got {cfg.metric!r}")

    def per_size(cfg_, N, spectra):
        vesds = [make_vesd(s.eigenvalues, s.weights) for s in spectra]
        union = np.unique(np.concatenate([v.locations for v in vesds]))
        avg = np.zeros_like(union)
        for v in vesds:
            avg += v.cdf(union)
        avg /= len(vesds)
        masses = np.diff(np.concatenate([[0.0], avg]))
        mean_H = StepDistribution(locations=union, masses=np.maximum(masses, 0.0))
        n = cfg_.dim_of(N)
        return [ks_step_vs_cdf(mean_H, MPLaw(n / N).cdf)]

    return _sweep(cfg, _replicate, per_size)


def run_haar_experiment(cfg):
    """Bridge-statistic sample T_n and its distance to the Kolmogorov law.

    Each replication contributes T_n = sqrt(n/2) sup_x |VESD - ESD|; the
    returned distance compares the empirical distribution of the sample
    against the Kolmogorov limit K(x) = 1 - 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
    """
    if cfg.replications < 50:
        raise DomainError(f"Haar experiment needs at least 50 replications, got {cfg.replications}")

    def statistic(args):
        N, r = args
        spec = _replicate(cfg, N, r)
        H = make_vesd(spec.eigenvalues, spec.weights)
        F = make_esd(spec.eigenvalues)
        return haar_statistic(H, F, spec.n)

    stats = []
    for N in cfg.sample_sizes:
        stats.extend(_map_tasks(statistic, [(N, r) for r in range(cfg.replications)]))
    return stats, _ks_sample_vs_cdf(np.asarray(stats), kolmogorov_cdf)


def kolmogorov_cdf(x):
    """CDF of the Kolmogorov limit law, series truncated below 1e-12."""
    xs = np.asarray(x, dtype=float)
    out = np.zeros(xs.shape, dtype=float)
    p = xs > 0
    t2 = xs[p] ** 2
    acc = np.ones_like(t2)
    for k in range(1, 1000):
        term = 2.0 * np.exp(-2.0 * k * k * t2)
        acc += term if k % 2 == 0 else -term
        if term.size == 0 or term.max() < 1e-12:
            break
    out[p] = np.clip(acc, 0.0, 1.0)
    return out if out.ndim else float(out)


def _ks_sample_vs_cdf(sample, cdf):
    """One-sample Kolmogorov-Smirnov distance for an i.i.d. sample."""
    t = np.sort(np.asarray(sample, dtype=float))
    R = t.size
    F = np.asarray(cdf(t), dtype=float)
    hi = np.arange(1, R + 1) / R - F
    lo = F - np.arange(0, R) / R
    return float(max(hi.max(), lo.max()))
