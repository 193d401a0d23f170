"""Exact Kolmogorov distances, the three-term distance bound, and rate fits.

KS distances are computed analytically at jump points (both one-sided
limits), never on a grid, so measured distances carry no discretization
error into the rate fits.
"""

from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError
from .mp_law import MPLaw, smoothing_scale
from .spectra import StepDistribution, empirical_stieltjes

__all__ = [
    "ks_step_vs_cdf",
    "ks_step_vs_step",
    "BoundContext",
    "BoundReport",
    "berry_esseen_bound",
    "RateFit",
    "rate_fit",
]


def ks_step_vs_cdf(H, G):
    """sup_x |H(x) - G(x)| for a step CDF H against a continuous CDF G.

    ``G`` must be a vectorized evaluator, monotone with limits 0 and 1.
    The sup is exact: at every jump both one-sided limits of H are compared
    against G, and the limit at +inf covers any mass deficit of H.
    """
    if not isinstance(H, StepDistribution) or H.locations.size == 0:
        raise DomainError("H must be a nonempty StepDistribution")
    g = np.asarray(G(H.locations), dtype=float)
    right = np.abs(H.cumulative - g)
    left = np.abs(np.concatenate([[0.0], H.cumulative[:-1]]) - g)
    return float(max(right.max(), left.max(), 1.0 - H.total_mass))


def ks_step_vs_step(H, F):
    """sup_x |H(x) - F(x)| for two step CDFs, exact over the union jump set."""
    for s in (H, F):
        if not isinstance(s, StepDistribution) or s.locations.size == 0:
            raise DomainError("both step functions must be nonempty")
    union = np.union1d(H.locations, F.locations)
    diff_right = H.cdf(union) - F.cdf(union)
    diff_left = H.cdf_left(union) - F.cdf_left(union)
    return float(max(np.abs(diff_right).max(), np.abs(diff_left).max()))


@dataclass(frozen=True)
class BoundContext:
    """Constants of the three-term distance bound.

    The underlying lemma only asserts that sufficiently large A, B, K1..K3
    exist (with A > B > 5); no canonical values are known, so they are all
    caller inputs.
    """

    A: float
    B: float
    v: float
    K1: float = 1.0
    K2: float = 1.0
    K3: float = 1.0

    def __post_init__(self):
        if not self.A > self.B > 5.0:
            raise DomainError(f"need A > B > 5, got A={self.A}, B={self.B}")
        if self.v <= 0:
            raise DomainError(f"height v must be positive, got {self.v}")
        if min(self.K1, self.K2, self.K3) <= 0:
            raise DomainError("constants K1, K2, K3 must be positive")


@dataclass(frozen=True)
class BoundReport:
    """Evaluated sides of the three-term bound, with the inputs echoed.

    This is a diagnostic, not a theorem checker: with small constants the
    inequality is expected to fail, which ``holds`` simply records.
    """

    term1: float
    term2: float
    term3: float
    lhs: float
    y: float
    context: BoundContext

    @property
    def rhs(self):
        return self.term1 + self.term2 + self.term3

    @property
    def holds(self):
        return self.lhs <= self.rhs

    def to_dict(self):
        ctx = self.context
        return {
            "y": self.y,
            "A": ctx.A,
            "B": ctx.B,
            "v": ctx.v,
            "K1": ctx.K1,
            "K2": ctx.K2,
            "K3": ctx.K3,
            "v_y": smoothing_scale(self.y, ctx.v),
            "term1": self.term1,
            "term2": self.term2,
            "term3": self.term3,
            "rhs": self.rhs,
            "lhs": self.lhs,
            "holds": self.holds,
        }


def berry_esseen_bound(H, law, ctx, stieltjes_H=None):
    """Evaluate both sides of the three-term Kolmogorov-distance bound.

    term1 integrates |m_H - m_law| along the horizontal line at height v,
    term2 integrates the tail distance beyond +-B (piecewise exact; the law
    has no mass there), and term3 is the smoothing integral of the law's
    CDF.  ``stieltjes_H`` defaults to the exact transform of H.
    """
    if not isinstance(law, MPLaw):
        raise DomainError("law must be an MPLaw")
    if stieltjes_H is None:
        stieltjes_H = lambda z: empirical_stieltjes(H, z)  # noqa: E731

    def integrand(u):
        z = u + 1j * ctx.v
        return abs(stieltjes_H(z) - law.stieltjes(z))

    hint = [x for x in (law.a, law.b) if -ctx.A < x < ctx.A]
    val, err = integrate.quad(
        integrand, -ctx.A, ctx.A, epsabs=1e-9, epsrel=1e-9, limit=400,
        points=hint or None,
    )
    if err > max(1e-8, 1e-8 * abs(val)):
        raise NumericError(
            f"transform-difference quadrature achieved {err:.3e}, target 1e-8",
            achieved=err,
        )
    term1 = ctx.K1 * val
    term2 = ctx.K2 / ctx.v * _tail_integral(H, law, ctx.B)
    term3 = ctx.K3 / ctx.v * law.smoothing_integral(ctx.v)[0]
    lhs = ks_step_vs_cdf(H, law.cdf)
    return BoundReport(term1=term1, term2=term2, term3=term3, lhs=lhs, y=law.y, context=ctx)


def _tail_integral(H, law, B):
    """int_{|x| > B} |H - F_law| dx, exact since F_law is 0/1 beyond +-B."""
    if abs(H.total_mass - 1.0) > 1e-12:
        raise NumericError(
            f"tail integral diverges: step function carries mass {H.total_mass}"
        )
    total = 0.0
    # Above B the law's CDF is identically 1 (its support ends at b <= 4 < B).
    upper = H.locations[H.locations > B]
    cuts = np.concatenate([[B], upper])
    heights = np.abs(H.cdf(cuts[:-1]) - 1.0)
    total += float(np.sum(heights * np.diff(cuts)))
    # Below -B the law's CDF is identically 0.
    lower = H.locations[H.locations < -B]
    if lower.size:
        cuts = np.concatenate([lower, [-B]])
        heights = np.abs(H.cdf(cuts[:-1]))
        total += float(np.sum(heights * np.diff(cuts)))
    return total


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log N, log distance) points."""

    slope: float
    intercept: float
    rss: float
    points: tuple

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "rss": self.rss,
            "points": [list(p) for p in self.points],
        }


def rate_fit(points):
    """Fit log(distance) = slope * log(N) + intercept by ordinary least squares.

    ``points`` is a sequence of (N, distance) pairs with N strictly
    increasing and every distance positive; at least 3 points are required
    for a meaningful exponent.
    """
    pts = list(points)
    if len(pts) < 3:
        raise DomainError(f"rate fit needs at least 3 points, got {len(pts)}")
    n_vals = np.asarray([p[0] for p in pts], dtype=float)
    d_vals = np.asarray([p[1] for p in pts], dtype=float)
    if np.any(d_vals <= 0):
        raise DomainError("distances must be positive for a log-log fit")
    if np.any(np.diff(n_vals) <= 0):
        raise DomainError("N values must be strictly increasing")
    x = np.log(n_vals)
    z = np.log(d_vals)
    slope, intercept = np.polyfit(x, z, 1)
    resid = z - (slope * x + intercept)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        rss=float(np.dot(resid, resid)),
        points=tuple(zip(x.tolist(), z.tolist())),
    )
