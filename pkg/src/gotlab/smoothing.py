"""Monte Carlo estimation of the smoothed optimal transport gap.

Smoothing convolves a discrete measure with a noise kernel; the smoothed
W2 distance is estimated by the plug-in estimator: draw n points from each
smoothed measure, solve the empirical n-point assignment exactly, repeat
over independent trials, and report mean and standard error.  All sampling
derives from a single integer seed through SeedSequence spawning, so results
are bit-reproducible regardless of thread count (GOTLAB_THREADS only maps
trials over a pool; trial seeds are fixed up front).

Also provides the certified quantities the gap is compared against: the
exponential small-sigma bound for robust configurations and the linear-in-
sigma excess check for instances with tied optimal matchings.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import lap
from .errors import CapabilityError, UsageError
from .exact_ot import solve_w2, squared_distances
from .measures import DiscreteMeasure

__all__ = [
    "SmoothingKernel",
    "PointCloud",
    "GotEstimate",
    "GapRecord",
    "LinearLbResult",
    "LocalInvarianceResult",
    "split_seed",
    "sample_smoothed",
    "empirical_w2",
    "got_estimate",
    "gap_curve",
    "exp_bound",
    "linear_lb_check",
    "local_invariance_check",
]


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothingKernel:
    """Noise law added to atoms: isotropic Gaussian, Gaussian conditioned to
    a ball (truncated), or the uniform distribution on a ball."""

    kind: str
    sigma: float = 0.0
    eps_star: float = 0.0
    radius: float = 0.0

    @staticmethod
    def gaussian(sigma: float) -> "SmoothingKernel":
        if not (sigma > 0) or not np.isfinite(sigma):
            raise UsageError(f"gaussian kernel needs sigma > 0, got {sigma}")
        return SmoothingKernel(kind="gaussian", sigma=float(sigma))

    @staticmethod
    def truncated_gaussian(sigma: float, eps_star: float) -> "SmoothingKernel":
        if not (sigma > 0) or not np.isfinite(sigma):
            raise UsageError(f"truncated gaussian needs sigma > 0, got {sigma}")
        if not (eps_star > 0) or not np.isfinite(eps_star):
            raise UsageError(f"truncated gaussian needs eps_star > 0, got {eps_star}")
        return SmoothingKernel(
            kind="truncated_gaussian", sigma=float(sigma), eps_star=float(eps_star)
        )

    @staticmethod
    def uniform_ball(radius: float) -> "SmoothingKernel":
        # radius 0 is the degenerate no-noise kernel (point mass at 0)
        if not (radius >= 0) or not np.isfinite(radius):
            raise UsageError(f"uniform ball needs radius >= 0, got {radius}")
        return SmoothingKernel(kind="uniform_ball", radius=float(radius))

    @property
    def scale(self) -> float:
        """Scalar size of the kernel (sigma, or ball radius)."""
        return self.sigma if self.kind != "uniform_ball" else self.radius

    def mass_inside(self, d: int) -> float:
        """Probability the (untruncated) noise lands within the cutoff."""
        if self.kind == "truncated_gaussian":
            return float(stats.chi2.cdf((self.eps_star / self.sigma) ** 2, df=d))
        return 1.0

    def sample(self, rng: np.random.Generator, n: int, d: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.sigma * rng.standard_normal((n, d))
        if self.kind == "truncated_gaussian":
            # Mixture kernel: with probability p = P[|N(0, s^2 I)| < eps*] the
            # noise is the conditional Gaussian inside the ball (drawn by
            # rejection); with probability 1 - p it is exactly zero.
            accept_p = self.mass_inside(d)
            if accept_p < 1e-9:
                raise UsageError(
                    "truncation keeps almost no mass "
                    f"(acceptance probability {accept_p:.2e}); increase eps_star"
                )
            noisy = np.flatnonzero(rng.random(n) < accept_p)
            out = np.zeros((n, d))
            if noisy.size:
                draws = self.sigma * rng.standard_normal((noisy.size, d))
                for _ in range(10_000):
                    bad = np.flatnonzero((draws**2).sum(axis=1) > self.eps_star**2)
                    if bad.size == 0:
                        break
                    draws[bad] = self.sigma * rng.standard_normal((bad.size, d))
                else:
                    raise RuntimeError(
                        "truncated gaussian rejection sampling stalled"
                    )
                out[noisy] = draws
            return out
        if self.kind == "uniform_ball":
            if self.radius == 0.0:
                return np.zeros((n, d))
            w = rng.standard_normal((n, d))
            wn = np.sqrt((w**2).sum(axis=1, keepdims=True))
            radii = self.radius * rng.random((n, 1)) ** (1.0 / d)
            return w / np.maximum(wn, 1e-300) * radii
        raise UsageError(f"unknown kernel kind {self.kind!r}")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def split_seed(seed: int, index: int) -> int:
    """Derive an independent child seed: SeedSequence(seed).spawn_key=(index,)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class PointCloud:
    """n sampled points plus the derived seed that produced them."""

    points: np.ndarray
    seed: int

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be (n, d), got shape {pts.shape}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def sample_smoothed(
    measure: DiscreteMeasure, kernel: SmoothingKernel, n: int, seed: int
) -> PointCloud:
    """n i.i.d. samples from measure convolved with the kernel."""
    if n < 1:
        raise UsageError(f"need n >= 1 samples, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
    idx = rng.choice(measure.num_atoms, size=n, p=measure.weights)
    noise = kernel.sample(rng, n, measure.dim)
    return PointCloud(points=measure.points[idx] + noise, seed=int(seed))


def _cloud_points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, float)
    if pts.ndim != 2:
        raise UsageError(f"point cloud must be (n, d), got shape {pts.shape}")
    return pts


def empirical_w2(cloud_a, cloud_b) -> float:
    """Exact W2 between two equal-size empirical measures (uniform weights).

    Solves the n x n assignment on exact squared distances and returns
    sqrt(total / n).  Identical clouds give exactly 0.0.
    """
    a = _cloud_points(cloud_a)
    b = _cloud_points(cloud_b)
    if a.shape != b.shape:
        raise UsageError(
            f"clouds must have equal shapes, got {a.shape} vs {b.shape}"
        )
    C = squared_distances(a, b)
    _, _, _, total = lap.solve_lap(C)
    return float(np.sqrt(max(total, 0.0) / a.shape[0]))


# ---------------------------------------------------------------------------
# the plug-in estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GotEstimate:
    """Monte Carlo estimate of the smoothed W2 (and its square)."""

    mean: float
    stderr: float
    trials: int
    n: int
    sigma: float
    mean_sq: float
    stderr_sq: float


def _num_threads() -> int:
    raw = os.environ.get("GOTLAB_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"GOTLAB_THREADS must be an integer, got {raw!r}")


def got_estimate(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    kernel: SmoothingKernel,
    n: int,
    trials: int,
    seed: int,
) -> GotEstimate:
    """Plug-in estimate of W2(mu * K, nu * K) from `trials` independent
    n-sample empirical solves.  Trial t uses child seeds (2t, 2t+1); results
    are averaged in trial order, so the value is independent of threading.
    """
    if trials < 2:
        raise UsageError(f"need trials >= 2 for a standard error, got {trials}")
    if mu.dim != nu.dim:
        raise UsageError(f"dimension mismatch: {mu.dim} vs {nu.dim}")

    def one(t: int) -> float:
        a = sample_smoothed(mu, kernel, n, split_seed(seed, 2 * t))
        b = sample_smoothed(nu, kernel, n, split_seed(seed, 2 * t + 1))
        return empirical_w2(a, b)

    threads = _num_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = np.array(list(ex.map(one, range(trials))))
    else:
        vals = np.array([one(t) for t in range(trials)])

    sq = vals**2
    return GotEstimate(
        mean=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / np.sqrt(trials)),
        trials=trials,
        n=n,
        sigma=kernel.scale,
        mean_sq=float(sq.mean()),
        stderr_sq=float(sq.std(ddof=1) / np.sqrt(trials)),
    )


# ---------------------------------------------------------------------------
# gap curve and bounds
# ---------------------------------------------------------------------------

def exp_bound(sigma: float, sigma_star: float) -> float:
    """Exponential small-noise bound sqrt(sigma_star * sigma)
    * exp(-sigma_star^2 / (4 sigma^2)), defined for 0 < sigma < sigma_star."""
    if not (sigma_star > 0) or not np.isfinite(sigma_star):
        raise UsageError(f"sigma_star must be positive, got {sigma_star}")
    if not (0 < sigma < sigma_star):
        raise UsageError(
            f"exp_bound needs 0 < sigma < sigma_star, got sigma={sigma}, "
            f"sigma_star={sigma_star}"
        )
    return float(np.sqrt(sigma_star * sigma) * np.exp(-(sigma_star**2) / (4.0 * sigma**2)))


@dataclass(frozen=True)
class GapRecord:
    """One sigma point of a gap curve."""

    sigma: float
    w2_exact: float
    got: GotEstimate
    gap: float      # w2_exact - got.mean
    gap_sq: float   # w2_exact^2 - got.mean_sq
    exp_bound_value: float  # NaN where the bound is undefined


def _validated_grid(sigma_grid) -> Tuple[float, ...]:
    grid = tuple(float(s) for s in sigma_grid)
    if not grid:
        raise UsageError("sigma grid must be nonempty")
    if any(not np.isfinite(s) or s <= 0 for s in grid):
        raise UsageError("sigma grid values must be finite and > 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("sigma grid must be strictly ascending")
    return grid


def gap_curve(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    sigma_grid: Sequence[float],
    n: int,
    trials: int,
    seed: int,
    sigma_star: Optional[float] = None,
) -> Tuple[GapRecord, ...]:
    """Gaussian-smoothed gap curve over an ascending sigma grid.

    sigma point i uses child seed split_seed(seed, i).  sigma_star (e.g. an
    estimated robustness radius) enables the exponential bound column where
    0 < sigma < sigma_star; elsewhere it is NaN.
    """
    grid = _validated_grid(sigma_grid)
    sol = solve_w2(mu, nu)
    w2x = sol.w2
    records = []
    for i, sigma in enumerate(grid):
        got = got_estimate(
            mu, nu, SmoothingKernel.gaussian(sigma), n, trials, split_seed(seed, i)
        )
        if sigma_star is not None and np.isfinite(sigma_star) and 0 < sigma < sigma_star:
            eb = exp_bound(sigma, sigma_star)
        else:
            eb = float("nan")
        records.append(
            GapRecord(
                sigma=sigma,
                w2_exact=w2x,
                got=got,
                gap=w2x - got.mean,
                gap_sq=sol.w2_squared - got.mean_sq,
                exp_bound_value=eb,
            )
        )
    return tuple(records)


# ---------------------------------------------------------------------------
# statistical checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearLbResult:
    """Through-origin regression of the squared-W2 excess on sigma."""

    slope: float
    slope_stderr: float
    t_stat: float
    dof: int
    significant_95: bool
    sigmas: Tuple[float, ...]
    excesses: Tuple[float, ...]


def linear_lb_check(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    sigma_grid: Sequence[float],
    n: int,
    trials: int,
    seed: int,
) -> LinearLbResult:
    """Test for linear-in-sigma growth of the squared gap W2^2 - E[What2^2].

    Intended for instances whose optimal plan is not a unique perfect
    matching (the squared gap then grows linearly at small sigma); raises
    when the plan is a unique perfect matching, since the gap is then
    exponentially small instead.  The grid must sit in the local window
    sigma <= 0.3 * (minimum pairwise distance among distinct support
    points).  Fits gap_sq ~ slope * sigma through the origin; significance
    is a one-sided 95% t-test of slope > 0.
    """
    from .exact_ot import is_unique_optimal

    grid = _validated_grid(sigma_grid)
    if len(grid) < 2:
        raise UsageError("need at least 2 sigma points for a slope test")
    sol = solve_w2(mu, nu)
    if sol.is_perfect_matching and is_unique_optimal(mu, nu, sol):
        raise UsageError(
            "linear_lb_check expects an instance whose optimal plan is not "
            "a unique perfect matching; this one is"
        )
    support = np.vstack([mu.points, nu.points])
    dists = np.sqrt(squared_distances(support, support))
    np.fill_diagonal(dists, np.inf)
    positive = dists[dists > 1e-12]
    if positive.size == 0:
        raise UsageError("all support points coincide; no local window exists")
    window = 0.3 * float(positive.min())
    if max(grid) > window:
        raise UsageError(
            f"sigma grid exceeds the local window {window:.6g} "
            "(0.3 * min pairwise support distance)"
        )

    sigmas = np.asarray(grid)
    excesses = []
    for i, sigma in enumerate(grid):
        got = got_estimate(
            mu, nu, SmoothingKernel.gaussian(sigma), n, trials, split_seed(seed, i)
        )
        excesses.append(sol.w2_squared - got.mean_sq)
    excesses = np.asarray(excesses)

    s2 = float((sigmas**2).sum())
    slope = float((sigmas * excesses).sum() / s2)
    resid = excesses - slope * sigmas
    dof = len(grid) - 1
    sigma_hat2 = float((resid**2).sum() / dof)
    stderr = float(np.sqrt(sigma_hat2 / s2))
    if stderr == 0.0:
        t_stat = np.inf if slope > 0 else 0.0
    else:
        t_stat = slope / stderr
    crit = float(stats.t.ppf(0.95, dof))
    return LinearLbResult(
        slope=slope,
        slope_stderr=stderr,
        t_stat=float(t_stat),
        dof=dof,
        significant_95=bool(t_stat > crit),
        sigmas=tuple(float(s) for s in sigmas),
        excesses=tuple(float(e) for e in excesses),
    )


@dataclass(frozen=True)
class LocalInvarianceResult:
    """Smoothing below the robustness radius should not move W2."""

    passed: bool
    radius: float
    r_hat: float
    w2_exact: float
    mean: float
    stderr: float
    gap: float
    trials: int
    n: int


def local_invariance_check(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    radius: float,
    n: int,
    trials: int,
    seed: int,
) -> LocalInvarianceResult:
    """Check W2(mu * U, nu * U) == W2(mu, nu) for a uniform-ball kernel with
    radius strictly below the estimated robustness radius.

    radius = 0 is the degenerate kernel: the identity holds exactly and no
    sampling is done.  Otherwise the plug-in estimate must sit within three
    standard errors of the exact value.  Requires a perfect-matching optimal
    plan with k <= 8 so the robustness radius can be estimated.
    """
    from .robustness import estimate_r

    if not (radius >= 0) or not np.isfinite(radius):
        raise UsageError(f"radius must be finite and >= 0, got {radius}")
    sol = solve_w2(mu, nu)
    if sol.matching is None:
        raise CapabilityError(
            "local invariance needs a perfect-matching optimal plan"
        )
    r_hat = estimate_r(mu.points, nu.points, matching=sol.matching)
    if radius >= r_hat and radius > 0:
        raise UsageError(
            f"radius {radius} is not below the estimated robustness radius {r_hat:.6g}"
        )
    if radius == 0.0:
        return LocalInvarianceResult(
            passed=True, radius=0.0, r_hat=float(r_hat), w2_exact=sol.w2,
            mean=sol.w2, stderr=0.0, gap=0.0, trials=0, n=n,
        )
    got = got_estimate(
        mu, nu, SmoothingKernel.uniform_ball(radius), n, trials, seed
    )
    gap = got.mean - sol.w2
    return LocalInvarianceResult(
        passed=bool(abs(gap) <= 3.0 * got.stderr),
        radius=float(radius),
        r_hat=float(r_hat),
        w2_exact=sol.w2,
        mean=got.mean,
        stderr=got.stderr,
        gap=float(gap),
        trials=trials,
        n=n,
    )
