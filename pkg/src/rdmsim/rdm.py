"""Discrete-instant random position sampling.

A particle occupies exactly one site per instant; the site is drawn
independently each instant from the instantaneous density (iid across
instants -- the minimal model, exposed as a config-visible assumption).
Sampling is exact discrete inverse-CDF so that identical (inputs, seed)
give bit-identical trajectories.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NormalizationError
from .schrodinger import GridWavefunction, position_density

DENSITY_TOL = 1e-8


def _frozen(a, dtype):
    a = np.asarray(a, dtype=dtype).copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StayTrajectory:
    """Per-instant site indices of one particle's stays."""

    stays: np.ndarray
    n_sites: int
    dt_instant: float = 1.0
    seed: int = 0

    def __post_init__(self):
        s = _frozen(self.stays, np.int64)
        if s.ndim != 1:
            raise DimensionMismatchError("stays must be a 1-d index list")
        if s.size and (s.min() < 0 or s.max() >= self.n_sites):
            raise DimensionMismatchError("stay index out of range for the source density")
        object.__setattr__(self, "stays", s)

    @property
    def instants(self) -> int:
        return self.stays.size


@dataclass(frozen=True)
class PairedStayTrajectory:
    """Synchronized stays of two entangled particles.

    Branch labels are identical for the two particles at every instant
    (exact, by construction).  Positions are real coordinates inside the
    branch regions, needed by the boosted-frame analysis.
    """

    branches: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    dt_instant: float = 1.0
    seed: int = 0

    def __post_init__(self):
        b = _frozen(self.branches, np.int64)
        x1 = _frozen(self.x1, np.float64)
        x2 = _frozen(self.x2, np.float64)
        if not (b.shape == x1.shape == x2.shape) or b.ndim != 1:
            raise DimensionMismatchError("branches, x1, x2 must be equal-length 1-d arrays")
        object.__setattr__(self, "branches", b)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def instants(self) -> int:
        return self.branches.size

    @property
    def times(self) -> np.ndarray:
        return self.dt_instant * np.arange(self.instants)


def _as_probabilities(density) -> np.ndarray:
    """Normalize input to a discrete probability vector over sites."""
    if isinstance(density, GridWavefunction):
        p = position_density(density) * density.dx
    else:
        p = np.asarray(density, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise DimensionMismatchError("density must be a 1-d vector or a grid wavefunction")
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > DENSITY_TOL:
        raise NormalizationError("density must be non-negative and sum to 1 within 1e-8")
    return p


def sample_stays(density, n: int, seed: int, dt_instant: float = 1.0) -> StayTrajectory:
    """Draw n iid stays from the discrete density (inverse CDF).

    Accepts a probability vector or a GridWavefunction (binned to the
    grid first).  Reproducible from the seed.
    """
    p = _as_probabilities(density)
    if n < 1:
        raise DimensionMismatchError("need n >= 1 instants")
    rng = np.random.Generator(np.random.PCG64(seed))
    cdf = np.cumsum(p)
    cdf[-1] = 1.0  # guard the top edge against rounding
    stays = np.searchsorted(cdf, rng.random(n), side="right")
    return StayTrajectory(stays, n_sites=p.size, dt_instant=dt_instant, seed=seed)


def empirical_density(t: StayTrajectory, bins: int = None) -> np.ndarray:
    """Normalized histogram of stays: the time-averaged stay measure.

    Converges to the source density as the instant count grows, with
    total-variation error O(1/sqrt(n)).
    """
    nbins = t.n_sites if bins is None else int(bins)
    counts = np.bincount(t.stays, minlength=nbins).astype(np.float64)
    return counts / max(t.instants, 1)


def effective_charge_density(psi: GridWavefunction, charge: float) -> np.ndarray:
    """Q |psi(x)|^2: the charge density a charge-Q particle's ergodic
    stays build up; integrates (dx * sum) to Q within 1e-8."""
    return charge * position_density(psi)


def sample_entangled_stays(branch_spec, n: int, seed: int, dt_instant: float = 1.0) -> PairedStayTrajectory:
    """Synchronized two-particle sampling.

    branch_spec is a list of (weight, region1, region2) with regions as
    (lo, hi) position intervals.  Per instant: one branch is drawn with
    its weight, then each particle's position is drawn independently and
    uniformly inside its own branch region.  The branch label is shared,
    so the two particles jump between branches in exact lockstep.
    """
    weights = np.array([float(b[0]) for b in branch_spec])
    if abs(float(weights.sum()) - 1.0) > DENSITY_TOL or np.any(weights < 0):
        raise NormalizationError("branch weights must be non-negative and sum to 1")
    if n < 1:
        raise DimensionMismatchError("need n >= 1 instants")
    regions1 = [tuple(map(float, b[1])) for b in branch_spec]
    regions2 = [tuple(map(float, b[2])) for b in branch_spec]
    for lo, hi in regions1 + regions2:
        if not hi > lo:
            raise DimensionMismatchError("region must be a (lo, hi) interval with hi > lo")
    rng = np.random.Generator(np.random.PCG64(seed))
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    branches = np.searchsorted(cdf, rng.random(n), side="right")
    u1 = rng.random(n)
    u2 = rng.random(n)
    lo1 = np.array([r[0] for r in regions1])
    hi1 = np.array([r[1] for r in regions1])
    lo2 = np.array([r[0] for r in regions2])
    hi2 = np.array([r[1] for r in regions2])
    x1 = lo1[branches] + u1 * (hi1 - lo1)[branches]
    x2 = lo2[branches] + u2 * (hi2 - lo2)[branches]
    return PairedStayTrajectory(branches, x1, x2, dt_instant=dt_instant, seed=seed)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """TV distance between two discrete distributions on the same sites."""
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))
