"""Boost and synchrony-convention analysis of stay/collapse events in
1+1 dimensions.

Besides the standard boost this implements the synchrony-general
transformation that preserves only the two-way light speed,

    x' = eta (x - v t)
    t' = eta [1 + beta (k + k')] t + eta [beta (k^2 - 1) + k - k'] x / c
    eta = 1 / sqrt((1 + beta k)^2 - beta^2)

with k, k' in [-1, 1] the one-way-speed anisotropy parameters of the
two frames (k = k' = 0 recovers the boost; k = 0, k' = -beta restores
absolute simultaneity: t' = t sqrt(1 - beta^2)).

Stay events of a sampled trajectory are discrete, so boosted-frame
coincidences are decided by a time tolerance; the default is half the
boosted inter-instant spacing.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolation,
    InfiniteOneWaySpeedError,
    InsufficientOverlapError,
    NoSimultaneityFrameError,
    SuperluminalFrameError,
)
from .rdm import PairedStayTrajectory, StayTrajectory


@dataclass(frozen=True)
class Event:
    """A point (t, x) tagged with its frame; c rides along as config."""

    t: float
    x: float
    frame: str = "S"
    c: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.x)):
            raise ContractViolation("event coordinates must be finite")
        if self.c <= 0:
            raise ContractViolation("c must be positive")


@dataclass(frozen=True)
class SynchronyParams:
    """Boost velocity plus one-way-speed parameters of both frames."""

    v: float
    k: float = 0.0
    k_prime: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if abs(self.v) >= self.c:
            raise SuperluminalFrameError("|v| must be below c")
        if abs(self.k) > 1.0 or abs(self.k_prime) > 1.0:
            raise ContractViolation("|k| and |k'| must not exceed 1")


def _gamma(v: float, c: float) -> float:
    if abs(v) >= c:
        raise SuperluminalFrameError(f"|v| = {abs(v):g} >= c = {c:g}")
    return 1.0 / np.sqrt(1.0 - (v / c) ** 2)


def lorentz_transform(e: Event, v: float, frame: str = None) -> Event:
    """Standard boost: t' = gamma (t - x v / c^2), x' = gamma (x - v t)."""
    g = _gamma(v, e.c)
    t_new = g * (e.t - e.x * v / e.c**2)
    x_new = g * (e.x - v * e.t)
    return Event(t_new, x_new, frame or f"{e.frame}'", e.c)


def boost_times(t: np.ndarray, x: np.ndarray, v: float, c: float = 1.0) -> np.ndarray:
    """Vectorized boosted times for event arrays."""
    g = _gamma(v, c)
    return g * (np.asarray(t) - np.asarray(x) * v / c**2)


def boost_positions(t: np.ndarray, x: np.ndarray, v: float, c: float = 1.0) -> np.ndarray:
    g = _gamma(v, c)
    return g * (np.asarray(x) - v * np.asarray(t))


def interval(e1: Event, e2: Event) -> float:
    """Invariant c^2 dt^2 - dx^2 of an event pair."""
    return e1.c**2 * (e2.t - e1.t) ** 2 - (e2.x - e1.x) ** 2


def simultaneity_frame(e1: Event, e2: Event) -> float:
    """Boost velocity v = c^2 dt / dx that makes a spacelike pair
    simultaneous; verified internally by transforming both events."""
    dt, dx = e2.t - e1.t, e2.x - e1.x
    c = e1.c
    if abs(dx) <= c * abs(dt):
        raise NoSimultaneityFrameError("pair is not spacelike separated")
    v = c**2 * dt / dx
    t1 = lorentz_transform(e1, v).t
    t2 = lorentz_transform(e2, v).t
    scale = max(abs(t1), abs(t2), 1.0)
    if abs(t1 - t2) > 1e-12 * scale:
        raise ContractViolation("internal check failed: boosted times differ")
    return v


def entangled_frame_velocities(stay_a, stay_b, c: float = 1.0):
    """Frame velocities exchanging the simultaneity of a two-particle
    stay pair.

    stay_a = (t_a, x_1a, x_2a), stay_b = (t_b, x_1b, x_2b).  v' makes
    particle 1's a-stay simultaneous with particle 2's b-stay
    (v' = c^2 (t_a - t_b)/(x_1a - x_2b)); v'' does the reverse pairing
    (v'' = c^2 (t_a - t_b)/(x_2a - x_1b)).  Each value errors if it
    reaches c.  Coincidence of the boosted times is verified.
    """
    t_a, x1a, x2a = map(float, stay_a)
    t_b, x1b, x2b = map(float, stay_b)
    out = []
    for label, dx_pair, ev_pair in (
        ("v_prime", x1a - x2b, ((t_a, x1a), (t_b, x2b))),
        ("v_double_prime", x2a - x1b, ((t_a, x2a), (t_b, x1b))),
    ):
        if dx_pair == 0.0:
            raise SuperluminalFrameError(f"{label}: coincident positions give no frame")
        v = c**2 * (t_a - t_b) / dx_pair
        if abs(v) >= c:
            raise SuperluminalFrameError(f"{label} = {v:g} is not below c")
        (ta, xa), (tb, xb) = ev_pair
        ta_p = boost_times(np.array([ta]), np.array([xa]), v, c)[0]
        tb_p = boost_times(np.array([tb]), np.array([xb]), v, c)[0]
        if abs(ta_p - tb_p) > 1e-12 * max(abs(ta_p), abs(tb_p), 1.0):
            raise ContractViolation(f"internal check failed for {label}")
        out.append(v)
    return tuple(out)


def edwards_winnie_transform(e: Event, p: SynchronyParams) -> Event:
    """Synchrony-general transformation; k = k' = 0 is the boost."""
    c = p.c
    beta = p.v / c
    disc = (1.0 + beta * p.k) ** 2 - beta**2
    if disc <= 0.0:
        raise ContractViolation("degenerate synchrony parameters: eta is not real")
    eta = 1.0 / np.sqrt(disc)
    x_new = eta * (e.x - p.v * e.t)
    t_new = (eta * (1.0 + beta * (p.k + p.k_prime)) * e.t
             + eta * (beta * (p.k**2 - 1.0) + p.k - p.k_prime) * e.x / c)
    return Event(t_new, x_new, f"{e.frame}'", c)


def one_way_speeds(p: SynchronyParams):
    """(c_+x, c_-x, c_+x', c_-x') from the anisotropy parameters:
    c_+x = c/(1 - k) and c_-x = c/(1 + k), same with k' in the primed
    frame.  |k| = 1 makes one direction infinite and is flagged."""
    for name, k in (("k", p.k), ("k'", p.k_prime)):
        if abs(k) == 1.0:
            raise InfiniteOneWaySpeedError(f"{name} = +-1 gives an infinite one-way speed")
    c = p.c
    return (c / (1.0 - p.k), c / (1.0 + p.k),
            c / (1.0 - p.k_prime), c / (1.0 + p.k_prime))


def absolute_sync_params(v: float, c: float = 1.0) -> SynchronyParams:
    """Parameters of the transformation that keeps the unprimed frame's
    simultaneity absolute: k = 0, k' = -v/c."""
    return SynchronyParams(v=v, k=0.0, k_prime=-v / c, c=c)


def _match_sorted(times_a: np.ndarray, times_b: np.ndarray, tol: float) -> np.ndarray:
    """Index of the nearest entry of sorted times_b for each times_a,
    or -1 when the nearest is farther than tol."""
    pos = np.searchsorted(times_b, times_a)
    best = np.full(times_a.size, -1, dtype=np.int64)
    best_d = np.full(times_a.size, np.inf)
    for cand in (np.clip(pos - 1, 0, times_b.size - 1),
                 np.clip(pos, 0, times_b.size - 1)):
        d = np.abs(times_b[cand] - times_a)
        better = d < best_d
        best[better] = cand[better]
        best_d[better] = d[better]
    best[best_d > tol] = -1
    return best


def boosted_correlation_stats(traj: PairedStayTrajectory, v: float,
                              coincidence_tol: float = None, c: float = 1.0) -> dict:
    """Classify boosted-frame coincidences of the two particles' stays.

    All stay events share the home-frame clock; each particle's events
    are boosted, then every particle-1 stay is paired with the nearest
    particle-2 stay within the tolerance (default: half the boosted
    inter-instant spacing).  Pairs with equal branch labels count as
    correlation-kept, the rest as reversed; the two fractions sum to 1
    over the classified pairs.  At v = 0 pairing is instant-by-instant
    and the reversed fraction is exactly 0.  For iid branch draws with
    weights (|a|^2, |b|^2) the expected reversed fraction in a generic
    frame is 2 |a|^2 |b|^2.
    """
    t = traj.times
    gamma = _gamma(v, c)
    if coincidence_tol is None:
        coincidence_tol = 0.5 * gamma * traj.dt_instant
    t1 = boost_times(t, traj.x1, v, c)
    t2 = boost_times(t, traj.x2, v, c)
    order = np.argsort(t2, kind="stable")
    match = _match_sorted(t1, t2[order], coincidence_tol)
    hit = match >= 0
    if not np.any(hit):
        raise InsufficientOverlapError("no coincident stay pairs at this tolerance")
    partner = order[match[hit]]
    same = traj.branches[hit] == traj.branches[partner]
    kept = float(np.mean(same))
    return {
        "kept_fraction": kept,
        "reversed_fraction": 1.0 - kept,
        "pairs": int(hit.sum()),
        "tolerance": float(coincidence_tol),
        "v": float(v),
    }


def multiparticle_appearance_scan(traj: StayTrajectory, positions: np.ndarray, v: float,
                                  coincidence_tol: float = None, c: float = 1.0) -> int:
    """Count pairs of distinct home-frame instants whose boosted times
    coincide within the tolerance while their boosted positions differ.

    Nonzero counts exhibit the same particle at two places at once in
    the boosted frame; the count vanishes at v = 0 and as the tolerance
    shrinks to zero with the stays held fixed.  The default tolerance is
    half the boosted inter-instant spacing.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.shape != traj.stays.shape:
        raise ContractViolation("need one position per instant")
    if coincidence_tol is None:
        coincidence_tol = 0.5 * _gamma(v, c) * traj.dt_instant
    t = traj.dt_instant * np.arange(traj.instants)
    tb = boost_times(t, positions, v, c)
    xb = boost_positions(t, positions, v, c)
    order = np.argsort(tb, kind="stable")
    tb, xb = tb[order], xb[order]
    count = 0
    j = 0
    for i in range(tb.size):
        if j <= i:
            j = i + 1
        while j < tb.size and tb[j] - tb[i] <= coincidence_tol:
            j += 1
        for m in range(i + 1, j):
            if xb[m] != xb[i]:
                count += 1
    return count
