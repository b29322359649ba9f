"""Inverse-temperature ladders: geometric construction and Iba-style tuning."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Ladder",
    "ladder_geometric",
    "LadderTuneResult",
    "ladder_tune_iba",
    "exchange_criterion",
    "GaussianTemperedToy",
    "pilot_mean_loglik",
]


@dataclass(frozen=True)
class Ladder:
    """Inverse temperatures ``1 = zeta_1 > zeta_2 > ... > zeta_N > 0``."""

    zetas: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.zetas, dtype=float).ravel()
        if z.size == 0:
            raise ValueError("ladder needs at least one temperature")
        if z[0] != 1.0:
            raise ValueError("the first inverse temperature must be 1")
        if np.any(np.diff(z) >= 0):
            raise ValueError("inverse temperatures must strictly decrease")
        if z[-1] <= 0:
            raise ValueError("inverse temperatures must be positive")
        object.__setattr__(self, "zetas", z)

    @property
    def n(self) -> int:
        return self.zetas.size

    def __len__(self) -> int:
        return self.zetas.size


def ladder_geometric(n: int, varsigma: float, varphi: float) -> Ladder:
    """``zeta_1 = 1`` and ``zeta_i = zeta_{i-1} - varsigma * varphi**(i-1)``.

    Raises
    ------
    ValueError
        If the recursion reaches a non-positive value or rounding leaves two
        temperatures equal.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if varsigma <= 0 or varphi <= 0:
        raise ValueError("need varsigma > 0 and varphi > 0")
    steps = varsigma * varphi ** np.arange(1, n)
    z = 1.0 - np.concatenate([[0.0], np.cumsum(steps)])
    if z[-1] <= 0:
        raise ValueError(f"ladder reaches {z[-1]:.4g} <= 0 at N={n}")
    return Ladder(z)


def exchange_criterion(zeta_hi: float, zeta_lo: float, mean_hi: float, mean_lo: float) -> float:
    """Expected negative log swap ratio ``(zeta_hi - zeta_lo)(E_hi[l] - E_lo[l])``."""
    return (zeta_hi - zeta_lo) * (mean_hi - mean_lo)


@dataclass
class LadderTuneResult:
    ladder: Ladder
    criteria: np.ndarray
    converged: bool


def ladder_tune_iba(
    n: int,
    mean_loglik: Callable[[float], float],
    *,
    lo: float = 0.5,
    hi: float = 2.0,
    aim: tuple[float, float] = (0.8, 1.25),
    initial_gap: float = 0.01,
    zeta_min: float = 1e-8,
    max_iter: int = 60,
) -> LadderTuneResult:
    """Build ``n`` temperatures so every adjacent pair has criterion in ``[lo, hi]``.

    The criterion is the expected negative log swap ratio between
    neighbours (:func:`exchange_criterion`), targeting one, which puts the
    exchange acceptance near one half.  Each gap is found by doubling until
    the criterion brackets the ``aim`` interval around one, then by
    bisection; ``[lo, hi]`` is the band a gap must reach to count as
    converged when the iteration cap stops the search early.

    Parameters
    ----------
    mean_loglik : callable
        ``zeta -> E_zeta[log-likelihood]``, exact or a pilot estimate.  For
        reproducibility it should be deterministic in ``zeta``.

    Returns
    -------
    LadderTuneResult
        ``converged`` is False (and a warning is raised) when some gap could
        not be brought into the band; the best gap found is kept.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < lo <= aim[0] < 1 < aim[1] <= hi:
        raise ValueError("need 0 < lo <= aim[0] < 1 < aim[1] <= hi")
    zetas = [1.0]
    crit = []
    means = {1.0: mean_loglik(1.0)}
    converged = True
    gap = initial_gap

    def f(z_hi, g):
        z_lo = z_hi - g
        if z_lo not in means:
            means[z_lo] = mean_loglik(z_lo)
        return exchange_criterion(z_hi, z_lo, means[z_hi], means[z_lo])

    for _ in range(n - 1):
        z = zetas[-1]
        g_max = z - zeta_min
        g = min(gap, 0.5 * g_max)
        below = above = None  # widest gap under the band, narrowest over it
        best = None
        for _ in range(max_iter):
            val = f(z, g)
            if best is None or abs(math.log(max(val, 1e-300))) < abs(math.log(max(best[1], 1e-300))):
                best = (g, val)
            if aim[0] <= val <= aim[1]:
                break
            if val < aim[0]:
                below = g
                if above is None and g >= g_max:
                    break
                g = min(2.0 * g, g_max) if above is None else 0.5 * (below + above)
            else:
                above = g
                g = 0.5 * g if below is None else 0.5 * (below + above)
        g, val = best
        if not lo <= val <= hi:
            converged = False
            warnings.warn(f"ladder gap at zeta={z:.4g} left the band (criterion {val:.3g})",
                          RuntimeWarning, stacklevel=2)
        zetas.append(z - g)
        crit.append(val)
        gap = g
        if zetas[-1] <= 0:
            raise ValueError("ladder ran out of room above zero")
    return LadderTuneResult(Ladder(np.array(zetas)), np.array(crit), converged)


@dataclass(frozen=True)
class GaussianTemperedToy:
    """Tempered Gaussian with exact draws.

    Prior ``N(0, prior_sd^2 I_dim)`` and log likelihood ``-|x|^2 / 2``, so
    ``pi_zeta = N(0, I / (zeta + prior_sd^-2))``.
    """

    dim: int = 10
    prior_sd: float = 10.0

    def precision(self, zeta: float) -> float:
        return zeta + self.prior_sd**-2

    def mean_loglik(self, zeta: float) -> float:
        return -0.5 * self.dim / self.precision(zeta)

    def sample_loglik(self, zeta: float, size: int, rng) -> np.ndarray:
        x = rng.standard_normal((size, self.dim)) / math.sqrt(self.precision(zeta))
        return -0.5 * np.sum(x * x, axis=1)

    def swap_acceptance(self, zetas, size: int, rng) -> np.ndarray:
        """Monte Carlo mean swap acceptance of each adjacent pair under exact draws."""
        z = np.asarray(zetas)
        out = np.empty(z.size - 1)
        for i in range(z.size - 1):
            li = self.sample_loglik(z[i], size, rng)
            lj = self.sample_loglik(z[i + 1], size, rng)
            out[i] = np.mean(np.minimum(1.0, np.exp((z[i] - z[i + 1]) * (lj - li))))
        return out


def pilot_mean_loglik(data, hyper, scales, sweeps: int, seed: int, *, burn: int | None = None,
                      k_start: int = 1) -> Callable[[float], float]:
    """Pilot estimator of ``E_zeta[log-likelihood]`` from a vanilla run at ``zeta``.

    Every call restarts from the same seed, so the estimate is deterministic
    in ``zeta`` (common random numbers across temperatures).
    """
    from .. import mixture as mx
    from .. import rjvanilla as rj
    from ..statcore import rng_stream

    burn = sweeps // 5 if burn is None else burn

    def estimate(zeta: float) -> float:
        rng = rng_stream(seed, 0)
        ctx = rj.ChainContext(data, hyper, zeta)
        s = mx.random_state(hyper, k_start, rng)
        vals = []
        for t in range(burn + sweeps):
            s, _ = rj.rj_sweep(s, ctx, scales, rng)
            if t >= burn:
                vals.append(ctx.loglik(s))
        return float(np.mean(vals))

    return estimate
