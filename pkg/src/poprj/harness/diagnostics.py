"""Run diagnostics: autocorrelation, effective sample size, efficiency, acceptance."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "autocorrelation",
    "EssResult",
    "ess_report",
    "ess",
    "efficiency_E",
    "acceptance_report",
    "exchange_success_fraction",
]

log = logging.getLogger(__name__)

EXCHANGE_KINDS = ("exchange", "exchange_dr1", "exchange_dr2", "exchange_constrained")


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations ``rho_1 .. rho_max_lag`` (standard biased estimator).

    A constant series has no defined autocorrelation; zeros are returned.
    """
    x = np.asarray(series, dtype=float)
    if not 1 <= max_lag < x.size:
        raise ValueError("need 1 <= lag < series length")
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0.0:
        return np.zeros(max_lag)
    return np.array([float(d[:-t] @ d[t:]) / denom for t in range(1, max_lag + 1)])


@dataclass(frozen=True)
class EssResult:
    """ESS with the reason it was clipped, if it was (``"constant"`` or ``"negative_sum"``)."""

    value: float
    n: int
    flag: str | None = None


def ess_report(series, lag: int = 10) -> EssResult:
    """``M / (1 + 2 sum_{t<=lag} rho_t)``, clipped to ``M``.

    Constant series and non-positive autocorrelation sums (which would give
    ``ESS > M``) both report ``M`` with a flag.
    """
    x = np.asarray(series, dtype=float)
    rho = autocorrelation(x, lag)
    n = x.size
    if np.all(x == x[0]):
        log.warning("ESS of a constant series is degenerate; reporting M")
        return EssResult(float(n), n, "constant")
    denom = 1.0 + 2.0 * float(rho.sum())
    if denom <= 1.0:
        log.warning("autocorrelation sum %.3g is not positive; ESS clipped to M", denom - 1.0)
        return EssResult(float(n), n, "negative_sum")
    return EssResult(n / denom, n)


def ess(series, lag: int = 10) -> float:
    return ess_report(series, lag).value


def efficiency_E(pop: Sequence[float], van1: Sequence[float], van2: Sequence[float]) -> float:
    """Relative efficiency from ``(ess, M, T)`` triples of a population and two vanilla runs.

    ``E = 2 r_pop / (r_1 + r_2)`` with ``r = ess / (M T)``.
    """
    rates = []
    for ess_v, m, t in (pop, van1, van2):
        if m <= 0 or t <= 0:
            raise ValueError("sample counts and times must be positive")
        rates.append(ess_v / (m * t))
    denom = rates[1] + rates[2]
    if denom <= 0:
        raise ValueError("vanilla runs have zero effective sample size")
    return 2.0 * rates[0] / denom


def acceptance_report(counters: Mapping[int, Mapping[str, tuple[int, int]]]) -> dict:
    """Acceptance fractions per chain and pooled.

    Parameters
    ----------
    counters : mapping chain -> kind -> (proposed, accepted), cumulative

    Returns
    -------
    dict with ``per_chain`` and ``pooled`` tables of ``kind -> fraction``.
    Kinds never proposed are left out rather than reported as zero.
    """
    if not counters:
        raise ValueError("no trace counters to report")
    per_chain, totals = {}, {}
    for chain, kinds in sorted(counters.items()):
        table = {}
        for kind, (p, a) in sorted(kinds.items()):
            if p > 0:
                table[kind] = a / p
            tp, ta = totals.get(kind, (0, 0))
            totals[kind] = (tp + p, ta + a)
        per_chain[chain] = table
    pooled = {k: a / p for k, (p, a) in sorted(totals.items()) if p > 0}
    return {"per_chain": per_chain, "pooled": pooled}


def exchange_success_fraction(sweeps: Iterable[Iterable]) -> float | None:
    """Fraction of sweeps with at least one accepted exchange (``None`` for an empty run)."""
    n = hit = 0
    for outs in sweeps:
        n += 1
        hit += any(o.kind in EXCHANGE_KINDS and o.accepted for o in outs)
    return hit / n if n else None
