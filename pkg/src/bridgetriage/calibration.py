"""Coverage diagnostics and the post-hoc predictive-scale repair.

Intervals are two-sided: at confidence p the interval is mu +/- z * kappa *
sigma with z the standard normal quantile at (1+p)/2. Total calibration error
averages |nominal - empirical| coverage over a level grid; calibration bias
keeps the sign, so positive bias means overconfident intervals (curve below
the diagonal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

DEFAULT_LEVELS = tuple(round(0.05 * i, 2) for i in range(1, 20))
KAPPA_GRID = tuple(round(0.05 * i, 2) for i in range(10, 101))


@dataclass(frozen=True)
class CalibrationReport:
    levels: tuple[float, ...]
    empirical_coverage: tuple[float, ...]
    tce: float
    cb: float
    kappa_used: float

    def __post_init__(self):
        if any(not 0.0 <= c <= 1.0 for c in self.empirical_coverage):
            raise ValueError("coverage fractions must lie in [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "empirical_coverage": list(self.empirical_coverage),
            "tce": self.tce,
            "cb": self.cb,
            "kappa_used": self.kappa_used,
        }

    def table(self) -> str:
        """Aligned text rendering for terminal output."""
        lines = [f"{'level':>7}  {'coverage':>9}  {'gap':>8}"]
        for p, c in zip(self.levels, self.empirical_coverage):
            lines.append(f"{p:7.2f}  {c:9.4f}  {p - c:8.4f}")
        lines.append(f"TCE={self.tce:.4f}  CB={self.cb:+.4f}  kappa={self.kappa_used:.2f}")
        return "\n".join(lines)


def _check_inputs(mu, sigma, truths):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if mu.size == 0:
        raise ValueError("empty inputs")
    if not (mu.shape == sigma.shape == truths.shape):
        raise ValueError("mu, sigma, truths must have equal length")
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")
    return mu, sigma, truths


def empirical_coverage(mu, sigma, truths, p: float, kappa: float = 1.0) -> float:
    """Fraction of truths inside the two-sided level-p interval."""
    mu, sigma, truths = _check_inputs(mu, sigma, truths)
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    z = norm.ppf((1.0 + p) / 2.0)
    return float(np.mean(np.abs(truths - mu) <= z * kappa * sigma))


def calibration_metrics(mu, sigma, truths, levels=DEFAULT_LEVELS,
                        kappa: float = 1.0) -> CalibrationReport:
    mu, sigma, truths = _check_inputs(mu, sigma, truths)
    levels = tuple(float(p) for p in levels)
    resid = np.abs(truths - mu)
    cov = []
    for p in levels:
        z = norm.ppf((1.0 + p) / 2.0)
        cov.append(float(np.mean(resid <= z * kappa * sigma)))
    gaps = np.array(levels) - np.array(cov)
    return CalibrationReport(levels=levels, empirical_coverage=tuple(cov),
                             tce=float(np.mean(np.abs(gaps))),
                             cb=float(np.mean(gaps)), kappa_used=float(kappa))


def fit_kappa(mu, sigma, truths, levels=DEFAULT_LEVELS) -> float:
    """Grid-search the scale that minimizes TCE on held-out predictions.

    Ties go to the larger scale: wider intervals, hence the mildly
    under-confident side, which is the safe direction here.
    """
    mu, sigma, truths = _check_inputs(mu, sigma, truths)
    if np.all(sigma == 0.0):
        raise ValueError("cannot fit a scale factor: every sigma is zero")
    resid = np.abs(truths - mu)
    zs = norm.ppf((1.0 + np.asarray(levels, dtype=float)) / 2.0)
    best_kappa, best_tce = KAPPA_GRID[0], np.inf
    for kappa in KAPPA_GRID:
        cov = np.mean(resid[None, :] <= (kappa * zs)[:, None] * sigma[None, :], axis=1)
        tce = float(np.mean(np.abs(np.asarray(levels) - cov)))
        if tce <= best_tce:
            best_kappa, best_tce = kappa, tce
    return float(best_kappa)
