"""Bias-corrected and accelerated bootstrap intervals for path coefficients."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .plspm import PathModel, PlsEstimate, SingularMatrixError, align_signs, complete_matrix, fit


class BootstrapError(RuntimeError):
    def __init__(self, message: str, n_failed: int, n_boot: int):
        super().__init__(message)
        self.n_failed = n_failed
        self.n_boot = n_boot


@dataclass
class PathInterval:
    source: str
    target: str
    estimate: float
    lower: float
    upper: float
    p_value: float
    bias: float
    z0: float
    acceleration: float


@dataclass
class BootstrapResult:
    n_boot: int
    seed: int
    alpha: float
    paths: list[PathInterval]
    replicates: np.ndarray
    n_failed: int

    def interval(self, source: str, target: str) -> PathInterval:
        for p in self.paths:
            if (p.source, p.target) == (source, target):
                return p
        raise KeyError((source, target))

    def to_dict(self) -> dict:
        return {
            "n_boot": self.n_boot,
            "seed": self.seed,
            "alpha": self.alpha,
            "n_failed": self.n_failed,
            "paths": [
                {
                    "from": p.source,
                    "to": p.target,
                    "estimate": p.estimate,
                    "lower": p.lower,
                    "upper": p.upper,
                    "p_value": p.p_value,
                    "bias": p.bias,
                }
                for p in self.paths
            ],
        }


def _path_vector(est: PlsEstimate) -> np.ndarray:
    return np.array([est.path(a, b) for a, b in est.model.structural_paths])


def bca_interval(
    theta_hat: float,
    boot: np.ndarray,
    jack: np.ndarray,
    alpha: float = 0.05,
) -> tuple[float, float, float, float]:
    """Return (lower, upper, z0, acceleration) for one statistic.

    ``boot`` holds bootstrap replicates and ``jack`` leave-one-out values.
    A degenerate bootstrap distribution collapses the interval onto
    ``theta_hat``.
    """
    boot = np.asarray(boot, dtype=float)
    boot = boot[np.isfinite(boot)]
    spread = np.ptp(boot) if boot.size else 0.0
    if spread <= 1e-12 * max(1.0, abs(theta_hat)):
        return theta_hat, theta_hat, 0.0, 0.0

    # ties count half so a symmetric discrete distribution gives z0 = 0
    below = np.mean(boot < theta_hat) + 0.5 * np.mean(boot == theta_hat)
    below = np.clip(below, 1.0 / (boot.size + 1), boot.size / (boot.size + 1))
    z0 = norm.ppf(below)

    dev = jack.mean() - jack
    denom = 6.0 * np.sum(dev**2) ** 1.5
    a = float(np.sum(dev**3) / denom) if denom > 0 else 0.0

    z = norm.ppf([alpha / 2, 1 - alpha / 2])
    adj = norm.cdf(z0 + (z0 + z) / (1 - a * (z0 + z)))
    lo, hi = np.quantile(boot, adj)
    return float(lo), float(hi), float(z0), a


def bootstrap_bca(
    data,
    model: PathModel,
    n_boot: int = 500,
    alpha: float = 0.05,
    seed: int = 0,
    tol: float = 1e-4,
    max_iter: int = 300,
    workers: int = 1,
    max_failure_rate: float = 0.10,
) -> BootstrapResult:
    """Resample respondents with replacement and refit.

    Resample ``b`` draws its rows from ``default_rng([seed, b])``, so the
    result does not depend on ``workers``. The acceleration constant comes
    from a leave-one-out jackknife over respondents.
    """
    if n_boot < 2:
        raise ValueError("n_boot must be at least 2")
    values = complete_matrix(data, model)
    original = fit(values, model, tol=tol, max_iter=max_iter)
    if not original.converged:
        raise BootstrapError("fit does not converge on the original data", 0, n_boot)
    theta = _path_vector(original)
    n = values.shape[0]

    def one(b: int) -> np.ndarray | None:
        rng = np.random.default_rng([seed, b])
        rows = rng.integers(0, n, size=n)
        try:
            est = fit(values[rows], model, tol=tol, max_iter=max_iter)
        except (SingularMatrixError, ValueError):
            return None
        if not est.converged:
            return None
        return _path_vector(align_signs(est, original))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(n_boot)))
    else:
        results = [one(b) for b in range(n_boot)]

    failed = sum(r is None for r in results)
    if failed > max_failure_rate * n_boot:
        raise BootstrapError(
            f"{failed} of {n_boot} resamples failed to converge", failed, n_boot
        )
    reps = np.array([r for r in results if r is not None])

    jack = _jackknife(values, model, original, tol, max_iter)

    paths = []
    for k, (a, b) in enumerate(model.structural_paths):
        lo, hi, z0, acc = bca_interval(theta[k], reps[:, k], jack[:, k], alpha)
        col = reps[:, k]
        if theta[k] >= 0:
            tail = np.sum(col <= 0)
        else:
            tail = np.sum(col >= 0)
        p = min(1.0, 2.0 * (tail + 1) / (col.size + 1))
        paths.append(
            PathInterval(a, b, float(theta[k]), lo, hi, p, float(col.mean() - theta[k]), z0, acc)
        )
    return BootstrapResult(n_boot, seed, alpha, paths, reps, failed)


def _jackknife(values, model, original, tol, max_iter) -> np.ndarray:
    n = values.shape[0]
    out = []
    for i in range(n):
        try:
            est = fit(np.delete(values, i, axis=0), model, tol=tol, max_iter=max_iter)
        except (SingularMatrixError, ValueError):
            continue
        out.append(_path_vector(align_signs(est, original)))
    if not out:
        return np.zeros((1, len(model.structural_paths)))
    return np.array(out)
