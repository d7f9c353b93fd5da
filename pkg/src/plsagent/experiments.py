"""Factorial experiments, replication statistics and effect sizes.

Every run draws from its own RNG stream keyed by ``(base_seed, run_index)``,
so results are identical whether runs execute serially or in a pool.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .abm import SimConfig, run_rate
from .abm.model import with_scores

LEVELS = (2.0, 5.0, 8.0)
FACTORS = ("cooperation", "self_esteem", "self_realization", "pbl")
HUMANIZATION_FACTORS = ("cooperation", "self_esteem", "self_realization")
STABILIZATION_RUNS = (1, 50, 100, 300, 500)


@dataclass(frozen=True)
class FactorialDesign:
    factors: tuple[str, ...]
    levels: tuple[float, ...]
    points: tuple[dict, ...]

    def __len__(self) -> int:
        return len(self.points)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.points), columns=list(self.factors))


def generate_design(factors: Sequence[str] = FACTORS, levels: Sequence[float] = LEVELS) -> FactorialDesign:
    """Full Cartesian product, lexicographic in factor order."""
    factors = tuple(factors)
    levels = tuple(levels)
    if not factors:
        raise ValueError("at least one factor is required")
    if len(levels) < 2:
        raise ValueError("at least two levels are required")
    if len(set(factors)) != len(factors):
        raise ValueError(f"duplicate factor names in {factors}")
    points = tuple(dict(zip(factors, combo)) for combo in itertools.product(levels, repeat=len(factors)))
    return FactorialDesign(factors, levels, points)


@dataclass
class ReplicationStats:
    point: dict
    n_runs: int
    mean: float
    sd: float
    cv: float | None
    rates: np.ndarray
    link_chances: np.ndarray

    @classmethod
    def from_rates(cls, point, rates, link_chances=None) -> "ReplicationStats":
        rates = np.asarray(rates, dtype=float)
        if rates.size == 0:
            raise ValueError("n_runs must be at least 1")
        mean = float(rates.mean())
        sd = float(rates.std(ddof=1)) if rates.size > 1 else float("nan")
        if rates.size > 1 and np.all(rates == rates[0]):
            sd = 0.0
        cv = sd / mean if mean > 0 and not np.isnan(sd) else None
        lcs = np.asarray(link_chances if link_chances is not None else np.full(rates.size, np.nan))
        return cls(dict(point), int(rates.size), mean, sd, cv, rates, lcs)

    def prefix(self, n: int) -> "ReplicationStats":
        return ReplicationStats.from_rates(self.point, self.rates[:n], self.link_chances[:n])


def _run_chunk(args):
    config, indices = args
    return [run_rate(config, i) for i in indices]


def run_many(config: SimConfig, n_runs: int, base_seed: int, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Diffusion rates and realized link chances for runs ``0..n_runs-1``."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    config = replace(config, seed=int(base_seed))
    if workers > 1 and n_runs > 1:
        chunks = np.array_split(np.arange(n_runs), workers)
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, [(config, c.tolist()) for c in chunks]))
        out = [r for part in parts for r in part]
    else:
        out = [run_rate(config, i) for i in range(n_runs)]
    arr = np.array(out, dtype=float)
    return arr[:, 0], arr[:, 1]


def point_config(point: Mapping[str, float], base: SimConfig | None = None) -> SimConfig:
    """Apply a design point's factor levels (and an optional ``link_chance``)."""
    base = base or SimConfig()
    levels = {k: float(v) for k, v in point.items() if k in FACTORS}
    cfg = with_scores(base, **levels)
    if "link_chance" in point:
        cfg = replace(cfg, link_chance=point["link_chance"])
    return cfg


def replicate(
    point: Mapping[str, float],
    n_runs: int,
    base_seed: int,
    base: SimConfig | None = None,
    workers: int = 1,
) -> ReplicationStats:
    rates, lcs = run_many(point_config(point, base), n_runs, base_seed, workers)
    return ReplicationStats.from_rates(point, rates, lcs)


def paper_design_points() -> dict[str, dict]:
    return {
        name: dict.fromkeys(FACTORS, level)
        for name, level in (("low", 2.0), ("medium", 5.0), ("high", 8.0))
    }


def stabilization_analysis(
    points: Mapping[str, Mapping[str, float]] | None = None,
    run_counts: Sequence[int] = STABILIZATION_RUNS,
    base_seed: int = 0,
    base: SimConfig | None = None,
    workers: int = 1,
) -> pd.DataFrame:
    """Mean/SD/CV of diffusion at increasing run counts.

    The run sets are nested prefixes of one sequence of ``max(run_counts)``
    runs per design point. Returns a long table with one row per
    (design point, run count).
    """
    run_counts = tuple(int(n) for n in run_counts)
    if any(b <= a for a, b in zip(run_counts, run_counts[1:])) or run_counts[0] < 1:
        raise ValueError("run_counts must be positive and strictly increasing")
    points = points if points is not None else paper_design_points()
    rows = []
    for name, point in points.items():
        full = replicate(point, run_counts[-1], base_seed, base, workers)
        for n in run_counts:
            s = full.prefix(n)
            rows.append(
                {"design_point": name, "runs": n, "mean": s.mean, "sd": s.sd, "cv": s.cv}
            )
    return pd.DataFrame(rows)


def stabilization_table(stab: pd.DataFrame) -> pd.DataFrame:
    """Pivot a stabilization table to the design point x statistic by runs layout."""
    long = stab.melt(id_vars=["design_point", "runs"], value_vars=["mean", "sd", "cv"], var_name="statistic")
    wide = long.pivot_table(
        index=["design_point", "statistic"], columns="runs", values="value", dropna=False, sort=False
    )
    wide.columns = [f"{c} runs" for c in wide.columns]
    return wide.reset_index()


def run_factorial(
    design: FactorialDesign | None = None,
    n_runs: int = 300,
    base_seed: int = 0,
    base: SimConfig | None = None,
    workers: int = 1,
) -> pd.DataFrame:
    """Long table: factor levels, run index, realized link chance, rate."""
    design = design or generate_design()
    frames = []
    for k, point in enumerate(design.points):
        rates, lcs = run_many(point_config(point, base), n_runs, base_seed, workers)
        df = pd.DataFrame({f: point[f] for f in design.factors}, index=range(n_runs))
        df.insert(0, "point", k)
        df["run"] = np.arange(n_runs)
        df["link_chance"] = lcs
        df["diffusion_rate"] = rates
        frames.append(df)
    return pd.concat(frames, ignore_index=True)


def eta_squared(results: pd.DataFrame, factors: Iterable[str] = FACTORS, response: str = "diffusion_rate") -> dict[str, float]:
    """One-way eta squared per factor, SS_between / SS_total over all rows.

    Zero total variance leaves every effect undefined (NaN).
    """
    y = results[response].to_numpy(dtype=float)
    grand = y.mean()
    ss_total = float(np.sum((y - grand) ** 2))
    out = {}
    for f in factors:
        if ss_total <= 0.0 or np.all(y == y[0]):
            out[f] = float("nan")
            continue
        g = results.groupby(f, sort=True)[response].agg(["mean", "size"])
        ss_between = float(np.sum(g["size"] * (g["mean"] - grand) ** 2))
        out[f] = ss_between / ss_total
    return out


def sweep(
    parameter: str,
    values: Sequence[float],
    n_runs: int = 300,
    base_seed: int = 0,
    base: SimConfig | None = None,
    covary: Sequence[float] | None = LEVELS,
    fixed_level: float = 8.0,
    workers: int = 1,
) -> pd.DataFrame:
    """Replicate across ``values`` of one parameter; long format output.

    ``link_chance``: fixed link chance per value, every factor at
    ``fixed_level``. ``humanization``: cooperation, self-esteem and
    self-realization set jointly to the value while PBL takes each level in
    ``covary``. ``pbl``: the converse. Columns are ``value``, ``covariate``,
    ``run``, ``link_chance`` and ``diffusion_rate``.
    """
    values = list(values)
    if not values:
        raise ValueError("empty sweep grid")
    frames = []
    for v in values:
        if parameter == "link_chance":
            cells = [(dict.fromkeys(FACTORS, fixed_level) | {"link_chance": float(v)}, np.nan)]
        elif parameter == "humanization":
            cells = [
                (dict.fromkeys(HUMANIZATION_FACTORS, float(v)) | {"pbl": float(c)}, c)
                for c in (covary or [fixed_level])
            ]
        elif parameter == "pbl":
            cells = [
                (dict.fromkeys(HUMANIZATION_FACTORS, float(c)) | {"pbl": float(v)}, c)
                for c in (covary or [fixed_level])
            ]
        else:
            raise ValueError(f"unknown sweep parameter {parameter!r}")
        for point, cov in cells:
            rates, lcs = run_many(point_config(point, base), n_runs, base_seed, workers)
            frames.append(
                pd.DataFrame(
                    {
                        "parameter": parameter,
                        "value": float(v),
                        "covariate": cov,
                        "run": np.arange(n_runs),
                        "link_chance": lcs,
                        "diffusion_rate": rates,
                    }
                )
            )
    return pd.concat(frames, ignore_index=True)


def sweep_summary(table: pd.DataFrame) -> pd.DataFrame:
    """Per (value, covariate) mean, SD, CV and standard error."""
    g = table.groupby(["value", "covariate"], dropna=False, sort=True)["diffusion_rate"]
    out = g.agg(n="size", mean="mean", sd=lambda s: s.std(ddof=1) if len(s) > 1 else np.nan).reset_index()
    out["cv"] = out["sd"] / out["mean"].where(out["mean"] > 0)
    out["se"] = out["sd"] / np.sqrt(out["n"])
    return out


def bin_link_chance(
    table: pd.DataFrame, edges: Sequence[float] = (0.3, 0.4, 0.5, 0.6, 0.7)
) -> pd.DataFrame:
    """Attach a link-chance interval label to each run (left-closed bins,
    last bin closed on the right) for distribution plots."""
    edges = np.asarray(edges, dtype=float)
    lc = table["link_chance"].to_numpy()
    k = np.clip(np.searchsorted(edges, lc, side="right") - 1, 0, len(edges) - 2)
    inside = (lc >= edges[0]) & (lc <= edges[-1])
    labels = np.array([f"{edges[i]:.2f}-{edges[i + 1]:.2f}" for i in range(len(edges) - 1)])
    out = table.copy()
    out["bin"] = np.where(inside, labels[k], None)
    out["bin_index"] = np.where(inside, k, -1)
    return out


def link_chance_bins(
    n_runs: int = 300,
    base_seed: int = 0,
    base: SimConfig | None = None,
    level: float = 8.0,
    edges: Sequence[float] = (0.3, 0.4, 0.5, 0.6, 0.7),
    workers: int = 1,
) -> pd.DataFrame:
    """Runs at one design point with link chance drawn per run, binned."""
    point = dict.fromkeys(FACTORS, level) | {"link_chance": (edges[0], edges[-1])}
    stats = replicate(point, n_runs, base_seed, base, workers)
    df = pd.DataFrame(
        {"run": np.arange(n_runs), "link_chance": stats.link_chances, "diffusion_rate": stats.rates}
    )
    return bin_link_chance(df, edges)
