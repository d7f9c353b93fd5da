"""Synthetic data generators with known structural coefficients."""
from __future__ import annotations

import numpy as np
import pandas as pd

from .plspm import PathModel, paper_model
from .survey import ResponseMatrix, paper_survey_spec


def chain_data(
    n: int = 2000,
    beta: float = 0.6,
    loading: float = 0.9,
    n_indicators: int = 5,
    seed=0,
) -> tuple[pd.DataFrame, PathModel]:
    """Two reflective blocks X -> Y with unit-variance latents and indicators.

    indicator = loading * LV + N(0, 1 - loading^2), LV_y = beta * LV_x + N(0, 1 - beta^2).
    """
    rng = np.random.default_rng(seed)
    lx = rng.standard_normal(n)
    ly = beta * lx + np.sqrt(1 - beta**2) * rng.standard_normal(n)
    noise = np.sqrt(1 - loading**2)
    x = loading * lx[:, None] + noise * rng.standard_normal((n, n_indicators))
    y = loading * ly[:, None] + noise * rng.standard_normal((n, n_indicators))
    xs = [f"x{i}" for i in range(1, n_indicators + 1)]
    ys = [f"y{i}" for i in range(1, n_indicators + 1)]
    frame = pd.DataFrame(np.hstack([x, y]), columns=xs + ys)
    model = PathModel((("X", tuple(xs)), ("Y", tuple(ys))), (("X", "Y"),))
    return frame, model


PAPER_PATHS = {
    ("Humanization", "SelfEsteem"): 0.874,
    ("Humanization", "SelfRealization"): 0.866,
    ("Humanization", "Cooperation"): 0.753,
    ("Humanization", "PBL"): 0.733,
    ("PBL", "Learning"): 0.725,
}

_BLOCK_PREFIX = {
    "Cooperation": "G",
    "SelfEsteem": "E",
    "SelfRealization": "R",
    "PBL": "P",
    "Learning": "C",
}


def survey_responses(
    n: int = 162,
    seed=0,
    loading: float = 0.85,
    paths: dict | None = None,
    thresholds=(-2.0, -1.3, -0.6, 0.4),
) -> ResponseMatrix:
    """Likert (1-5) answers generated from the humanization model.

    Latents follow the structural paths, indicators load on their first-order
    latent, and continuous responses are cut at ``thresholds`` (skewed toward
    agreement, like typical course surveys).
    """
    paths = dict(PAPER_PATHS if paths is None else paths)
    rng = np.random.default_rng(seed)
    hum = rng.standard_normal(n)
    lv = {}
    for (src, dst), b in paths.items():
        if src == "Humanization":
            lv[dst] = b * hum + np.sqrt(1 - b**2) * rng.standard_normal(n)
    b = paths[("PBL", "Learning")]
    lv["Learning"] = b * lv["PBL"] + np.sqrt(1 - b**2) * rng.standard_normal(n)

    spec = paper_survey_spec()
    cols = {}
    noise = np.sqrt(1 - loading**2)
    for name, prefix in _BLOCK_PREFIX.items():
        for i in range(1, 6):
            z = loading * lv[name] + noise * rng.standard_normal(n)
            cols[f"{prefix}{i}"] = 1 + np.searchsorted(np.asarray(thresholds), z)
    rows = np.column_stack([cols[i] for i in spec.items]).astype(float)
    return ResponseMatrix(spec.items, rows)


__all__ = ["chain_data", "survey_responses", "paper_model", "PAPER_PATHS"]
