"""PLS path modeling: path inner scheme, Mode A outer weights, OLS paths.

Scores are standardized with the population convention (denominator N)
throughout, so covariances with a score are correlations.
"""
from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
import yaml

from .survey import ResponseMatrix, standardize

COND_LIMIT = 1e10


class ModelSpecError(ValueError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class PathModel:
    """Measurement blocks plus a structural DAG.

    ``higher_order`` maps a construct to component latents; the construct's
    block is the concatenation of the component blocks (repeated indicators).
    """

    blocks: tuple[tuple[str, tuple[str, ...]], ...]
    structural_paths: tuple[tuple[str, str], ...]
    higher_order: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        blocks = tuple((name, tuple(items)) for name, items in self.blocks)
        ho = tuple((name, tuple(parts)) for name, parts in self.higher_order)
        paths = tuple((a, b) for a, b in self.structural_paths)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "higher_order", ho)
        object.__setattr__(self, "structural_paths", paths)

        names = [n for n, _ in blocks]
        for name, parts in ho:
            if name in names:
                raise ModelSpecError(f"higher-order construct {name!r} duplicates a block")
            for p in parts:
                if p not in dict(blocks):
                    raise ModelSpecError(f"{name!r} refers to unknown block {p!r}")
            names.append(name)
        if len(set(names)) != len(names):
            raise ModelSpecError("duplicate latent names")
        for name, items in self.expanded_blocks():
            if not items:
                raise ModelSpecError(f"latent {name!r} has no indicators")
        seen = set()
        for a, b in paths:
            if a == b:
                raise ModelSpecError(f"self-path on {a!r}")
            for n in (a, b):
                if n not in names:
                    raise ModelSpecError(f"path refers to unknown latent {n!r}")
            if (a, b) in seen:
                raise ModelSpecError(f"duplicate path {a}->{b}")
            seen.add((a, b))
        sorter = graphlib.TopologicalSorter({n: set() for n in names})
        for a, b in paths:
            sorter.add(b, a)
        try:
            tuple(sorter.static_order())
        except graphlib.CycleError as exc:
            raise ModelSpecError(f"structural model is cyclic: {exc.args[1]}") from None

    @property
    def latents(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.blocks) + tuple(n for n, _ in self.higher_order)

    def expanded_blocks(self) -> tuple[tuple[str, tuple[str, ...]], ...]:
        base = dict(self.blocks)
        out = list(self.blocks)
        for name, parts in self.higher_order:
            out.append((name, tuple(i for p in parts for i in base[p])))
        return tuple(out)

    @property
    def items(self) -> tuple[str, ...]:
        return tuple(i for _, items in self.blocks for i in items)

    def path_matrix(self) -> np.ndarray:
        """Adjacency D with D[i, j] = 1 when latent i points to latent j."""
        idx = {n: k for k, n in enumerate(self.latents)}
        d = np.zeros((len(idx), len(idx)), dtype=int)
        for a, b in self.structural_paths:
            d[idx[a], idx[b]] = 1
        return d

    @classmethod
    def from_mapping(cls, doc: Mapping) -> "PathModel":
        known = {"blocks", "paths", "higher_order"}
        extra = set(doc) - known
        if extra:
            raise ModelSpecError(f"unknown model keys: {sorted(extra)}")
        try:
            blocks = tuple((str(k), tuple(str(i) for i in v)) for k, v in doc["blocks"].items())
            paths = tuple((str(a), str(b)) for a, b in doc.get("paths", []))
            ho = tuple(
                (str(k), tuple(str(i) for i in v)) for k, v in (doc.get("higher_order") or {}).items()
            )
        except (KeyError, AttributeError, TypeError, ValueError) as exc:
            raise ModelSpecError(f"malformed model spec: {exc}") from None
        return cls(blocks, paths, ho)

    def to_mapping(self) -> dict:
        doc = {
            "blocks": {n: list(i) for n, i in self.blocks},
            "paths": [list(p) for p in self.structural_paths],
        }
        if self.higher_order:
            doc["higher_order"] = {n: list(p) for n, p in self.higher_order}
        return doc


def load_model(path: str | Path) -> PathModel:
    """Read a YAML (or JSON) model spec with ``blocks``, ``paths`` and
    optional ``higher_order`` keys."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ModelSpecError(f"{path}: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ModelSpecError(f"{path}: expected a mapping at top level")
    return PathModel.from_mapping(doc)


def paper_model() -> PathModel:
    """Humanization (repeated G/E/R indicators) driving self-esteem,
    self-realization, cooperation and PBL; PBL driving learning."""
    items = lambda p: tuple(f"{p}{i}" for i in range(1, 6))  # noqa: E731
    return PathModel(
        blocks=(
            ("Cooperation", items("G")),
            ("SelfEsteem", items("E")),
            ("SelfRealization", items("R")),
            ("PBL", items("P")),
            ("Learning", items("C")),
        ),
        structural_paths=(
            ("Humanization", "SelfEsteem"),
            ("Humanization", "SelfRealization"),
            ("Humanization", "Cooperation"),
            ("Humanization", "PBL"),
            ("PBL", "Learning"),
        ),
        higher_order=(("Humanization", ("Cooperation", "SelfEsteem", "SelfRealization")),),
    )


@dataclass
class PlsEstimate:
    model: PathModel
    latents: tuple[str, ...]
    block_items: tuple[tuple[str, ...], ...]
    outer_weights: tuple[np.ndarray, ...]
    scores: np.ndarray
    inner_weights: np.ndarray
    loadings: tuple[np.ndarray, ...]
    path_coefficients: np.ndarray
    r_squared: dict[str, float]
    iterations: int
    converged: bool
    max_weight_change: float
    n_obs: int
    weight_history: list[float] = field(default_factory=list, repr=False)

    def path(self, source: str, target: str) -> float:
        return float(self.path_coefficients[self.latents.index(source), self.latents.index(target)])

    @property
    def paths(self) -> dict[tuple[str, str], float]:
        return {(a, b): self.path(a, b) for a, b in self.model.structural_paths}

    @property
    def total_effects(self) -> np.ndarray:
        return total_effects(self.path_coefficients)

    def total_effect(self, source: str, target: str) -> float:
        t = self.total_effects
        return float(t[self.latents.index(source), self.latents.index(target)])

    def to_dict(self) -> dict:
        te = self.total_effects
        names = self.latents
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "max_weight_change": self.max_weight_change,
            "n_obs": self.n_obs,
            "outer_weights": {
                n: dict(zip(items, map(float, w)))
                for n, items, w in zip(names, self.block_items, self.outer_weights)
            },
            "loadings": {
                n: dict(zip(items, map(float, l)))
                for n, items, l in zip(names, self.block_items, self.loadings)
            },
            "paths": [
                {"from": a, "to": b, "coefficient": self.path(a, b)}
                for a, b in self.model.structural_paths
            ],
            "total_effects": {
                a: {b: float(te[i, j]) for j, b in enumerate(names) if te[i, j] != 0.0}
                for i, a in enumerate(names)
            },
            "r_squared": self.r_squared,
        }


def total_effects(direct: np.ndarray) -> np.ndarray:
    """Sum of B^k for k >= 1, i.e. every directed path's product of effects.

    ``direct[i, j]`` is the effect of latent i on latent j. Terminates after
    at most Q powers because B is nilpotent on a DAG.
    """
    b = np.asarray(direct, dtype=float)
    total = np.zeros_like(b)
    power = b.copy()
    for _ in range(b.shape[0]):
        if not power.any():
            break
        total += power
        power = power @ b
    else:
        if power.any():
            raise ValueError("direct-effect matrix is not nilpotent; graph has a cycle")
    return total


def _std(v: np.ndarray) -> np.ndarray:
    v = v - v.mean(axis=0)
    sd = np.sqrt((v**2).mean(axis=0))
    if np.any(sd <= 1e-12):
        raise SingularMatrixError("zero-variance latent proxy")
    return v / sd


def ols(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least squares via QR; raises when ``x`` is numerically rank deficient."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    q, r = np.linalg.qr(x)
    d = np.abs(np.diag(r))
    if d.size == 0 or d.min() == 0.0 or np.linalg.cond(r) > COND_LIMIT:
        raise SingularMatrixError("regression matrix is singular")
    return scipy.linalg.solve_triangular(r, q.T @ y)


def complete_matrix(data, model: PathModel) -> np.ndarray:
    """Raw indicator matrix in ``model.items`` order, listwise complete."""
    if isinstance(data, ResponseMatrix):
        keep = data.complete_rows(model.items)
        return np.asarray(data.select(model.items).rows)[keep]
    if isinstance(data, np.ndarray):
        x = np.asarray(data, dtype=float)
        return x[~np.isnan(x).any(axis=1)]
    return data[list(model.items)].dropna().to_numpy(dtype=float)


def _prepare(data, model: PathModel) -> tuple[np.ndarray, list[np.ndarray], list[tuple[str, ...]]]:
    items = list(model.items)
    x = standardize(complete_matrix(data, model), items)
    col = {n: k for k, n in enumerate(items)}
    blocks = model.expanded_blocks()
    idx = [np.array([col[i] for i in b_items]) for _, b_items in blocks]
    return x, idx, [b for _, b in blocks]


def _orient(xq: np.ndarray, w: np.ndarray) -> np.ndarray:
    # score must correlate non-negatively with the block's indicator sum
    if (xq @ w) @ xq.sum(axis=1) < 0:
        return -w
    return w


def _normalize(xq: np.ndarray, w: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.mean((xq @ w) ** 2))
    if sd <= 1e-12:
        raise SingularMatrixError("zero-variance block proxy")
    return w / sd


def _path_inner(v: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Inner weights E with E[i, j] the weight of proxy i in latent j's
    inner estimate: regression coefficients for predecessors, correlations
    for successors."""
    n, q = v.shape
    e = np.zeros((q, q))
    for j in range(q):
        pred = np.flatnonzero(d[:, j])
        if pred.size:
            e[pred, j] = ols(v[:, pred], v[:, j])
        succ = np.flatnonzero(d[j, :])
        if succ.size:
            e[succ, j] = v[:, succ].T @ v[:, j] / n
    return e


def fit(data, model: PathModel, tol: float = 1e-4, max_iter: int = 300) -> PlsEstimate:
    """Estimate ``model`` on ``data``.

    ``data`` is a ResponseMatrix, a DataFrame with the model's item columns,
    or an array whose columns follow ``model.items``.

    Rows with a missing answer on any model item are dropped, columns are
    standardized, then outer weights are iterated until the largest absolute
    change is below ``tol``. Non-convergence is reported via ``converged``.
    """
    x, idx, block_items = _prepare(data, model)
    n = x.shape[0]
    if n <= max(len(i) for i in idx):
        raise ValueError(f"too few complete observations ({n}) for the model")
    d = model.path_matrix()
    q = len(idx)
    blocks = [x[:, i] for i in idx]

    w = [_normalize(xq, _orient(xq, np.ones(xq.shape[1]))) for xq in blocks]
    history = []
    converged = False
    delta = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        v = np.column_stack([xq @ wq for xq, wq in zip(blocks, w)])
        e = _path_inner(v, d)
        inner = _std(v @ e)
        new_w = []
        for k, xq in enumerate(blocks):
            wk = xq.T @ inner[:, k] / n
            new_w.append(_normalize(xq, _orient(xq, wk)))
        delta = max(float(np.max(np.abs(a - b))) for a, b in zip(new_w, w))
        history.append(delta)
        w = new_w
        if delta < tol:
            converged = True
            break

    scores = _std(np.column_stack([xq @ wq for xq, wq in zip(blocks, w)]))
    e = _path_inner(scores, d)
    loadings = tuple(xq.T @ scores[:, k] / n for k, xq in enumerate(blocks))
    beta, r2 = _structural(scores, d, model.latents)

    return PlsEstimate(
        model=model,
        latents=model.latents,
        block_items=tuple(block_items),
        outer_weights=tuple(w),
        scores=scores,
        inner_weights=e,
        loadings=loadings,
        path_coefficients=beta,
        r_squared=r2,
        iterations=it,
        converged=converged,
        max_weight_change=delta,
        n_obs=n,
        weight_history=history,
    )


def _structural(scores: np.ndarray, d: np.ndarray, names: Sequence[str]):
    q = d.shape[0]
    beta = np.zeros((q, q))
    r2 = {}
    for j in range(q):
        pred = np.flatnonzero(d[:, j])
        if not pred.size:
            continue
        coef = ols(scores[:, pred], scores[:, j])
        beta[pred, j] = coef
        resid = scores[:, j] - scores[:, pred] @ coef
        r2[names[j]] = float(1.0 - resid @ resid / (scores[:, j] @ scores[:, j]))
    return beta, r2


def align_signs(estimate: PlsEstimate, reference: PlsEstimate) -> PlsEstimate:
    """Flip block orientations of ``estimate`` to agree with ``reference``.

    Used on bootstrap refits; path coefficients are re-signed so that each
    score keeps the reference orientation.
    """
    signs = np.array(
        [1.0 if a @ b >= 0 else -1.0 for a, b in zip(estimate.outer_weights, reference.outer_weights)]
    )
    if np.all(signs > 0):
        return estimate
    flip = np.outer(signs, signs)
    return PlsEstimate(
        model=estimate.model,
        latents=estimate.latents,
        block_items=estimate.block_items,
        outer_weights=tuple(s * w for s, w in zip(signs, estimate.outer_weights)),
        scores=estimate.scores * signs,
        inner_weights=estimate.inner_weights * flip,
        loadings=tuple(s * l for s, l in zip(signs, estimate.loadings)),
        path_coefficients=estimate.path_coefficients * flip,
        r_squared=estimate.r_squared,
        iterations=estimate.iterations,
        converged=estimate.converged,
        max_weight_change=estimate.max_weight_change,
        n_obs=estimate.n_obs,
        weight_history=estimate.weight_history,
    )


@dataclass
class ValidationReport:
    latents: tuple[str, ...]
    loadings: dict[str, dict[str, float]]
    passes: dict[str, dict[str, bool]]
    composite_reliability: dict[str, float]
    ave: dict[str, float]
    fornell_larcker: np.ndarray
    cross_loadings: dict[str, dict[str, float]]
    threshold: float = 0.7

    @property
    def failing_indicators(self) -> list[tuple[str, str]]:
        return [(lv, i) for lv, d in self.passes.items() for i, ok in d.items() if not ok]

    def discriminant_ok(self) -> dict[str, bool]:
        fl = self.fornell_larcker
        out = {}
        for k, name in enumerate(self.latents):
            off = np.delete(np.abs(fl[k]), k)
            out[name] = bool(np.all(fl[k, k] > off)) if off.size else True
        return out

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "loadings": self.loadings,
            "passes": self.passes,
            "composite_reliability": self.composite_reliability,
            "ave": self.ave,
            "fornell_larcker": {
                a: {b: float(self.fornell_larcker[i, j]) for j, b in enumerate(self.latents)}
                for i, a in enumerate(self.latents)
            },
            "cross_loadings": self.cross_loadings,
        }


def composite_reliability(loadings) -> float:
    lam = np.asarray(loadings, dtype=float)
    s = lam.sum() ** 2
    return float(s / (s + np.sum(1.0 - lam**2)))


def validate(estimate: PlsEstimate, data=None, threshold: float = 0.7) -> ValidationReport:
    """Indicator reliability, composite reliability, AVE, Fornell-Larcker
    matrix and cross-loadings. ``data`` is accepted for symmetry with ``fit``
    but the estimate already carries the standardized scores it needs,
    except for cross-loadings which require the indicator matrix."""
    names = estimate.latents
    loadings, passes, cr, ave = {}, {}, {}, {}
    for name, items, lam in zip(names, estimate.block_items, estimate.loadings):
        loadings[name] = dict(zip(items, map(float, lam)))
        passes[name] = {i: bool(l > threshold) for i, l in zip(items, lam)}
        cr[name] = composite_reliability(lam)
        ave[name] = float(np.mean(lam**2))
    corr = np.corrcoef(estimate.scores, rowvar=False) if len(names) > 1 else np.ones((1, 1))
    fl = np.array(corr, copy=True)
    np.fill_diagonal(fl, [np.sqrt(ave[n]) for n in names])

    cross = {}
    if data is not None:
        x, _, _ = _prepare(data, estimate.model)
        n = x.shape[0]
        if n == estimate.scores.shape[0]:
            cl = x.T @ estimate.scores / n
            for p, item in enumerate(estimate.model.items):
                cross[item] = {lv: float(cl[p, k]) for k, lv in enumerate(names)}
    return ValidationReport(names, loadings, passes, cr, ave, fl, cross, threshold)
