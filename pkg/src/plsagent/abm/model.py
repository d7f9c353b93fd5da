"""Grid classroom of immobile student agents.

Agents live on a ``side x side`` lattice, indexed row-major. Bonds are drawn
once at creation between Von Neumann neighbours. Each agent attempts
humanization and learning once, by its own Bernoulli draw; afterwards it can
only learn by transfer across a bond whose two ends both cooperate at or
above the threshold.
"""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from .. import probmap
from ..probmap import AttributeScores, EffectConstants, MaxScoreTable
from . import kernels

UP, DOWN, LEFT, RIGHT = range(4)
TWO_DRAWS = "two-draws"
ONE_DRAW = "one-draw"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    grid_side: int = 31
    scores: AttributeScores = field(default_factory=lambda: AttributeScores.uniform(5))
    link_chance: float | tuple[float, float] = (0.3, 0.7)
    cooperation_threshold: float = 6.0
    max_steps: int = 200
    seed: int = 0
    humanization_input_mode: str = probmap.BINARY
    link_draws: str = TWO_DRAWS
    constants: EffectConstants = field(default_factory=EffectConstants)

    def __post_init__(self):
        if self.grid_side < 1:
            raise ConfigError("grid_side must be at least 1")
        lc = self.link_chance
        if isinstance(lc, (list, tuple)):
            lo, hi = map(float, lc)
            if not 0.0 <= lo <= hi <= 1.0:
                raise ConfigError(f"link_chance range {lc} must satisfy 0 <= lo <= hi <= 1")
            object.__setattr__(self, "link_chance", (lo, hi))
        elif not 0.0 <= lc <= 1.0:
            raise ConfigError(f"link_chance {lc} outside [0, 1]")
        # thresholds above the score scale are allowed; they switch transfer off
        if not self.cooperation_threshold >= 0.0:
            raise ConfigError("cooperation_threshold must be non-negative")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        if self.humanization_input_mode not in (probmap.BINARY, probmap.PROBABILITY_SCALED):
            raise ConfigError(f"unknown humanization_input_mode {self.humanization_input_mode!r}")
        if self.link_draws not in (TWO_DRAWS, ONE_DRAW):
            raise ConfigError(f"unknown link_draws {self.link_draws!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def n_agents(self) -> int:
        return self.grid_side**2

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["scores"] = self.scores.as_dict()
        d["constants"] = asdict(self.constants)
        d["link_chance"] = list(self.link_chance) if isinstance(self.link_chance, tuple) else self.link_chance
        return d

    @classmethod
    def from_mapping(cls, doc: Mapping) -> "SimConfig":
        """Build a config from keys named exactly as the fields.

        ``scores`` may be a single level or a mapping of the four attributes;
        ``constants`` takes driver-name overrides plus an optional ``mode``.
        """
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = dict(doc)
        if "scores" in kw:
            s = kw["scores"]
            try:
                if isinstance(s, Mapping):
                    bad = sorted(set(s) - {f.name for f in fields(AttributeScores)})
                    if bad:
                        raise ConfigError(f"unknown config keys: {', '.join('scores.' + b for b in bad)}")
                    kw["scores"] = AttributeScores(**{k: float(v) for k, v in s.items()})
                else:
                    kw["scores"] = AttributeScores.uniform(float(s))
            except TypeError as exc:
                raise ConfigError(f"scores: {exc}") from None
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if "constants" in kw:
            c = dict(kw["constants"] or {})
            mode = c.pop("mode", probmap.PAPER_CONSTANTS_MODE)
            try:
                kw["constants"] = EffectConstants(mode=mode).with_overrides(c)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"constants: {exc}") from None
        if "link_chance" in kw and isinstance(kw["link_chance"], list):
            kw["link_chance"] = tuple(kw["link_chance"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class StudentAgent:
    position: tuple[int, int]
    scores: AttributeScores
    learned: bool
    humanized: bool
    attempted_learn: bool
    attempted_humanize: bool
    links: frozenset


@dataclass
class SimState:
    """Flag arrays (uint8, row-major) plus bonds and the run's RNG.

    ``links[i, d]`` is the index of the bonded neighbour in direction ``d``
    (up, down, left, right) or -1.
    """

    side: int
    links: np.ndarray
    learned: np.ndarray
    humanized: np.ndarray
    attempted_learn: np.ndarray
    attempted_humanize: np.ndarray
    coop_ok: np.ndarray
    p_hum: np.ndarray
    p_learn_humanized: np.ndarray
    p_learn_plain: np.ndarray
    rng: np.random.Generator
    link_chance: float
    scores: AttributeScores
    step_count: int = 0
    quiescent: bool = False

    @property
    def n_agents(self) -> int:
        return self.side * self.side

    @property
    def diffusion_rate(self) -> float:
        return float(self.learned.sum()) / self.n_agents

    def agent(self, row: int, col: int) -> StudentAgent:
        i = row * self.side + col
        nbrs = frozenset(divmod(int(j), self.side) for j in self.links[i] if j >= 0)
        return StudentAgent(
            (row, col),
            self.scores,
            bool(self.learned[i]),
            bool(self.humanized[i]),
            bool(self.attempted_learn[i]),
            bool(self.attempted_humanize[i]),
            nbrs,
        )

    def agents(self) -> list[StudentAgent]:
        return [self.agent(r, c) for r in range(self.side) for c in range(self.side)]

    def copy(self) -> "SimState":
        return replace(
            self,
            links=self.links.copy(),
            learned=self.learned.copy(),
            humanized=self.humanized.copy(),
            attempted_learn=self.attempted_learn.copy(),
            attempted_humanize=self.attempted_humanize.copy(),
            rng=copy.deepcopy(self.rng),
        )


def event_probabilities(config: SimConfig, table: MaxScoreTable | None = None):
    """Return (P(humanize), P(learn | humanized), P(learn | not humanized))."""
    table = table or probmap.build_max_table(config.constants)
    p_h = probmap.humanization_probability(config.scores, table)
    pbl = config.scores.pbl
    if config.humanization_input_mode == probmap.BINARY:
        p_yes = probmap.learning_probability(True, pbl, table)
        p_no = probmap.learning_probability(False, pbl, table)
    else:
        p_yes = p_no = probmap.learning_probability(p_h, pbl, table, probmap.PROBABILITY_SCALED)
    return p_h, p_yes, p_no


def make_rng(seed: int, run_index: int | None = None) -> np.random.Generator:
    key = [int(seed)] if run_index is None else [int(seed), int(run_index)]
    return np.random.default_rng(np.random.SeedSequence(key))


def _draw_links(side: int, chance: float, mode: str, rng: np.random.Generator) -> np.ndarray:
    links = np.full((side * side, 4), -1, dtype=np.int32)
    idx = np.arange(side * side, dtype=np.int32).reshape(side, side)
    if side == 1:
        return links
    if mode == TWO_DRAWS:
        horiz = (rng.random((side, side - 1, 2)) < chance).all(axis=2)
        vert = (rng.random((side - 1, side, 2)) < chance).all(axis=2)
    else:
        horiz = rng.random((side, side - 1)) < chance
        vert = rng.random((side - 1, side)) < chance
    left, right = idx[:, :-1][horiz], idx[:, 1:][horiz]
    links[left, RIGHT] = right
    links[right, LEFT] = left
    top, bottom = idx[:-1, :][vert], idx[1:, :][vert]
    links[top, DOWN] = bottom
    links[bottom, UP] = top
    return links


def init_grid(config: SimConfig, rng: np.random.Generator | None = None) -> SimState:
    """Create the classroom; every cell holds one agent with all flags false.

    Draw order on the run RNG: the run's link chance (when a range is
    configured), then horizontal bonds, then vertical bonds.
    """
    rng = rng if rng is not None else make_rng(config.seed)
    lc = config.link_chance
    chance = float(rng.uniform(lc[0], lc[1])) if isinstance(lc, tuple) else float(lc)
    side = config.grid_side
    n = side * side
    links = _draw_links(side, chance, config.link_draws, rng)
    p_h, p_yes, p_no = event_probabilities(config)
    ok = 1 if config.scores.cooperation >= config.cooperation_threshold else 0
    return SimState(
        side=side,
        links=links,
        learned=np.zeros(n, dtype=np.uint8),
        humanized=np.zeros(n, dtype=np.uint8),
        attempted_learn=np.zeros(n, dtype=np.uint8),
        attempted_humanize=np.zeros(n, dtype=np.uint8),
        coop_ok=np.full(n, ok, dtype=np.uint8),
        p_hum=np.full(n, p_h),
        p_learn_humanized=np.full(n, p_yes),
        p_learn_plain=np.full(n, p_no),
        rng=rng,
        link_chance=chance,
        scores=config.scores,
    )


def step(state: SimState, backend: str | None = None) -> SimState:
    """Advance one step in place and return ``state``.

    Agents activate in a fresh random permutation; updates are immediate.
    The state becomes quiescent once no further step could change a flag:
    every agent has used its trials and no cooperative bond joins a learned
    agent to an unlearned one.
    """
    kstep, kfrontier = kernels.get(backend)
    n = state.n_agents
    order = state.rng.permutation(n).astype(np.int64)
    u_hum = state.rng.random(n)
    u_learn = state.rng.random(n)
    kstep(
        order, u_hum, u_learn,
        state.p_hum, state.p_learn_humanized, state.p_learn_plain,
        state.coop_ok, state.links,
        state.learned, state.humanized, state.attempted_humanize, state.attempted_learn,
    )
    state.step_count += 1
    state.quiescent = bool(
        state.attempted_learn.all()
        and state.attempted_humanize.all()
        and kfrontier(state.links, state.coop_ok, state.learned) == 0
    )
    return state


@dataclass(frozen=True)
class Snapshot:
    step: int
    side: int
    cells: tuple[tuple[bool, bool], ...]

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "side": self.side,
            "learned": [int(c[0]) for c in self.cells],
            "humanized": [int(c[1]) for c in self.cells],
        }


def snapshot(state: SimState) -> Snapshot:
    """Row-major (learned, humanized) per cell."""
    cells = tuple(zip(state.learned.astype(bool).tolist(), state.humanized.astype(bool).tolist()))
    return Snapshot(state.step_count, state.side, cells)


@dataclass
class RunResult:
    diffusion_rate: float
    humanized_rate: float
    steps_used: int
    quiescent: bool
    link_chance: float
    final: Snapshot
    snapshots: list[Snapshot] = field(default_factory=list)

    def to_dict(self, include_grid: bool = True) -> dict:
        d = {
            "diffusion_rate": self.diffusion_rate,
            "humanized_rate": self.humanized_rate,
            "steps_used": self.steps_used,
            "quiescent": self.quiescent,
            "link_chance": self.link_chance,
        }
        if include_grid:
            d["final"] = self.final.to_dict()
        if self.snapshots:
            d["snapshots"] = [s.to_dict() for s in self.snapshots]
        return d


def run(
    config: SimConfig,
    run_index: int | None = None,
    snapshot_every: int = 0,
    backend: str | None = None,
) -> RunResult:
    """Simulate until quiescent or ``config.max_steps``.

    ``run_index`` selects an independent stream ``(config.seed, run_index)``
    for replications; ``None`` uses ``config.seed`` alone.
    """
    state = init_grid(config, make_rng(config.seed, run_index))
    snaps = [snapshot(state)] if snapshot_every else []
    while state.step_count < config.max_steps and not state.quiescent:
        step(state, backend)
        if snapshot_every and state.step_count % snapshot_every == 0:
            snaps.append(snapshot(state))
    return RunResult(
        diffusion_rate=state.diffusion_rate,
        humanized_rate=float(state.humanized.sum()) / state.n_agents,
        steps_used=state.step_count,
        quiescent=state.quiescent,
        link_chance=state.link_chance,
        final=snapshot(state),
        snapshots=snaps,
    )


def run_rate(config: SimConfig, run_index: int, backend: str | None = None) -> tuple[float, float]:
    """(diffusion rate, realized link chance) without building snapshots."""
    state = init_grid(config, make_rng(config.seed, run_index))
    while state.step_count < config.max_steps and not state.quiescent:
        step(state, backend)
    return state.diffusion_rate, state.link_chance


def with_scores(config: SimConfig, **levels: float) -> SimConfig:
    scores = replace(config.scores, **levels)
    return replace(config, scores=scores)


def design_config(levels: Mapping[str, float], base: SimConfig | None = None, **overrides) -> SimConfig:
    base = base or SimConfig()
    cfg = with_scores(base, **dict(levels))
    return replace(cfg, **overrides) if overrides else cfg

