"""Map path coefficients to agent event probabilities.

Each event's probability is the effect-weighted sum of its driver scores
divided by the same sum at the maximum score of every driver. Drivers are
scored on a 0-10 scale; results are expressed in thousandths as in the
published maximum table, a factor that cancels out.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Mapping

MAX_SCORE = 10.0
SCALE = 1000.0

HUMANIZATION_DRIVERS = ("cooperation", "self_esteem", "self_realization")
LEARNING_DRIVERS = ("humanization", "pbl")

# Printed "Results" column of the maximum table; cooperation is 7550 there
# although 10 * 0.753 * 1000 = 7530.
PAPER_RESULTS = {
    "cooperation": 7550.0,
    "self_esteem": 8740.0,
    "self_realization": 8660.0,
    "humanization": 5320.0,
    "pbl": 7250.0,
}

PAPER_CONSTANTS_MODE = "paper-constants"
DERIVED_MODE = "derived"


@dataclass(frozen=True)
class EffectConstants:
    self_esteem: float = 0.874
    self_realization: float = 0.866
    cooperation: float = 0.753
    humanization_pbl: float = 0.733
    pbl_learning: float = 0.725
    humanization_learning: float = 0.532
    mode: str = PAPER_CONSTANTS_MODE

    def __post_init__(self):
        if self.mode not in (PAPER_CONSTANTS_MODE, DERIVED_MODE):
            raise ValueError(f"unknown mode {self.mode!r}")
        for f in fields(self):
            if f.name == "mode":
                continue
            v = getattr(self, f.name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{f.name} = {v} outside (0, 1]")

    def driver_effect(self, driver: str) -> float:
        return {
            "cooperation": self.cooperation,
            "self_esteem": self.self_esteem,
            "self_realization": self.self_realization,
            "humanization": self.humanization_learning,
            "pbl": self.pbl_learning,
        }[driver]

    @classmethod
    def derived(cls, self_esteem, self_realization, cooperation, humanization_pbl, pbl_learning):
        """Constants from fitted coefficients; the indirect humanization to
        learning effect is the product along the chain."""
        return cls(
            self_esteem=self_esteem,
            self_realization=self_realization,
            cooperation=cooperation,
            humanization_pbl=humanization_pbl,
            pbl_learning=pbl_learning,
            humanization_learning=humanization_pbl * pbl_learning,
            mode=DERIVED_MODE,
        )

    @classmethod
    def from_estimate(cls, estimate, names: Mapping[str, str] | None = None) -> "EffectConstants":
        """Build derived constants from a fitted PLS estimate.

        ``names`` maps the roles ``humanization``, ``self_esteem``,
        ``self_realization``, ``cooperation``, ``pbl`` and ``learning`` to
        latent names in the estimate.
        """
        n = {
            "humanization": "Humanization",
            "self_esteem": "SelfEsteem",
            "self_realization": "SelfRealization",
            "cooperation": "Cooperation",
            "pbl": "PBL",
            "learning": "Learning",
        }
        n.update(names or {})
        te = lambda a, b: estimate.total_effect(n[a], n[b])  # noqa: E731
        c = cls.derived(
            self_esteem=te("humanization", "self_esteem"),
            self_realization=te("humanization", "self_realization"),
            cooperation=te("humanization", "cooperation"),
            humanization_pbl=te("humanization", "pbl"),
            pbl_learning=te("pbl", "learning"),
        )
        return replace(c, humanization_learning=te("humanization", "learning"))

    def with_overrides(self, overrides: Mapping[str, float]) -> "EffectConstants":
        """Override effects by driver name (``cooperation``, ``self_esteem``,
        ``self_realization``, ``humanization``, ``pbl``); any override switches
        to derived mode since the printed results no longer apply."""
        key = {
            "cooperation": "cooperation",
            "self_esteem": "self_esteem",
            "self_realization": "self_realization",
            "humanization": "humanization_learning",
            "pbl": "pbl_learning",
        }
        unknown = set(overrides) - set(key)
        if unknown:
            raise KeyError(f"unknown constant keys: {sorted(unknown)}")
        if not overrides:
            return self
        return replace(
            self, mode=DERIVED_MODE, **{key[k]: float(v) for k, v in overrides.items()}
        )


@dataclass(frozen=True)
class MaxRow:
    driver: str
    max_score: float
    effect: float
    result: float


@dataclass(frozen=True)
class MaxScoreTable:
    humanization: tuple[MaxRow, ...]
    learning: tuple[MaxRow, ...]
    scale: float = SCALE

    @property
    def humanization_max(self) -> float:
        return sum(r.result for r in self.humanization)

    @property
    def learning_max(self) -> float:
        return sum(r.result for r in self.learning)

    def row(self, driver: str) -> MaxRow:
        for r in self.humanization + self.learning:
            if r.driver == driver:
                return r
        raise KeyError(driver)


def build_max_table(constants: EffectConstants, scale: float = SCALE) -> MaxScoreTable:
    def row(driver):
        if constants.mode == PAPER_CONSTANTS_MODE:
            result = PAPER_RESULTS[driver] * scale / SCALE
        else:
            result = MAX_SCORE * constants.driver_effect(driver) * scale
        return MaxRow(driver, MAX_SCORE, constants.driver_effect(driver), result)

    return MaxScoreTable(
        tuple(row(d) for d in HUMANIZATION_DRIVERS),
        tuple(row(d) for d in LEARNING_DRIVERS),
        scale,
    )


def _weighted(rows, scores: Mapping[str, float]) -> float:
    # result / max_score is effect * scale; for paper constants it is the
    # printed result per score point, so full scores give exactly 1
    return sum(r.result * scores[r.driver] / r.max_score for r in rows)


@dataclass(frozen=True)
class AttributeScores:
    cooperation: float
    self_esteem: float
    self_realization: float
    pbl: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= MAX_SCORE:
                raise ValueError(f"{f.name} = {v} outside [0, {MAX_SCORE:g}]")

    @classmethod
    def uniform(cls, level: float) -> "AttributeScores":
        return cls(level, level, level, level)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def humanization_probability(scores: AttributeScores, table: MaxScoreTable) -> float:
    s = scores.as_dict()
    return min(1.0, _weighted(table.humanization, s) / table.humanization_max)


BINARY = "binary"
PROBABILITY_SCALED = "probability-scaled"


def humanization_term(humanized: bool | float, mode: str = BINARY) -> float:
    """Score fed into the humanization driver of the learning event.

    ``binary``: full score when the agent is humanized, zero otherwise.
    ``probability-scaled``: ``humanized`` is a probability, scaled to 0-10.
    """
    if mode == BINARY:
        return MAX_SCORE if humanized else 0.0
    if mode == PROBABILITY_SCALED:
        return MAX_SCORE * float(humanized)
    raise ValueError(f"unknown humanization input mode {mode!r}")


def learning_probability(
    humanized: bool | float,
    pbl_score: float,
    table: MaxScoreTable,
    mode: str = BINARY,
) -> float:
    if not 0.0 <= pbl_score <= MAX_SCORE:
        raise ValueError(f"pbl score {pbl_score} outside [0, {MAX_SCORE:g}]")
    s = {"humanization": humanization_term(humanized, mode), "pbl": pbl_score}
    return min(1.0, _weighted(table.learning, s) / table.learning_max)
