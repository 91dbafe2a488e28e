"""Adaptive predictive selection of flyback switch schedules.

When the cell voltages spread past a threshold, the controller ranks the
cells, maps each of the 16 possible auxiliary switch schedules onto the top
three, predicts every cell's voltage at the end of the resulting cycle, and
picks the schedule whose predicted voltages have the smallest population
standard deviation.  Predictions come either from the per-cell identified
linear models or, for verification against ground truth, from the true cell
models themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

from . import rls
from .ecm import CellParams, CellState, step_exact, terminal_voltage
from .flyback import ConverterParams, SwitchPlan, cycle_charge_deltas


@dataclass(frozen=True)
class Candidate:
    """One auxiliary switch schedule: stage-I and stage-II enables for the
    second- and third-ranked cells (the target always conducts)."""

    c11: bool
    c21: bool
    c12: bool
    c22: bool

    def bits(self) -> str:
        return f"{self.c11:d}{self.c21:d}{self.c12:d}{self.c22:d}"


def enumerate_candidates() -> list[Candidate]:
    """All 16 schedules in lexicographic (c11, c21, c12, c22) order, off
    before on; the first entry is the all-off schedule."""
    return [Candidate(*flags) for flags in product((False, True), repeat=4)]


CANDIDATES: tuple[Candidate, ...] = tuple(enumerate_candidates())


@dataclass(frozen=True)
class ControllerConfig:
    gap_threshold: float = 0.02          # volts, strict max-min trigger
    prediction_source: str = "rls"       # "rls" | "plant"
    include_charger: bool = True         # fold charger current into predictions

    def __post_init__(self) -> None:
        if not (self.gap_threshold > 0.0 and math.isfinite(self.gap_threshold)):
            raise ValueError("gap_threshold must be positive and finite")
        if self.prediction_source not in ("rls", "plant"):
            raise ValueError(
                f"prediction_source must be 'rls' or 'plant', got {self.prediction_source!r}"
            )


@dataclass(frozen=True)
class Decision:
    """Outcome of one control step."""

    balancing_active: bool
    plan: Optional[SwitchPlan]
    predicted_std: tuple[float, ...]   # 16 values in candidate order; empty when inactive
    ranking: tuple[int, ...]


def rank_cells(voltages: Sequence[float]) -> tuple[int, ...]:
    """Cell indices by descending voltage, ties broken by ascending index."""
    if len(voltages) < 4:
        raise ValueError(f"need at least 4 cells to rank, got {len(voltages)}")
    return tuple(sorted(range(len(voltages)), key=lambda j: (-voltages[j], j)))


def should_balance(voltages: Sequence[float], cfg: ControllerConfig) -> bool:
    """Strict trigger: spread must exceed the threshold, not merely reach it."""
    if not voltages:
        raise ValueError("need at least one voltage")
    return max(voltages) - min(voltages) > cfg.gap_threshold


def std(values: Sequence[float]) -> float:
    """Population standard deviation (divide by n)."""
    n = len(values)
    if n == 0:
        raise ValueError("std of an empty sequence")
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / n)


def plan_from_candidate(candidate: Candidate, ranking: Sequence[int]) -> SwitchPlan:
    """Bind a schedule to concrete cells: ranks 0/1/2 of the current ranking."""
    return SwitchPlan(
        target_cell=ranking[0],
        second_cell=ranking[1],
        third_cell=ranking[2],
        c11=candidate.c11,
        c21=candidate.c21,
        c12=candidate.c12,
        c22=candidate.c22,
    )


def _cycle_average_currents(
    candidate: Candidate,
    ranking: Sequence[int],
    conv: ConverterParams,
    voltages: Sequence[float],
    external_current: float,
) -> tuple[tuple[float, ...], float]:
    """Per-cell average current over the candidate's cycle, and its duration.

    The converter moves charge_delta[j] coulombs into cell j over the cycle;
    spread over the duration and added to the external (charger) current that
    flows regardless.  A zero-length cycle leaves the external current alone.
    """
    plan = plan_from_candidate(candidate, ranking)
    deltas, duration = cycle_charge_deltas(conv, voltages, plan)
    if duration == 0.0:
        return tuple(external_current for _ in deltas), 0.0
    return tuple(external_current - d / duration for d in deltas), duration


def predict_cycle_std(
    candidate: Candidate,
    ranking: Sequence[int],
    estimators: Sequence[rls.RlsEstimator],
    charge_accumulators: Sequence[float],
    capacities: Sequence[float],
    external_current: float,
    conv: ConverterParams,
    voltages: Sequence[float],
) -> float:
    """Predicted end-of-cycle voltage spread using the identified models.

    Each cell's regressor takes its cycle-average current and its charge
    accumulator advanced by that current over the cycle.
    """
    currents, duration = _cycle_average_currents(
        candidate, ranking, conv, voltages, external_current
    )
    predicted = []
    for j, est in enumerate(estimators):
        q_next = charge_accumulators[j] + currents[j] * duration
        x = rls.build_regressor(currents[j], q_next, capacities[j])
        predicted.append(rls.predict(est, x))
    return std(predicted)


def predict_cycle_std_plant(
    candidate: Candidate,
    ranking: Sequence[int],
    plant: Sequence[tuple[CellParams, CellState]],
    external_current: float,
    conv: ConverterParams,
    voltages: Sequence[float],
) -> float:
    """Predicted end-of-cycle voltage spread using the true cell models.

    Steps every true state by its cycle-average current, then reads the
    terminal voltage at the external current alone: all converter currents
    are exactly zero at the end of a cycle.
    """
    currents, duration = _cycle_average_currents(
        candidate, ranking, conv, voltages, external_current
    )
    predicted = []
    for j, (params, state) in enumerate(plant):
        if duration > 0.0:
            state, _ = step_exact(params, state, currents[j], duration)
        predicted.append(terminal_voltage(params, state, external_current))
    return std(predicted)


def select_plan(
    voltages: Sequence[float],
    estimators: Optional[Sequence[rls.RlsEstimator]],
    charge_accumulators: Optional[Sequence[float]],
    external_current: float,
    conv: ConverterParams,
    cfg: ControllerConfig,
    *,
    capacities: Optional[Sequence[float]] = None,
    plant: Optional[Sequence[tuple[CellParams, CellState]]] = None,
) -> Decision:
    """Evaluate the trigger and, when active, pick the argmin schedule.

    Ties go to the earliest candidate in enumeration order, so equal
    predictions select the all-off schedule.
    """
    ranking = rank_cells(voltages)
    if not should_balance(voltages, cfg):
        return Decision(False, None, (), ranking)

    i_ext = external_current if cfg.include_charger else 0.0
    if cfg.prediction_source == "plant":
        if plant is None:
            raise ValueError("prediction_source 'plant' requires the plant models")
        stds = tuple(
            predict_cycle_std_plant(c, ranking, plant, i_ext, conv, voltages)
            for c in CANDIDATES
        )
    else:
        if estimators is None or charge_accumulators is None or capacities is None:
            raise ValueError(
                "prediction_source 'rls' requires estimators, accumulators and capacities"
            )
        stds = tuple(
            predict_cycle_std(
                c, ranking, estimators, charge_accumulators, capacities,
                i_ext, conv, voltages,
            )
            for c in CANDIDATES
        )

    best = 0
    for k in range(1, len(stds)):
        if stds[k] < stds[best]:
            best = k
    return Decision(True, plan_from_candidate(CANDIDATES[best], ranking), stds, ranking)
