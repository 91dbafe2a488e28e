"""Closed-loop balancing scenarios: charger, converter, controller, cells.

One simulated step is one balancing cycle when the controller is active,
or one fixed idle interval when it is not.  Each step measures the cell
voltages (optionally with seeded Gaussian noise), feeds every cell's online
estimator, lets the controller decide, runs the chosen converter cycle
against the frozen measured state, then advances the true cell models by the
resulting average currents with the exact-hold integrator.  Everything is
deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rls
from .controller import (
    ControllerConfig,
    Decision,
    rank_cells,
    select_plan,
    should_balance,
    std,
)
from .ecm import CellParams, CellState, step_exact, terminal_voltage
from .flyback import ConverterParams, SwitchPlan, simulate_cycle

INACTIVE_BITS = "----"


@dataclass(frozen=True)
class ChargerConfig:
    """Stack-level CC-CV source.  Currents follow the discharge-positive
    convention, so a charging current is negative."""

    mode: str = "cc_cv"              # "cc_cv" | "idle"
    cc_current: float = -0.4         # amperes, stack level
    cv_voltage: float = 15.2         # volts, stack level
    cutoff_current: float = 0.05     # amperes magnitude ending the CV taper
    cell_voltage_limit: float = 4.2  # per-cell guard, volts

    def __post_init__(self) -> None:
        if self.mode not in ("cc_cv", "idle"):
            raise ValueError(f"charger mode must be 'cc_cv' or 'idle', got {self.mode!r}")
        if self.mode == "cc_cv":
            if not self.cc_current < 0.0:
                raise ValueError("cc_current must be negative (charging)")
            if self.cutoff_current < 0.0:
                raise ValueError("cutoff_current must be >= 0")
            if not abs(self.cc_current) > self.cutoff_current:
                raise ValueError("|cc_current| must exceed cutoff_current")
            if not self.cv_voltage > 0.0:
                raise ValueError("cv_voltage must be positive")


@dataclass
class ChargerState:
    """Mutable phase memory of the CC-CV source.  Both the taper cutoff and
    the per-cell guard latch the phase to 'done'."""

    phase: str = "cc"                # "cc" | "cv" | "done"
    guard_tripped: bool = False


def cc_cv_current(
    charger: ChargerConfig,
    stack_voltage: float,
    stack_resistance: float,
    cell_voltages: Sequence[float],
    state: ChargerState,
) -> float:
    """Charger current for this instant, advancing the phase state.

    ``stack_voltage`` is the stack's zero-current (rest) voltage;
    regulation works against the aggregate ohmic model
    stack_terminal = stack_voltage - stack_resistance * i.
    """
    if charger.mode == "idle":
        return 0.0
    if not stack_resistance > 0.0:
        raise ValueError("stack_resistance must be positive")
    for v in cell_voltages:
        if v > charger.cell_voltage_limit:
            state.phase = "done"
            state.guard_tripped = True
            return 0.0
    if state.phase == "done":
        return 0.0
    if state.phase == "cc":
        v_at_cc = stack_voltage - stack_resistance * charger.cc_current
        if v_at_cc < charger.cv_voltage:
            return charger.cc_current
        state.phase = "cv"
    i = (stack_voltage - charger.cv_voltage) / stack_resistance
    i = max(charger.cc_current, min(0.0, i))
    if abs(i) < charger.cutoff_current:
        state.phase = "done"
        return 0.0
    return i


def greedy_baseline_plan(voltages: Sequence[float]) -> SwitchPlan:
    """Reference policy: address only the highest cell, no auxiliary windows."""
    ranking = rank_cells(voltages)
    return SwitchPlan(
        target_cell=ranking[0],
        second_cell=ranking[1],
        third_cell=ranking[2],
    )


@dataclass
class ScenarioConfig:
    """One fully specified closed-loop run."""

    cells: list[tuple[CellParams, CellState]]
    converter: ConverterParams
    charger: ChargerConfig = ChargerConfig()
    policy: str = "ampc"                 # "ampc" | "greedy" | "none"
    controller: ControllerConfig = ControllerConfig()
    forgetting_factor: float = 0.995
    initial_covariance: float = 1e6
    warm_start: bool = True
    noise_std: float = 0.0               # volts, measurement noise
    seed: int = 0
    max_time: float = 4000.0             # seconds of simulated time
    record_every: int = 1                # cycles per stored trace row
    idle_dt: float = 1.0                 # seconds per step while inactive

    def __post_init__(self) -> None:
        if len(self.cells) < 4:
            raise ValueError(f"need at least 4 cells, got {len(self.cells)}")
        if len(self.cells) != self.converter.n_cells:
            raise ValueError(
                f"converter is sized for {self.converter.n_cells} cells "
                f"but {len(self.cells)} were configured"
            )
        if self.policy not in ("ampc", "greedy", "none"):
            raise ValueError(f"policy must be ampc, greedy or none, got {self.policy!r}")
        if self.max_time < 0.0 or not math.isfinite(self.max_time):
            raise ValueError("max_time must be >= 0 and finite")
        if not self.idle_dt > 0.0:
            raise ValueError("idle_dt must be positive")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            raise ValueError("record_every must be an integer >= 1")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be >= 0")
        if not 0.0 < self.forgetting_factor <= 1.0:
            raise ValueError("forgetting_factor must lie in (0, 1]")
        if not self.initial_covariance > 0.0:
            raise ValueError("initial_covariance must be positive")


@dataclass(frozen=True)
class TraceRecord:
    """One recorded instant, captured at the start of a step before the
    plant moves.  ``current`` is each cell's net average current over the
    step that follows; ``candidate_bits`` is the chosen schedule or '----'."""

    time: float
    cycle: int
    soc: tuple[float, ...]
    voltage: tuple[float, ...]
    current: tuple[float, ...]
    theta: tuple[tuple[float, float, float], ...]
    candidate_bits: str
    voltage_std: float
    charger_current: float

    def __post_init__(self) -> None:
        n = len(self.soc)
        if not (len(self.voltage) == len(self.current) == len(self.theta) == n):
            raise ValueError("per-cell tuples must have equal length")
        if self.candidate_bits != INACTIVE_BITS and (
            len(self.candidate_bits) != 4 or any(b not in "01" for b in self.candidate_bits)
        ):
            raise ValueError(f"bad candidate bits {self.candidate_bits!r}")


@dataclass(frozen=True)
class Summary:
    completion_time: Optional[float]     # first instant the gap closes for good
    initial_voltage_spread: float
    final_voltage_spread: float
    initial_soc_spread: float
    final_soc_spread: float
    time_avg_voltage_std: float
    gap_uniformity: float                # time-averaged std of sorted-voltage gaps
    converter_coulombs: float            # charge drawn through the converter


def _sorted_gap_std(voltages: Sequence[float]) -> float:
    ordered = sorted(voltages, reverse=True)
    gaps = [a - b for a, b in zip(ordered, ordered[1:])]
    return std(gaps)


def summarize(trace: Sequence[TraceRecord], gap_threshold: float = 0.02) -> Summary:
    """Condense a trace into the run-level figures of merit."""
    if not trace:
        raise ValueError("cannot summarize an empty trace")

    gaps = [max(r.voltage) - min(r.voltage) for r in trace]
    last_open = None
    for k, g in enumerate(gaps):
        if g > gap_threshold:
            last_open = k
    if last_open is None:
        completion: Optional[float] = trace[0].time
    elif last_open == len(trace) - 1:
        completion = None
    else:
        completion = trace[last_open + 1].time

    if len(trace) == 1:
        avg_std = trace[0].voltage_std
        uniformity = _sorted_gap_std(trace[0].voltage)
        coulombs = 0.0
    else:
        total = trace[-1].time - trace[0].time
        w_std = 0.0
        w_unif = 0.0
        coulombs = 0.0
        for k in range(len(trace) - 1):
            dt = trace[k + 1].time - trace[k].time
            w_std += trace[k].voltage_std * dt
            w_unif += _sorted_gap_std(trace[k].voltage) * dt
            row = trace[k]
            for i_cell in row.current:
                drawn = i_cell - row.charger_current
                if drawn > 0.0:
                    coulombs += drawn * dt
        avg_std = w_std / total
        uniformity = w_unif / total

    return Summary(
        completion_time=completion,
        initial_voltage_spread=gaps[0],
        final_voltage_spread=gaps[-1],
        initial_soc_spread=max(trace[0].soc) - min(trace[0].soc),
        final_soc_spread=max(trace[-1].soc) - min(trace[-1].soc),
        time_avg_voltage_std=avg_std,
        gap_uniformity=uniformity,
        converter_coulombs=coulombs,
    )


class Simulation:
    """Stepwise closed-loop run; drive with :meth:`step` or :meth:`run`."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.params = [p for p, _ in cfg.cells]
        self.states = [s for _, s in cfg.cells]
        self.capacities = [p.capacity_coulombs for p in self.params]
        self.accumulators = [0.0] * len(self.params)
        self.estimators = []
        for p in self.params:
            theta0 = rls.warm_start_theta(p) if cfg.warm_start else np.zeros(3)
            self.estimators.append(
                rls.init(theta0, cfg.initial_covariance, cfg.forgetting_factor)
            )
        self.charger_state = ChargerState()
        self.noise_rng = np.random.Generator(np.random.PCG64(cfg.seed))
        self.time = 0.0
        self.cycle = 0
        self.trace: list[TraceRecord] = []
        self.events: list[tuple[float, str, str]] = []
        self._last_currents: Optional[list[float]] = None
        self._in_band_violation: set[int] = set()
        self._done = False

    # -- helpers ---------------------------------------------------------

    def _charger_current(self) -> float:
        if self.cfg.charger.mode == "idle":
            return 0.0
        rest = [terminal_voltage(p, s, 0.0) for p, s in zip(self.params, self.states)]
        r_tot = sum(p.series_resistance for p in self.params)
        was_tripped = self.charger_state.guard_tripped
        i = cc_cv_current(self.cfg.charger, sum(rest), r_tot, rest, self.charger_state)
        if self.charger_state.guard_tripped and not was_tripped:
            self.events.append(
                (self.time, "charger_guard", "cell over limit, charger latched off")
            )
        return i

    def _measure(self, i_ext: float) -> tuple[list[float], list[float], float]:
        """True and measured voltages at the given current.

        A cell outside its safety band forces the external current to zero
        for this step and is recorded as an event on entry.
        """
        v_true = [terminal_voltage(p, s, i_ext) for p, s in zip(self.params, self.states)]
        violated = [
            j for j, v in enumerate(v_true)
            if v < self.params[j].v_min or v > self.params[j].v_max
        ]
        for j in violated:
            if j not in self._in_band_violation:
                self.events.append(
                    (self.time, "safety_band", f"cell {j} at {v_true[j]:.4f} V")
                )
        self._in_band_violation = set(violated)
        if violated and i_ext != 0.0:
            i_ext = 0.0
            v_true = [terminal_voltage(p, s, 0.0) for p, s in zip(self.params, self.states)]
        if self.cfg.noise_std > 0.0:
            noise = self.noise_rng.normal(0.0, self.cfg.noise_std, size=len(v_true))
            v_meas = [v + float(e) for v, e in zip(v_true, noise)]
        else:
            v_meas = list(v_true)
        return v_true, v_meas, i_ext

    def _decide(self, v_meas: Sequence[float], i_ext: float) -> Decision:
        cfg = self.cfg
        if cfg.policy == "none":
            return Decision(False, None, (), rank_cells(v_meas))
        if cfg.policy == "greedy":
            if not should_balance(v_meas, cfg.controller):
                return Decision(False, None, (), rank_cells(v_meas))
            plan = greedy_baseline_plan(v_meas)
            return Decision(True, plan, (), rank_cells(v_meas))
        plant = None
        if cfg.controller.prediction_source == "plant":
            plant = list(zip(self.params, self.states))
        return select_plan(
            v_meas,
            self.estimators,
            self.accumulators,
            i_ext,
            cfg.converter,
            cfg.controller,
            capacities=self.capacities,
            plant=plant,
        )

    def _record(self, rec: TraceRecord, forced: bool = False) -> None:
        if forced or rec.cycle % self.cfg.record_every == 0:
            self.trace.append(rec)

    def _snapshot(self, v_meas, currents, bits, i_ext) -> TraceRecord:
        return TraceRecord(
            time=self.time,
            cycle=self.cycle,
            soc=tuple(s.soc for s in self.states),
            voltage=tuple(v_meas),
            current=tuple(currents),
            theta=tuple(
                (float(e.theta[0]), float(e.theta[1]), float(e.theta[2]))
                for e in self.estimators
            ),
            candidate_bits=bits,
            voltage_std=std(v_meas),
            charger_current=i_ext,
        )

    def _finish(self) -> None:
        # A run that never stepped leaves an empty trace on purpose.
        if self.cycle > 0:
            i_ext = self._charger_current()
            _v_true, v_meas, i_ext = self._measure(i_ext)
            rec = self._snapshot(v_meas, [i_ext] * len(self.params), INACTIVE_BITS, i_ext)
            self._record(rec, forced=True)
        self._done = True

    # -- main loop -------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self._done

    def step(self) -> Optional[TraceRecord]:
        """Advance one cycle or idle interval.

        Returns the record captured at the step's start, or None once the
        run is over (the final state row is appended to the trace then).
        """
        if self._done:
            return None
        cfg = self.cfg
        if self.time >= cfg.max_time:
            self._finish()
            return None

        i_ext = self._charger_current()
        v_true, v_meas, i_ext = self._measure(i_ext)

        reg_currents = self._last_currents or [i_ext] * len(self.params)
        for j, est in enumerate(self.estimators):
            x = rls.build_regressor(reg_currents[j], self.accumulators[j], self.capacities[j])
            self.estimators[j] = rls.update(est, x, v_meas[j])

        decision = self._decide(v_meas, i_ext)

        charger_finished = (
            cfg.charger.mode == "cc_cv" and self.charger_state.phase == "done"
        )
        if not decision.balancing_active and charger_finished:
            self._finish()
            return None

        duration = 0.0
        if decision.balancing_active:
            result = simulate_cycle(cfg.converter, v_true, decision.plan)
            duration = result.timing.t3
            if duration > 0.0:
                currents = [
                    i_ext - d / duration for d in result.charge_delta
                ]
                bits = decision.plan.c11, decision.plan.c21, decision.plan.c12, decision.plan.c22
                bits = "".join("1" if b else "0" for b in bits)
        if duration == 0.0:
            # Idle interval, or a degenerate zero-length cycle.
            duration = min(cfg.idle_dt, cfg.max_time - self.time)
            currents = [i_ext] * len(self.params)
            bits = INACTIVE_BITS

        rec = self._snapshot(v_meas, currents, bits, i_ext)
        self._record(rec)

        for j, (p, s) in enumerate(zip(self.params, self.states)):
            new_state, saturated = step_exact(p, s, currents[j], duration)
            self.states[j] = new_state
            if saturated:
                self.events.append(
                    (self.time, "saturation", f"cell {j} hit a reservoir limit")
                )
            self.accumulators[j] += currents[j] * duration
        self._last_currents = currents
        self.time += duration
        self.cycle += 1
        return rec

    def run(self) -> None:
        while self.step() is not None:
            pass

    def initial_summary(self, gap_threshold: float) -> Summary:
        """Summary of the untouched initial state, for zero-length runs."""
        i_ext = self._charger_current()
        v = [terminal_voltage(p, s, i_ext) for p, s in zip(self.params, self.states)]
        socs = [s.soc for s in self.states]
        gap = max(v) - min(v)
        return Summary(
            completion_time=0.0 if gap <= gap_threshold else None,
            initial_voltage_spread=gap,
            final_voltage_spread=gap,
            initial_soc_spread=max(socs) - min(socs),
            final_soc_spread=max(socs) - min(socs),
            time_avg_voltage_std=std(v),
            gap_uniformity=_sorted_gap_std(v),
            converter_coulombs=0.0,
        )


def run_scenario(cfg: ScenarioConfig) -> tuple[list[TraceRecord], Summary]:
    """Run a scenario to completion and summarize it."""
    sim = Simulation(cfg)
    sim.run()
    threshold = cfg.controller.gap_threshold
    if sim.trace:
        return sim.trace, summarize(sim.trace, threshold)
    return sim.trace, sim.initial_summary(threshold)
