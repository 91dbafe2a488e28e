"""Closed-form model of one balancing cycle of a multi-winding flyback stage.

Every cell in the series stack owns one primary winding plus a low-side
switch; a single secondary winding spans the whole stack behind a diode.  The
windings are treated as independent two-winding flybacks that happen to share
the secondary rail, and cell voltages are frozen at their pre-cycle values
for the duration of one cycle.  Under those two assumptions every winding
current is piecewise linear and every charge transfer has a closed form, so
the cycle is simulated exactly, with no step size anywhere.

A cycle addressing the three highest-ranked cells runs in three stages:

  stage I   [t0, t1): the target's switch is closed, plus optionally the
            second/third cells' switches; closed windings ramp up at v/L.
  stage II  [t1, t2): a second window of the same length with its own switch
            selection; windings opened at t1 freewheel into the stack
            through the secondary (current falls linearly, clamped at zero).
  stage III [t2, t3]: all switches open; every remaining winding current
            freewheels to exactly zero, which defines t3.

The two on-time windows have equal length t_on/2, with t_on sized so the
target winding peaks at the configured current limit.

While a winding conducts, its coulombs are drawn from its own cell.  While it
freewheels, its current (scaled by the turns ratio) flows through the
secondary and charges every cell of the stack equally.  Cells whose switches
never close only ever receive that secondary charge.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class ConverterParams:
    """Shared electrical parameters of the balancing stage.

    ``magnetizing_inductance`` is per primary winding (henries); windings are
    identical.  ``peak_current`` is the target-winding peak the on-time is
    sized for (amperes); zero is allowed and yields a degenerate no-op cycle.
    """

    magnetizing_inductance: float
    turns_primary: int = 1
    turns_secondary: int = 4
    peak_current: float = 5.0
    n_cells: int = 4

    def __post_init__(self) -> None:
        if not (self.magnetizing_inductance > 0.0 and math.isfinite(self.magnetizing_inductance)):
            raise ValueError("magnetizing_inductance must be positive and finite")
        if self.turns_primary < 1 or self.turns_secondary < 1:
            raise ValueError("turns counts must be >= 1")
        if self.peak_current < 0.0 or not math.isfinite(self.peak_current):
            raise ValueError("peak_current must be >= 0 and finite")
        if self.n_cells < 2:
            raise ValueError("n_cells must be >= 2")


@dataclass(frozen=True)
class SwitchPlan:
    """One cycle's switch schedule.

    ``target_cell`` conducts through both on-time windows.  ``second_cell``
    and ``third_cell`` conduct in window I/II according to the four flags:
    c11/c21 gate the second/third cell in stage I, c12/c22 in stage II.
    """

    target_cell: int
    second_cell: int
    third_cell: int
    c11: bool = False
    c21: bool = False
    c12: bool = False
    c22: bool = False

    def __post_init__(self) -> None:
        cells = (self.target_cell, self.second_cell, self.third_cell)
        if len(set(cells)) != 3:
            raise ValueError(f"plan cells must be distinct, got {cells}")
        if min(cells) < 0:
            raise ValueError(f"plan cells must be non-negative, got {cells}")


@dataclass(frozen=True)
class CycleTiming:
    """Stage boundaries of one cycle.  t1 - t0 == t2 - t1 == t_on/2."""

    t_on: float
    t0: float
    t1: float
    t2: float
    t3: float

    def __post_init__(self) -> None:
        if not (self.t0 <= self.t1 <= self.t2 <= self.t3):
            raise ValueError("cycle boundaries must be ordered t0 <= t1 <= t2 <= t3")
        if not math.isclose(self.t1 - self.t0, self.t2 - self.t1, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("the two on-time windows must have equal length")


@dataclass(frozen=True)
class PiecewiseLinear:
    """A piecewise-linear waveform as breakpoint times and values.

    Times are non-decreasing; a repeated time encodes a jump (the first
    occurrence is the left limit, the last the right limit).
    """

    times: tuple[float, ...]
    amps: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.amps) or not self.times:
            raise ValueError("times and amps must be equal-length and non-empty")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("breakpoint times must be non-decreasing")

    def value(self, t: float, side: str = "right") -> float:
        """Waveform value at time t; ``side`` picks the limit at a jump."""
        times, amps = self.times, self.amps
        if t <= times[0]:
            return amps[0]
        if t >= times[-1]:
            return amps[-1]
        if side == "right":
            idx = bisect_right(times, t) - 1
        elif side == "left":
            idx = bisect_left(times, t)
            if times[idx] == t:
                return amps[idx]
            idx -= 1
        else:
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        t0, t1 = times[idx], times[idx + 1]
        if t1 == t0:
            return amps[idx + 1]
        frac = (t - t0) / (t1 - t0)
        return amps[idx] + (amps[idx + 1] - amps[idx]) * frac

    def charge(self) -> float:
        """Integral over the full span (trapezoid rule, exact for PWL)."""
        total = 0.0
        for k in range(len(self.times) - 1):
            total += 0.5 * (self.amps[k] + self.amps[k + 1]) * (self.times[k + 1] - self.times[k])
        return total


@dataclass(frozen=True)
class CycleResult:
    """Everything one simulated cycle produced.

    ``charge_delta`` is the net coulombs added to each cell (negative while a
    cell is being drained), ``conducted_charge`` the coulombs each cell
    sourced through its own switch, ``secondary_charge`` the coulombs the
    secondary delivered to every cell of the stack.  Winding currents are
    primary-referred magnetizing currents.
    """

    charge_delta: tuple[float, ...]
    conducted_charge: tuple[float, ...]
    secondary_charge: float
    winding_currents: tuple[PiecewiseLinear, ...]
    secondary: PiecewiseLinear
    timing: CycleTiming


def compute_t_on(conv: ConverterParams, v_cell: float) -> float:
    """On-time that ramps the target winding to the peak current: L*I/v."""
    if not v_cell > 0.0:
        raise ValueError(f"cell voltage must be positive, got {v_cell!r}")
    return conv.magnetizing_inductance * conv.peak_current / v_cell


def on_ramp_current(v_cell: float, inductance: float, elapsed: float) -> float:
    """Current of a conducting winding ``elapsed`` seconds into its ramp."""
    if v_cell < 0.0:
        raise ValueError("cell voltage must be >= 0")
    if not inductance > 0.0:
        raise ValueError("inductance must be positive")
    if elapsed < 0.0:
        raise ValueError("elapsed must be >= 0")
    return v_cell * elapsed / inductance


def decay_current(i0: float, v_stack: float, conv: ConverterParams, elapsed: float) -> float:
    """Freewheeling winding current ``elapsed`` seconds after switch-off.

    The stack voltage reflects onto the winding through the turns ratio, so
    the current falls linearly and clamps at zero after i0*L*N2/(N1*v_stack).
    """
    if i0 < 0.0:
        raise ValueError("i0 must be >= 0")
    if not v_stack > 0.0:
        raise ValueError(f"stack voltage must be positive, got {v_stack!r}")
    if elapsed < 0.0:
        raise ValueError("elapsed must be >= 0")
    ratio = conv.turns_primary / conv.turns_secondary
    return max(0.0, i0 - ratio * v_stack * elapsed / conv.magnetizing_inductance)


def secondary_current(off_winding_currents: Sequence[float], conv: ConverterParams) -> float:
    """Secondary-side current fed by the given freewheeling winding currents."""
    total = 0.0
    for i in off_winding_currents:
        if i < 0.0:
            raise ValueError("winding currents must be >= 0")
        total += i
    return total * conv.turns_primary / conv.turns_secondary


def balancing_currents(
    winding_currents: Sequence[float], conducting: Sequence[bool], i_secondary: float
) -> list[float]:
    """Net instantaneous current into each cell.

    Every cell sees the secondary (stack) current; a cell whose switch is
    closed additionally sources its winding current.  Windings with current
    but an open switch are freewheeling and already accounted inside
    ``i_secondary``, so they do not drain their own cell.
    """
    if len(winding_currents) != len(conducting):
        raise ValueError("winding_currents and conducting must have equal length")
    return [
        i_secondary - (iw if on else 0.0)
        for iw, on in zip(winding_currents, conducting)
    ]


def _activity_pieces(v_over_l: float, on1: bool, on2: bool, half: float, fw_slope: float):
    """Linear pieces (ta, tb, ia, ib, conducting) for one switched winding."""
    t_on = 2.0 * half
    pieces = []
    if on1 and on2:
        peak = v_over_l * t_on
        pieces.append((0.0, half, 0.0, v_over_l * half, True))
        pieces.append((half, t_on, v_over_l * half, peak, True))
        pieces.append((t_on, t_on + peak / fw_slope, peak, 0.0, False))
    elif on1:
        i1 = v_over_l * half
        pieces.append((0.0, half, 0.0, i1, True))
        # Same reflected stack voltage before and after t2, so one linear
        # decay piece regardless of whether it outlives stage II.
        pieces.append((half, half + i1 / fw_slope, i1, 0.0, False))
    elif on2:
        i1 = v_over_l * half
        pieces.append((half, t_on, 0.0, i1, True))
        pieces.append((t_on, t_on + i1 / fw_slope, i1, 0.0, False))
    return pieces


def _series_from_pieces(pieces, t3: float) -> PiecewiseLinear:
    """Chain contiguous pieces into a waveform padded with zeros to [0, t3]."""
    ts = [0.0]
    amps = [0.0]
    for ta, tb, ia, ib, _on in pieces:
        if ta > ts[-1]:
            ts.append(ta)
            amps.append(0.0)
        ts.append(tb)
        amps.append(ib)
    if ts[-1] < t3:
        ts.append(t3)
        amps.append(0.0)
    return PiecewiseLinear(tuple(ts), tuple(amps))


def simulate_cycle(
    conv: ConverterParams, cell_voltages: Sequence[float], plan: SwitchPlan
) -> CycleResult:
    """Run one full balancing cycle and account every coulomb.

    ``cell_voltages`` are the frozen per-cell terminal voltages for this
    cycle; the stack voltage seen by freewheeling windings is their sum.
    """
    n = conv.n_cells
    if len(cell_voltages) != n:
        raise ValueError(f"expected {n} cell voltages, got {len(cell_voltages)}")
    for v in cell_voltages:
        if not v > 0.0:
            raise ValueError(f"cell voltages must all be positive, got {v!r}")
    for idx in (plan.target_cell, plan.second_cell, plan.third_cell):
        if idx >= n:
            raise ValueError(f"plan cell {idx} out of range for {n} cells")

    l_m = conv.magnetizing_inductance
    ratio = conv.turns_primary / conv.turns_secondary
    v_stack = sum(cell_voltages)
    t_on = compute_t_on(conv, cell_voltages[plan.target_cell])

    if t_on == 0.0:
        zero = PiecewiseLinear((0.0,), (0.0,))
        return CycleResult(
            charge_delta=(0.0,) * n,
            conducted_charge=(0.0,) * n,
            secondary_charge=0.0,
            winding_currents=(zero,) * n,
            secondary=zero,
            timing=CycleTiming(0.0, 0.0, 0.0, 0.0, 0.0),
        )

    half = 0.5 * t_on
    fw_slope = ratio * v_stack / l_m  # A/s shed by any freewheeling winding

    switched = (
        (plan.target_cell, True, True),
        (plan.second_cell, plan.c11, plan.c12),
        (plan.third_cell, plan.c21, plan.c22),
    )
    active = [
        (cell, _activity_pieces(cell_voltages[cell] / l_m, on1, on2, half, fw_slope))
        for cell, on1, on2 in switched
    ]

    t3 = t_on
    for _cell, pieces in active:
        for piece in pieces:
            t3 = max(t3, piece[1])

    conducted = [0.0] * n
    freewheel_charge = 0.0  # primary-referred coulombs across all windings
    for cell, pieces in active:
        for ta, tb, ia, ib, on in pieces:
            area = 0.5 * (ia + ib) * (tb - ta)
            if on:
                conducted[cell] += area
            else:
                freewheel_charge += area
    secondary_charge = ratio * freewheel_charge

    charge_delta = tuple(secondary_charge - conducted[j] for j in range(n))

    # Waveforms: per-winding magnetizing currents, then the secondary as the
    # turns-scaled sum of freewheeling currents on the merged breakpoints.
    flat = PiecewiseLinear((0.0, t3), (0.0, 0.0))
    windings = [flat] * n
    for cell, pieces in active:
        windings[cell] = _series_from_pieces(pieces, t3)

    breaks = {0.0, half, t_on, t3}
    for _cell, pieces in active:
        for ta, tb, _ia, _ib, _on in pieces:
            breaks.add(ta)
            breaks.add(tb)
    breaks = sorted(b for b in breaks if b <= t3)

    def fw_sum(t: float, lo: float, hi: float) -> float:
        # Sum of freewheeling currents at t, restricted to pieces covering
        # the open interval (lo, hi); exact float matches on the shared
        # breakpoints make the membership test unambiguous.
        total = 0.0
        for _cell, pieces in active:
            for ta, tb, ia, ib, on in pieces:
                if on or ta > lo or tb < hi:
                    continue
                total += ia + (ib - ia) * (t - ta) / (tb - ta)
        return total

    sec_ts = [0.0]
    sec_amps = [ratio * fw_sum(0.0, 0.0, breaks[1] if len(breaks) > 1 else 0.0)]
    for ga, gb in zip(breaks, breaks[1:]):
        if gb == ga:
            continue
        va = ratio * fw_sum(ga, ga, gb)
        vb = ratio * fw_sum(gb, ga, gb)
        if va != sec_amps[-1]:
            sec_ts.append(ga)   # jump: switch-off instant
            sec_amps.append(va)
        sec_ts.append(gb)
        sec_amps.append(vb)
    secondary = PiecewiseLinear(tuple(sec_ts), tuple(sec_amps))

    return CycleResult(
        charge_delta=charge_delta,
        conducted_charge=tuple(conducted),
        secondary_charge=secondary_charge,
        winding_currents=tuple(windings),
        secondary=secondary,
        timing=CycleTiming(t_on, 0.0, half, t_on, t3),
    )


def cycle_charge_deltas(
    conv: ConverterParams, cell_voltages: Sequence[float], plan: SwitchPlan
) -> tuple[tuple[float, ...], float]:
    """Per-cell charge deltas and cycle duration, skipping waveform assembly.

    Same closed forms as :func:`simulate_cycle`; used on hot prediction paths
    where only the coulomb bookkeeping matters.
    """
    n = conv.n_cells
    if len(cell_voltages) != n:
        raise ValueError(f"expected {n} cell voltages, got {len(cell_voltages)}")
    for idx in (plan.target_cell, plan.second_cell, plan.third_cell):
        if idx >= n:
            raise ValueError(f"plan cell {idx} out of range for {n} cells")
    t_on = compute_t_on(conv, cell_voltages[plan.target_cell])
    if t_on == 0.0:
        return (0.0,) * n, 0.0
    v_stack = 0.0
    for v in cell_voltages:
        if not v > 0.0:
            raise ValueError(f"cell voltages must all be positive, got {v!r}")
        v_stack += v

    l_m = conv.magnetizing_inductance
    ratio = conv.turns_primary / conv.turns_secondary
    fw_slope = ratio * v_stack / l_m
    half = 0.5 * t_on

    conducted = [0.0] * n
    freewheel_charge = 0.0
    t3 = t_on
    for cell, on1, on2 in (
        (plan.target_cell, True, True),
        (plan.second_cell, plan.c11, plan.c12),
        (plan.third_cell, plan.c21, plan.c22),
    ):
        v_over_l = cell_voltages[cell] / l_m
        if on1 and on2:
            peak = v_over_l * t_on
            conducted[cell] += 0.5 * peak * t_on
            freewheel_charge += 0.5 * peak * peak / fw_slope
            t3 = max(t3, t_on + peak / fw_slope)
        elif on1:
            i1 = v_over_l * half
            conducted[cell] += 0.5 * i1 * half
            freewheel_charge += 0.5 * i1 * i1 / fw_slope
            t3 = max(t3, half + i1 / fw_slope)
        elif on2:
            i1 = v_over_l * half
            conducted[cell] += 0.5 * i1 * half
            freewheel_charge += 0.5 * i1 * i1 / fw_slope
            t3 = max(t3, t_on + i1 / fw_slope)
    secondary_charge = ratio * freewheel_charge
    return tuple(secondary_charge - conducted[j] for j in range(n)), t3
