"""Equivalent-circuit Li-ion cell model with exact zero-order-hold stepping.

One cell is a series chain of an SOC-dependent open-circuit voltage source,
an ohmic resistance and two RC relaxation branches, plus an optional
self-discharge path across the charge reservoir.  Because the branch ODEs are
linear and first order, a constant-current step of any length has a closed
form, so the simulator never accumulates integration error no matter how
coarse the step.

Sign convention used through the whole package: positive current discharges
the cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

# Grid used for the construction-time monotonicity check of the OCV curve.
OCV_GRID_POINTS = 1000


def ocv_curve(coeffs: Sequence[float], exponent: float, soc: float) -> float:
    """Raw open-circuit voltage curve a0 + a1*s + a2*s^2 + a3*s^3 + a4*e^(-b*s).

    Pure evaluation, no domain or shape checks; CellParams enforces the
    monotone-rising shape at construction.
    """
    a0, a1, a2, a3, a4 = coeffs
    return a0 + soc * (a1 + soc * (a2 + soc * a3)) + a4 * math.exp(-exponent * soc)


@dataclass(frozen=True)
class CellParams:
    """Electrical parameters of one cell.

    Units: coulombs, ohms, farads, volts.  ``ocv_coeffs`` are the five
    coefficients of :func:`ocv_curve`; ``ocv_exponent`` is its decay rate.
    ``self_discharge_resistance`` is the optional leak across the reservoir
    (None disables self-discharge entirely).
    """

    capacity_coulombs: float
    series_resistance: float
    rc1_resistance: float
    rc1_capacitance: float
    rc2_resistance: float
    rc2_capacitance: float
    ocv_coeffs: tuple[float, float, float, float, float]
    ocv_exponent: float
    v_min: float
    v_max: float
    self_discharge_resistance: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ocv_coeffs", tuple(float(c) for c in self.ocv_coeffs))
        if len(self.ocv_coeffs) != 5:
            raise ValueError("ocv_coeffs must have exactly 5 entries")
        positives = [
            ("capacity_coulombs", self.capacity_coulombs),
            ("series_resistance", self.series_resistance),
            ("rc1_resistance", self.rc1_resistance),
            ("rc1_capacitance", self.rc1_capacitance),
            ("rc2_resistance", self.rc2_resistance),
            ("rc2_capacitance", self.rc2_capacitance),
        ]
        for name, value in positives:
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if self.self_discharge_resistance is not None:
            if not (self.self_discharge_resistance > 0.0):
                raise ValueError("self_discharge_resistance must be positive or None")
        if not (math.isfinite(self.ocv_exponent) and self.ocv_exponent > 0.0):
            raise ValueError("ocv_exponent must be positive and finite")
        if not self.v_min < self.v_max:
            raise ValueError(f"require v_min < v_max, got {self.v_min} >= {self.v_max}")
        # The whole controller stack assumes a monotone SOC -> OCV map
        # (rankings, the gap trigger, the summary metrics), so a curve that
        # dips anywhere is rejected up front rather than failing silently.
        prev = ocv_curve(self.ocv_coeffs, self.ocv_exponent, 0.0)
        for k in range(1, OCV_GRID_POINTS):
            s = k / (OCV_GRID_POINTS - 1)
            cur = ocv_curve(self.ocv_coeffs, self.ocv_exponent, s)
            if not cur > prev:
                raise ValueError(
                    f"OCV curve must be strictly increasing on [0, 1]; "
                    f"violated near soc={s:.4f}"
                )
            prev = cur


@dataclass(frozen=True)
class CellState:
    """Dynamic state of one cell: SOC fraction and the two RC branch voltages."""

    soc: float
    v1: float = 0.0
    v2: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"soc must lie in [0, 1], got {self.soc!r}")
        if not (math.isfinite(self.v1) and math.isfinite(self.v2)):
            raise ValueError("RC branch voltages must be finite")


@dataclass(frozen=True)
class CellMeasurement:
    """One terminal observation: voltage at the terminals and the current
    flowing at that instant (positive = discharge)."""

    terminal_voltage: float
    current: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.terminal_voltage) and math.isfinite(self.current)):
            raise ValueError("measurement fields must be finite")


def ocv(params: CellParams, soc: float) -> float:
    """Open-circuit voltage at the given SOC fraction."""
    if not 0.0 <= soc <= 1.0:
        raise ValueError(f"soc must lie in [0, 1], got {soc!r}")
    return ocv_curve(params.ocv_coeffs, params.ocv_exponent, soc)


def terminal_voltage(params: CellParams, state: CellState, current: float) -> float:
    """Terminal voltage under the given instantaneous current."""
    return ocv(params, state.soc) - state.v1 - state.v2 - params.series_resistance * current


def step_exact(
    params: CellParams, state: CellState, current: float, dt: float
) -> tuple[CellState, bool]:
    """Advance the state by ``dt`` seconds of constant current.

    Uses the exact zero-order-hold discretization of each branch, so
    composing two half steps equals one full step to rounding error.
    Returns the new state and a flag telling whether the SOC had to be
    clamped at either reservoir limit.
    """
    if dt <= 0.0 or not math.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    if not math.isfinite(current):
        raise ValueError("current must be finite")

    # expm1 keeps the (1 - e^-x) factors fully accurate for small x; the
    # self-discharge time constant can reach 1e8 s, where plain 1-exp loses
    # six digits and breaks the semigroup property.
    x1 = dt / (params.rc1_resistance * params.rc1_capacitance)
    x2 = dt / (params.rc2_resistance * params.rc2_capacitance)
    v1 = state.v1 * math.exp(-x1) - params.rc1_resistance * math.expm1(-x1) * current
    v2 = state.v2 * math.exp(-x2) - params.rc2_resistance * math.expm1(-x2) * current

    if params.self_discharge_resistance is None:
        soc = state.soc - current * dt / params.capacity_coulombs
    else:
        # d(soc)/dt = -soc/tau - I/C with tau = R_sd * C; exact solution below.
        r_sd = params.self_discharge_resistance
        xs = dt / (r_sd * params.capacity_coulombs)
        soc = state.soc * math.exp(-xs) + current * r_sd * math.expm1(-xs)

    saturated = soc < 0.0 or soc > 1.0
    if saturated:
        soc = min(1.0, max(0.0, soc))
    return CellState(soc=soc, v1=v1, v2=v2), saturated


def representative_cell_params(**overrides) -> CellParams:
    """A representative 0.8 Ah cell used as the package-wide default.

    The numbers are plausible for a small cylindrical cell but are not a fit
    to any specific commercial part.
    """
    fields = dict(
        capacity_coulombs=2880.0,
        series_resistance=0.07,
        rc1_resistance=0.04,
        rc1_capacitance=1000.0,
        rc2_resistance=0.03,
        rc2_capacitance=4000.0,
        ocv_coeffs=(3.2, 0.8, -0.2, 0.1, -0.15),
        ocv_exponent=20.0,
        v_min=3.0,
        v_max=4.2,
        self_discharge_resistance=None,
    )
    fields.update(overrides)
    return CellParams(**fields)
