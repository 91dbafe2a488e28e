"""Shared builders for the stock four-cell scenario used across the suite."""

from __future__ import annotations

from cellbal import (
    CellState,
    ConverterParams,
    ScenarioConfig,
    representative_cell_params,
)

STOCK_SOCS = (0.60, 0.50, 0.45, 0.40)


def make_stock_scenario(policy: str = "ampc", **overrides) -> ScenarioConfig:
    """The default four-cell scenario: identical cells on the stock SOC ladder,
    10 mH converter, CC-CV charger, everything else at package defaults."""
    cells = [(representative_cell_params(), CellState(soc=s)) for s in STOCK_SOCS]
    kwargs = dict(
        cells=cells,
        converter=ConverterParams(magnetizing_inductance=0.01),
        policy=policy,
    )
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)
