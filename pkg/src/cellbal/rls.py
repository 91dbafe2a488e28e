"""Recursive least-squares identification of a per-cell voltage model.

Each cell's terminal voltage is fitted online to a three-term linear model

    v ~ theta1 * i  +  theta2 * (q / C)  +  theta3

where ``i`` is the cell current (positive = discharge), ``q`` the cumulative
transferred charge since the run started and ``C`` the nominal capacity.
theta1 absorbs the lumped resistive drop, theta2 the local OCV slope versus
discharged fraction, theta3 the operating-point offset.  The estimator is
plain exponentially-weighted RLS; the covariance is re-symmetrized after
every update to stop round-off drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ecm import CellParams, ocv


@dataclass
class RlsEstimator:
    theta: np.ndarray        # shape (3,)
    covariance: np.ndarray   # shape (3, 3), symmetric positive definite
    forgetting_factor: float
    sample_count: int = 0


def init(theta0, p0_scale: float, forgetting_factor: float = 0.995) -> RlsEstimator:
    """Fresh estimator with covariance p0_scale * I."""
    if not p0_scale > 0.0:
        raise ValueError(f"p0_scale must be positive, got {p0_scale!r}")
    if not 0.0 < forgetting_factor <= 1.0:
        raise ValueError(
            f"forgetting_factor must lie in (0, 1], got {forgetting_factor!r}"
        )
    theta = np.array(theta0, dtype=float).reshape(3).copy()
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta0 must be finite")
    return RlsEstimator(
        theta=theta,
        covariance=p0_scale * np.eye(3),
        forgetting_factor=forgetting_factor,
        sample_count=0,
    )


def warm_start_theta(params: CellParams) -> np.ndarray:
    """Heuristic initial weights from nominal cell parameters.

    Mean OCV slope over the full SOC range for the charge term, the ohmic
    resistance (negated: discharge lowers the terminal voltage) for the
    current term, and the mid-range OCV for the offset.
    """
    slope = ocv(params, 1.0) - ocv(params, 0.0)
    return np.array([-params.series_resistance, -slope, ocv(params, 0.5)])


def build_regressor(current: float, cumulative_charge: float, capacity: float) -> np.ndarray:
    """Regressor [i, q/C, 1] for one sample.  The trailing 1 is structural."""
    if not capacity > 0.0:
        raise ValueError(f"capacity must be positive, got {capacity!r}")
    return np.array([current, cumulative_charge / capacity, 1.0])


def update(est: RlsEstimator, x, y: float) -> RlsEstimator:
    """One RLS step with measurement pair (x, y); returns a new estimator."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,) or not np.all(np.isfinite(x)):
        raise ValueError("regressor must be a finite 3-vector")
    if not np.isfinite(y):
        raise ValueError("measurement must be finite")
    lam = est.forgetting_factor
    px = est.covariance @ x
    gain = px / (lam + float(x @ px))
    theta = est.theta + gain * (y - float(x @ est.theta))
    # x' P == (P x)' because P is kept symmetric.
    cov = (est.covariance - np.outer(gain, px)) / lam
    cov = 0.5 * (cov + cov.T)
    return RlsEstimator(
        theta=theta,
        covariance=cov,
        forgetting_factor=lam,
        sample_count=est.sample_count + 1,
    )


def predict(est: RlsEstimator, x) -> float:
    """Model output theta . x for a candidate regressor."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError("regressor must be a 3-vector")
    return float(x @ est.theta)
