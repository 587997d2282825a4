"""Throughput and power bookkeeping shared by the optimizer and the environment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PowerPolicy", "OptConstraints", "ltat_from_blers", "avg_power",
           "avg_rounds"]


@dataclass(frozen=True)
class PowerPolicy:
    """Per-round transmit powers P_1..P_M, all strictly positive."""

    powers: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "powers",
                           tuple(float(p) for p in self.powers))
        if len(self.powers) == 0:
            raise ValueError("policy must cover at least one round")
        if any(p <= 0 for p in self.powers):
            raise ValueError("powers must be positive")

    def __len__(self) -> int:
        return len(self.powers)

    @property
    def as_array(self) -> np.ndarray:
        return np.asarray(self.powers, dtype=float)


@dataclass(frozen=True)
class OptConstraints:
    """Budget for the power allocation: average power and final BLER caps."""

    max_avg_power: float
    max_bler: float

    def __post_init__(self):
        if not self.max_avg_power > 0:
            raise ValueError("max_avg_power must be positive")
        if not 0.0 < self.max_bler < 1.0:
            raise ValueError("max_bler must lie in (0, 1)")


def _values(blers) -> np.ndarray:
    return np.asarray(getattr(blers, "values", blers), dtype=float)


def ltat_from_blers(rate: float, blers) -> float:
    """Long-term average throughput R (1 - P_M) / (1 + sum_{m<M} P_m)."""
    p = _values(blers)
    return float(rate * (1.0 - p[-1]) / (1.0 + p[:-1].sum()))


def avg_power(policy, blers) -> float:
    """Average power per message: sum_m P_m * P_{m-1}, with P_0 = 1."""
    powers = np.asarray(getattr(policy, "powers", policy), dtype=float)
    p = _values(blers)
    if len(powers) != len(p):
        raise ValueError("policy and BLER curve must have the same length")
    weights = np.concatenate(([1.0], p[:-1]))
    return float(np.dot(powers, weights))


def avg_rounds(blers) -> float:
    """Average number of rounds consumed per message: 1 + sum_{m<M} P_m."""
    p = _values(blers)
    return float(1.0 + p[:-1].sum())
