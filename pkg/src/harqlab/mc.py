"""Monte Carlo reference estimates: average BLER, throughput, power, rounds.

Two estimators live here.  :func:`estimate_bler` averages the smooth
per-draw product of conditional BLERs (low variance, used to gate the
deterministic evaluators).  :func:`simulate_episodes` plays out actual
HARQ cycles with Bernoulli decoding outcomes, matching the semantics of
the training environment, and reports long-term throughput accounting.

Both are chunked over independent substreams spawned from the master
seed and merged in substream order, so results are bit-identical for a
given seed regardless of how the chunks are executed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (SystemConfig, round_blers_approx, round_blers_exact,
                    sample_gains, split_streams)

__all__ = ["BlerCurve", "LtatReport", "estimate_bler", "simulate_episodes"]

_CHUNK = 1 << 16
_METHODS = ("mc-exact", "mc-approx", "trap", "gl", "gl-dp", "asy")


@dataclass
class BlerCurve:
    """Cumulative average BLERs P1..PM with estimator metadata.

    ``values[m-1]`` is the average probability that a message is still
    undecoded after m rounds; the sequence is non-increasing in m.
    """

    values: np.ndarray
    method: str
    std_errors: np.ndarray | None = None
    sample_count: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.method not in _METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if np.any(self.values < -1e-12) or np.any(self.values > 1.0 + 1e-12):
            raise ValueError("BLER values must lie in [0, 1]")
        if np.any(np.diff(self.values) > 1e-12):
            raise ValueError("BLER values must be non-increasing in m")
        if self.std_errors is not None:
            self.std_errors = np.asarray(self.std_errors, dtype=float)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def final(self) -> float:
        return float(self.values[-1])


@dataclass
class LtatReport:
    """Long-term throughput accounting of one simulated run.

    ``ltat * slot_count == rate * delivered`` holds by construction:
    the throughput is defined as rate times delivered messages per slot.
    """

    ltat: float
    avg_power: float
    avg_rounds: float
    bler_final: float
    slot_count: int
    delivered: int = 0
    cycle_count: int = 0
    ltat_stderr: float | None = None
    bler_stderr: float | None = None

    def __post_init__(self):
        if self.ltat < 0:
            raise ValueError("throughput cannot be negative")
        if self.avg_rounds < 1.0 - 1e-12:
            raise ValueError("average rounds cannot be below 1")


# ---------------------------------------------------------------------------
# smooth-product BLER estimator
# ---------------------------------------------------------------------------

def estimate_bler(cfg: SystemConfig, n_samples: int, mode: str = "approx",
                  seed=0) -> BlerCurve:
    """Average BLER curve by averaging products of conditional BLERs.

    Each i.i.d. draw of the M round gains contributes the product
    eps_1 * ... * eps_m for every m; ``mode`` selects the exact
    (full-dispersion) or the sqrt(m)-dispersion conditional BLER.
    Standard errors come from the sample variance of the products.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if mode not in ("exact", "approx"):
        raise ValueError("mode must be 'exact' or 'approx'")
    blers = round_blers_exact if mode == "exact" else round_blers_approx
    snr = cfg.snr_linear
    m_max = cfg.max_rounds

    n_chunks = (n_samples + _CHUNK - 1) // _CHUNK
    streams = split_streams(seed, n_chunks)
    total = np.zeros(m_max)
    total_sq = np.zeros(m_max)
    remaining = n_samples
    for rng in streams:
        size = min(_CHUNK, remaining)
        remaining -= size
        gains = sample_gains(rng, cfg.gain_mean, (size, m_max))
        prod = np.cumprod(blers(gains, snr, cfg), axis=1)
        total += prod.sum(axis=0)
        total_sq += np.square(prod).sum(axis=0)

    mean = total / n_samples
    if n_samples > 1:
        var = np.maximum(total_sq / n_samples - mean ** 2, 0.0) \
            * n_samples / (n_samples - 1)
        stderr = np.sqrt(var / n_samples)
    else:
        stderr = np.full(m_max, np.nan)
    return BlerCurve(values=mean, std_errors=stderr,
                     method=f"mc-{mode}", sample_count=n_samples,
                     meta={"seed": seed})


# ---------------------------------------------------------------------------
# event-level episode simulation
# ---------------------------------------------------------------------------

def simulate_episodes(cfg: SystemConfig, policy, n_slots: int,
                      seed=0) -> LtatReport:
    """Play HARQ cycles round by round for ``n_slots`` slots.

    ``policy`` is a per-round power vector (or an object with a
    ``powers`` attribute); round m of every cycle transmits at power
    policy[m-1].  Round-m decoding fails with the exact conditional BLER
    given the cycle's gains so far.  A success credits ``rate`` in that
    slot; after a success or round M a new message starts.

    Message-average quantities (power, rounds, final BLER) are taken
    over completed cycles only; the rate average runs over all slots.
    """
    powers = np.asarray(getattr(policy, "powers", policy), dtype=float)
    if powers.ndim != 1 or len(powers) != cfg.max_rounds:
        raise ValueError("policy must give one power per round")
    if np.any(powers < 0):
        raise ValueError("powers must be nonnegative")
    if n_slots < cfg.max_rounds:
        raise ValueError("n_slots must be at least max_rounds")

    snr = powers / cfg.noise_power
    m_max = cfg.max_rounds
    power_prefix = np.concatenate(([0.0], np.cumsum(powers)))

    block = 1 << 12
    n_blocks_hint = n_slots // block + 2  # cycles take >= 1 slot each
    streams = iter(split_streams(seed, n_blocks_hint + 64))

    rounds_used: list[np.ndarray] = []
    succeeded: list[np.ndarray] = []
    slots_acc = 0
    while slots_acc < n_slots:
        try:
            rng = next(streams)
        except StopIteration:  # pragma: no cover - hint always suffices
            raise RuntimeError("substream budget exhausted")
        gains = sample_gains(rng, cfg.gain_mean, (block, m_max))
        eps = round_blers_exact(gains, snr, cfg)
        fail = rng.random((block, m_max)) < eps
        ok = ~fail
        any_ok = ok.any(axis=1)
        first_ok = np.where(any_ok, ok.argmax(axis=1), m_max - 1)
        rounds = np.where(any_ok, first_ok + 1, m_max)
        rounds_used.append(rounds)
        succeeded.append(any_ok)
        slots_acc += int(rounds.sum())

    rounds = np.concatenate(rounds_used)
    success = np.concatenate(succeeded)
    cum_slots = np.cumsum(rounds)
    n_complete = int(np.searchsorted(cum_slots, n_slots, side="right"))
    slots_complete = int(cum_slots[n_complete - 1]) if n_complete else 0

    rounds = rounds[:n_complete]
    success = success[:n_complete]
    delivered = int(success.sum())
    final_failures = n_complete - delivered
    power_complete = float(power_prefix[rounds].sum())

    ltat = cfg.rate * delivered / n_slots
    avg_power = power_complete / n_complete
    avg_rounds = slots_complete / n_complete
    bler_final = final_failures / n_complete

    # renewal-reward delta-method error bar for the rate average
    reward = cfg.rate * success.astype(float)
    resid = reward - ltat * rounds
    ltat_stderr = float(np.sqrt(np.var(resid, ddof=1) / n_complete)
                        / np.mean(rounds)) if n_complete > 1 else None
    bler_stderr = float(np.sqrt(bler_final * (1 - bler_final) / n_complete))

    return LtatReport(ltat=ltat, avg_power=avg_power, avg_rounds=avg_rounds,
                      bler_final=bler_final, slot_count=n_slots,
                      delivered=delivered, cycle_count=n_complete,
                      ltat_stderr=ltat_stderr, bler_stderr=bler_stderr)
