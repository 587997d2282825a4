"""Fading-channel model and finite-blocklength decoding mathematics.

Everything downstream (Monte Carlo, quadrature, asymptotics, the MDP
environment) builds on the primitives here: the Gaussian tail function,
the per-round conditional block error rate in its exact and high-SNR
forms, the accumulated-capacity distribution of a Rayleigh round, and
seeded exponential gain sampling.

All operations are pure given their inputs.  Random draws always go
through an explicit ``numpy.random.Generator``; use :func:`rng_stream`
and :func:`split_streams` so identical seeds give identical draws no
matter how the work is chunked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

__all__ = [
    "SystemConfig",
    "GainSample",
    "q_function",
    "conditional_bler_exact",
    "conditional_bler_approx",
    "round_blers_exact",
    "round_blers_approx",
    "capacity_pdf",
    "capacity_cdf",
    "sample_gain",
    "sample_gains",
    "rng_stream",
    "split_streams",
]

LOG2E = np.log2(np.e)


# ---------------------------------------------------------------------------
# configuration types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemConfig:
    """Link parameters shared by every evaluator.

    ``snr_db`` holds the average transmit SNR of each round in dB; with
    ``noise_power`` = 1 these coincide with the per-round transmit powers
    in dBW.  ``rate`` is the initial transmission rate in bits/symbol; if
    ``info_bits`` is given it must satisfy rate = info_bits/blocklength.
    """

    max_rounds: int
    blocklength: int
    rate: float
    snr_db: tuple[float, ...]
    gain_mean: float = 1.0
    noise_power: float = 1.0
    info_bits: float | None = None

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.blocklength < 1:
            raise ValueError("blocklength must be >= 1")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not self.gain_mean > 0:
            raise ValueError("gain_mean must be positive")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if len(self.snr_db) != self.max_rounds:
            raise ValueError("snr_db must provide one value per round")
        if self.info_bits is not None:
            if abs(self.rate - self.info_bits / self.blocklength) > 1e-9 * self.rate:
                raise ValueError("rate must equal info_bits/blocklength")

    @classmethod
    def uniform_snr(cls, snr_db: float, max_rounds: int = 5, blocklength: int = 50,
                    rate: float = 5.0, gain_mean: float = 1.0,
                    noise_power: float = 1.0) -> "SystemConfig":
        """Config with the same average SNR in every round."""
        return cls(max_rounds=max_rounds, blocklength=blocklength, rate=rate,
                   snr_db=(float(snr_db),) * max_rounds, gain_mean=gain_mean,
                   noise_power=noise_power)

    @property
    def snr_linear(self) -> np.ndarray:
        """Per-round average SNR on the linear scale (all > 0)."""
        return 10.0 ** (np.asarray(self.snr_db, dtype=float) / 10.0)

    @property
    def dispersion_scale(self) -> float:
        """sqrt(1/L) * log2(e), the unit dispersion of one round."""
        return float(np.sqrt(1.0 / self.blocklength) * LOG2E)

    def with_snr_linear(self, snr_linear) -> "SystemConfig":
        """Copy of this config with the per-round SNRs replaced."""
        snr_linear = np.asarray(snr_linear, dtype=float)
        if snr_linear.ndim != 1 or not np.all(snr_linear > 0):
            raise ValueError("per-round SNRs must be a vector of positives")
        return SystemConfig(
            max_rounds=len(snr_linear), blocklength=self.blocklength,
            rate=self.rate, snr_db=tuple(10.0 * np.log10(snr_linear)),
            gain_mean=self.gain_mean, noise_power=self.noise_power,
            info_bits=self.info_bits)

    def truncated(self, m: int) -> "SystemConfig":
        """Same link restricted to the first ``m`` rounds."""
        if not 1 <= m <= self.max_rounds:
            raise ValueError("m out of range")
        return SystemConfig(
            max_rounds=m, blocklength=self.blocklength, rate=self.rate,
            snr_db=self.snr_db[:m], gain_mean=self.gain_mean,
            noise_power=self.noise_power, info_bits=self.info_bits)


@dataclass(frozen=True)
class GainSample:
    """Positive channel power gains of the rounds seen so far."""

    gains: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
        if len(self.gains) == 0:
            raise ValueError("gains must be non-empty")
        if any(g <= 0 for g in self.gains):
            raise ValueError("gains must be positive")


# ---------------------------------------------------------------------------
# Gaussian tail
# ---------------------------------------------------------------------------

def q_function(x):
    """Gaussian tail probability Q(x) = P[N(0,1) > x].

    Computed as erfc(x/sqrt(2))/2; absolute error is at the few-ulp level,
    far below 1e-12 over |x| <= 40.  Accepts scalars or arrays; rejects
    non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("q_function requires finite input")
    out = 0.5 * erfc(arr / np.sqrt(2.0))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# conditional BLER after m rounds
# ---------------------------------------------------------------------------

def round_blers_exact(gains: np.ndarray, snr_linear: np.ndarray,
                      cfg: SystemConfig) -> np.ndarray:
    """Per-round conditional BLER with the full dispersion term, vectorized.

    ``gains`` has shape (n, m); column i holds the gain of round i+1.
    Returns an (n, m) array whose column j is the conditional BLER after
    rounds 1..j+1 for each sample.  The all-gains-zero limit (capacity and
    dispersion both zero) is defined as 1: zero capacity cannot decode.
    """
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    x = snr_linear[np.newaxis, :gains.shape[1]] * gains
    cap = np.cumsum(np.log2(1.0 + x), axis=1)
    disp = np.cumsum(1.0 - (1.0 + x) ** -2, axis=1)
    denom = LOG2E * np.sqrt(disp / cfg.blocklength)
    degenerate = denom <= 0.0
    safe = np.where(degenerate, 1.0, denom)
    out = 0.5 * erfc((cap - cfg.rate) / safe / np.sqrt(2.0))
    out[degenerate] = 1.0
    return out


def round_blers_approx(gains: np.ndarray, snr_linear: np.ndarray,
                       cfg: SystemConfig) -> np.ndarray:
    """Per-round conditional BLER with dispersion frozen at m/L, vectorized."""
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    x = snr_linear[np.newaxis, :gains.shape[1]] * gains
    cap = np.cumsum(np.log2(1.0 + x), axis=1)
    m = np.arange(1, gains.shape[1] + 1, dtype=float)
    denom = np.sqrt(m)[np.newaxis, :] * cfg.dispersion_scale
    return 0.5 * erfc((cap - cfg.rate) / denom / np.sqrt(2.0))


def conditional_bler_exact(gains, cfg: SystemConfig) -> float:
    """Conditional BLER after the rounds whose gains are given.

    ``gains`` may be a :class:`GainSample` or a sequence of positive
    gains g_1..g_m with m <= max_rounds.  Uses the full dispersion term
    (1/L) * sum(1 - (1 + snr_i g_i)^-2).
    """
    g = np.asarray(gains.gains if isinstance(gains, GainSample) else gains,
                   dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gains must be a non-empty vector")
    if g.size > cfg.max_rounds:
        raise ValueError("more gains than rounds")
    eps = round_blers_exact(g[np.newaxis, :], cfg.snr_linear, cfg)
    return float(eps[0, -1])


def conditional_bler_approx(capacity_sum: float, m: int, cfg: SystemConfig) -> float:
    """BLER kernel Q((y - R) / (sqrt(m) V)) of the accumulated capacity y."""
    if not 1 <= m <= cfg.max_rounds:
        raise ValueError("round index out of range")
    denom = np.sqrt(m) * cfg.dispersion_scale
    return q_function((capacity_sum - cfg.rate) / denom)


# ---------------------------------------------------------------------------
# accumulated-capacity distribution of one Rayleigh round
# ---------------------------------------------------------------------------

def capacity_pdf(x, m: int, cfg: SystemConfig):
    """Density of the round-m capacity log2(1 + snr_m * g); zero for x <= 0."""
    if not 1 <= m <= cfg.max_rounds:
        raise ValueError("round index out of range")
    snr = cfg.snr_linear[m - 1]
    lam = cfg.gain_mean
    arr = np.asarray(x, dtype=float)
    pow2 = np.exp2(np.minimum(arr, 1020.0))  # past here the exp factor is 0 anyway
    dens = (np.log(2.0) / (lam * snr)) * pow2 * np.exp(-(pow2 - 1.0) / (snr * lam))
    dens = np.where(arr > 0, dens, 0.0)
    return float(dens) if np.isscalar(x) or arr.ndim == 0 else dens


def capacity_cdf(x, m: int, cfg: SystemConfig):
    """CDF of the round-m capacity: 1 - exp(-(2^x - 1)/(snr_m * gain_mean))."""
    if not 1 <= m <= cfg.max_rounds:
        raise ValueError("round index out of range")
    snr = cfg.snr_linear[m - 1]
    lam = cfg.gain_mean
    arr = np.asarray(x, dtype=float)
    clipped = np.clip(arr, 0.0, 1020.0)
    val = -np.expm1(-(np.exp2(clipped) - 1.0) / (snr * lam))
    val = np.where(arr > 1020.0, 1.0, np.where(arr > 0, val, 0.0))
    return float(val) if np.isscalar(x) or arr.ndim == 0 else val


# ---------------------------------------------------------------------------
# seeded randomness
# ---------------------------------------------------------------------------

def rng_stream(seed) -> np.random.Generator:
    """Deterministic generator for the given seed (or SeedSequence)."""
    return np.random.Generator(np.random.PCG64(seed))


def split_streams(seed, n: int) -> list[np.random.Generator]:
    """n independent substreams derived from one master seed."""
    return [np.random.Generator(np.random.PCG64(ss))
            for ss in np.random.SeedSequence(seed).spawn(n)]


def sample_gain(rng: np.random.Generator, gain_mean: float) -> float:
    """One exponential gain with the given mean, by inverse CDF.

    Consumes exactly one uniform draw: g = -mean * log(1 - u).
    """
    if not gain_mean > 0:
        raise ValueError("gain_mean must be positive")
    return float(-gain_mean * np.log1p(-rng.random()))


def sample_gains(rng: np.random.Generator, gain_mean: float, size) -> np.ndarray:
    """Array of exponential gains via inverse CDF on uniform draws."""
    if not gain_mean > 0:
        raise ValueError("gain_mean must be positive")
    return -gain_mean * np.log1p(-rng.random(size))
