"""High-SNR closed form of the average BLER.

At high SNR the capacity density of round m tends to a pure exponential
in the capacity, and the decoding kernel can be replaced by its tangent
line.  The nested BLER integral then reduces to a polynomial-plus-
exponential recursion whose layer-m representation is

    psi_m(S) = sum_{i=0}^{M-m} alpha_{m,i} S^i + (-ln 2)^{m-M} 2^S,

built downward from psi_M(S) = 2^S by

    psi_m(x) = (1/(2 V_{m+1})) * integral_{R-V}^{R+V} Psi_{m+1}(t) dt
               - Psi_{m+1}(x),        Psi(x) = integral_0^x psi,

with V_m = sqrt(m*pi/(2L)) * log2(e).  The average BLER is then the
monomial  G_M * prod_m snr_m^{-1}  with
G_M = mean_gain^{-M} * ((ln 2)^M alpha_{0,0} + (-1)^M).

:func:`asymptotic_coeffs` carries the recursion symbolically on the
coefficients (mpmath, 60 digits, floated at the end).
:func:`coeff_oracle` replays the same recursion purely numerically
(spline antiderivatives on a fine grid) and is the ground truth the
symbolic table is validated against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from mpmath import mp
from scipy.interpolate import CubicSpline

from .mc import BlerCurve
from .model import SystemConfig

__all__ = [
    "AsymptoticCoeffs",
    "CoeffOracle",
    "v_constants",
    "linearized_q",
    "asymptotic_coeffs",
    "coeff_oracle",
    "bler_asymptotic",
]

_ORACLE_MAX_ROUNDS = 5
_ORACLE_STEP = 2e-4


def v_constants(m_max: int, blocklength: int) -> np.ndarray:
    """Linearization half-widths V_m = sqrt(m*pi/(2L)) * log2(e), m = 1..M."""
    m = np.arange(1, m_max + 1, dtype=float)
    return np.sqrt(m * np.pi / (2.0 * blocklength)) * np.log2(np.e)


def linearized_q(t, m: int, cfg: SystemConfig):
    """Tangent-line decoding kernel: 1 below R-V_m, 0 above R+V_m, affine between."""
    if not 1 <= m <= cfg.max_rounds:
        raise ValueError("round index out of range")
    v = float(v_constants(m, cfg.blocklength)[-1])
    arr = np.asarray(t, dtype=float)
    val = np.clip(0.5 - (arr - cfg.rate) / (2.0 * v), 0.0, 1.0)
    return float(val) if np.isscalar(t) or arr.ndim == 0 else val


# ---------------------------------------------------------------------------
# symbolic coefficient recursion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticCoeffs:
    """Coefficient table of the polynomial-plus-exponential layers.

    ``alpha[m][i]`` holds the S^i coefficient of layer m for the full
    horizon (0 <= m <= M, 0 <= i <= M-m); ``v`` the half-widths V_1..V_M;
    ``g`` the monomial constants G_1..G_M, where G_m belongs to the
    truncated link with at most m rounds.
    """

    alpha: tuple[tuple[float, ...], ...]
    v: np.ndarray
    g: np.ndarray
    rate: float
    blocklength: int
    gain_mean: float

    def __post_init__(self):
        if abs(self.alpha[-1][0]) != 0.0:
            raise ValueError("deepest layer must have zero constant term")
        if np.any(self.g <= 0):
            raise ValueError("monomial constants must be positive")

    @property
    def max_rounds(self) -> int:
        return len(self.alpha) - 1

    def psi(self, m: int, s) -> float:
        """Layer value psi_m(s) reconstructed from the table."""
        m_max = self.max_rounds
        poly = np.polynomial.polynomial.polyval(s, self.alpha[m])
        return float(poly + (-np.log(2.0)) ** (m - m_max) * 2.0 ** s)


def _alpha_rows_mp(horizon: int, rate, blocklength):
    """mpmath coefficient rows alpha[m][i] for one horizon."""
    ln2 = mp.log(2)
    rows = [None] * (horizon + 1)
    rows[horizon] = [mp.mpf(0)]
    cur = rows[horizon]
    for m in range(horizon - 1, -1, -1):
        v = mp.sqrt((m + 1) * mp.pi / (2 * blocklength)) / ln2
        hi, lo = rate + v, rate - v
        e_next = (-ln2) ** (m + 1 - horizon)
        # window-average of the antiderivative of layer m+1
        acc = e_next * ((mp.mpf(2) ** hi - mp.mpf(2) ** lo) / ln2 ** 2
                        - 2 * v / ln2)
        for i, a in enumerate(cur):
            acc += a * (hi ** (i + 2) - lo ** (i + 2)) / ((i + 1) * (i + 2))
        c = acc / (2 * v)
        new = [c - (-ln2) ** (m - horizon)]
        new.extend(-cur[i - 1] / i for i in range(1, horizon - m + 1))
        rows[m] = new
        cur = new
    return rows


def _g_from_alpha00(alpha00, horizon: int, gain_mean):
    ln2 = mp.log(2)
    return gain_mean ** (-horizon) * (ln2 ** horizon * alpha00
                                      + (-1) ** horizon)


def asymptotic_coeffs(cfg: SystemConfig) -> AsymptoticCoeffs:
    """Full coefficient table plus the monomial constants G_1..G_M.

    The recursion is applied on exact high-precision coefficients and
    floated only at the end, so the table is exact to double precision.
    """
    with mp.workdps(60):
        rate = mp.mpf(cfg.rate)
        lam = mp.mpf(cfg.gain_mean)
        big_l = mp.mpf(cfg.blocklength)
        g = []
        alpha_full = None
        for horizon in range(1, cfg.max_rounds + 1):
            rows = _alpha_rows_mp(horizon, rate, big_l)
            g.append(float(_g_from_alpha00(rows[0][0], horizon, lam)))
            if horizon == cfg.max_rounds:
                alpha_full = tuple(tuple(float(a) for a in row)
                                   for row in rows)
    return AsymptoticCoeffs(alpha=alpha_full, v=v_constants(cfg.max_rounds,
                                                            cfg.blocklength),
                            g=np.asarray(g), rate=cfg.rate,
                            blocklength=cfg.blocklength,
                            gain_mean=cfg.gain_mean)


# ---------------------------------------------------------------------------
# numerical oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoeffOracle:
    """Numerically integrated layer values, for validating the table.

    For each horizon the recursion (window-average of the running
    antiderivative, minus the antiderivative) is evaluated on a fine
    grid with spline antiderivatives; nothing is carried symbolically.
    """

    psi0_by_horizon: np.ndarray
    g: np.ndarray
    _layers: tuple  # (constant, antiderivative ppoly) per layer of full horizon

    def psi0(self, horizon: int) -> float:
        """psi_0(0) of the given horizon."""
        return float(self.psi0_by_horizon[horizon - 1])

    @property
    def psi0_zero(self) -> float:
        return float(self.psi0_by_horizon[-1])

    def psi(self, m: int, s) -> float:
        """Layer value psi_m(s) for the full horizon."""
        m_max = len(self._layers)
        if m == m_max:
            return float(2.0 ** s)
        c, antider = self._layers[m]
        return float(c - antider(s))


def coeff_oracle(cfg: SystemConfig) -> CoeffOracle:
    """Ground-truth layer values by nested numerical integration.

    The base layer 2^S is tabulated on a fine grid over
    [0, R + M*V_M + 20]; each outer layer applies the recursion with
    exact antiderivatives of the cubic-spline interpolant.  Horizons
    above 5 are refused (use the symbolic table there).
    """
    if cfg.max_rounds > _ORACLE_MAX_ROUNDS:
        raise ValueError("oracle supports at most 5 rounds")
    v = v_constants(cfg.max_rounds, cfg.blocklength)
    top = cfg.rate + cfg.max_rounds * v[-1] + 20.0
    n = int(np.ceil(top / _ORACLE_STEP)) + 1
    x = np.linspace(0.0, top, n)

    psi0 = np.empty(cfg.max_rounds)
    layers_full: list = []
    for horizon in range(1, cfg.max_rounds + 1):
        vals = np.exp2(x)
        layers: list = []
        for m in range(horizon - 1, -1, -1):
            antider = CubicSpline(x, vals).antiderivative()
            window = antider.antiderivative()
            vm1 = v[m]  # half-width of layer m+1 kernel
            c = float(window(cfg.rate + vm1) - window(cfg.rate - vm1)) \
                / (2.0 * vm1)
            layers.append((c, antider))
            vals = c - antider(x)
        psi0[horizon - 1] = vals[0]
        if horizon == cfg.max_rounds:
            layers_full = layers[::-1]  # index m-1 -> layer m... see below

    ln2 = np.log(2.0)
    horizons = np.arange(1, cfg.max_rounds + 1)
    alpha00 = psi0 - (-ln2) ** (-horizons.astype(float))
    g = cfg.gain_mean ** (-horizons.astype(float)) \
        * (ln2 ** horizons * alpha00 + (-1.0) ** horizons)
    return CoeffOracle(psi0_by_horizon=psi0, g=g,
                       _layers=tuple(layers_full))


# ---------------------------------------------------------------------------
# asymptotic BLER curve
# ---------------------------------------------------------------------------

def bler_asymptotic(cfg: SystemConfig,
                    coeffs: AsymptoticCoeffs | None = None) -> BlerCurve:
    """Average BLER curve from the high-SNR monomials G_m * prod snr_i^{-1}.

    Values are clamped to [0, 1]; wherever the clamp saturates at low SNR
    the running minimum keeps the curve non-increasing in m.
    """
    if coeffs is None:
        coeffs = asymptotic_coeffs(cfg)
    vals = coeffs.g * np.cumprod(1.0 / cfg.snr_linear)
    vals = np.minimum.accumulate(np.clip(vals, 0.0, 1.0))
    return BlerCurve(values=vals, method="asy",
                     meta={"g": coeffs.g.tolist()})
