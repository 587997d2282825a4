"""Constrained-MDP environment for learning per-round transmit powers.

One environment instance plays the link slot by slot: the agent picks a
power, the environment draws the round's fading gain, decides decoding
success from the exact conditional BLER, and returns a Lagrangian
reward

    r_t = rate_t + rho*(pbar - mbar*power_t) + nu*(blermax - mbar*fail_M)

whose dual variables rho, nu are driven by truncated subgradient steps
over the last W slots, and mbar (average rounds per message) is

    mbar = W / (W - #non-final failures in the window),

recomputed every slot.  Duals update every ``period`` slots.

The module also speaks a newline-delimited JSON protocol over byte
streams so external trainers can drive an instance out of process; see
:func:`serve`.
"""

from __future__ import annotations

import json
import math
import sys
from collections import deque
from dataclasses import dataclass

from .ltat import OptConstraints
from .model import LOG2E, SystemConfig, rng_stream

__all__ = ["EnvState", "DualState", "Transition", "EnvHyper", "HarqEnv",
           "ProtocolError", "serve"]


class ProtocolError(RuntimeError):
    """Environment driven out of order (e.g. step before reset)."""


@dataclass(frozen=True)
class EnvState:
    """Observed state: powers spent so far in the current message cycle.

    ``past_powers`` has length max_rounds-1 and is zero beyond round-1
    entries; round 1 therefore observes the all-zero vector.
    """

    past_powers: tuple[float, ...]
    round: int
    slot: int

    def __post_init__(self):
        used = self.round - 1
        if any(p != 0.0 for p in self.past_powers[used:]):
            raise ValueError("state entries beyond the current round must be 0")


@dataclass
class DualState:
    """Dual variables and window statistics driving the reward."""

    rho: float = 1.0
    nu: float = 1.0
    mbar: float = 1.0
    step_rho: float = 1e-3
    step_nu: float = 1e-3
    window: int = 300
    period: int = 100

    def __post_init__(self):
        if self.rho < 0 or self.nu < 0:
            raise ValueError("dual variables cannot be negative")
        if self.mbar < 1:
            raise ValueError("mbar cannot be below 1")


@dataclass(frozen=True)
class Transition:
    """One slot of experience crossing the wire protocol."""

    state: EnvState
    action: float
    reward: float
    next_state: EnvState
    rate: float
    success: bool
    final_round_failure: bool

    def __post_init__(self):
        if self.final_round_failure and self.success:
            raise ValueError("a final-round failure cannot be a success")


@dataclass(frozen=True)
class EnvHyper:
    """Knobs the problem statement leaves free, with desk-scale defaults."""

    rho0: float = 1.0
    nu0: float = 1.0
    step_rho: float = 1e-3
    step_nu: float = 1e-3
    window: int = 300
    period: int = 100
    p_max: float | None = None  # defaults to 4 * max_avg_power

    def __post_init__(self):
        if self.window < 1 or self.period < 1:
            raise ValueError("window and period must be positive")


class HarqEnv:
    """Sequential link environment; one instance per agent."""

    def __init__(self, cfg: SystemConfig, cons: OptConstraints,
                 hyper: EnvHyper = EnvHyper()):
        self.cfg = cfg
        self.cons = cons
        self.hyper = hyper
        self.p_max = hyper.p_max if hyper.p_max is not None \
            else 4.0 * cons.max_avg_power
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        self._rng = None
        self._state: EnvState | None = None

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed=0) -> EnvState:
        """Fresh episode: duals and window cleared, round 1, slot 0."""
        self._rng = rng_stream(seed)
        self.duals = DualState(rho=self.hyper.rho0, nu=self.hyper.nu0,
                               mbar=1.0, step_rho=self.hyper.step_rho,
                               step_nu=self.hyper.step_nu,
                               window=self.hyper.window,
                               period=self.hyper.period)
        # last-W slot records with O(1) running sums
        self._window = deque()
        self._win_power_sum = 0.0
        self._win_final_fail = 0
        self._win_nonfinal_fail = 0
        self._cycle_powers: list[float] = []
        self._cap_sum = 0.0
        self._disp_sum = 0.0
        self._slot = 0
        self._state = self._observe(round_idx=1)
        return self._state

    def _observe(self, round_idx: int) -> EnvState:
        m = self.cfg.max_rounds
        past = [0.0] * (m - 1)
        for i, p in enumerate(self._cycle_powers[: m - 1]):
            past[i] = p
        return EnvState(past_powers=tuple(past), round=round_idx,
                        slot=self._slot)

    # -- dynamics ----------------------------------------------------------

    def step(self, action: float) -> Transition:
        """Play one slot at the given power (clamped to [0, p_max])."""
        if self._state is None:
            raise ProtocolError("step before reset")
        power = float(min(max(action, 0.0), self.p_max))
        state = self._state
        round_idx = state.round

        # inverse-CDF exponential gain, one uniform per slot
        gain = -self.cfg.gain_mean * math.log1p(-self._rng.random())
        x = (power / self.cfg.noise_power) * gain
        self._cap_sum += math.log2(1.0 + x)
        self._disp_sum += 1.0 - (1.0 + x) ** -2
        self._cycle_powers.append(power)
        eps = self._conditional_bler()
        failed = self._rng.random() < eps

        success = not failed
        final_failure = failed and round_idx == self.cfg.max_rounds
        rate = self.cfg.rate if success else 0.0

        self._slot += 1
        self._record_slot(power, final_failure, failed and not final_failure)
        self._update_mbar()
        reward = rate \
            + self.duals.rho * (self.cons.max_avg_power
                                - self.duals.mbar * power) \
            + self.duals.nu * (self.cons.max_bler
                               - self.duals.mbar * float(final_failure))
        if self._slot % self.duals.period == 0:
            self._update_duals()

        if success or final_failure:
            self._cycle_powers.clear()
            self._cap_sum = 0.0
            self._disp_sum = 0.0
            next_state = self._observe(round_idx=1)
        else:
            next_state = self._observe(round_idx=round_idx + 1)
        self._state = next_state
        return Transition(state=state, action=power, reward=reward,
                          next_state=next_state, rate=rate, success=success,
                          final_round_failure=final_failure)

    def _conditional_bler(self) -> float:
        # zero accumulated capacity (all received powers zero) cannot decode
        if self._disp_sum <= 0.0:
            return 1.0
        denom = LOG2E * math.sqrt(self._disp_sum / self.cfg.blocklength)
        arg = (self._cap_sum - self.cfg.rate) / denom
        return 0.5 * math.erfc(arg / math.sqrt(2.0))

    # -- window statistics and dual updates ---------------------------------

    def _record_slot(self, power: float, final_fail: bool, nonfinal: bool):
        if len(self._window) == self.duals.window:
            old_power, old_ff, old_nf = self._window.popleft()
            self._win_power_sum -= old_power
            self._win_final_fail -= old_ff
            self._win_nonfinal_fail -= old_nf
        self._window.append((power, final_fail, nonfinal))
        self._win_power_sum += power
        self._win_final_fail += final_fail
        self._win_nonfinal_fail += nonfinal

    def _update_mbar(self):
        w = len(self._window)
        nonfinal = self._win_nonfinal_fail
        if w == 0 or nonfinal >= w:
            mbar = float(self.cfg.max_rounds)
        else:
            mbar = w / (w - nonfinal)
        self.duals.mbar = float(min(mbar, self.cfg.max_rounds))

    def _update_duals(self):
        w = len(self._window)
        if w == 0:
            return
        mbar = self.duals.mbar
        power_per_msg = self._win_power_sum * mbar / w
        fail_per_msg = self._win_final_fail * mbar / w
        self.duals.rho = max(
            0.0, self.duals.rho - self.duals.step_rho
            * (self.cons.max_avg_power - power_per_msg))
        self.duals.nu = max(
            0.0, self.duals.nu - self.duals.step_nu
            * (self.cons.max_bler - fail_per_msg))

    def window_stats(self) -> tuple[float, float, float]:
        """(avg power per message, final-failure rate per message, mbar)
        over the last W slots; zeros with mbar = 1 on an empty window."""
        w = len(self._window) if self._state is not None else 0
        if w == 0:
            return 0.0, 0.0, 1.0
        mbar = self.duals.mbar
        return (self._win_power_sum * mbar / w,
                self._win_final_fail * mbar / w,
                mbar)


# ---------------------------------------------------------------------------
# wire protocol
# ---------------------------------------------------------------------------

def _reply(out, payload: dict):
    out.write(json.dumps(payload) + "\n")
    out.flush()


def _error(out, code: str, detail: str):
    _reply(out, {"type": "error", "code": code, "detail": detail})


def serve(cfg: SystemConfig, cons: OptConstraints,
          hyper: EnvHyper = EnvHyper(), stdin=None, stdout=None) -> None:
    """Drive one environment over newline-delimited JSON on stdio.

    Requests: hello, reset{seed}, step{power}, stats, shutdown.  Every
    request is answered in order; malformed requests get an error reply
    and the session continues.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    env = HarqEnv(cfg, cons, hyper)

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            _error(stdout, "bad_json", str(exc))
            continue
        if not isinstance(msg, dict) or "type" not in msg:
            _error(stdout, "bad_request", "message must be an object with a type")
            continue
        kind = msg["type"]
        try:
            if kind == "hello":
                _reply(stdout, {
                    "type": "config", "m": cfg.max_rounds, "l": cfg.blocklength,
                    "r": cfg.rate, "lambda": cfg.gain_mean,
                    "pbar": cons.max_avg_power, "blermax": cons.max_bler,
                    "w": hyper.window, "i": hyper.period, "pmax": env.p_max})
            elif kind == "reset":
                if "seed" not in msg:
                    _error(stdout, "bad_request", "reset requires a seed")
                    continue
                state = env.reset(seed=int(msg["seed"]))
                _reply(stdout, {"type": "state",
                                "state": list(state.past_powers),
                                "slot": state.slot})
            elif kind == "step":
                if "power" not in msg:
                    _error(stdout, "bad_request", "step requires a power")
                    continue
                tr = env.step(float(msg["power"]))
                _reply(stdout, {
                    "type": "transition",
                    "state": list(tr.next_state.past_powers),
                    "reward": tr.reward, "rate": tr.rate,
                    "round": tr.state.round, "success": tr.success,
                    "final_failure": tr.final_round_failure,
                    "rho": env.duals.rho, "nu": env.duals.nu,
                    "mbar": env.duals.mbar, "slot": tr.next_state.slot})
            elif kind == "stats":
                p, f, mbar = env.window_stats()
                o = {"type": "stats", "avg_power": p, "final_failure_rate": f,
                     "mbar": mbar}
                if env._state is not None:
                    o.update(rho=env.duals.rho, nu=env.duals.nu,
                             slot=env._state.slot)
                _reply(stdout, o)
            elif kind == "shutdown":
                _reply(stdout, {"type": "bye"})
                break
            else:
                _error(stdout, "unknown_type", f"no such request type: {kind}")
        except ProtocolError as exc:
            _error(stdout, "not_initialized", str(exc))
        except (ValueError, TypeError) as exc:
            _error(stdout, "bad_request", str(exc))
