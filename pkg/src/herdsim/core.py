"""Domain types and population bookkeeping for the threshold-agent market.

Each agent holds a binary investment position and a log-price interval
(lower, upper) that straddles the current market log-price; the population
mean of the positions is the market sentiment.  This module owns the types,
the sentiment arithmetic, interval (re)injection and the balanced initial
population.  Time evolution lives in :mod:`herdsim.dynamics`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

# Deterministic pseudo-random stream.  All draws in the package go through a
# numpy Generator; streams are seeded via SeedSequence so that substreams for
# parallel runs can be derived collision-free (see experiments.derive_stream).
RngStream = np.random.Generator


def make_stream(seed: int) -> RngStream:
    """Fresh deterministic generator: same seed, same draw sequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


class AgentState(enum.IntEnum):
    """Binary investment position, numerically +1 (holding) or -1 (out)."""

    PLUS = 1
    MINUS = -1


@dataclass(frozen=True, slots=True)
class Agent:
    """One slow trader: a position plus the threshold interval around the price."""

    state: AgentState
    lower: float
    upper: float

    def __post_init__(self):
        object.__setattr__(self, "state", AgentState(self.state))
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not self.lower < self.upper:
            raise ValueError(
                f"agent interval needs lower < upper, got ({self.lower}, {self.upper})"
            )


_FLOAT_FIELDS = (
    "step_size",
    "threshold_diffusion",
    "kick_strength",
    "herding",
    "reinject_lo",
    "reinject_hi",
    "drift",
    "exo_volatility",
)
_INT_FIELDS = ("num_agents", "seed", "steps_per_day", "days_per_year")


@dataclass(frozen=True, slots=True)
class MarketParams:
    """All model constants.

    Defaults are the production calibration: 1000 agents, a step of 4e-6
    model-time units (one tenth of a trading day at unit exogenous
    volatility), threshold diffusion 0.2, price kick 0.2, herding constant
    100, and reinjected thresholds drawn 5%..25% away from the price.
    """

    num_agents: int = 1000
    step_size: float = 4e-6
    threshold_diffusion: float = 0.2
    kick_strength: float = 0.2
    herding: float = 100.0
    reinject_lo: float = 0.05
    reinject_hi: float = 0.25
    drift: float = 0.0
    exo_volatility: float = 1.0
    seed: int = 0
    steps_per_day: int = 10
    days_per_year: int = 252

    def __post_init__(self):
        # configs may hand us ints for float fields (JSON); normalize first
        for name in _FLOAT_FIELDS:
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in _INT_FIELDS:
            value = getattr(self, name)
            if int(value) != value:
                raise ValueError(f"{name}: must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.num_agents < 2 or self.num_agents % 2 != 0:
            raise ValueError(
                f"num_agents: must be an even count >= 2, got {self.num_agents}"
            )
        if not self.step_size > 0:
            raise ValueError(f"step_size: must be > 0, got {self.step_size}")
        for name in ("threshold_diffusion", "kick_strength", "herding", "exo_volatility"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name}: must be >= 0, got {getattr(self, name)}")
        if not 0.0 < self.reinject_lo < self.reinject_hi < 1.0:
            raise ValueError(
                "reinject bounds: need 0 < reinject_lo < reinject_hi < 1, "
                f"got ({self.reinject_lo}, {self.reinject_hi})"
            )
        if self.steps_per_day < 1:
            raise ValueError(f"steps_per_day: must be >= 1, got {self.steps_per_day}")
        if self.days_per_year < 1:
            raise ValueError(f"days_per_year: must be >= 1, got {self.days_per_year}")


@dataclass(slots=True)
class MarketState:
    """Full simulation state at one instant.

    Agent data lives in parallel arrays indexed by agent identity: ``states``
    is int8 +1/-1, ``lower``/``upper`` are float64 log-price thresholds.
    ``state_sum`` caches sum(states) as an exact integer, so the cached
    sentiment can never drift from the population it summarizes.
    """

    log_price: float
    time_step: int
    states: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    state_sum: int

    @property
    def num_agents(self) -> int:
        return self.states.shape[0]

    @property
    def sentiment(self) -> float:
        """Mean agent state, exactly state_sum / num_agents, in [-1, 1]."""
        return self.state_sum / self.states.shape[0]

    def agent(self, i: int) -> Agent:
        return Agent(AgentState(int(self.states[i])), float(self.lower[i]), float(self.upper[i]))

    @property
    def agents(self) -> list[Agent]:
        """Materialized per-agent view (inspection/testing; arrays are primary)."""
        return [self.agent(i) for i in range((self.states.shape[0]))]

    def copy(self) -> MarketState:
        return MarketState(
            log_price=self.log_price,
            time_step=self.time_step,
            states=self.states.copy(),
            lower=self.lower.copy(),
            upper=self.upper.copy(),
            state_sum=self.state_sum,
        )

    def validate(self) -> None:
        """Raise ValueError if any structural invariant is broken.

        Checks the +1/-1 state alphabet, the sentiment cache, and the
        straddle condition lower < log_price < upper for every agent.
        """
        if not (self.states.shape == self.lower.shape == self.upper.shape):
            raise ValueError("agent arrays disagree in length")
        if not np.all(np.abs(self.states) == 1):
            raise ValueError("agent states must all be +1 or -1")
        total = int(self.states.sum(dtype=np.int64))
        if total != self.state_sum:
            raise ValueError(f"sentiment cache stale: cached {self.state_sum}, actual {total}")
        if not (np.all(self.lower < self.log_price) and np.all(self.log_price < self.upper)):
            raise ValueError("straddle violated: some interval does not contain the log-price")


def sentiment(agents) -> float:
    """Mean agent state of a population, in [-1, 1].

    Accepts a sequence of :class:`Agent` or an integer array of +1/-1 values.
    The sum is taken in exact integer arithmetic before the single division.
    """
    n = len(agents)
    if n == 0:
        raise ValueError("sentiment of an empty population is undefined")
    if isinstance(agents, np.ndarray):
        total = int(agents.sum(dtype=np.int64))
    else:
        total = sum(int(a.state) for a in agents)
    return total / n


def reinject(log_price: float, params: MarketParams, rng: RngStream) -> tuple[float, float]:
    """Draw a fresh threshold interval straddling ``log_price``.

    Offsets are multiplicative on price: with u_lo then u_hi drawn uniformly
    from [reinject_lo, reinject_hi], the thresholds land at price factors
    (1 - u_lo) below and (1 + u_hi) above, i.e. lower = r + ln(1 - u_lo) and
    upper = r + ln(1 + u_hi).  Both offsets are strictly nonzero, so the
    returned interval always satisfies lower < log_price < upper.
    """
    u_lo, u_hi = rng.uniform(params.reinject_lo, params.reinject_hi, 2)
    return log_price + math.log1p(-u_lo), log_price + math.log1p(u_hi)


def init_population(params: MarketParams, rng: RngStream) -> MarketState:
    """Balanced population around log-price 0 (price 1).

    States alternate +1/-1 by index parity so the initial sentiment is
    exactly zero; every interval is drawn with the same reinjection law used
    after switches, in ascending agent order.
    """
    m = params.num_agents
    if m % 2 != 0:  # unreachable through MarketParams, kept for direct callers
        raise ValueError(f"num_agents: must be even for a balanced start, got {m}")
    states = np.empty(m, dtype=np.int8)
    states[0::2] = 1
    states[1::2] = -1
    lower = np.empty(m)
    upper = np.empty(m)
    for i in range(m):
        lower[i], upper[i] = reinject(0.0, params, rng)
    return MarketState(
        log_price=0.0, time_step=0, states=states, lower=lower, upper=upper, state_sum=0
    )


def flip(agent: Agent, new_interval: tuple[float, float]) -> Agent:
    """Return the agent with the opposite position and a replacement interval."""
    lo, hi = new_interval
    return Agent(AgentState(-int(agent.state)), lo, hi)
