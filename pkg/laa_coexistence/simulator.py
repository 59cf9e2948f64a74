"""Discrete-event simulator of the LAA / Wi-Fi coexistence system.

The simulator mirrors the Markov chain state (w, x, y, z) and evaluates the
same gate predicates as the rate-matrix builder, but draws holding times from
configurable distributions. Events live on a simpy future-event list; events
at the same instant run in the order departures, phase expiries, fast start,
arrivals, then insertion order.

One session is one packet arrival of either class. The first
``warmup_fraction * sessions`` arrivals are discarded together with the time
elapsed before the last of them.
"""

import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from enum import Enum, auto
from typing import Callable, Deque, Dict, List, Optional, Tuple

import numpy as np
import simpy
from numpy.random import SFC64, Generator, SeedSequence
from scipy import stats as sp_stats
from simpy.events import URGENT

from laa_coexistence.distributions import DistributionSpec, sample
from laa_coexistence.model import (
    CoexistenceError,
    DomainError,
    ModelParams,
    ParameterError,
    Phase,
    RateMatrix,
    SystemState,
    TransitionKind,
    allowed_phases,
    check_state,
    gate_open,
    initial_state,
)
from laa_coexistence.solver import StationaryResult


logger = logging.getLogger(__name__)


class SimulationError(CoexistenceError):
    """Raised when the event calendar or the mirrored state becomes inconsistent."""
    pass


class FastStartMode(Enum):
    """How a queued LAA packet takes a free server while the channel is ON."""
    EXPONENTIAL = "exponential"
    IMMEDIATE = "immediate"


class EventType(Enum):
    LAA_ARRIVAL = auto()
    WIFI_ARRIVAL = auto()
    LAA_DEPARTURE = auto()
    WIFI_DEPARTURE = auto()
    SENSE_EXPIRE = auto()
    ON_EXPIRE = auto()
    OFF_EXPIRE = auto()
    FAST_START_FIRE = auto()


# simpy processes lower values first; URGENT (0) is reserved for the stop event
EVENT_PRIORITY: Dict[EventType, int] = {
    EventType.LAA_DEPARTURE: 1,
    EventType.WIFI_DEPARTURE: 1,
    EventType.SENSE_EXPIRE: 2,
    EventType.ON_EXPIRE: 2,
    EventType.OFF_EXPIRE: 2,
    EventType.FAST_START_FIRE: 3,
    EventType.LAA_ARRIVAL: 4,
    EventType.WIFI_ARRIVAL: 4,
}

DISTRIBUTION_ROLES: Tuple[str, ...] = (
    "laa_interarrival",
    "wifi_interarrival",
    "laa_service",
    "wifi_service",
    "sense_duration",
    "on_duration",
    "off_duration",
)

_ROLE_RATES: Dict[str, str] = {
    "laa_interarrival": "lambda_laa",
    "wifi_interarrival": "lambda_wifi",
    "laa_service": "mu_laa",
    "wifi_service": "mu_wifi",
    "sense_duration": "mu_sense",
    "on_duration": "mu_on",
    "off_duration": "mu_off",
}

# one random stream per role plus the fast-start clock
_STREAMS = DISTRIBUTION_ROLES + ("fast_start",)


@dataclass(frozen=True)
class SimConfig:
    """Settings of a simulation run.

    Distribution roles left as None are exponential with the rate taken from
    ``params``, which makes the simulation comparable with the Markov chain.

    Attributes:
        params: Model parameters shared with the analytic chain
        sessions: Packet arrivals (both classes) per replication
        seed: Seed of every random stream
        replications: Independent replications to run
        warmup_fraction: Fraction of sessions discarded at the start
        laa_interarrival: Override for LAA inter-arrival times
        wifi_interarrival: Override for Wi-Fi inter-arrival times
        laa_service: Override for LAA transmission times
        wifi_service: Override for Wi-Fi transmission times
        sense_duration: Override for sensing periods
        on_duration: Override for channel occupancy periods
        off_duration: Override for OFF periods
        fast_start_mode: Exponential fast start or immediate dequeue
        debug_checks: Verify state invariants after every event
    """
    params: ModelParams = field(default_factory=ModelParams)
    sessions: int = 1_000_000
    seed: int = 0
    replications: int = 1
    warmup_fraction: float = 0.05
    laa_interarrival: Optional[DistributionSpec] = None
    wifi_interarrival: Optional[DistributionSpec] = None
    laa_service: Optional[DistributionSpec] = None
    wifi_service: Optional[DistributionSpec] = None
    sense_duration: Optional[DistributionSpec] = None
    on_duration: Optional[DistributionSpec] = None
    off_duration: Optional[DistributionSpec] = None
    fast_start_mode: FastStartMode = FastStartMode.EXPONENTIAL
    debug_checks: bool = False

    def validate(self) -> List[str]:
        """Validate the configuration and return a list of error messages."""
        errors = []

        if not isinstance(self.params, ModelParams):
            errors.append("params must be ModelParams")
            return errors

        if not isinstance(self.sessions, int) or isinstance(self.sessions, bool) or self.sessions <= 0:
            errors.append("sessions must be a positive integer")
        if not isinstance(self.replications, int) or self.replications < 1:
            errors.append("replications must be an integer >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            errors.append("seed must be a non-negative integer")
        if not isinstance(self.warmup_fraction, (int, float)) or not (0 <= self.warmup_fraction < 1):
            errors.append("warmup_fraction must be in [0, 1)")
        if not isinstance(self.fast_start_mode, FastStartMode):
            errors.append("fast_start_mode must be a FastStartMode")

        if self.params.lambda_laa == 0 and self.params.lambda_wifi == 0:
            errors.append("at least one arrival rate must be positive")

        for role in DISTRIBUTION_ROLES:
            dist = getattr(self, role)
            if dist is not None:
                errors.extend(f"{role}: {message}" for message in dist.validate())

        return errors

    def resolved_distribution(self, role: str) -> Optional[DistributionSpec]:
        """Distribution used for ``role``; None for an arrival class with rate 0."""
        rate = getattr(self.params, _ROLE_RATES[role])
        if rate == 0:
            return None
        override = getattr(self, role)
        if override is not None:
            return override
        return DistributionSpec.exponential(rate)


@dataclass
class SimStats:
    """Counters and estimates of one replication or of an aggregated run.

    Attributes:
        laa_arrivals: Counted LAA arrivals (after warmup)
        laa_drops: LAA arrivals lost to a full buffer
        wifi_arrivals: Counted Wi-Fi arrivals
        wifi_drops: Wi-Fi arrivals lost because LAA held every server
        p_drop_laa: Estimated LAA dropping probability
        p_drop_wifi: Estimated Wi-Fi dropping probability
        ci_halfwidth_laa: 95% confidence half-width across replications
        ci_halfwidth_wifi: 95% confidence half-width across replications
        time_in_phase: Fraction of measured time spent in every phase
        time_in_state: Fraction of measured time spent in every state
        laa_ignored: LAA arrivals neither served, queued nor dropped
        wifi_ignored: Wi-Fi arrivals finding the channel held by Wi-Fi
        laa_completed: Counted LAA packets that finished transmission
        wifi_completed: Counted Wi-Fi packets that finished transmission
        laa_in_system: Counted LAA packets still queued or in service at the end
        wifi_in_system: Counted Wi-Fi packets still in service at the end
        simulated_time: Measured simulated time in seconds
        replications: Replications aggregated into these numbers
        flags: Conditions worth reporting, e.g. "no_laa_arrivals"
    """
    laa_arrivals: int = 0
    laa_drops: int = 0
    wifi_arrivals: int = 0
    wifi_drops: int = 0
    p_drop_laa: float = 0.0
    p_drop_wifi: float = 0.0
    ci_halfwidth_laa: float = 0.0
    ci_halfwidth_wifi: float = 0.0
    time_in_phase: Dict[Phase, float] = field(default_factory=dict)
    time_in_state: Dict[SystemState, float] = field(default_factory=dict)
    laa_ignored: int = 0
    wifi_ignored: int = 0
    laa_completed: int = 0
    wifi_completed: int = 0
    laa_in_system: int = 0
    wifi_in_system: int = 0
    simulated_time: float = 0.0
    replications: int = 1
    flags: Tuple[str, ...] = ()


class _Timer(simpy.Event):
    """Scheduled callback with an explicit tie-break priority.

    A cancelled timer still leaves the calendar at its due time but runs no
    callback.
    """

    def __init__(self, env: simpy.Environment, delay: float, priority: int,
                 callback: Callable[["_Timer"], None], payload=None):
        super().__init__(env)
        self._ok = True
        self._value = None
        self.cancelled = False
        self.payload = payload
        self._callback = callback
        self.callbacks.append(self._fire)
        env.schedule(self, priority, delay)

    def _fire(self, event: simpy.Event) -> None:
        if not self.cancelled:
            self._callback(self)

    def cancel(self) -> None:
        self.cancelled = True


class _Replication:
    """State and event handlers of a single simulation run."""

    def __init__(self, config: SimConfig, replication_index: int):
        self.config = config
        self.params = config.params
        self.env = simpy.Environment()

        children = SeedSequence(entropy=config.seed, spawn_key=(replication_index,)).spawn(len(_STREAMS))
        self.rng: Dict[str, Generator] = {
            name: Generator(SFC64(child)) for name, child in zip(_STREAMS, children)
        }
        self.dist: Dict[str, Optional[DistributionSpec]] = {
            role: config.resolved_distribution(role) for role in DISTRIBUTION_ROLES
        }

        self.state = initial_state(self.params)
        self.queue: Deque[bool] = deque()
        self.laa_servers: List[_Timer] = []
        self.wifi_servers: List[_Timer] = []
        self.phase_timer: Optional[_Timer] = None
        self.fast_start_timer: Optional[_Timer] = None
        self.stop_event: Optional[_Timer] = None

        self.warmup_arrivals = int(config.warmup_fraction * config.sessions)
        self.arrivals_seen = 0
        self.measuring = self.warmup_arrivals == 0
        self.last_time = 0.0
        self.state_time: Dict[SystemState, float] = defaultdict(float)
        self.stats = SimStats()

    # -- scheduling helpers --

    def _draw(self, role: str) -> float:
        return sample(self.dist[role], self.rng[role])

    def _schedule(self, kind: EventType, delay: float, callback, payload=None) -> _Timer:
        return _Timer(self.env, delay, EVENT_PRIORITY[kind], callback, payload)

    def _advance(self) -> None:
        now = self.env.now
        if now < self.last_time:
            raise SimulationError(f"event calendar went backwards: {now} < {self.last_time}")
        if self.measuring:
            self.state_time[self.state] += now - self.last_time
        self.last_time = now

    def _set(self, **changes) -> None:
        self.state = replace(self.state, **changes)

    def _check(self) -> None:
        if not self.config.debug_checks:
            return
        try:
            check_state(self.state, self.params)
        except DomainError as e:
            raise SimulationError(f"at t={self.env.now}: {e}")
        if (len(self.laa_servers) != self.state.x or len(self.wifi_servers) != self.state.y
                or len(self.queue) != self.state.z):
            raise SimulationError(
                f"at t={self.env.now}: state {self.state} disagrees with "
                f"{len(self.laa_servers)} LAA / {len(self.wifi_servers)} Wi-Fi timers "
                f"and {len(self.queue)} queued packets"
            )

    def _after_change(self) -> None:
        self._refresh_fast_start()
        self._check()

    # -- service --

    def _start_laa_service(self, counted: bool) -> None:
        timer = self._schedule(EventType.LAA_DEPARTURE, self._draw("laa_service"),
                               self._on_laa_departure, counted)
        self.laa_servers.append(timer)

    def _start_wifi_service(self, counted: bool) -> None:
        timer = self._schedule(EventType.WIFI_DEPARTURE, self._draw("wifi_service"),
                               self._on_wifi_departure, counted)
        self.wifi_servers.append(timer)

    # -- arrivals --

    def _schedule_arrival(self, kind: EventType) -> None:
        role = "laa_interarrival" if kind is EventType.LAA_ARRIVAL else "wifi_interarrival"
        if self.dist[role] is None:
            return
        handler = self._on_laa_arrival if kind is EventType.LAA_ARRIVAL else self._on_wifi_arrival
        self._schedule(kind, self._draw(role), handler)

    def _count_arrival(self) -> bool:
        self.arrivals_seen += 1
        if self.arrivals_seen == self.warmup_arrivals:
            self.measuring = True
        if self.arrivals_seen == self.config.sessions:
            self.stop_event = _Timer(self.env, 0, URGENT, lambda timer: None)
        return self.arrivals_seen > self.warmup_arrivals

    def _on_laa_arrival(self, timer: _Timer) -> None:
        self._advance()
        counted = self._count_arrival()
        if counted:
            self.stats.laa_arrivals += 1

        if gate_open(TransitionKind.LAA_ARRIVAL_SERVE, self.state, self.params):
            self._set(x=self.state.x + 1)
            self._start_laa_service(counted)
        elif gate_open(TransitionKind.LAA_ARRIVAL_QUEUE, self.state, self.params):
            self._set(z=self.state.z + 1)
            self.queue.append(counted)
        elif self.state.z == self.params.effective_queue_size:
            if counted:
                self.stats.laa_drops += 1
        elif counted:
            self.stats.laa_ignored += 1

        self._after_change()
        if self.stop_event is None:
            self._schedule_arrival(EventType.LAA_ARRIVAL)

    def _on_wifi_arrival(self, timer: _Timer) -> None:
        self._advance()
        counted = self._count_arrival()
        if counted:
            self.stats.wifi_arrivals += 1

        if gate_open(TransitionKind.WIFI_ARRIVAL_SERVE, self.state, self.params):
            self._set(y=self.state.y + 1)
            self._start_wifi_service(counted)
        elif self.state.x == self.params.servers:
            if counted:
                self.stats.wifi_drops += 1
        elif counted:
            self.stats.wifi_ignored += 1

        self._after_change()
        if self.stop_event is None:
            self._schedule_arrival(EventType.WIFI_ARRIVAL)

    # -- departures --

    def _on_laa_departure(self, timer: _Timer) -> None:
        self._advance()
        self.laa_servers.remove(timer)
        if timer.payload:
            self.stats.laa_completed += 1

        if gate_open(TransitionKind.LAA_COMPLETE_DEQUEUE, self.state, self.params):
            self._set(z=self.state.z - 1)
            self._start_laa_service(self.queue.popleft())
        else:
            self._set(x=self.state.x - 1)
        self._after_change()

    def _on_wifi_departure(self, timer: _Timer) -> None:
        self._advance()
        self.wifi_servers.remove(timer)
        if timer.payload:
            self.stats.wifi_completed += 1

        if gate_open(TransitionKind.WIFI_COMPLETE_HANDOVER, self.state, self.params):
            self._set(x=self.state.x + 1, y=self.state.y - 1, z=self.state.z - 1)
            self._start_laa_service(self.queue.popleft())
        else:
            self._set(y=self.state.y - 1)
        self._after_change()

    # -- fast start --

    def _fast_start_move(self) -> None:
        self._set(x=self.state.x + 1, z=self.state.z - 1)
        self._start_laa_service(self.queue.popleft())

    def _refresh_fast_start(self) -> None:
        is_open = gate_open(TransitionKind.FAST_START, self.state, self.params)

        if self.config.fast_start_mode is FastStartMode.IMMEDIATE:
            while is_open:
                self._fast_start_move()
                is_open = gate_open(TransitionKind.FAST_START, self.state, self.params)
            return

        if is_open and self.fast_start_timer is None:
            delay = sample(DistributionSpec.exponential(self.params.fast_start_rate), self.rng["fast_start"])
            self.fast_start_timer = self._schedule(EventType.FAST_START_FIRE, delay, self._on_fast_start)
        elif not is_open and self.fast_start_timer is not None:
            self.fast_start_timer.cancel()
            self.fast_start_timer = None

    def _on_fast_start(self, timer: _Timer) -> None:
        self._advance()
        self.fast_start_timer = None
        self._fast_start_move()
        self._after_change()

    # -- phases --

    def _enter_phase(self, phase: Phase) -> None:
        self._set(w=phase)
        self._arm_phase_timer()

    def _arm_phase_timer(self) -> None:
        phase = self.state.w
        if phase == Phase.OFF:
            self.phase_timer = self._schedule(EventType.OFF_EXPIRE, self._draw("off_duration"), self._on_off_expire)
        elif phase == Phase.SENSING:
            self.phase_timer = self._schedule(EventType.SENSE_EXPIRE, self._draw("sense_duration"), self._on_sense_expire)
        else:
            self.phase_timer = self._schedule(EventType.ON_EXPIRE, self._draw("on_duration"), self._on_on_expire)

    def _on_off_expire(self, timer: _Timer) -> None:
        self._advance()
        if gate_open(TransitionKind.OFF_TO_SENSE, self.state, self.params):
            self._enter_phase(Phase.SENSING)
        else:
            self._arm_phase_timer()
        self._after_change()

    def _on_sense_expire(self, timer: _Timer) -> None:
        self._advance()
        if gate_open(TransitionKind.SENSE_TO_ON, self.state, self.params):
            self._enter_phase(Phase.ON)
        elif gate_open(TransitionKind.SENSE_TO_OFF, self.state, self.params):
            self._enter_phase(Phase.OFF)
        else:
            self._arm_phase_timer()
        self._after_change()

    def _on_on_expire(self, timer: _Timer) -> None:
        self._advance()
        self._enter_phase(Phase.SENSING)
        self._after_change()

    # -- driver --

    def run(self) -> SimStats:
        if self.params.lbt_enabled:
            self._arm_phase_timer()
        self._schedule_arrival(EventType.LAA_ARRIVAL)
        self._schedule_arrival(EventType.WIFI_ARRIVAL)
        self._check()

        while self.stop_event is None:
            try:
                self.env.step()
            except simpy.core.EmptySchedule:
                raise SimulationError("event calendar ran empty before the last session")
        self.env.run(until=self.stop_event)
        self._advance()
        return self._finish()

    def _finish(self) -> SimStats:
        stats = self.stats
        total = sum(self.state_time.values())
        stats.simulated_time = total
        if total > 0:
            stats.time_in_state = {s: t / total for s, t in sorted(self.state_time.items())}
        else:
            stats.time_in_state = {self.state: 1.0}

        stats.time_in_phase = {phase: 0.0 for phase in allowed_phases(self.params)}
        for state, fraction in stats.time_in_state.items():
            stats.time_in_phase[state.w] += fraction

        stats.laa_in_system = sum(1 for t in self.laa_servers if t.payload) + sum(self.queue)
        stats.wifi_in_system = sum(1 for t in self.wifi_servers if t.payload)

        flags = []
        if stats.laa_arrivals > 0:
            stats.p_drop_laa = stats.laa_drops / stats.laa_arrivals
        else:
            flags.append("no_laa_arrivals")
        if stats.wifi_arrivals > 0:
            stats.p_drop_wifi = stats.wifi_drops / stats.wifi_arrivals
        else:
            flags.append("no_wifi_arrivals")
        stats.flags = tuple(flags)
        return stats


def run_replication(config: SimConfig, replication_index: int = 0) -> SimStats:
    """Simulate one replication.

    Args:
        config: Simulation settings
        replication_index: Selects an independent random stream for the same seed

    Returns:
        SimStats of this replication

    Raises:
        ParameterError: If the configuration is invalid
        SimulationError: If the event calendar becomes inconsistent
    """
    errors = config.validate()
    if errors:
        raise ParameterError(errors)

    replication = _Replication(config, replication_index)
    stats = replication.run()
    logger.debug(
        f"Replication {replication_index}: {stats.laa_arrivals} LAA / {stats.wifi_arrivals} Wi-Fi arrivals, "
        f"p_laa={stats.p_drop_laa:.6f}, p_wifi={stats.p_drop_wifi:.6f}, t={stats.simulated_time:.1f}s"
    )
    return stats


def run_simulation(config: SimConfig) -> SimStats:
    """Run every replication and aggregate them.

    Counters are summed; probabilities and time fractions are averaged over
    replications, and the half-widths are Student-t 95% intervals of the mean.
    A single replication is returned unchanged.

    Args:
        config: Simulation settings

    Returns:
        Aggregated SimStats
    """
    logger.debug("Holding times: " + ", ".join(
        f"{role}={config.resolved_distribution(role) or 'none'}" for role in DISTRIBUTION_ROLES
    ))
    results = [run_replication(config, index) for index in range(config.replications)]
    if len(results) == 1:
        return results[0]
    return aggregate(results)


def aggregate(results: List[SimStats]) -> SimStats:
    """Combine replications into one SimStats with confidence half-widths."""
    n = len(results)
    t_quantile = float(sp_stats.t.ppf(0.975, n - 1))

    def mean_and_halfwidth(values: List[float]) -> Tuple[float, float]:
        array = np.asarray(values, dtype=float)
        return float(array.mean()), t_quantile * float(array.std(ddof=1)) / math.sqrt(n)

    p_laa, ci_laa = mean_and_halfwidth([r.p_drop_laa for r in results])
    p_wifi, ci_wifi = mean_and_halfwidth([r.p_drop_wifi for r in results])

    def mean_fractions(attribute: str) -> Dict:
        combined: Dict = defaultdict(float)
        for result in results:
            for key, value in getattr(result, attribute).items():
                combined[key] += value / n
        return dict(sorted(combined.items()))

    counters = (
        "laa_arrivals", "laa_drops", "wifi_arrivals", "wifi_drops", "laa_ignored", "wifi_ignored",
        "laa_completed", "wifi_completed", "laa_in_system", "wifi_in_system",
    )
    flags = sorted({flag for r in results for flag in r.flags})

    return SimStats(
        p_drop_laa=p_laa,
        p_drop_wifi=p_wifi,
        ci_halfwidth_laa=ci_laa,
        ci_halfwidth_wifi=ci_wifi,
        time_in_phase=mean_fractions("time_in_phase"),
        time_in_state=mean_fractions("time_in_state"),
        simulated_time=sum(r.simulated_time for r in results),
        replications=n,
        flags=tuple(flags),
        **{name: sum(getattr(r, name) for r in results) for name in counters},
    )


def state_occupancy_distance(stats: SimStats, matrix: RateMatrix, result: StationaryResult) -> float:
    """L1 distance between simulated time-in-state fractions and the stationary distribution."""
    distance = sum(abs(stats.time_in_state.get(state, 0.0) - p) for state, p in zip(matrix.states, result.pi))
    known = set(matrix.states)
    distance += sum(f for state, f in stats.time_in_state.items() if state not in known)
    return float(distance)
