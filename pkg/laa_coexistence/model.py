"""Markov model of LAA and Wi-Fi sharing one unlicensed channel.

This module enumerates the state space of the coexistence system, evaluates
the guard of every transition, and assembles the sparse transition-rate
matrix consumed by the solvers.

A system state is the 4-tuple (w, x, y, z):

- w: phase of the LAA cell (OFF, SENSING or ON)
- x: LAA packets in service on the unlicensed channel
- y: Wi-Fi packets in service on the unlicensed channel
- z: LAA packets waiting in the FIFO buffer

Only forward transitions are encoded. Incoming flow into a state, needed by
the balance equations, is read from the transposed rate matrix.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum, auto
from functools import cached_property
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse


logger = logging.getLogger(__name__)


class CoexistenceError(Exception):
    """Base class for every error raised by this package."""
    pass


class ParameterError(CoexistenceError, ValueError):
    """Raised when model or simulation parameters are invalid.

    Attributes:
        errors: Every validation message that was collected
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DomainError(CoexistenceError, ValueError):
    """Raised when a state lies outside the enumerated state space."""
    pass


class Phase(IntEnum):
    """Phase of the LAA cell's listen-before-talk controller."""
    OFF = 0
    SENSING = 1
    ON = 2


class ThresholdMode(Enum):
    """How the queue length is compared with the buffer threshold.

    NON_STRICT activates channel acquisition at z >= threshold, STRICT at
    z > threshold.
    """
    STRICT = "strict"
    NON_STRICT = "non_strict"


class SenseOffRule(Enum):
    """When a sensing cell gives up and returns to OFF.

    WIFI_ONLY leaves SENSING when Wi-Fi holds the channel and LAA does not.
    BUSY additionally leaves SENSING whenever every server is held.
    """
    WIFI_ONLY = "wifi_only"
    BUSY = "busy"


class TransitionKind(Enum):
    """Identifies which gate produced a transition."""
    LAA_ARRIVAL_SERVE = auto()
    LAA_COMPLETE = auto()
    WIFI_ARRIVAL_SERVE = auto()
    WIFI_COMPLETE = auto()
    LAA_ARRIVAL_QUEUE = auto()
    LAA_COMPLETE_DEQUEUE = auto()
    WIFI_COMPLETE_HANDOVER = auto()
    FAST_START = auto()
    SENSE_TO_ON = auto()
    OFF_TO_SENSE = auto()
    SENSE_TO_OFF = auto()
    ON_TO_SENSE = auto()


PACKET_KINDS: Tuple[TransitionKind, ...] = (
    TransitionKind.LAA_ARRIVAL_SERVE,
    TransitionKind.LAA_COMPLETE,
    TransitionKind.LAA_COMPLETE_DEQUEUE,
    TransitionKind.WIFI_ARRIVAL_SERVE,
    TransitionKind.WIFI_COMPLETE,
    TransitionKind.WIFI_COMPLETE_HANDOVER,
    TransitionKind.LAA_ARRIVAL_QUEUE,
    TransitionKind.FAST_START,
)

PHASE_KINDS: Tuple[TransitionKind, ...] = (
    TransitionKind.SENSE_TO_ON,
    TransitionKind.OFF_TO_SENSE,
    TransitionKind.SENSE_TO_OFF,
    TransitionKind.ON_TO_SENSE,
)


@dataclass(frozen=True, order=True)
class SystemState:
    """One state (w, x, y, z) of the coexistence chain.

    Attributes:
        w: Channel phase of the LAA cell
        x: LAA packets in service
        y: Wi-Fi packets in service
        z: Queued LAA packets
    """
    w: Phase
    x: int
    y: int
    z: int

    def __post_init__(self):
        object.__setattr__(self, "w", Phase(self.w))

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (int(self.w), self.x, self.y, self.z)

    def __str__(self) -> str:
        return "({},{},{},{})".format(*self.as_tuple())


@dataclass(frozen=True)
class ModelParams:
    """Rates, capacities and variant switches of the coexistence model.

    Defaults reproduce the LBT-with-buffering validation scenario: mean Wi-Fi
    transmission 1/40 s, mean LAA transmission 1/25 s, ON and OFF periods of
    10 s, sensing of 1 s, one server and Q = Q_theta = 2.

    Attributes:
        lambda_laa: LAA packet arrival rate (1/s), may be 0
        lambda_wifi: Wi-Fi packet arrival rate (1/s), may be 0
        mu_laa: LAA service rate on the unlicensed channel (1/s)
        mu_wifi: Wi-Fi service rate (1/s)
        mu_sense: Rate at which a sensing period ends (1/s)
        mu_on: Rate at which a channel occupancy (ON) period ends (1/s)
        mu_off: Rate at which an OFF period ends (1/s)
        fast_start_multiplier: Factor applied to mu_on for the fast-start rate
        servers: Number of unlicensed servers D
        queue_size: Buffer capacity Q
        threshold: Buffer threshold Q_theta
        lbt_enabled: Run the OFF/SENSING/ON controller; otherwise always ON
        buffering_enabled: Buffer LAA packets; otherwise the buffer has size 0
        threshold_mode: Comparison used against the threshold
        sense_off_rule: Condition under which sensing falls back to OFF
    """
    lambda_laa: float = 25.0
    lambda_wifi: float = 5.0
    mu_laa: float = 25.0
    mu_wifi: float = 40.0
    mu_sense: float = 1.0
    mu_on: float = 0.1
    mu_off: float = 0.1
    fast_start_multiplier: float = 10.0
    servers: int = 1
    queue_size: int = 2
    threshold: int = 2
    lbt_enabled: bool = True
    buffering_enabled: bool = True
    threshold_mode: ThresholdMode = ThresholdMode.NON_STRICT
    sense_off_rule: SenseOffRule = SenseOffRule.WIFI_ONLY

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ParameterError(errors)
        if self.servers > 1:
            logger.debug("Multi-server model (D=%d) is experimental", self.servers)

    def validate(self) -> List[str]:
        """Validate parameters and return a list of error messages.

        Returns:
            List of error messages. Empty list if the parameters are valid.
        """
        errors = []

        for name in ("lambda_laa", "lambda_wifi"):
            value = getattr(self, name)
            if not _is_number(value) or value < 0:
                errors.append(f"{name} must be a non-negative number")

        for name in ("mu_laa", "mu_wifi", "mu_sense", "mu_on", "mu_off", "fast_start_multiplier"):
            value = getattr(self, name)
            if not _is_number(value) or value <= 0:
                errors.append(f"{name} must be a positive number")

        if not _is_integer(self.servers) or self.servers < 1:
            errors.append("servers (D) must be an integer >= 1")

        if not _is_integer(self.queue_size) or self.queue_size < 0:
            errors.append("queue_size (Q) must be an integer >= 0")
        elif not _is_integer(self.threshold) or not (0 <= self.threshold <= self.queue_size):
            errors.append("threshold (Q_theta) must be an integer between 0 and Q")

        if not isinstance(self.threshold_mode, ThresholdMode):
            errors.append("threshold_mode must be a ThresholdMode")
        if not isinstance(self.sense_off_rule, SenseOffRule):
            errors.append("sense_off_rule must be a SenseOffRule")

        return errors

    @property
    def effective_queue_size(self) -> int:
        """Queue capacity actually available (Q_eff)."""
        return self.queue_size if self.buffering_enabled else 0

    @property
    def effective_threshold(self) -> int:
        """Threshold seen by the phase gates; 0 when buffering is disabled."""
        return self.threshold if self.buffering_enabled else 0

    @property
    def fast_start_rate(self) -> float:
        return self.fast_start_multiplier * self.mu_on

    def scaled(self, factor: float) -> "ModelParams":
        """Return a copy with every rate multiplied by ``factor``."""
        return replace(
            self,
            lambda_laa=self.lambda_laa * factor,
            lambda_wifi=self.lambda_wifi * factor,
            mu_laa=self.mu_laa * factor,
            mu_wifi=self.mu_wifi * factor,
            mu_sense=self.mu_sense * factor,
            mu_on=self.mu_on * factor,
            mu_off=self.mu_off * factor,
        )


def _is_number(value) -> bool:
    return isinstance(value, (int, float, np.number)) and not isinstance(value, bool) and bool(np.isfinite(value))


def _is_integer(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@dataclass(frozen=True)
class Transition:
    """A single transition emitted by a gate.

    Attributes:
        source: State the process leaves
        target: State the process enters
        rate: Transition rate (1/s), always positive
        kind: Gate that produced the transition
    """
    source: SystemState
    target: SystemState
    rate: float
    kind: TransitionKind


def allowed_phases(params: ModelParams) -> Tuple[Phase, ...]:
    if params.lbt_enabled:
        return (Phase.OFF, Phase.SENSING, Phase.ON)
    return (Phase.ON,)


def initial_state(params: ModelParams) -> SystemState:
    """Empty system: OFF when the LBT controller runs, ON otherwise."""
    phase = Phase.OFF if params.lbt_enabled else Phase.ON
    return SystemState(phase, 0, 0, 0)


def enumerate_states(params: ModelParams) -> List[SystemState]:
    """List every state of the chain in lexicographic (w, x, y, z) order.

    Args:
        params: Model parameters

    Returns:
        States with x + y <= D and 0 <= z <= Q_eff, ordered stably

    Example:
        >>> len(enumerate_states(ModelParams(queue_size=2, threshold=2)))
        27
    """
    states = []
    for w in allowed_phases(params):
        for x in range(params.servers + 1):
            for y in range(params.servers - x + 1):
                for z in range(params.effective_queue_size + 1):
                    states.append(SystemState(w, x, y, z))
    return states


def free_servers(state: SystemState, params: ModelParams) -> int:
    """Number of idle unlicensed servers (D_f)."""
    return params.servers - state.x - state.y


def free_queue_slots(state: SystemState, params: ModelParams) -> int:
    """Number of free buffer slots (Q_f)."""
    return params.effective_queue_size - state.z


def check_state(state: SystemState, params: ModelParams) -> None:
    """Raise DomainError unless ``state`` belongs to the enumerated space."""
    if state.w not in allowed_phases(params):
        raise DomainError(f"phase {state.w.name} is not part of this model variant: {state}")
    if state.x < 0 or state.y < 0 or state.x + state.y > params.servers:
        raise DomainError(f"server occupancy outside 0..D={params.servers}: {state}")
    if not (0 <= state.z <= params.effective_queue_size):
        raise DomainError(f"queue length outside 0..{params.effective_queue_size}: {state}")


def activation_passes(z: int, params: ModelParams) -> bool:
    """Whether a queue of length ``z`` is long enough to acquire the channel."""
    if params.threshold_mode is ThresholdMode.STRICT:
        return z > params.effective_threshold
    return z >= params.effective_threshold


def _channel_full(s: SystemState, p: ModelParams) -> bool:
    return s.x + s.y == p.servers


def _handover_ready(s: SystemState, p: ModelParams) -> bool:
    # a completing packet hands its server to the head of the queue
    return s.w == Phase.ON and s.z > 0 and _channel_full(s, p)


def _wifi_holds(s: SystemState, p: ModelParams) -> bool:
    return s.x == 0 and s.y >= 1


class _Gate(NamedTuple):
    guard: Callable[[SystemState, ModelParams], bool]
    rate: Callable[[SystemState, ModelParams], float]
    target: Callable[[SystemState], SystemState]


def _moved(dx: int = 0, dy: int = 0, dz: int = 0) -> Callable[[SystemState], SystemState]:
    def target(s: SystemState) -> SystemState:
        return SystemState(s.w, s.x + dx, s.y + dy, s.z + dz)
    return target


def _to_phase(phase: Phase) -> Callable[[SystemState], SystemState]:
    def target(s: SystemState) -> SystemState:
        return SystemState(phase, s.x, s.y, s.z)
    return target


_GATES: Dict[TransitionKind, _Gate] = {
    TransitionKind.LAA_ARRIVAL_SERVE: _Gate(
        guard=lambda s, p: s.w == Phase.ON and s.x + s.y < p.servers and s.z == 0,
        rate=lambda s, p: p.lambda_laa,
        target=_moved(dx=1),
    ),
    TransitionKind.LAA_COMPLETE: _Gate(
        guard=lambda s, p: s.x > 0 and not _handover_ready(s, p),
        rate=lambda s, p: s.x * p.mu_laa,
        target=_moved(dx=-1),
    ),
    TransitionKind.LAA_COMPLETE_DEQUEUE: _Gate(
        guard=lambda s, p: s.x > 0 and _handover_ready(s, p),
        rate=lambda s, p: s.x * p.mu_laa,
        target=_moved(dz=-1),
    ),
    TransitionKind.WIFI_ARRIVAL_SERVE: _Gate(
        guard=lambda s, p: s.x + s.y < p.servers,
        rate=lambda s, p: p.lambda_wifi,
        target=_moved(dy=1),
    ),
    TransitionKind.WIFI_COMPLETE: _Gate(
        guard=lambda s, p: s.y > 0 and not _handover_ready(s, p),
        rate=lambda s, p: s.y * p.mu_wifi,
        target=_moved(dy=-1),
    ),
    TransitionKind.WIFI_COMPLETE_HANDOVER: _Gate(
        guard=lambda s, p: s.y > 0 and _handover_ready(s, p),
        rate=lambda s, p: s.y * p.mu_wifi,
        target=_moved(dx=1, dy=-1, dz=-1),
    ),
    TransitionKind.LAA_ARRIVAL_QUEUE: _Gate(
        guard=lambda s, p: s.z < p.effective_queue_size and (_channel_full(s, p) or s.w != Phase.ON),
        rate=lambda s, p: p.lambda_laa,
        target=_moved(dz=1),
    ),
    # fast start belongs to the channel acquisition; without LBT it never fires
    TransitionKind.FAST_START: _Gate(
        guard=lambda s, p: (p.lbt_enabled and s.w == Phase.ON and s.y == 0
                            and s.z > 0 and s.x < p.servers),
        rate=lambda s, p: p.fast_start_rate,
        target=_moved(dx=1, dz=-1),
    ),
    TransitionKind.SENSE_TO_ON: _Gate(
        guard=lambda s, p: (s.w == Phase.SENSING and s.x == 0 and s.y == 0
                            and activation_passes(s.z, p)),
        rate=lambda s, p: p.mu_sense,
        target=_to_phase(Phase.ON),
    ),
    TransitionKind.OFF_TO_SENSE: _Gate(
        guard=lambda s, p: s.w == Phase.OFF and activation_passes(s.z, p),
        rate=lambda s, p: p.mu_off,
        target=_to_phase(Phase.SENSING),
    ),
    TransitionKind.SENSE_TO_OFF: _Gate(
        guard=lambda s, p: s.w == Phase.SENSING and (
            _wifi_holds(s, p)
            or not activation_passes(s.z, p)
            or (p.sense_off_rule is SenseOffRule.BUSY and _channel_full(s, p))
        ),
        rate=lambda s, p: p.mu_sense,
        target=_to_phase(Phase.OFF),
    ),
    TransitionKind.ON_TO_SENSE: _Gate(
        guard=lambda s, p: s.w == Phase.ON,
        rate=lambda s, p: p.mu_on,
        target=_to_phase(Phase.SENSING),
    ),
}


def gate_open(kind: TransitionKind, state: SystemState, params: ModelParams) -> bool:
    """Evaluate the guard of one gate.

    Phase gates are closed whenever the LBT controller is disabled.

    Args:
        kind: Gate to evaluate
        state: Current state (assumed valid)
        params: Model parameters

    Returns:
        True if the gate's guard holds in ``state``
    """
    if kind in PHASE_KINDS and not params.lbt_enabled:
        return False
    return _GATES[kind].guard(state, params)


def _emit(kinds: Sequence[TransitionKind], state: SystemState, params: ModelParams) -> List[Transition]:
    transitions = []
    for kind in kinds:
        if not gate_open(kind, state, params):
            continue
        gate = _GATES[kind]
        rate = gate.rate(state, params)
        # zero-rate transitions are omitted
        if rate > 0:
            transitions.append(Transition(state, gate.target(state), rate, kind))
    return transitions


def packet_transitions(state: SystemState, params: ModelParams) -> List[Transition]:
    """Transitions caused by packet arrivals, completions and queue moves.

    Args:
        state: State in the enumerated space
        params: Model parameters

    Returns:
        Every packet-event transition whose guard holds

    Raises:
        DomainError: If ``state`` is outside the state space
    """
    check_state(state, params)
    return _emit(PACKET_KINDS, state, params)


def phase_transitions(state: SystemState, params: ModelParams) -> List[Transition]:
    """Transitions of the OFF/SENSING/ON controller (empty without LBT).

    Raises:
        DomainError: If ``state`` is outside the state space
    """
    check_state(state, params)
    if not params.lbt_enabled:
        return []
    return _emit(PHASE_KINDS, state, params)


@dataclass(frozen=True)
class RateMatrix:
    """Sparse transition-rate matrix over an ordered state list.

    Attributes:
        states: Ordered states; position is the dense index
        entries: Off-diagonal rates keyed by (from-index, to-index)
        exit_rates: Total outflow of every state
        params: Parameters the matrix was built from (None for hand-built chains)
        initial_index: Index of the state the process starts in
    """
    states: Tuple[SystemState, ...]
    entries: Dict[Tuple[int, int], float]
    exit_rates: np.ndarray = field(repr=False)
    params: Optional[ModelParams] = None
    initial_index: int = 0

    @classmethod
    def from_entries(
        cls,
        states: Sequence[SystemState],
        entries: Dict[Tuple[int, int], float],
        params: Optional[ModelParams] = None,
        initial_index: int = 0,
    ) -> "RateMatrix":
        """Build a matrix from explicit rates, computing exit rates.

        Raises:
            ParameterError: On negative rates, self-loops or bad indices
        """
        n = len(states)
        errors = []
        for (i, j), rate in entries.items():
            if not (0 <= i < n and 0 <= j < n):
                errors.append(f"entry ({i},{j}) outside a {n}-state matrix")
            elif i == j:
                errors.append(f"self-loop at state {states[i]}")
            if rate < 0:
                errors.append(f"negative rate {rate} at ({i},{j})")
        if not (0 <= initial_index < max(n, 1)):
            errors.append(f"initial index {initial_index} outside the state list")
        if errors:
            raise ParameterError(errors)

        exit_rates = np.zeros(n)
        for (i, _), rate in entries.items():
            exit_rates[i] += rate
        return cls(tuple(states), dict(entries), exit_rates, params, initial_index)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def nnz(self) -> int:
        return sum(1 for rate in self.entries.values() if rate > 0)

    @cached_property
    def index(self) -> Dict[SystemState, int]:
        return {state: i for i, state in enumerate(self.states)}

    def index_of(self, state: SystemState) -> int:
        try:
            return self.index[state]
        except KeyError:
            raise DomainError(f"state {state} is not in this matrix")

    def to_sparse(self) -> sparse.csr_matrix:
        """Off-diagonal rates as a CSR matrix (row = from, column = to)."""
        n = self.n_states
        if not self.entries:
            return sparse.csr_matrix((n, n))
        keys = list(self.entries)
        rows = np.array([i for i, _ in keys])
        cols = np.array([j for _, j in keys])
        data = np.array([self.entries[k] for k in keys], dtype=float)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def generator(self) -> sparse.csr_matrix:
        """Infinitesimal generator: off-diagonal rates minus exit rates on the diagonal."""
        return (self.to_sparse() - sparse.diags(self.exit_rates)).tocsr()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.generator().sum(axis=1)).ravel()


def build_rate_matrix(params: ModelParams) -> RateMatrix:
    """Assemble the rate matrix of every gate over the whole state space.

    Duplicate (from, to) pairs are merged by summing their rates.

    Args:
        params: Model parameters

    Returns:
        RateMatrix whose initial index points at ``initial_state(params)``
    """
    states = enumerate_states(params)
    index = {state: i for i, state in enumerate(states)}
    entries: Dict[Tuple[int, int], float] = {}

    for i, state in enumerate(states):
        for transition in packet_transitions(state, params) + phase_transitions(state, params):
            key = (i, index[transition.target])
            entries[key] = entries.get(key, 0.0) + transition.rate

    matrix = RateMatrix.from_entries(states, entries, params, index[initial_state(params)])
    logger.debug(f"Built rate matrix: {matrix.n_states} states, {matrix.nnz} transitions")
    return matrix
