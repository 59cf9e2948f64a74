"""Stationary analysis of the coexistence chain.

Two independent methods compute the stationary distribution:

- solve_direct: sparse LU solve of the global balance equations with one
  equation replaced by the normalization constraint
- solve_iterative: Gauss-Seidel sweep of the balance equations
  pi_i = (sum of inflow into i) / (outflow rate of i), renormalized every sweep

Both restrict the chain to the states reachable from the initial state and
require that set to be strongly connected.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import solve_triangular
from scipy.sparse import csgraph
from scipy.sparse.linalg import MatrixRankWarning, spsolve, spsolve_triangular

from laa_coexistence.model import (
    CoexistenceError,
    ModelParams,
    RateMatrix,
    SystemState,
    TransitionKind,
    gate_open,
)


logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12
DEFAULT_MAX_ITERATIONS = 1_000_000

# below this size the sweep operator is kept as a dense matrix
DENSE_SWEEP_LIMIT = 2000

_RELATIVE_FLOOR = 1e-300


class ReducibleChainError(CoexistenceError):
    """Raised when the reachable part of the chain is not strongly connected.

    Attributes:
        closed_classes: States of every closed communicating class found
    """

    def __init__(self, message: str, closed_classes: List[List[SystemState]]):
        self.closed_classes = closed_classes
        super().__init__(message)


class SingularSystemError(CoexistenceError):
    """Raised when the balance equations cannot be solved numerically."""
    pass


class ConvergenceError(CoexistenceError):
    """Raised when the iterative sweep does not converge within max_iter.

    Attributes:
        iterations: Sweeps performed
        change: Last maximum relative change
    """

    def __init__(self, iterations: int, change: float):
        self.iterations = iterations
        self.change = change
        super().__init__(
            f"iterative solver did not converge after {iterations} sweeps "
            f"(last relative change {change:.3e})"
        )


@dataclass(frozen=True)
class StationaryResult:
    """Stationary distribution and the dropping probabilities derived from it.

    Attributes:
        pi: Probability of every state, indexed like RateMatrix.states
        p_block_laa: LAA dropping probability
        p_block_wifi: Wi-Fi dropping probability
        residual: Largest violation of the global balance equations
        iterations: Sweeps performed (0 for the direct solve)
        states: State list the probabilities refer to
        method: Name of the solver that produced the result
    """
    pi: np.ndarray
    p_block_laa: float
    p_block_wifi: float
    residual: float
    iterations: int
    states: Tuple[SystemState, ...] = ()
    method: str = "direct"

    def probability(self, state: SystemState) -> float:
        return float(self.pi[self.states.index(state)])


def recurrent_subspace(matrix: RateMatrix) -> np.ndarray:
    """Indices of the states reachable from the initial state.

    Args:
        matrix: Rate matrix to inspect

    Returns:
        Sorted indices of the reachable states

    Raises:
        ReducibleChainError: If the reachable states are not strongly connected
    """
    graph = matrix.to_sparse()
    order = csgraph.breadth_first_order(
        graph, matrix.initial_index, directed=True, return_predecessors=False
    )
    reachable = np.sort(order)
    sub = graph[reachable][:, reachable]

    n_components, labels = csgraph.connected_components(sub, directed=True, connection="strong")
    if n_components > 1:
        closed = _closed_classes(sub, labels, n_components)
        described = [
            "{" + ", ".join(str(matrix.states[reachable[i]]) for i in members) + "}"
            for members in closed
        ]
        raise ReducibleChainError(
            f"chain reachable from {matrix.states[matrix.initial_index]} is reducible: "
            f"{n_components} communicating classes, closed classes {'; '.join(described)}",
            [[matrix.states[reachable[i]] for i in members] for members in closed],
        )

    logger.debug(f"Reachable set: {len(reachable)} of {matrix.n_states} states")
    return reachable


def _closed_classes(sub: sparse.csr_matrix, labels: np.ndarray, n_components: int) -> List[List[int]]:
    coo = sub.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_classes = set(labels[coo.row[leaving]].tolist())
    return [
        np.flatnonzero(labels == c).tolist()
        for c in range(n_components)
        if c not in open_classes
    ]


def blocking_probabilities(
    pi: np.ndarray, matrix: RateMatrix, params: Optional[ModelParams]
) -> Tuple[float, float]:
    """Dropping probabilities of LAA and Wi-Fi packets.

    By PASTA, an arrival sees the stationary distribution. An LAA packet is
    dropped in states with a full buffer where it cannot start service; a
    Wi-Fi packet is dropped when LAA holds every server.

    Args:
        pi: Normalized stationary distribution
        matrix: Matrix the distribution belongs to
        params: Model parameters; None yields (0.0, 0.0)

    Returns:
        Tuple (P_b,laa, P_b,wifi)
    """
    if params is None:
        return 0.0, 0.0

    p_laa = 0.0
    p_wifi = 0.0
    for probability, state in zip(pi, matrix.states):
        if (state.z == params.effective_queue_size
                and not gate_open(TransitionKind.LAA_ARRIVAL_SERVE, state, params)):
            p_laa += probability
        if state.x == params.servers:
            p_wifi += probability

    return float(min(max(p_laa, 0.0), 1.0)), float(min(max(p_wifi, 0.0), 1.0))


def balance_residuals(matrix: RateMatrix, pi: np.ndarray) -> np.ndarray:
    """Per-state |outflow - inflow| of probability flux."""
    inflow = matrix.to_sparse().T @ pi
    return np.abs(matrix.exit_rates * pi - inflow)


def _finish(matrix: RateMatrix, pi: np.ndarray, iterations: int, method: str) -> StationaryResult:
    p_laa, p_wifi = blocking_probabilities(pi, matrix, matrix.params)
    residual = float(balance_residuals(matrix, pi).max()) if len(pi) else 0.0
    return StationaryResult(
        pi=pi,
        p_block_laa=p_laa,
        p_block_wifi=p_wifi,
        residual=residual,
        iterations=iterations,
        states=matrix.states,
        method=method,
    )


def solve_direct(matrix: RateMatrix) -> StationaryResult:
    """Solve the global balance equations directly.

    Args:
        matrix: Rate matrix of the chain

    Returns:
        StationaryResult with zero probability on unreachable states

    Raises:
        ReducibleChainError: If the reachable set is not strongly connected
        SingularSystemError: If the linear system cannot be solved

    Example:
        >>> from laa_coexistence.model import ModelParams, build_rate_matrix
        >>> result = solve_direct(build_rate_matrix(ModelParams(lbt_enabled=False)))
        >>> round(result.pi.sum(), 12)
        1.0
    """
    reachable = recurrent_subspace(matrix)
    pi = np.zeros(matrix.n_states)

    if len(reachable) == 1:
        pi[reachable] = 1.0
        return _finish(matrix, pi, 0, "direct")

    generator = matrix.generator()[reachable][:, reachable]
    system = generator.T.tolil()
    # the balance equations are linearly dependent; one of them is replaced
    system[-1, :] = np.ones(len(reachable))
    rhs = np.zeros(len(reachable))
    rhs[-1] = 1.0

    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            solution = spsolve(system.tocsc(), rhs)
        except (MatrixRankWarning, RuntimeError) as e:
            raise SingularSystemError(f"balance equations are singular: {e}")

    if not np.all(np.isfinite(solution)):
        raise SingularSystemError("direct solve produced non-finite probabilities")

    solution = np.clip(solution, 0.0, None)
    pi[reachable] = solution / solution.sum()
    return _finish(matrix, pi, 0, "direct")


def solve_iterative(
    matrix: RateMatrix,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
) -> StationaryResult:
    """Solve the balance equations by repeated Gauss-Seidel sweeps.

    Each sweep sets pi_i to the inflow into state i divided by its exit rate,
    using values already updated in the same sweep, then renormalizes.

    Args:
        matrix: Rate matrix of the chain
        tol: Stop when the largest relative change of any probability is below this
        max_iter: Maximum number of sweeps

    Returns:
        StationaryResult with the number of sweeps performed

    Raises:
        ReducibleChainError: If the reachable set is not strongly connected
        ConvergenceError: If max_iter sweeps do not reach the tolerance
    """
    reachable = recurrent_subspace(matrix)
    pi = np.zeros(matrix.n_states)

    if len(reachable) == 1:
        pi[reachable] = 1.0
        return _finish(matrix, pi, 0, "iterative")

    n = len(reachable)
    incoming = matrix.to_sparse()[reachable][:, reachable].T.tocsr()
    lower = sparse.tril(incoming, k=-1)
    upper = sparse.triu(incoming, k=1).tocsr()
    sweep_system = (sparse.diags(matrix.exit_rates[reachable]) - lower).tocsr()

    if n <= DENSE_SWEEP_LIMIT:
        operator = solve_triangular(sweep_system.toarray(), upper.toarray(), lower=True)

        def sweep(current: np.ndarray) -> np.ndarray:
            return operator @ current
    else:
        def sweep(current: np.ndarray) -> np.ndarray:
            return spsolve_triangular(sweep_system, upper @ current, lower=True)

    current = np.full(n, 1.0 / n)
    change = np.inf
    for iteration in range(1, max_iter + 1):
        updated = sweep(current)
        total = updated.sum()
        if not np.isfinite(total) or total <= 0:
            raise SingularSystemError("iterative sweep lost all probability mass")
        updated /= total

        change = float(np.max(np.abs(updated - current) / np.maximum(np.abs(updated), _RELATIVE_FLOOR)))
        current = updated
        if change < tol:
            break
    else:
        logger.warning(f"Iterative solver stopped after {max_iter} sweeps")
        raise ConvergenceError(max_iter, change)

    logger.debug(f"Iterative solver converged after {iteration} sweeps")
    pi[reachable] = current
    return _finish(matrix, pi, iteration, "iterative")


def solve(matrix: RateMatrix, method: str = "direct", **kwargs) -> StationaryResult:
    """Dispatch to ``solve_direct`` or ``solve_iterative`` by name."""
    if method == "direct":
        return solve_direct(matrix)
    if method == "iterative":
        return solve_iterative(matrix, **kwargs)
    raise ValueError(f"unknown solver method: {method}")
