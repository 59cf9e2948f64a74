"""Unit tests for solver module."""

import numpy as np
import pytest

from laa_coexistence.model import (
    ModelParams,
    Phase,
    RateMatrix,
    SystemState,
    ThresholdMode,
    build_rate_matrix,
)
from laa_coexistence.solver import (
    ConvergenceError,
    ReducibleChainError,
    balance_residuals,
    blocking_probabilities,
    recurrent_subspace,
    solve,
    solve_direct,
    solve_iterative,
)


S0 = SystemState(Phase.ON, 0, 0, 0)
S1 = SystemState(Phase.ON, 0, 1, 0)
S2 = SystemState(Phase.ON, 1, 0, 0)


def two_state_chain():
    return RateMatrix.from_entries([S0, S1], {(0, 1): 1.0, (1, 0): 3.0})


def no_lbt_blocking(lambda_laa, lambda_wifi=5.0, mu_laa=25.0, mu_wifi=40.0):
    """Closed-form dropping probabilities of the no-LBT chain with D=1, Q=2."""
    lam = lambda_laa
    a = 1.0
    f = lambda_wifi / (mu_wifi + lam)
    g = lam * f / (mu_wifi + lam)
    h = lam * g / mu_wifi
    b = ((lam + lambda_wifi) * a - mu_wifi * f) / mu_laa
    c = (lam * b + mu_wifi * h) / mu_laa
    e = lam * c / mu_laa
    total = a + b + c + e + f + g + h
    return (e + h) / total, (b + c + e) / total


class TestSolveDirect:
    """Tests for the direct solver."""

    def test_two_state_chain(self):
        """Test birth-death balance on a two-state chain."""
        result = solve_direct(two_state_chain())
        assert result.pi == pytest.approx([0.75, 0.25], abs=1e-12)
        assert result.iterations == 0
        assert result.method == "direct"

    def test_symmetric_cycle(self):
        """Test a symmetric 3-cycle is uniform."""
        matrix = RateMatrix.from_entries([S0, S1, S2], {(0, 1): 2.0, (1, 2): 2.0, (2, 0): 2.0})
        assert solve_direct(matrix).pi == pytest.approx([1 / 3] * 3, abs=1e-12)

    def test_no_params_gives_zero_blocking(self):
        """Test hand-built chains report zero dropping probabilities."""
        result = solve_direct(two_state_chain())
        assert result.p_block_laa == 0.0
        assert result.p_block_wifi == 0.0

    def test_no_lbt_exact_fractions(self):
        """Test the no-LBT chain at lambda_laa = 25 against its exact solution."""
        result = solve_direct(build_rate_matrix(ModelParams(lambda_laa=25, lbt_enabled=False)))
        assert result.p_block_laa == pytest.approx(1521 / 5969, abs=1e-12)
        assert result.p_block_wifi == pytest.approx(4448 / 5969, abs=1e-12)

    @pytest.mark.parametrize("lambda_laa", [25.0, 37.0, 50.0, 62.5, 120.0])
    def test_no_lbt_closed_form(self, lambda_laa):
        """Test the no-LBT grid against the closed-form solution."""
        result = solve_direct(build_rate_matrix(ModelParams(lambda_laa=lambda_laa, lbt_enabled=False)))
        p_laa, p_wifi = no_lbt_blocking(lambda_laa)
        assert result.p_block_laa == pytest.approx(p_laa, abs=1e-10)
        assert result.p_block_wifi == pytest.approx(p_wifi, abs=1e-10)

    def test_unreachable_states_zero(self):
        """Test idle-server states with a queue are never entered without LBT."""
        matrix = build_rate_matrix(ModelParams(lbt_enabled=False))
        result = solve_direct(matrix)
        assert result.probability(SystemState(Phase.ON, 0, 0, 1)) == 0.0
        assert result.probability(SystemState(Phase.ON, 0, 0, 2)) == 0.0
        assert len(recurrent_subspace(matrix)) == 7

    def test_lbt_distribution_valid(self):
        """Test the LBT chain yields a normalized non-negative distribution."""
        result = solve_direct(build_rate_matrix(ModelParams(lambda_laa=50)))
        assert result.pi.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(result.pi >= 0)
        assert 0 < result.p_block_laa < 1
        assert 0 < result.p_block_wifi < 1
        assert result.residual <= 1e-10

    def test_no_laa_traffic(self):
        """Test lambda_laa = 0 never drops Wi-Fi."""
        for lbt in (True, False):
            result = solve_direct(build_rate_matrix(ModelParams(lambda_laa=0, lbt_enabled=lbt)))
            assert result.p_block_wifi == 0.0
            assert result.p_block_laa == 0.0

    def test_strict_threshold_at_queue_size_is_reducible(self):
        """Test STRICT with Q_theta = Q is reported as a reducible chain."""
        params = ModelParams(threshold_mode=ThresholdMode.STRICT)
        with pytest.raises(ReducibleChainError) as excinfo:
            solve_direct(build_rate_matrix(params))
        assert excinfo.value.closed_classes == [[
            SystemState(Phase.OFF, 0, 0, 2),
            SystemState(Phase.OFF, 0, 1, 2),
        ]]

    def test_strict_threshold_below_queue_size_solves(self):
        """Test STRICT with Q_theta < Q is irreducible."""
        params = ModelParams(queue_size=3, threshold=2, threshold_mode=ThresholdMode.STRICT)
        result = solve_direct(build_rate_matrix(params))
        assert result.pi.sum() == pytest.approx(1.0, abs=1e-12)


class TestSolveIterative:
    """Tests for the iterative solver."""

    def test_two_state_chain(self):
        """Test the sweep matches the direct solution."""
        result = solve_iterative(two_state_chain())
        assert result.pi == pytest.approx([0.75, 0.25], abs=1e-12)
        assert result.iterations >= 1
        assert result.method == "iterative"

    def test_max_iter_exceeded(self):
        """Test ConvergenceError when the sweep limit is hit."""
        with pytest.raises(ConvergenceError) as excinfo:
            solve_iterative(build_rate_matrix(ModelParams(lambda_laa=50)), max_iter=1)
        assert excinfo.value.iterations == 1

    def test_reducible_chain_rejected(self):
        """Test the iterative solver performs the same structural check."""
        with pytest.raises(ReducibleChainError):
            solve_iterative(build_rate_matrix(ModelParams(threshold_mode=ThresholdMode.STRICT)))

    def test_matches_direct_on_random_draws(self):
        """Test both solvers agree on randomized parameters with rates spanning four decades."""
        rng = np.random.default_rng(20240601)

        def rate():
            return float(10 ** rng.uniform(-2, 2))

        for _ in range(100):
            queue_size = int(rng.integers(0, 11))
            params = ModelParams(
                lambda_laa=rate(),
                lambda_wifi=rate(),
                mu_laa=rate(),
                mu_wifi=rate(),
                mu_sense=rate(),
                mu_on=rate(),
                mu_off=rate(),
                servers=int(rng.integers(1, 3)),
                queue_size=queue_size,
                threshold=int(rng.integers(0, queue_size + 1)),
                lbt_enabled=bool(rng.integers(0, 2)),
                buffering_enabled=bool(rng.integers(0, 2)),
            )
            matrix = build_rate_matrix(params)
            direct = solve_direct(matrix)
            iterative = solve_iterative(matrix)
            assert np.max(np.abs(direct.pi - iterative.pi)) <= 1e-8
            assert iterative.p_block_laa == pytest.approx(direct.p_block_laa, abs=1e-8)
            assert iterative.p_block_wifi == pytest.approx(direct.p_block_wifi, abs=1e-8)


class TestProperties:
    """Tests for solver-independent properties."""

    def test_balance_residuals(self):
        """Test the solution satisfies every balance equation."""
        matrix = build_rate_matrix(ModelParams(lambda_laa=37))
        result = solve_direct(matrix)
        assert np.max(balance_residuals(matrix, result.pi)) <= 1e-10

    def test_time_rescaling(self):
        """Test scaling every rate leaves the distribution unchanged."""
        params = ModelParams(lambda_laa=62.5)
        base = solve_direct(build_rate_matrix(params))
        scaled = solve_direct(build_rate_matrix(params.scaled(3.0)))
        assert np.max(np.abs(base.pi - scaled.pi)) <= 1e-10
        assert scaled.p_block_laa == pytest.approx(base.p_block_laa, abs=1e-10)

    def test_monotone_in_laa_load(self):
        """Test both dropping probabilities grow with lambda_laa without LBT."""
        results = [
            solve_direct(build_rate_matrix(ModelParams(lambda_laa=lam, lbt_enabled=False)))
            for lam in (25.0, 37.0, 50.0, 62.5, 120.0)
        ]
        laa = [r.p_block_laa for r in results]
        wifi = [r.p_block_wifi for r in results]
        assert laa == sorted(laa)
        assert wifi == sorted(wifi)

    def test_blocking_without_params(self):
        """Test blocking probabilities default to zero without parameters."""
        matrix = two_state_chain()
        assert blocking_probabilities(np.array([0.5, 0.5]), matrix, None) == (0.0, 0.0)

    def test_no_buffering_blocking_set(self):
        """Test without a buffer an LAA packet is lost whenever it cannot start service."""
        params = ModelParams(lbt_enabled=False, buffering_enabled=False, lambda_laa=1, lambda_wifi=1,
                             mu_laa=1, mu_wifi=1)
        result = solve_direct(build_rate_matrix(params))
        assert result.p_block_laa == pytest.approx(2 / 3, abs=1e-12)
        assert result.p_block_wifi == pytest.approx(1 / 3, abs=1e-12)

    def test_solve_dispatch(self):
        """Test the dispatcher selects the solver by name."""
        matrix = two_state_chain()
        assert solve(matrix, "direct").method == "direct"
        assert solve(matrix, "iterative").method == "iterative"
        with pytest.raises(ValueError):
            solve(matrix, "eigen")
