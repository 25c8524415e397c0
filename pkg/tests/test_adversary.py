# ABOUTME: Tests for adversary models and the malicious control strategies.
# ABOUTME: Checks model bounds, strategy trajectories, determinism and non-finite output handling.

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from resilient_consensus.adversary import (
    AdversaryKind,
    AdversaryModel,
    AdversaryView,
    NoiseStrategy,
    ScriptEntry,
    Strategy,
    malicious_controls,
    solve_position_control,
    strategy_hold,
    strategy_noise,
    strategy_oscillate,
    strategy_scripted,
    validate_model,
)
from resilient_consensus.dynamics import NetworkState, SimParams, step_state
from resilient_consensus.errors import InputError, NumericError, ScheduleError
from resilient_consensus.graph import Digraph, build_complete
from resilient_consensus.msr import run_sync
from resilient_consensus.scenario import Scenario
from tests.strategies import adversary_strategies


def _drive(strategy: object, x0: float, v0: float, steps: int, T: float = 0.3) -> list[tuple[float, float]]:
    """Trajectory of a single malicious agent driven by ``strategy``."""
    p = SimParams(T=T, alpha=3.67, n=2)
    s = NetworkState.create([x0, 0.0], [v0, 0.0])
    path = [(x0, v0)]
    for _ in range(steps):
        u = malicious_controls({0: strategy}, AdversaryView(step=s.step, state=s, params=p))  # type: ignore[dict-item]
        s = step_state(s, np.array([u[0], 0.0]), p)
        path.append((float(s.positions[0]), float(s.velocities[0])))
    return path


class TestValidateModel:
    """Test f-total and f-local bounds."""

    def test_f_total(self, five_agent_graph: Digraph) -> None:
        assert validate_model(five_agent_graph, AdversaryModel(AdversaryKind.F_TOTAL, 1, frozenset({0})))
        assert not validate_model(
            five_agent_graph, AdversaryModel(AdversaryKind.F_TOTAL, 1, frozenset({0, 1}))
        )

    def test_f_local(self, five_agent_graph: Digraph) -> None:
        """Agents 1 and 3 are both heard by agent 2, so f=1 locally fails."""
        assert not validate_model(
            five_agent_graph, AdversaryModel(AdversaryKind.F_LOCAL, 1, frozenset({0, 2}))
        )
        assert validate_model(five_agent_graph, AdversaryModel(AdversaryKind.F_LOCAL, 2, frozenset({0, 2})))

    def test_f_local_ignores_malicious_receivers(self) -> None:
        g = Digraph.from_edges(3, [(0, 1), (1, 0)], weight=0.5)
        assert validate_model(g, AdversaryModel(AdversaryKind.F_LOCAL, 0, frozenset({0, 1})))

    def test_out_of_range_agent(self, five_agent_graph: Digraph) -> None:
        with pytest.raises(InputError):
            validate_model(five_agent_graph, AdversaryModel(AdversaryKind.F_TOTAL, 1, frozenset({5})))

    def test_negative_f(self, five_agent_graph: Digraph) -> None:
        with pytest.raises(InputError):
            validate_model(five_agent_graph, AdversaryModel(AdversaryKind.F_TOTAL, -1))

    def test_kind_values(self) -> None:
        assert AdversaryKind("f-total") is AdversaryKind.F_TOTAL
        assert AdversaryModel(AdversaryKind.F_LOCAL, 1, frozenset({2, 3})).n_malicious == 2


class TestHold:
    """Test the dead-beat hold strategy."""

    def test_worked_example(self) -> None:
        path = _drive(strategy_hold(10.0), 10.0, 2.0, steps=3)
        assert path[1] == pytest.approx((10.15, -1.0))
        assert path[2] == pytest.approx((10.0, 0.0))
        assert path[3] == pytest.approx((10.0, 0.0))

    def test_at_rest_on_target_stays(self) -> None:
        path = _drive(strategy_hold(4.0), 4.0, 0.0, steps=5)
        assert all(point == (4.0, 0.0) for point in path)

    @given(x0=st.floats(-50, 50), v0=st.floats(-10, 10), target=st.floats(-50, 50))
    def test_settles_in_two_steps(self, x0: float, v0: float, target: float) -> None:
        x2, v2 = _drive(strategy_hold(target), x0, v0, steps=2)[2]
        assert x2 == pytest.approx(target, abs=1e-8)
        assert v2 == pytest.approx(0.0, abs=1e-8)


class TestOscillate:
    """Test the two-level oscillator."""

    def test_alternates_for_100_steps(self) -> None:
        path = _drive(strategy_oscillate(2.0, 9.0), 2.0, 0.0, steps=100)
        for k, (x, _) in enumerate(path):
            assert x == pytest.approx(2.0 if k % 2 == 0 else 9.0, abs=1e-9)

    def test_velocity_follows_jumps(self) -> None:
        """v[k+1] = 2 (x[k+1] - x[k]) / T - v[k], so its magnitude grows linearly."""
        path = _drive(strategy_oscillate(0.0, 1.0), 0.0, 0.0, steps=4)
        speeds = [v for _, v in path]
        assert speeds[1] == pytest.approx(2 / 0.3)
        assert speeds[2] == pytest.approx(-4 / 0.3)
        assert speeds[3] == pytest.approx(6 / 0.3)

    def test_target(self) -> None:
        strategy = strategy_oscillate(1.0, 9.0)
        assert [strategy.target(k) for k in range(4)] == [1.0, 9.0, 1.0, 9.0]

    def test_solve_position_control(self) -> None:
        u = solve_position_control(1.0, 2.0, 5.0, 0.5)
        assert 1.0 + 0.5 * 2.0 + 0.125 * u == pytest.approx(5.0)


class TestScripted:
    """Test table-driven controls."""

    def test_raw_and_target_entries(self) -> None:
        strategy = strategy_scripted({0: ("u", 2.0), 1: ScriptEntry("target", 7.0)})
        path = _drive(strategy, 0.0, 0.0, steps=2)
        assert path[1] == pytest.approx((0.09, 0.6))
        assert path[2][0] == pytest.approx(7.0)

    def test_missing_step(self) -> None:
        with pytest.raises(ScheduleError):
            _drive(strategy_scripted({0: ("u", 0.0)}), 0.0, 0.0, steps=2)

    def test_unknown_kind(self) -> None:
        with pytest.raises(InputError):
            strategy_scripted({0: ("jump", 1.0)})

    def test_non_finite_output(self) -> None:
        with pytest.raises(NumericError) as excinfo:
            _drive(strategy_scripted({0: ("u", float("nan"))}), 0.0, 0.0, steps=1)
        assert excinfo.value.agent == 0


class TestNoise:
    """Test the seeded random strategy."""

    def test_reproducible(self) -> None:
        first = _drive(strategy_noise(5.0, seed=7), 0.0, 0.0, steps=20)
        second = _drive(strategy_noise(5.0, seed=7), 0.0, 0.0, steps=20)
        assert first == second

    def test_bounded(self) -> None:
        p = SimParams(T=0.3, alpha=3.67, n=2)
        view = AdversaryView(step=0, state=NetworkState.create([0.0, 0.0]), params=p)
        values = [NoiseStrategy(2.5, seed=seed).control(0, view) for seed in range(50)]
        assert all(-2.5 <= value <= 2.5 for value in values)
        assert len(set(values)) > 1


class TestPerturbationInvariance:
    """Attacks that stay inside the filter's reach cannot leave normal agents unsafe."""

    @settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(attack=adversary_strategies())
    def test_complete_graph_with_one_attacker(self, attack: Strategy) -> None:
        """On K5 with f=1 normal agents starting at rest never leave their initial hull."""
        run = Scenario(
            name="perturbed",
            params=SimParams(T=0.3, alpha=3.67, n=5, f=1),
            graph=build_complete(5),
            initial=NetworkState.create([0.0, 2.0, 4.0, 6.0, 8.0]),
            adversary=AdversaryModel(AdversaryKind.F_TOTAL, 1, frozenset({0})),
            strategies={0: attack},
            horizon=40,
        )
        trace = run_sync(run)
        normal = trace.position_matrix()[:, 1:]
        assert normal.min() >= 2.0 - 1e-9
        assert normal.max() <= 8.0 + 1e-9
