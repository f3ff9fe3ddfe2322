"""Vectorised solver paths must reproduce the scalar objects bit for bit."""
import numpy as np
import pytest

from epipower.batch import (
    BatchEpistemicResult,
    BatchIterativeResult,
    epa_response,
    epistemic_response,
    select_lowest_feasible_batch,
    sncpc_response,
)
from epipower.engine import EpistemicPolicy, NodeEngine
from epipower.game import PowerGrid
from epipower.moments import RayleighPrior


class TestBatchSelector:
    def test_matches_scalar_selector(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            n = int(rng.integers(2, 60))
            levels = np.unique(rng.uniform(0.0, 5.0, size=n))
            grid = PowerGrid(levels=tuple(float(p) for p in levels))
            slopes = np.concatenate(
                [rng.uniform(0.0, 3.0, size=32), [0.0, 1e-300, 1e300]]
            )
            threshold = float(rng.uniform(0.01, 4.0))
            got = select_lowest_feasible_batch(grid.as_array(), slopes, threshold)
            for s, g in zip(slopes, got):
                want = grid.select_lowest_feasible(float(s), threshold)
                assert (want if want is not None else -1) == int(g)

    def test_nonpositive_threshold_selects_floor(self):
        levels = np.array([0.0, 0.5, 1.0])
        got = select_lowest_feasible_batch(levels, np.array([0.0, 2.0]), 0.0)
        assert got.tolist() == [0, 0]


def run_object_engines(gains, n_active, threshold, noise, grid, policy, prior, stages):
    """Scalar reference: one NodeEngine per row with uniform rival targets."""
    rivals = tuple((j + 1, threshold) for j in range(n_active - 1))
    powers, believed, feasible, converged = [], [], [], []
    for g in gains:
        eng = NodeEngine(
            node_id=0,
            gain=float(g),
            sinr_threshold=threshold,
            rivals=rivals,
            prior=prior,
            noise_power=noise,
            grid=grid,
            policy=policy,
        )
        out = eng.run(stages)
        powers.append(out.power)
        believed.append(
            out.believed_powers[0][1] if out.believed_powers else grid.p_max
        )
        feasible.append(out.feasible)
        converged.append(out.converged)
    return powers, believed, feasible, converged


class TestEpistemicParity:
    @pytest.mark.parametrize("n_active", [1, 2, 3, 5])
    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_bitwise_equal_to_object_loop(self, n_active, k):
        rng = np.random.default_rng(100 * n_active + k)
        gains = rng.rayleigh(scale=1.0, size=24)
        grid = PowerGrid.linear(257, 2.0)
        prior = RayleighPrior(sigma=1.0)
        policy = EpistemicPolicy(moment_order=k, truncation=4)
        threshold, noise, stages = 0.02, 1e-3, 3
        res = epistemic_response(
            gains, n_active, threshold, noise, grid, policy, prior, stages
        )
        powers, believed, feasible, converged = run_object_engines(
            gains, n_active, threshold, noise, grid, policy, prior, stages
        )
        assert res.powers.tolist() == powers
        assert res.believed.tolist() == believed
        assert res.feasible.tolist() == feasible
        assert res.converged.tolist() == converged

    def test_single_transmitter_bypass(self):
        gains = np.array([2.0, 0.5, 0.05])
        grid = PowerGrid.linear(101, 1.0)
        prior = RayleighPrior(sigma=1.0)
        res = epistemic_response(
            gains, 1, 0.5, 0.1, grid, EpistemicPolicy(), prior, max_stages=5
        )
        # requirement is thr * noise / g^2, rounded up to the grid
        for g, p, ok in zip(gains, res.powers, res.feasible):
            req = 0.5 * 0.1 / (g * g)
            if req <= grid.p_max:
                assert ok
                assert p == grid.ceil_to_grid(req)
            else:
                assert not ok
                assert p == grid.p_max
        assert res.converged.all()

    def test_input_validation(self):
        grid = PowerGrid.linear(11, 1.0)
        prior = RayleighPrior(sigma=1.0)
        with pytest.raises(ValueError):
            epistemic_response(
                np.ones(3), 0, 0.5, 0.1, grid, EpistemicPolicy(), prior, 1
            )
        with pytest.raises(ValueError):
            epistemic_response(
                np.ones(3), 2, 0.0, 0.1, grid, EpistemicPolicy(), prior, 1
            )

    def test_stage_cap_fraction(self):
        res = BatchEpistemicResult(
            powers=np.ones(4),
            believed=np.ones(4),
            feasible=np.ones(4, dtype=bool),
            converged=np.array([True, False, True, False]),
            stages_run=np.ones(4, dtype=np.int64),
        )
        assert res.stage_cap_fraction == 0.5


class TestSharedPowerBatch:
    def test_matches_plain_python_loop(self):
        rng = np.random.default_rng(21)
        gains = rng.rayleigh(scale=1.0, size=(16, 3))
        grid = PowerGrid.linear(41, 2.0)
        prior = RayleighPrior(sigma=1.0)
        threshold, noise = 0.1, 0.05
        res = sncpc_response(gains, threshold, noise, grid, prior, max_iter=100)
        for row in range(gains.shape[0]):
            p = [grid.p_max] * 3
            for _ in range(100):
                entry = list(p)
                for i in range(3):
                    mean_inter = (sum(p) - p[i]) / prior.lam
                    slope = float(gains[row, i] ** 2) / (mean_inter + noise)
                    idx = grid.select_lowest_feasible(slope, threshold)
                    p[i] = grid.p_max if idx is None else grid.levels[idx]
                if p == entry:
                    break
            assert res.powers[row].tolist() == p

    def test_monotone_descent_terminates(self):
        rng = np.random.default_rng(5)
        gains = rng.rayleigh(scale=1.0, size=(64, 4))
        grid = PowerGrid.linear(201, 2.0)
        res = sncpc_response(gains, 0.05, 0.01, grid, RayleighPrior(sigma=1.0))
        assert res.converged.all()
        assert res.failure_fraction == 0.0
        assert (res.powers <= grid.p_max).all()

    def test_shape_validation(self):
        grid = PowerGrid.linear(11, 1.0)
        with pytest.raises(ValueError):
            sncpc_response(np.ones(3), 0.1, 0.1, grid, RayleighPrior(sigma=1.0))

    def test_failure_fraction(self):
        res = BatchIterativeResult(
            powers=np.ones((4, 1)),
            feasible=np.ones((4, 1), dtype=bool),
            converged=np.array([True, True, True, False]),
            iterations=np.ones(4, dtype=np.int64),
        )
        assert res.failure_fraction == 0.25


class TestEqualAllocationBatch:
    def test_constant_matrix(self):
        out = epa_response(5, 3, 0.7)
        assert out.shape == (5, 3)
        assert (out == 0.7).all()

    def test_rejects_nonpositive_level(self):
        with pytest.raises(ValueError):
            epa_response(5, 3, 0.0)
