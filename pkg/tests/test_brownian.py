"""Brownian-circuit ensemble: increments, streaming reduction, closed forms."""
from __future__ import annotations

import numpy as np
import pytest

from otoclab import brownian, qla, quasiprob, spin

SIGN_TUPLES = [(v1, w2, v2, w3)
               for v1 in (-1, 1) for w2 in (-1, 1)
               for v2 in (-1, 1) for w3 in (-1, 1)]


class TestIncrements:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_operator_stack_variance_identity(self, n):
        # sum of squares over the pair-Pauli stack gives E[dB^2] = N dt
        ops = brownian.pair_paulis(n)
        npairs = n * (n - 1) // 2
        assert len(ops) == 16 * npairs
        ssq = brownian.increment_scale(n) ** 2 * sum(op @ op for op in ops)
        assert np.max(np.abs(ssq - n * np.eye(2 ** n))) < 1e-12

    def test_stack_is_hermitian(self):
        for op in brownian.pair_paulis(2):
            assert qla.hermiticity_defect(op) < 1e-15

    def test_sample_increment_hermitian_and_scaled(self):
        cfg = brownian.BrownianConfig(n=2, dt=0.01, steps=1, trajectories=1)
        rng = np.random.default_rng(0)
        db = brownian.sample_increment(cfg, rng)
        assert qla.hermiticity_defect(db) < 1e-12
        assert db.shape == (4, 4)

    def test_step_stays_unitary(self):
        cfg = brownian.BrownianConfig(n=2, dt=0.01, steps=1, trajectories=1)
        rng = np.random.default_rng(3)
        u = np.eye(4, dtype=complex)
        for _ in range(50):
            u = brownian.step_unitary(u, brownian.sample_increment(cfg, rng))
        assert qla.unitarity_defect(u) < 1e-12

    def test_mean_step_reproduces_ito_drift(self):
        # E[exp(-i dB)] = (1 - N dt / 2) 1 up to O(dt^2) and sampling noise
        n, dt, m = 3, 0.01, 3000
        cfg = brownian.BrownianConfig(n=n, dt=dt, steps=1, trajectories=1)
        ops = brownian.pair_paulis(n)
        rng = np.random.default_rng(5)
        acc = np.zeros((8, 8), dtype=complex)
        for _ in range(m):
            acc += qla.expm_scaled(brownian.sample_increment(cfg, rng, ops), -1j)
        acc /= m
        assert np.max(np.abs(acc - (1 - n * dt / 2) * np.eye(8))) < 6e-3


class TestConfig:
    def test_site_bounds(self):
        with pytest.raises(ValueError, match="dense simulation"):
            brownian.BrownianConfig(n=1)
        with pytest.raises(ValueError, match="dense simulation"):
            brownian.BrownianConfig(n=9)

    def test_ito_regime_guard(self):
        with pytest.raises(ValueError, match="Ito"):
            brownian.BrownianConfig(n=3, dt=0.02)
        with pytest.raises(ValueError, match="Ito"):
            brownian.BrownianConfig(n=3, dt=0.0)

    def test_count_guards(self):
        with pytest.raises(ValueError):
            brownian.BrownianConfig(n=3, steps=0)
        with pytest.raises(ValueError):
            brownian.BrownianConfig(n=3, trajectories=0)
        with pytest.raises(ValueError):
            brownian.BrownianConfig(n=3, stride=0)

    def test_sample_times(self):
        cfg = brownian.BrownianConfig(n=2, dt=0.005, steps=40, trajectories=1,
                                      stride=10)
        assert np.allclose(cfg.sample_times(), [0.0, 0.05, 0.1, 0.15, 0.2])
        assert cfg.t_max == pytest.approx(0.2)
        assert cfg.dim == 4

    def test_series_validation(self):
        with pytest.raises(ValueError, match="equal length"):
            brownian.EnsembleSeries(times=np.arange(3.0),
                                    mean=np.zeros(2, dtype=complex),
                                    standard_error=None, trajectories_used=1)
        with pytest.raises(ValueError, match="nonnegative"):
            brownian.EnsembleSeries(times=np.arange(2.0),
                                    mean=np.zeros(2, dtype=complex),
                                    standard_error=np.array([0.1, -0.1]),
                                    trajectories_used=2)


class TestEnsemble:
    def test_trajectory_stream_matches_manual_recipe(self):
        # trajectory traj uses default_rng((seed, traj)) with draws in the
        # documented pair-Pauli order; rebuild trajectory 0 by hand
        cfg = brownian.BrownianConfig(n=3, dt=0.005, steps=40, trajectories=1,
                                      seed=7, stride=40)
        ops = brownian.pair_paulis(3)
        rng = np.random.default_rng((7, 0))
        u = np.eye(8, dtype=complex)
        for _ in range(40):
            g = rng.normal(0.0, np.sqrt(0.005), size=len(ops))
            db = brownian.increment_scale(3) * np.tensordot(g, ops, axes=(0, 0))
            u = qla.expm_scaled(db, -1j) @ u
        res = brownian.ensemble_averages(cfg)
        w = spin.site_pauli(3, 1, "z")
        v = spin.site_pauli(3, 2, "z")
        wt = qla.dagger(u) @ w @ u
        f_manual = np.trace((np.eye(8) / 8) @ wt @ v @ wt @ v)
        assert abs(res.correlators["F"].mean[-1] - f_manual) < 1e-12
        assert res.unitarity_defect < 1e-10

    def test_rerun_is_deterministic(self):
        cfg = brownian.BrownianConfig(n=2, dt=0.005, steps=20, trajectories=3,
                                      seed=11, stride=10)
        a = brownian.ensemble_averages(cfg)
        b = brownian.ensemble_averages(cfg)
        assert np.array_equal(a.quasi_mean, b.quasi_mean)
        assert np.array_equal(a.correlators["F"].mean, b.correlators["F"].mean)

    def test_time_zero_is_exact_with_zero_spread(self):
        cfg = brownian.BrownianConfig(n=3, dt=0.005, steps=4, trajectories=5,
                                      seed=3, stride=2)
        res = brownian.ensemble_averages(cfg)
        w = spin.site_pauli(3, 1, "z")
        v = spin.site_pauli(3, 2, "z")
        exact0 = quasiprob.coarse_quasiprob(np.eye(8, dtype=complex) / 8, w, v,
                                            np.zeros((8, 8), dtype=complex), 0.0)
        assert np.max(np.abs(res.quasi_mean[0] - exact0.values)) < 1e-12
        assert np.max(res.quasi_se[0]) < 1e-14
        assert res.correlators["G"].standard_error[0] < 1e-14
        assert res.correlators["F"].mean[0] == pytest.approx(1.0)

    def test_single_trajectory_has_no_standard_error(self):
        cfg = brownian.BrownianConfig(n=2, dt=0.005, steps=4, trajectories=1,
                                      stride=4)
        res = brownian.ensemble_averages(cfg)
        assert res.quasi_se is None
        assert res.correlators["F"].standard_error is None
        assert res.correlators["F"].trajectories_used == 1

    def test_noninvolutory_observable_rejected(self):
        cfg = brownian.BrownianConfig(n=2, dt=0.005, steps=2, trajectories=1)
        with pytest.raises(ValueError, match="involutory"):
            brownian.ensemble_averages(cfg, w_op=np.diag([2.0, 1.0, -1.0, -2.0]))

    def test_single_operator_average_decays_at_rate_two(self):
        # <sigma^z_1(t)> relaxes as e^{-2t} for a polarized initial state
        cfg = brownian.BrownianConfig(n=3, dt=0.005, steps=60, trajectories=40,
                                      seed=19, stride=20)
        rho = np.zeros((8, 8), dtype=complex)
        rho[0, 0] = 1.0
        res = brownian.ensemble_averages(cfg, rho=rho)
        q1 = res.correlators["q_1"]
        for k, t in enumerate(res.times):
            target = np.exp(-2.0 * t)
            band = 3.0 * q1.standard_error[k] + 1e-12
            assert abs(q1.mean[k].real - target) < band + 2e-3


class TestClosedForms:
    def test_analytic_sign_classes_at_decayed_otoc(self):
        # F -> 0 leaves {3/16, 1/16, 1/16, -1/16} by (w2 w3, v1 v2) signs
        table = {(1, 1): 3 / 16, (1, -1): 1 / 16, (-1, 1): 1 / 16,
                 (-1, -1): -1 / 16}
        for v1, w2, v2, w3 in SIGN_TUPLES:
            val = brownian.analytic_avg_quasiprob(w2, w3, v1, v2, 0.0)
            assert val == pytest.approx(table[(w2 * w3, v1 * v2)])

    def test_analytic_moment_recovers_otoc(self):
        for f in (0.3, -0.2, 0.9):
            total = sum(v1 * w2 * v2 * w3 *
                        brownian.analytic_avg_quasiprob(w2, w3, v1, v2, f)
                        for v1, w2, v2, w3 in SIGN_TUPLES)
            assert total == pytest.approx(f, abs=1e-12)
            norm = sum(brownian.analytic_avg_quasiprob(w2, w3, v1, v2, f)
                       for v1, w2, v2, w3 in SIGN_TUPLES)
            assert norm == pytest.approx(1.0, abs=1e-12)

    def test_eigenstate_form_matches_single_trajectory(self):
        # for a site-2 sigma^z +1 eigenstate every entry is a fixed linear
        # combination of q_1 and F along each trajectory
        plus = np.array([1.0, 1.0]) / np.sqrt(2)
        zero = np.array([1.0, 0.0])
        psi = np.kron(np.kron(plus, zero), plus)
        rho = np.outer(psi, psi.conj()).astype(complex)
        cfg = brownian.BrownianConfig(n=3, dt=0.005, steps=60, trajectories=1,
                                      seed=11, stride=60)
        res = brownian.ensemble_averages(cfg, rho=rho)
        q1 = res.correlators["q_1"].mean[-1]
        f = res.correlators["F"].mean[-1]
        for v1, w2, v2, w3 in SIGN_TUPLES:
            idx = tuple(int(x > 0) for x in (v1, w2, v2, w3))
            want = brownian.sigma2z_eigenstate_avg((v1, w2, v2, w3), q1, f)
            assert abs(res.quasi_mean[(-1,) + idx] - want) < 1e-12

    def test_general_state_form_reduces_at_infinite_temperature(self):
        cfg = brownian.BrownianConfig(n=3, dt=0.005, steps=1, trajectories=1)
        rho = np.eye(8, dtype=complex) / 8
        for tup in [(1, 1, 1, 1), (1, -1, 1, -1), (-1, 1, 1, -1)]:
            got = brownian.general_state_avg(cfg, rho, tup, 2.0, 0.0 + 0j,
                                             0.1 + 0j)
            want = brownian.analytic_avg_quasiprob(tup[1], tup[3], tup[0],
                                                   tup[2], 0.1)
            assert abs(got - want) < 1e-12

    def test_phenomenological_otoc(self):
        assert brownian.phenomenological_otoc(0.0, 0.5, 1.2) == pytest.approx(1.0)
        grid = brownian.phenomenological_otoc(np.linspace(0, 4, 9), 0.5, 1.2)
        assert grid.shape == (9,)
        assert np.all(np.diff(grid) < 0)
        with pytest.raises(ValueError, match="positive"):
            brownian.phenomenological_otoc(1.0, -0.5, 1.2)
        with pytest.raises(ValueError, match="positive"):
            brownian.phenomenological_otoc(1.0, 0.5, 0.0)

    def test_decay_rate_fit_on_synthetic_series(self):
        times = np.linspace(0.0, 1.0, 21)
        series = brownian.EnsembleSeries(times=times,
                                         mean=np.exp(-2.0 * times) + 0j,
                                         standard_error=None,
                                         trajectories_used=1)
        slope, r2 = brownian.decay_rate_fit(series)
        assert slope == pytest.approx(-2.0, abs=1e-9)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_decay_rate_fit_needs_signal(self):
        times = np.linspace(0.0, 1.0, 8)
        series = brownian.EnsembleSeries(times=times,
                                         mean=np.full(8, 1e-4, dtype=complex),
                                         standard_error=None,
                                         trajectories_used=1)
        with pytest.raises(ValueError, match="noise floor"):
            brownian.decay_rate_fit(series)
