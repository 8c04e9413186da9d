import pickle

import numpy as np
import pytest
from scipy import stats

from seqescape import _kernels
from seqescape.deterministic import integrate_ode
from seqescape.model import NetworkSpec, UnitParams, network_drift, two_node_network
from seqescape.stochastic import (
    EnsembleError,
    SimConfig,
    StepDiverged,
    heun_step,
    node_generators,
    run_ensemble,
    sample_path,
    simulate_realization,
)

FAST = dict(alpha=0.035, t_max=1e5)


def _kernel_path(net, s0, noise, dt, alpha, cutoff=_kernels.EXACT):
    x = np.array(s0, dtype=float)
    out = _kernels.heun_path(x, 0, np.ascontiguousarray(noise), noise.shape[1], dt, alpha, 1,
                             *_kernels.flatten(net, cutoff))
    return np.vstack([s0, out])


class TestHeunStep:
    def test_noise_free_is_trapezoidal(self):
        net = two_node_network(0.03)
        s = np.array([0.3, 0.48])
        dt = 0.01
        f0 = network_drift(s, net)
        expected = s + 0.5 * dt * (f0 + network_drift(s + dt * f0, net))
        np.testing.assert_array_equal(heun_step(s, net, 0.0, dt, np.zeros(2)), expected)

    def test_equilibrium_fixed(self):
        net = two_node_network(0.0)
        s = np.array([-0.1, 1.0])
        np.testing.assert_allclose(heun_step(s, net, 0.0, 1e-3, np.zeros(2)), s, atol=1e-18)

    def test_same_increment_in_both_stages(self):
        net = NetworkSpec(((),), 0.0, UnitParams(0.01))
        s, dw, dt, a = np.array([0.2]), np.array([0.03]), 0.01, 0.5
        pred = s + network_drift(s, net) * dt + a * dw
        expected = s + 0.5 * (network_drift(s, net) + network_drift(pred, net)) * dt + a * dw
        np.testing.assert_array_equal(heun_step(s, net, a, dt, dw), expected)

    def test_divergence(self):
        with pytest.raises(StepDiverged):
            heun_step(np.array([1e200, 0.0]), two_node_network(0.0), 0.0, 1.0, np.zeros(2))

    def test_strong_order_one(self):
        net = two_node_network(0.03)
        rng = np.random.default_rng(42)
        t_end, fine = 1.0, 1024
        alpha = 0.1
        s0 = np.array([0.4, 0.45])
        errs = {64: [], 128: []}
        for _ in range(40):
            dw = rng.standard_normal((fine, 2)) * np.sqrt(t_end / fine)

            def run(n):
                m = fine // n
                inc = dw.reshape(n, m, 2).sum(axis=1)
                s = s0.copy()
                for k in range(n):
                    s = heun_step(s, net, alpha, t_end / n, inc[k])
                return s

            ref = run(fine)
            for n in errs:
                errs[n].append(np.max(np.abs(run(n) - ref)))
        ratio = np.mean(errs[64]) / np.mean(errs[128])
        assert 1.6 < ratio < 2.6

    def test_kernel_matches_reference_step(self):
        net = two_node_network(0.03)
        rng = np.random.default_rng(3)
        noise = rng.standard_normal((2, 500))
        dt, alpha = 1e-2, 0.2
        s = np.array([0.35, 0.1])
        ref = [s]
        for k in range(500):
            s = heun_step(s, net, alpha, dt, noise[:, k] * np.sqrt(dt))
            ref.append(s)
        got = _kernel_path(net, ref[0], noise, dt, alpha, _kernels.STOCHASTIC_PULSE_CUTOFF)
        np.testing.assert_allclose(got, np.array(ref), atol=1e-12)

    def test_noise_free_heun_tracks_rk4(self):
        net = two_node_network(0.03)
        s0 = np.array([0.3, 0.12])
        heun = _kernel_path(net, s0, np.zeros((2, 1_000_000)), 1e-4, 0.0)[-1]
        rk4 = integrate_ode(s0, net, dt=1e-3, t_max=100.0, record_every=10**9).final
        np.testing.assert_allclose(heun, rk4, atol=1e-6)


class TestRealization:
    def test_noise_free_never_escapes(self):
        rec = simulate_realization(two_node_network(0.0), SimConfig(alpha=0.0, t_max=100.0), 0)
        assert rec.censored
        assert rec.sequence == ()
        assert np.all(np.isnan(rec.tau_node))
        assert rec.snapshot_at_first_escape is None

    def test_escapes_at_protocol_noise(self):
        rec = simulate_realization(two_node_network(0.0), SimConfig(alpha=0.02, t_max=1e6, master_seed=9), 0)
        assert not rec.censored
        assert np.all(np.isfinite(rec.tau_node))

    def test_bit_identical(self):
        net, cfg = two_node_network(0.03), SimConfig(**FAST, master_seed=77)
        a, b = simulate_realization(net, cfg, 4), simulate_realization(net, cfg, 4)
        assert pickle.dumps(a) == pickle.dumps(b)

    def test_record_structure(self):
        net, cfg = two_node_network(0.03), SimConfig(**FAST, master_seed=5)
        rec = simulate_realization(net, cfg, 1)
        assert sorted(rec.sequence) == [0, 1]
        np.testing.assert_array_equal(rec.tau_ordered, rec.tau_node[list(rec.sequence)])
        assert np.all(np.diff(rec.tau_ordered) > 0)
        snap = rec.snapshot_at_first_escape
        assert snap[rec.sequence[0]] == pytest.approx(cfg.h_threshold, abs=1e-12)

    def test_crossing_time_within_one_step(self):
        net, cfg = two_node_network(0.02), SimConfig(**FAST, master_seed=12)
        rec = simulate_realization(net, cfg, 0)
        t, xs = sample_path(net, cfg, 0, rec.t_end, record_every=1)
        for node in range(2):
            first = int(np.argmax(xs[:, node] >= cfg.h_threshold))
            assert xs[first, node] >= cfg.h_threshold
            assert t[first] - cfg.dt <= rec.tau_node[node] <= t[first]

    def test_threshold_validated(self):
        with pytest.raises(ValueError, match="threshold"):
            simulate_realization(two_node_network(), SimConfig(h_threshold=0.05), 0)

    def test_streams_are_distinct(self):
        a = [g.standard_normal(4) for g in node_generators(1, 0, 2)]
        b = [g.standard_normal(4) for g in node_generators(1, 1, 2)]
        assert not np.array_equal(a[0], a[1])
        assert not np.array_equal(a[0], b[0])
        c = [g.standard_normal(4) for g in node_generators(1, 0, 2)]
        np.testing.assert_array_equal(a, c)


class TestEnsemble:
    def test_worker_count_independent(self):
        net, cfg = two_node_network(0.03), SimConfig(**FAST, n_realizations=16, master_seed=2024)
        ref = run_ensemble(net, cfg, workers=1)
        for w in (2, 8):
            for a, b in zip(ref, run_ensemble(net, cfg, workers=w), strict=True):
                assert a.sequence == b.sequence and a.t_end == b.t_end
                np.testing.assert_array_equal(a.tau_node, b.tau_node)
                np.testing.assert_array_equal(a.snapshot_at_first_escape, b.snapshot_at_first_escape)

    def test_index_order(self):
        net, cfg = two_node_network(0.0), SimConfig(**FAST, n_realizations=6, master_seed=1)
        assert [r.index for r in run_ensemble(net, cfg, workers=2)] == list(range(6))

    def test_censoring_monotone(self):
        net = two_node_network(0.02)
        short = run_ensemble(net, SimConfig(alpha=0.035, t_max=150.0, n_realizations=30, master_seed=8))
        long = run_ensemble(net, SimConfig(alpha=0.035, t_max=1e5, n_realizations=30, master_seed=8))
        assert any(r.censored for r in short) and not any(r.censored for r in long)
        for a, b in zip(short, long):
            done = np.isfinite(a.tau_node)
            np.testing.assert_array_equal(a.tau_node[done], b.tau_node[done])

    def test_seeds_statistically_consistent(self):
        net = two_node_network(0.0)
        t = []
        for seed in (100, 200):
            recs = run_ensemble(net, SimConfig(**FAST, n_realizations=300, master_seed=seed))
            t.append(np.array([r.tau_ordered[0] for r in recs]))
        se = np.sqrt(t[0].var(ddof=1) / t[0].size + t[1].var(ddof=1) / t[1].size)
        assert abs(t[0].mean() - t[1].mean()) < 3 * se
        assert not np.array_equal(t[0], t[1])

    def test_uncoupled_order_is_fair(self):
        recs = run_ensemble(two_node_network(0.0), SimConfig(**FAST, n_realizations=300, master_seed=31))
        first0 = sum(r.sequence[0] == 0 for r in recs)
        assert stats.binomtest(first0, 300, 0.5).pvalue > 1e-3

    def test_failures_collected(self):
        net = two_node_network(0.0)
        cfg = SimConfig(alpha=0.5, dt=5.0, t_max=1e4, n_realizations=8, master_seed=1)
        expected = set()
        for k in range(cfg.n_realizations):
            try:
                simulate_realization(net, cfg, k)
            except StepDiverged:
                expected.add(k)
        assert expected
        with pytest.raises(EnsembleError) as info:
            run_ensemble(net, cfg, workers=2)
        assert set(info.value.failures) == expected


def test_sim_config_validation():
    for bad in (dict(dt=0.0), dict(t_max=-1.0), dict(n_realizations=0), dict(alpha=-0.1),
                dict(master_seed=-1), dict(master_seed=2**64)):
        with pytest.raises(ValueError):
            SimConfig(**bad)
