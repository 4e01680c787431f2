import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fasaris import SystemConfig, derive_params, partition_for
from fasaris.channel import los_vectors, sample_channel
from fasaris.ctrl import cascade_gain, direct_link_bounds, nb_transform, optimal_phases, perfect_csi_config
from fasaris.outage import outage_iae


def unit_phasors(rng, shape):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, shape))


class TestPhases:
    def test_self_alignment(self):
        h = unit_phasors(np.random.default_rng(1), 5)
        np.testing.assert_allclose(np.mod(optimal_phases(h, h) + 1e-12, 2 * np.pi), 1e-12, atol=1e-12)
        assert cascade_gain(h, optimal_phases(h, h), h) == pytest.approx(5.0, abs=1e-12)

    def test_gain_equals_magnitude_sum(self, rng):
        h, g = unit_phasors(rng, 4), unit_phasors(rng, 4)
        assert cascade_gain(h, optimal_phases(h, g), g) == pytest.approx(4.0, abs=1e-12)

    def test_range(self, rng):
        theta = optimal_phases(unit_phasors(rng, 64), unit_phasors(rng, 64))
        assert np.all((theta >= 0) & (theta < 2 * np.pi))

    def test_global_maximum(self, rng):
        h_bar, g_bar = los_vectors(4)
        best = cascade_gain(h_bar, optimal_phases(h_bar, g_bar), g_bar)
        trial = cascade_gain(h_bar, rng.uniform(0, 2 * np.pi, (1000, 4)), g_bar)
        assert np.all(trial <= best + 1e-12)

    def test_los_amplitude_identity(self, default_cfg, default_params):
        cfg, p = default_cfg, default_params
        h_bar, g_bar = los_vectors(cfg.m_elements)
        g = math.sqrt(p.beta) * g_bar
        k = cfg.rician_k
        eta = math.sqrt(p.alpha * k / (k + 1)) * cascade_gain(h_bar, optimal_phases(h_bar, g), g)
        assert math.sqrt(2 / p.sigma_bar_sq) * eta == pytest.approx(math.sqrt(8), abs=1e-12)

    def test_zero_entry(self):
        with pytest.raises(ValueError):
            optimal_phases(np.array([1.0, 0.0]), np.array([1.0, 1.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_alignment_never_beaten(self, m, seed):
        r = np.random.default_rng(seed)
        h = r.normal(size=m) + 1j * r.normal(size=m)
        g = r.normal(size=m) + 1j * r.normal(size=m)
        best = cascade_gain(h, optimal_phases(h, g), g)
        assert best == pytest.approx(np.sum(np.abs(h) * np.abs(g)), rel=1e-12)
        assert cascade_gain(h, r.uniform(0, 2 * np.pi, m), g) <= best * (1 + 1e-12)


class TestPerfectCsi:
    def test_single_port(self, rng):
        k, _ = perfect_csi_config(unit_phasors(rng, (1, 3)), unit_phasors(rng, 3))
        assert k == 0

    def test_brute_force(self):
        r = np.random.default_rng(2024)
        h = r.normal(size=(4, 2)) + 1j * r.normal(size=(4, 2))
        g = r.normal(size=2) + 1j * r.normal(size=2)
        k, theta = perfect_csi_config(h, g)
        # exhaustive search over ports and a fine phase grid
        grid = np.linspace(0, 2 * np.pi, 181)
        best = max((cascade_gain(h[i], np.array(t), g), i)
                   for i in range(4) for t in itertools.product(grid, grid))
        assert k == best[1]
        assert cascade_gain(h[k], theta, g) >= best[0] - 1e-12

    def test_scale_invariant(self, rng):
        h = rng.normal(size=(7, 3, 4)) + 1j * rng.normal(size=(7, 3, 4))
        g = unit_phasors(rng, 4)
        k1, _ = perfect_csi_config(h, g)
        k2, _ = perfect_csi_config(3.5 * h, g)
        np.testing.assert_array_equal(k1, k2)

    def test_ties_lowest_index(self):
        h = np.ones((3, 2), dtype=complex)
        k, _ = perfect_csi_config(h, np.ones(2))
        assert k == 0


class TestNbTransform:
    def test_identity(self, default_cfg, default_params):
        assert nb_transform(default_params, default_cfg, 1) == default_params

    def test_invalid(self, default_cfg, default_params):
        with pytest.raises(ValueError):
            nb_transform(default_params, default_cfg, 0)

    def test_gain_formula(self, default_cfg, default_params):
        cfg = default_cfg.replace(aris_budget=1e-9)
        p = derive_params(cfg)
        q = nb_transform(p, cfg, 8)
        assert q.rho_star == pytest.approx(
            math.sqrt(cfg.aris_budget / (cfg.m_elements * (8 * cfg.tx_power * p.beta + cfg.noise_aris))))
        assert q.snr_power == 8 * cfg.tx_power
        assert q.p1 == pytest.approx(p.p1 / 8)

    def test_large_array_limit(self, default_cfg):
        cfg = default_cfg.replace(aris_budget=1e-6)
        p = derive_params(cfg)
        for nb in (10**3, 10**6):
            rho = nb_transform(p, cfg, nb).rho_star
            assert rho == pytest.approx(math.sqrt(cfg.aris_budget / (cfg.m_elements * cfg.tx_power * p.beta * nb)),
                                        rel=1e-3)
        rhos = [nb_transform(p, cfg, 10**e).rho_star for e in (4, 6, 8, 10)]
        np.testing.assert_allclose(np.array(rhos[:-1]) / rhos[1:], 10.0, rtol=1e-3)

    def test_two_antennas_against_simulation(self):
        # ten ports over five wavelengths are all singleton blocks, so the
        # ports are independent and the IAE expression is exact
        cfg = SystemConfig(n_ports=10).with_power_dbm(4.0)
        part = partition_for(cfg)
        assert part.n_blocks == 10
        p = derive_params(cfg)
        rate, nb, trials = 2.0, 2, 40_000
        rho = min(math.sqrt(cfg.aris_budget / (cfg.m_elements * (nb * cfg.tx_power * p.beta + cfg.noise_aris))),
                  math.sqrt(cfg.rho_max_sq))
        s = sample_channel(cfg, part, np.random.default_rng(99), params=p, trials=trials)
        theta = optimal_phases(s.h_bar, s.g)
        amp = cascade_gain(s.h_ports, theta, s.g)
        noise = np.sum(np.abs(s.h_ports) ** 2, axis=-1)
        snr = nb * cfg.tx_power * amp**2 / (noise * cfg.noise_aris + cfg.noise_mu / rho**2)
        sim = np.mean(np.log2(1 + snr.max(axis=-1)) < rate)
        se = math.sqrt(sim * (1 - sim) / trials)
        assert outage_iae(cfg, nb_transform(p, cfg, nb), part, rate) == pytest.approx(sim, abs=3 * se + 0.005)


class TestDirectLink:
    def test_values(self):
        assert direct_link_bounds(10.0, 0.0) == (10.0, 10.0)
        lo, hi = direct_link_bounds(10.0, 0.1)
        assert lo == pytest.approx(8.1) and hi == pytest.approx(12.1)

    def test_invalid(self):
        with pytest.raises(ValueError):
            direct_link_bounds(1.0, 1.0)

    def test_injected_path(self, rng):
        eps, n = 0.1, 10_000
        reflected = rng.rayleigh(size=n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        direct = eps * np.abs(reflected) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        gamma = np.abs(reflected) ** 2
        with_direct = np.abs(reflected + direct) ** 2
        lo, hi = direct_link_bounds(gamma, eps)
        assert np.all(with_direct >= lo * (1 - 1e-12)) and np.all(with_direct <= hi * (1 + 1e-12))
        # worst and best phase reach the bounds
        worst = np.abs(reflected - eps * reflected) ** 2
        best = np.abs(reflected + eps * reflected) ** 2
        np.testing.assert_allclose(worst, lo, rtol=1e-12)
        np.testing.assert_allclose(best, hi, rtol=1e-12)
