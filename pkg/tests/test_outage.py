import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from fasaris import SystemConfig, derive_params, partition_for
from fasaris.channel import los_vectors
from fasaris.corrmodel import BlockPartition
from fasaris.ctrl import optimal_phases
from fasaris.mathfn import marcum_q1, ncx2_scaled_pdf
from fasaris.outage import (
    IaeSurrogate,
    QuadratureError,
    QuadratureSpec,
    gbar,
    gbar_domain,
    outage_bdma,
    outage_iae,
)


def q1_scipy(a, b):
    return stats.ncx2.sf(b**2, 2, a**2)


def brute_force_pair(cfg, p, rate, n=80, tail=1e-10):
    """Unfactorised 4-D integral over (r, s_b, s_1, s_2) for one block of two ports.

    Independent of the evaluator: scipy laws and Marcum Q, a tensor grid and
    an explicit loop instead of the G^L collapse.
    """
    x = 2.0**rate - 1.0
    k, mu_sq, m = cfg.rician_k, cfg.mu_sq, cfg.m_elements
    t, w = special.roots_legendre(n)

    def gl(lo, hi):
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        return lo[..., None] + (hi - lo)[..., None] * (t + 1) / 2, (hi - lo)[..., None] / 2 * w

    sig = math.sqrt(p.sigma_bar_sq * mu_sq / 2)
    rice = stats.rice(p.eta_abs / sig, scale=sig)
    r, wr = gl(rice.ppf(tail), rice.isf(tail))
    wr = wr * rice.pdf(r)
    c = math.sqrt(mu_sq * p.alpha / (2 * (k + 1)))
    chi = stats.ncx2(2 * m, 2 * k * m / mu_sq)
    u, wu = gl(chi.ppf(tail), chi.isf(tail))
    wu = wu * chi.pdf(u)
    nc = (c * c * u) / (p.alpha * (1 - mu_sq) / (2 * (k + 1)))
    big_c = p.alpha * (1 - mu_sq) / (2 * (k + 1))
    inner = stats.ncx2(2 * m, nc)
    v, wv = gl(inner.ppf(tail), inner.isf(tail))
    wv = wv * stats.ncx2.pdf(v, 2 * m, nc[:, None])
    s = big_c * v
    c1 = math.sqrt(2 / (p.sigma_bar_sq * (1 - mu_sq)))
    weights = wu[:, None, None] * wv[:, :, None] * wv[:, None, :]
    total = 0.0
    for ri, wri in zip(r, wr):
        f = 1 - q1_scipy(c1 * ri, c1 * np.sqrt(x * (p.p1 * s + p.p2)))
        total += wri * np.sum(weights * f[:, :, None] * f[:, None, :])
    return float(total)


def simulate_iae(cfg, p, n_blocks, rate, trials, seed):
    """B independent effective ports of the mu = 1 model, drawn directly."""
    rng = np.random.default_rng(seed)
    k, m = cfg.rician_k, cfg.m_elements
    h_bar, g_bar = los_vectors(m)
    g = math.sqrt(p.beta) * g_bar
    steer = np.exp(1j * optimal_phases(h_bar, g)) * g
    var = p.alpha / (k + 1)
    fails = 0
    for start in range(0, trials, 50_000):
        n = min(50_000, trials - start)
        z = rng.normal(scale=math.sqrt(var / 2), size=(n, n_blocks, m, 2))
        h = math.sqrt(p.alpha * k / (k + 1)) * h_bar + z[..., 0] + 1j * z[..., 1]
        amp = np.abs(h @ np.conj(steer))
        snr = cfg.tx_power * amp**2 / (np.sum(np.abs(h) ** 2, -1) * cfg.noise_aris + cfg.noise_mu / p.rho_star**2)
        fails += np.count_nonzero(np.log2(1 + snr.max(-1)) < rate)
    return fails / trials


@pytest.fixture(scope="module")
def low_power():
    cfg = SystemConfig().with_power_dbm(6.0)
    return cfg, derive_params(cfg), partition_for(cfg)


class TestQuadSpec:
    @pytest.mark.parametrize("kw", [dict(nodes_per_dim=4), dict(inner_nodes=2), dict(tail_mass=0.01),
                                    dict(max_refinements=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            QuadratureSpec(**kw)


class TestGbar:
    def test_normalised(self, default_cfg, default_params):
        lo, hi = gbar_domain(default_params, default_cfg, 1e-12)
        total, _ = integrate.quad(lambda s: gbar(s, default_params, default_cfg), 0, hi * 2, limit=200,
                                  points=[lo, hi], epsabs=1e-14)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_mean(self, default_cfg, default_params):
        alpha_m = default_params.alpha * default_cfg.m_elements
        _, hi = gbar_domain(default_params, default_cfg, 1e-12)
        mean, _ = integrate.quad(lambda s: s * gbar(s, default_params, default_cfg), 0, 2 * hi, limit=200)
        assert mean / alpha_m == pytest.approx(1.0, abs=1e-4)

    def test_matches_generic_density(self, default_cfg, default_params):
        alpha, k, m = default_params.alpha, default_cfg.rician_k, default_cfg.m_elements
        for s in (0.1 * alpha * m, alpha * m, 3 * alpha * m):
            ref = ncx2_scaled_pdf(s, alpha / (2 * (k + 1)), 2 * m, 2 * k * m)
            assert gbar(s, default_params, default_cfg) == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("m,k", [(1, 0.0), (1, 2.0), (3, 0.0), (6, 5.0)])
    def test_other_shapes(self, m, k):
        cfg = SystemConfig(m_elements=m, rician_k=k)
        p = derive_params(cfg)
        s = np.linspace(0.01, 5, 11) * p.alpha
        ref = stats.ncx2.pdf(s, 2 * m, 2 * k * m, scale=p.alpha / (2 * (k + 1))) if k else \
            stats.chi2.pdf(s, 2 * m, scale=p.alpha / 2)
        np.testing.assert_allclose(gbar(s, p, cfg), ref, rtol=1e-9, atol=1e-300)
        # scipy reports 0 at the origin even for two degrees of freedom; use the limit
        at_zero = (k + 1) / p.alpha * math.exp(-k * m) if m == 1 else 0.0
        assert gbar(0.0, p, cfg) == pytest.approx(at_zero, rel=1e-12)
        assert gbar(1e-9 * p.alpha, p, cfg) == pytest.approx(at_zero, rel=1e-6, abs=1e-3)

    def test_negative(self, default_cfg, default_params):
        with pytest.raises(ValueError):
            gbar(-1.0, default_params, default_cfg)


class TestLimits:
    @pytest.mark.parametrize("engine", [outage_iae, outage_bdma])
    def test_small_rate(self, engine, default_cfg, default_params, default_partition):
        assert engine(default_cfg, default_params, default_partition, 1e-3) < 1e-12

    @pytest.mark.parametrize("engine", [outage_iae, outage_bdma])
    def test_large_rate(self, engine, default_cfg, default_params, default_partition):
        assert engine(default_cfg, default_params, default_partition, 30.0) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("engine", [outage_iae, outage_bdma])
    def test_rate_must_be_positive(self, engine, default_cfg, default_params, default_partition):
        with pytest.raises(ValueError):
            engine(default_cfg, default_params, default_partition, 0.0)

    def test_partition_must_cover(self, default_cfg, default_params):
        with pytest.raises(ValueError):
            outage_bdma(default_cfg, default_params, BlockPartition((3, 3)), 2.0)

    @pytest.mark.parametrize("engine", [outage_iae, outage_bdma])
    def test_monotone_in_rate(self, engine, low_power):
        cfg, p, part = low_power
        vals = [engine(cfg, p, part, r) for r in (1.0, 1.5, 2.0, 2.5, 3.0)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestLosMonotonicity:
    def test_los_scaling(self, low_power):
        cfg, p, part = low_power
        vals = [outage_bdma(cfg, p.replace(eta_abs=f * p.eta_abs), part, 2.0) for f in (0.5, 1.0, 2.0)]
        assert vals[0] >= vals[1] >= vals[2]

    def test_stochastic_dominance(self, rng):
        t = np.sort(rng.uniform(0, 10, (1000, 2)), axis=1)
        x = rng.uniform(0, 15, 1000)
        sigma = rng.uniform(0.2, 3, 1000)
        assert np.all(marcum_q1(t[:, 1] / sigma, x / sigma) >= marcum_q1(t[:, 0] / sigma, x / sigma) - 1e-15)


class TestEngines:
    def test_bdma_below_iae(self, low_power):
        cfg, p, part = low_power
        for rate in (1.5, 2.0, 2.5):
            assert outage_bdma(cfg, p, part, rate) <= outage_iae(cfg, p, part, rate)

    def test_singleton_blocks_reduce_to_iae(self):
        # one port per block: BDMA composes each port's marginal exactly
        cfg = SystemConfig(n_ports=10).with_power_dbm(4.0)
        part = partition_for(cfg)
        p = derive_params(cfg)
        assert part.block_sizes == (1,) * 10
        assert outage_bdma(cfg, p, part, 2.0) == pytest.approx(outage_iae(cfg, p, part, 2.0), abs=2e-6)

    def test_full_correlation_limit(self):
        base = SystemConfig(n_ports=4, m_elements=2).with_power_dbm(12.0)
        part = BlockPartition((2, 2))
        p = derive_params(base)
        iae = outage_iae(base, p, part, 1.5)
        gaps = []
        for mu_sq in (0.99, 0.999):
            cfg = base.replace(mu_sq=mu_sq)
            gaps.append(iae - outage_bdma(cfg, derive_params(cfg), part, 1.5))
        # the gap is the in-block selection gain, of order sqrt(1 - mu^2)
        assert gaps[0] / gaps[1] == pytest.approx(math.sqrt(10), rel=0.05)

    @pytest.mark.slow
    def test_full_correlation_within_tolerance(self):
        cfg = SystemConfig(n_ports=4, m_elements=2, mu_sq=1 - 1e-5).with_power_dbm(12.0)
        part = BlockPartition((2, 2))
        p = derive_params(cfg)
        assert outage_bdma(cfg, p, part, 1.5) == pytest.approx(outage_iae(cfg, p, part, 1.5), abs=1e-3)

    @pytest.mark.parametrize("p_dbm", [10.0, 14.0])
    def test_factorisation_matches_brute_force(self, p_dbm):
        cfg = SystemConfig(n_ports=2, m_elements=1).with_power_dbm(p_dbm)
        p = derive_params(cfg)
        part = BlockPartition((2,))
        assert outage_bdma(cfg, p, part, 1.0) == pytest.approx(brute_force_pair(cfg, p, 1.0), abs=1e-4)

    @pytest.mark.slow
    @pytest.mark.parametrize("p_dbm", [6.0, 10.0])
    def test_iae_matches_simulation(self, p_dbm):
        cfg = SystemConfig().with_power_dbm(p_dbm)
        p, part = derive_params(cfg), partition_for(cfg)
        sim = simulate_iae(cfg, p, part.n_blocks, 2.0, 1_000_000, seed=5)
        assert outage_iae(cfg, p, part, 2.0) == pytest.approx(sim, abs=0.01)

    def test_surrogate_counts_and_shape(self, default_cfg, default_params, default_partition):
        sur = IaeSurrogate(default_cfg, default_params, default_partition.n_blocks)
        vals = sur.outage(np.array([1.0, 3.0, 7.0]))
        assert vals.shape == (3,) and sur.calls == 3
        assert isinstance(sur.outage(3.0), float)

    def test_non_convergence_reported(self, low_power):
        cfg, p, part = low_power
        with pytest.raises(QuadratureError, match="outage_bdma"):
            outage_bdma(cfg, p, part, 2.0, QuadratureSpec(nodes_per_dim=8, inner_nodes=8, max_refinements=1,
                                                          conv_tol=1e-15))
        assert issubclass(QuadratureError, ArithmeticError)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(-5, 25), st.integers(1, 6), st.floats(0.5, 6.0), st.floats(0.3, 8.0), st.floats(0.5, 0.98))
    def test_unit_interval(self, p_dbm, m, k, rate, mu_sq):
        cfg = SystemConfig(n_ports=12, m_elements=m, rician_k=k, mu_sq=mu_sq).with_power_dbm(p_dbm)
        p, part = derive_params(cfg), partition_for(cfg)
        quad = QuadratureSpec(nodes_per_dim=32, inner_nodes=32, conv_tol=1e-3, max_refinements=3)
        for engine in (outage_iae, outage_bdma):
            assert 0.0 <= engine(cfg, p, part, rate, quad) <= 1.0
