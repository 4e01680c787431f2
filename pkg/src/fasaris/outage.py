"""Analytical outage probability: block-correlated integral and its IAE upper bound.

Both engines share the per-port event  A_k^2 < x (p1 B_k^2 + p2)  with
x = 2^R - 1, where A_k is the cascaded amplitude and B_k^2 the dynamic-noise
gain of port k.  Conditioned on the block state the event probability is a
Rician CDF, i.e. one minus a Marcum Q1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .channel import DerivedParams, SystemConfig
from .corrmodel import BlockPartition
from .mathfn import marcum_q1, ncchi_scaled_pdf, ncx2_scaled_pdf, rician_pdf

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "gbar",
    "gbar_domain",
    "IaeSurrogate",
    "outage_iae",
    "outage_bdma",
]


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_dim: int = 96
    tail_mass: float = 1e-8
    inner_nodes: int = 96
    conv_tol: float = 1e-6
    max_refinements: int = 2

    def __post_init__(self):
        if self.nodes_per_dim < 8 or self.inner_nodes < 8:
            raise ValueError("need at least 8 quadrature nodes")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")
        if not 0.0 < self.tail_mass < 1e-3:
            raise ValueError("tail_mass must lie in (0, 1e-3)")


class QuadratureError(ArithmeticError):
    """Raised when the refined and coarse quadrature estimates disagree."""


def _gl(lo, hi, n):
    """Gauss-Legendre nodes and weights mapped to [lo, hi] (broadcast over lo/hi)."""
    t, w = np.polynomial.legendre.leggauss(n)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


def _rate_to_x(rate):
    if not rate > 0:
        raise ValueError("rate must be positive")
    return float(np.expm1(rate * np.log(2.0)))


def gbar(s, params: DerivedParams, cfg: SystemConfig):
    """Density of the squared norm of one ARIS-MU channel vector.

    Explicit non-central chi-squared form in the physical variable s, with
    2M degrees of freedom, non-centrality 2KM and scale alpha / (2(K + 1)).
    """
    from scipy.special import ive

    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be non-negative")
    k, m, alpha = cfg.rician_k, cfg.m_elements, params.alpha
    if k == 0:
        return ncx2_scaled_pdf(s, alpha / 2.0, 2 * m, 0.0)
    los = alpha * k * m / (k + 1.0)
    ss = np.where(s > 0, s, 1.0)
    z = np.sqrt(4.0 * k * (k + 1.0) * m * ss / alpha)
    logp = (np.log((k + 1.0) / alpha) - (ss + los) * (k + 1.0) / alpha
            + 0.5 * (m - 1) * np.log(ss / los) + z)
    p = np.exp(logp) * ive(m - 1, z)
    if m == 1:
        p = np.where(s > 0, p, (k + 1.0) / alpha * np.exp(-k * m))
    else:
        p = np.where(s > 0, p, 0.0)
    return float(p) if s.ndim == 0 else p


def _gbar_law(params: DerivedParams, cfg: SystemConfig):
    scale = params.alpha / (2.0 * (cfg.rician_k + 1.0))
    return stats.ncx2(2 * cfg.m_elements, 2.0 * cfg.rician_k * cfg.m_elements, scale=scale) \
        if cfg.rician_k > 0 else stats.chi2(2 * cfg.m_elements, scale=scale)


def gbar_domain(params: DerivedParams, cfg: SystemConfig, tail_mass: float):
    """Central interval of the channel-norm law holding 1 - tail_mass of its mass."""
    law = _gbar_law(params, cfg)
    return float(law.ppf(0.5 * tail_mass)), float(law.isf(0.5 * tail_mass))


class IaeSurrogate:
    """IAE outage as a function of the SNR threshold x, with frozen nodes.

    Each of the B effective ports fails with probability
    int [1 - Q1(a, sqrt(x (p1_bar s + p2_bar)))] gbar(s) ds, and the bound is
    that probability to the power B.  ``calls`` counts evaluated thresholds.
    """

    def __init__(self, cfg: SystemConfig, params: DerivedParams, n_blocks: int,
                 quad: QuadratureSpec = QuadratureSpec(), nodes: int | None = None):
        self.cfg, self.params, self.n_blocks, self.quad = cfg, params, int(n_blocks), quad
        lo, hi = gbar_domain(params, cfg, quad.tail_mass)
        s, w = _gl(lo, hi, nodes or quad.nodes_per_dim)
        self.s = s
        w = w * gbar(s, params, cfg)
        # renormalise over the truncated domain so the R -> inf limit is exact
        self.weights = w / w.sum()
        self.los_amp = np.sqrt(2.0 / params.sigma_bar_sq) * params.eta_abs
        self.calls = 0

    def port_outage(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self.calls += x.size
        p = self.params
        thr = np.sqrt(x[:, None] * (p.p1_bar * self.s + p.p2_bar))
        cdf = 1.0 - marcum_q1(self.los_amp, thr)
        return np.clip(cdf @ self.weights, 0.0, 1.0)

    def outage(self, x):
        scalar = np.ndim(x) == 0
        out = self.port_outage(x) ** self.n_blocks
        return float(out[0]) if scalar else out


def _refine(evaluate, quad: QuadratureSpec, stage: str, **diag) -> float:
    """Double the node count until two successive estimates agree.

    ``evaluate(level)`` returns the estimate at refinement level ``level``.
    """
    prev = evaluate(0)
    for level in range(1, quad.max_refinements + 1):
        cur = evaluate(level)
        if abs(cur - prev) <= quad.conv_tol:
            return cur
        prev_val, prev = prev, cur
    info = ", ".join(f"{k}={v:.6g}" for k, v in diag.items())
    raise QuadratureError(
        f"outage.{stage}: quadrature did not converge after {quad.max_refinements} "
        f"doublings (last two estimates {prev_val:.10g}, {prev:.10g}; {info})"
    )


def outage_iae(cfg: SystemConfig, params: DerivedParams, partition: BlockPartition,
               rate: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Upper bound on the outage: B independent effective ports with mu = 1."""
    x = _rate_to_x(rate)
    n = quad.nodes_per_dim

    def evaluate(level):
        return IaeSurrogate(cfg, params, partition.n_blocks, quad, nodes=n << level).outage(x)

    return _refine(evaluate, quad, "outage_iae", rate=rate, nodes=n)


def _bdma_block_terms(cfg, params, x, n_r, n_sb, n_in, tail):
    """Outer weights and the conditional per-port outage G on the (r, s_b) grid.

    ``n_r`` nodes go on the step of G in r_b and a quarter of that on each
    side of it; ``n_sb`` and ``n_in`` are the s_b and port-noise-gain grids.
    """
    m, k = cfg.m_elements, cfg.rician_k
    mu_sq = cfg.mu_sq
    mu = np.sqrt(mu_sq)
    sb2 = params.sigma_bar_sq

    # block mean norm s_b: scaled non-central chi
    c_chi = mu * np.sqrt(params.alpha / (2.0 * (k + 1.0)))
    lam_chi = np.sqrt(2.0 * k * m) / mu
    chi2 = stats.ncx2(2 * m, lam_chi**2) if lam_chi > 0 else stats.chi2(2 * m)
    sb, wsb = _gl(c_chi * np.sqrt(chi2.ppf(0.5 * tail)), c_chi * np.sqrt(chi2.isf(0.5 * tail)), n_sb)
    wsb = wsb * ncchi_scaled_pdf(sb, c_chi, 2 * m, lam_chi)
    wsb /= wsb.sum()

    # port noise gain s given s_b: scaled non-central chi-squared
    c_sq = params.alpha * (1.0 - mu_sq) / (2.0 * (k + 1.0))
    nc = sb**2 / c_sq
    inner = stats.ncx2(2 * m, nc)
    s, ws = _gl(c_sq * inner.ppf(0.5 * tail), c_sq * inner.isf(0.5 * tail), n_in)
    dens = np.stack([ncx2_scaled_pdf(s[j], c_sq, 2 * m, nc[j]) for j in range(sb.size)])
    ws = ws * dens  # (n_sb, n_in)
    ws /= ws.sum(axis=1, keepdims=True)
    c1 = np.sqrt(2.0 / (sb2 * (1.0 - mu_sq)))
    thr = c1 * np.sqrt(x * (params.p1 * s + params.p2))  # (n_sb, n_in)

    # LoS-plus-block amplitude r_b: Rician around |eta|.  G(., s_b) steps
    # from 1 to 0 near the threshold amplitude over a width set by 1/c1 and
    # the spread of thr over the inner law, so each s_b column gets its own
    # three-panel rule with a dense middle panel on that step
    sig_r = np.sqrt(sb2 * mu_sq / 2.0)
    rice = stats.rice(params.eta_abs / sig_r, scale=sig_r)
    lo, hi = rice.ppf(0.5 * tail), rice.isf(0.5 * tail)
    t_lo, t_hi = thr.min(axis=1) / c1, thr.max(axis=1) / c1
    pad = 10.0 / c1
    a = np.clip(t_lo - pad, lo, hi)
    b = np.clip(t_hi + pad, lo, hi)
    side = max(n_r // 4, 8)
    panels = [_gl(np.full(sb.size, lo), a, side), _gl(a, b, n_r), _gl(b, np.full(sb.size, hi), side)]
    r = np.concatenate([p[0] for p in panels], axis=1).T  # (n_r, n_sb)
    wr = np.concatenate([p[1] for p in panels], axis=1).T
    wr = wr * rician_pdf(r, params.eta_abs, sig_r)
    wr /= wr.sum(axis=0)

    cdf = 1.0 - marcum_q1(c1 * r[:, :, None], thr[None, :, :])  # (n_r, n_sb, n_in)
    g = np.clip(np.einsum("ijl,jl->ij", cdf, ws), 0.0, 1.0)
    return wr, wsb, g


def _bdma_value(cfg, params, partition, x, n_r, n_sb, n_in, tail):
    wr, wsb, g = _bdma_block_terms(cfg, params, x, n_r, n_sb, n_in, tail)
    out = 1.0
    cache = {}
    for size in partition.block_sizes:  # block-index order
        if size not in cache:
            cache[size] = float(np.sum(wr * g**size, axis=0) @ wsb)
        out *= cache[size]
    return min(max(out, 0.0), 1.0)


def outage_bdma(cfg: SystemConfig, params: DerivedParams, partition: BlockPartition,
                rate: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Outage of the block-correlated FAS.

    Ports in a block are conditionally independent given the block state
    (r_b, s_b), so each block contributes a 2-D outer integral of G^{L_b}
    with G a 1-D inner integral over the port noise gain.
    """
    if partition.n_ports != cfg.n_ports:
        raise ValueError("partition does not cover cfg.n_ports ports")
    x = _rate_to_x(rate)
    n, n_in = quad.nodes_per_dim, quad.inner_nodes

    # the sharp step of G in r_b needs most of the nodes; the s_b and inner
    # grids are smooth and start at a quarter size
    def evaluate(level):
        n_r = max(n // 2, 8) << level
        n_sb = max(n // 4, 8) << level
        inner = min(n_in, max(n_in // 4, 8) << level)
        return _bdma_value(cfg, params, partition, x, n_r, n_sb, inner, quad.tail_mass)

    return _refine(evaluate, quad, "outage_bdma", rate=rate, nodes=n, inner_nodes=n_in)
