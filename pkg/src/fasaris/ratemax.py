"""Throughput-maximising rate selection on the IAE outage surrogate.

With x = 2^R - 1 the throughput T(x) = log2(1 + x) (1 - P(x)) is searched in
three regions: a concave low-SNR region x <= lambda0, a high-SNR region
x >= lambda1 where the slope sign is set by a one-dimensional function
D_omega, and the bracket [lambda0, lambda1] in between, which is grid searched.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import DerivedParams, SystemConfig
from .corrmodel import BlockPartition
from .mathfn import psi_inv
from .outage import IaeSurrogate, QuadratureSpec, _gbar_law, _gl, gbar, gbar_domain, outage_iae

__all__ = [
    "OptimizerSettings",
    "RateSearchResult",
    "MonotoneRegime",
    "throughput",
    "throughput_curve",
    "u_cap",
    "lambda0",
    "lambda1",
    "psi_weights",
    "omega",
    "d_omega",
    "newton_root_domega",
    "optimize_rate",
]

LN2 = np.log(2.0)
SQRT_2PI = np.sqrt(2.0 * np.pi)
GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


class MonotoneRegime(ArithmeticError):
    """D_omega has no sign change: throughput decreases over the high-SNR region."""


@dataclass(frozen=True)
class OptimizerSettings:
    grid_points: int = 200       # M_Lambda
    gradient_evals: int = 200    # N_g, surrogate evaluations allowed in region 1
    newton_iters: int = 50       # N_n
    gradient_tol: float = 1e-8
    golden_tol: float = 1e-6     # bracket width relative to max(1, x)
    u_tail: float = 1e-8
    x_ref: float | None = None   # where Omega is evaluated; None means lambda1

    def __post_init__(self):
        if self.grid_points < 2 or self.gradient_evals < 1 or self.newton_iters < 1:
            raise ValueError("optimizer budgets must be positive")


@dataclass(frozen=True)
class RateSearchResult:
    lambda0: float
    lambda1: float
    u_cap: float
    omega: float
    x_omega: float | None
    x_star: float
    x_star2: float
    x_star3: float
    r_star: float
    r_star2: float
    r_star3: float
    r_best: float
    r_final: float
    t_at_candidates: tuple
    t_final: float
    region1: str
    region2: str
    evaluations: dict = field(default_factory=dict)

    @property
    def interval_bits(self) -> float:
        return float(np.log2((1.0 + self.lambda1) / (1.0 + self.lambda0)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t_at_candidates"] = list(self.t_at_candidates)
        d["interval_bits"] = self.interval_bits
        return d


def _fd_step(x):
    return max(1e-6, 1e-6 * x)


def throughput(rate: float, cfg: SystemConfig, params: DerivedParams,
               partition: BlockPartition, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """R (1 - P_iae(R))."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rate == 0:
        return 0.0
    return rate * (1.0 - outage_iae(cfg, params, partition, rate, quad))


def throughput_curve(rates, cfg: SystemConfig, params: DerivedParams,
                     partition: BlockPartition, quad: QuadratureSpec = QuadratureSpec()):
    """Vectorised throughput on frozen surrogate nodes (for exhaustive grids)."""
    rates = np.asarray(rates, dtype=float)
    sur = IaeSurrogate(cfg, params, partition.n_blocks, quad, nodes=2 * quad.nodes_per_dim)
    return rates * (1.0 - sur.outage(np.expm1(rates * LN2)))


def u_cap(params: DerivedParams, cfg: SystemConfig, tail: float = 1e-8) -> float:
    """Upper quantile of the channel-norm law used to truncate the concavity bound."""
    return float(_gbar_law(params, cfg).isf(tail))


def _shape_constant(params: DerivedParams) -> float:
    a = params.a
    # a^2 = 2KM is built from a square root, so allow for one ulp of rounding
    if a * a <= 2.0 * (1 + 1e-12):
        raise ValueError(
            f"a^2 = 2KM = {a * a:.3g} must exceed 2; increase the Rician factor or the element count"
        )
    return (psi_inv(1.0 / (a * a)) / a) ** 2


def lambda0(params: DerivedParams, u: float) -> float:
    if not u > 0:
        raise ValueError("U must be positive")
    return _shape_constant(params) / (params.p1_bar * u + params.p2_bar)


def lambda1(params: DerivedParams) -> float:
    return _shape_constant(params) / params.p2_bar


def psi_weights(s, x, params: DerivedParams, cfg: SystemConfig):
    """The high-SNR integrand Psi(s, x) shared by W1 and W2."""
    s = np.asarray(s, dtype=float)
    root = np.sqrt(params.p1_bar * s + params.p2_bar)
    return 0.5 * np.sqrt(root / params.a) * np.exp(-0.5 * (root * np.sqrt(x) - params.a) ** 2) \
        * gbar(s, params, cfg)


def _psi_nodes(params, cfg, quad):
    lo, hi = gbar_domain(params, cfg, quad.tail_mass)
    s, w = _gl(lo, hi, 2 * quad.nodes_per_dim)
    return s, w


def w_integrals(x, params: DerivedParams, cfg: SystemConfig, quad: QuadratureSpec = QuadratureSpec()):
    """(W1(x), W2(x))."""
    s, w = _psi_nodes(params, cfg, quad)
    psi_val = psi_weights(s, x, params, cfg)
    root = np.sqrt(params.p1_bar * s + params.p2_bar)
    return float(w @ psi_val), float(w @ (root * psi_val)) / SQRT_2PI


def omega(params: DerivedParams, x_ref: float, cfg: SystemConfig,
          quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Psi-weighted mean of sqrt(p1_bar s + p2_bar)."""
    if not x_ref > 0:
        raise ValueError("x_ref must be positive")
    s, w = _psi_nodes(params, cfg, quad)
    root = np.sqrt(params.p1_bar * s + params.p2_bar)
    # log-domain weights so the ratio survives when Psi underflows
    with np.errstate(divide="ignore"):
        logw = (np.log(w) + 0.5 * np.log(root / params.a)
                - 0.5 * (root * np.sqrt(x_ref) - params.a) ** 2 + np.log(gbar(s, params, cfg)))
    keep = np.isfinite(logw)
    if not keep.any():
        raise ArithmeticError("ratemax.omega: Psi weights vanish on the whole domain")
    wt = np.exp(logw[keep] - logw[keep].max())
    return float(wt @ root[keep] / wt.sum())


def d_omega(x, om: float):
    """Sign function of the high-SNR throughput slope."""
    x = np.asarray(x, dtype=float)
    lg = np.log1p(x) / LN2
    out = x**0.25 / ((1.0 + x) * LN2) + 0.25 * x**-0.75 * lg - om / SQRT_2PI * x**-0.25 * lg
    return float(out) if out.ndim == 0 else out


def _d_omega_dlogx(x, om):
    """x * dD/dx, the derivative with respect to log x."""
    lg = np.log1p(x) / LN2
    inv = 1.0 / ((1.0 + x) * LN2)
    c = om / SQRT_2PI
    d1 = (0.25 * x**-0.75 * (1.0 + x) - x**0.25) / ((1.0 + x) ** 2 * LN2)
    d2 = -0.1875 * x**-1.75 * lg + 0.25 * x**-0.75 * inv
    d3 = 0.25 * c * x**-1.25 * lg - c * x**-0.25 * inv
    return x * (d1 + d2 + d3)


def newton_root_domega(om: float, bracket=None, max_iter: int = 50, xtol: float = 1e-12):
    """Root of D_omega by safeguarded Newton in log x.

    Returns (x_omega, newton_steps).  Newton steps leaving the sign-change
    bracket are replaced by bisection.  Raises MonotoneRegime when the
    bracket shows no sign change.
    """
    if not om > 0:
        raise ValueError("omega must be positive")
    if bracket is None:
        lo, hi = 1e-12, 1.0
        while d_omega(hi, om) > 0 and hi < 1e300:
            lo, hi = hi, hi * 4.0
    else:
        lo, hi = (float(v) for v in bracket)
    d_lo, d_hi = d_omega(lo, om), d_omega(hi, om)
    if not (d_lo > 0 > d_hi):
        raise MonotoneRegime(f"D_omega has no sign change on [{lo:.3g}, {hi:.3g}]")
    u_lo, u_hi = np.log(lo), np.log(hi)
    u = 0.5 * (u_lo + u_hi)
    steps = 0
    for steps in range(1, max_iter + 1):
        x = np.exp(u)
        d = d_omega(x, om)
        if d > 0:
            u_lo = u
        else:
            u_hi = u
        slope = _d_omega_dlogx(x, om)
        u_new = u - d / slope if slope != 0 else np.nan
        if not (u_lo < u_new < u_hi):
            u_new = 0.5 * (u_lo + u_hi)
        if abs(u_new - u) < xtol or abs(d) < 1e-15:
            u = u_new
            break
        u = u_new
    # bisection fallback if Newton ran out of iterations
    while u_hi - u_lo > xtol and abs(d_omega(np.exp(u), om)) > 1e-14:
        u = 0.5 * (u_lo + u_hi)
        if d_omega(np.exp(u), om) > 0:
            u_lo = u
        else:
            u_hi = u
    return float(np.exp(u)), steps


class _Objective:
    """Memoised T(x) on the frozen IAE surrogate, counting evaluations per stage."""

    def __init__(self, surrogate: IaeSurrogate):
        self.sur = surrogate
        self.cache = {}
        self.counts = {}

    def __call__(self, x, stage: str):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        new = [v for v in dict.fromkeys(x.tolist()) if v not in self.cache]
        if new:
            xs = np.array(new)
            vals = np.log1p(xs) / LN2 * (1.0 - self.sur.outage(xs))
            self.cache.update(zip(new, vals.tolist()))
            self.counts[stage] = self.counts.get(stage, 0) + len(new)
        return np.array([self.cache[v] for v in x.tolist()])

    def one(self, x, stage):
        return float(self(x, stage)[0])

    def slope(self, x, stage):
        h = _fd_step(x)
        lo = max(x - h, 0.0)
        v = self(np.array([lo, x + h]), stage)
        return float((v[1] - v[0]) / (x + h - lo))


def _gradient_ascent(obj: _Objective, upper: float, settings: OptimizerSettings):
    """Maximise the concave T on [0, upper] by projected gradient ascent."""
    budget = settings.gradient_evals
    x = 0.5 * upper
    g = obj.slope(x, "gradient")
    step = 0.25 * upper / max(abs(g), 1e-300)
    t_x = obj.one(x, "gradient")
    while obj.counts.get("gradient", 0) + 3 <= budget:
        x_new = min(max(x + step * g, 0.0), upper)
        t_new = obj.one(x_new, "gradient")
        if t_new > t_x:
            moved = abs(x_new - x)
            x, t_x = x_new, t_new
            step *= 2.0
            if moved <= settings.gradient_tol * max(1.0, x):
                break
            g = obj.slope(x, "gradient")
        else:
            step *= 0.5
            if step * abs(g) <= settings.gradient_tol * max(1.0, x):
                break
    return x


def _golden(obj: _Objective, lo: float, hi: float, tol: float):
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = obj.one(c, "golden"), obj.one(d, "golden")
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = obj.one(c, "golden")
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = obj.one(d, "golden")
    return c if fc >= fd else d


def optimize_rate(cfg: SystemConfig, params: DerivedParams, partition: BlockPartition,
                  settings: OptimizerSettings = OptimizerSettings(),
                  quad: QuadratureSpec = QuadratureSpec()) -> RateSearchResult:
    """Three-region rate search; the final rate is clamped to [rate_min, rate_max]."""
    stage = "setup"
    try:
        sur = IaeSurrogate(cfg, params, partition.n_blocks, quad, nodes=2 * quad.nodes_per_dim)
        obj = _Objective(sur)
        u = u_cap(params, cfg, settings.u_tail)
        lam0, lam1 = lambda0(params, u), lambda1(params)

        stage = "region1"
        if obj.slope(lam0, "region1") >= 0:
            x1, region1 = lam0, "boundary"
        else:
            x1, region1 = _gradient_ascent(obj, lam0, settings), "gradient"

        stage = "region2"
        x_ref = settings.x_ref if settings.x_ref is not None else lam1
        om = omega(params, x_ref, cfg, quad)
        try:
            x_om, n_newton = newton_root_domega(om, max_iter=settings.newton_iters)
            x2 = max(lam1, x_om)
            region2 = "quasiconcave" if x_om > lam1 else "decreasing"
        except MonotoneRegime:
            x_om, n_newton, x2, region2 = None, 0, lam1, "decreasing"
        obj.counts["newton_steps"] = n_newton

        stage = "region3"
        if lam1 > lam0:
            grid = np.geomspace(lam0, lam1, settings.grid_points)
            vals = obj(grid, "grid")
            i = int(np.argmax(vals))
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
            x3 = _golden(obj, lo, hi, settings.golden_tol * max(1.0, grid[i]))
            if obj.one(x3, "golden") < vals[i]:
                x3 = float(grid[i])
        else:
            x3 = lam0

        stage = "selection"
        xs = (x1, x2, x3)
        rs = tuple(float(np.log2(1.0 + x)) for x in xs)
        ts = tuple(obj.one(x, "selection") for x in xs)
        best = int(np.argmax(ts))
        r_best = rs[best]
        r_final = float(min(max(r_best, cfg.rate_min), cfg.rate_max))
        t_final = ts[best] if r_final == r_best else \
            (0.0 if r_final == 0 else obj.one(np.expm1(r_final * LN2), "selection"))
    except MonotoneRegime:
        raise
    except Exception as exc:  # name the stage for callers
        raise RuntimeError(f"ratemax.optimize_rate failed in stage '{stage}': {exc}") from exc

    counts = {k: v for k, v in obj.counts.items()}
    counts["surrogate_total"] = sum(v for k, v in counts.items() if k != "newton_steps")
    counts["budget"] = settings.grid_points + settings.gradient_evals + settings.newton_iters + 16
    return RateSearchResult(
        lambda0=lam0, lambda1=lam1, u_cap=u, omega=om, x_omega=x_om,
        x_star=x1, x_star2=x2, x_star3=x3,
        r_star=rs[0], r_star2=rs[1], r_star3=rs[2],
        r_best=r_best, r_final=r_final, t_at_candidates=ts, t_final=t_final,
        region1=region1, region2=region2, evaluations=counts,
    )
