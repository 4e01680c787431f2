"""System configuration, large-scale parameters and channel sampling."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .corrmodel import BlockPartition

__all__ = [
    "SystemConfig",
    "DerivedParams",
    "ChannelSample",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_lin",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "save_config",
    "derive_params",
    "los_vectors",
    "sample_channel",
]

# seed for the fixed unit-modulus LoS phases
AUX_SEED = 20240611
POWER_FIELDS = ("tx_power", "aris_budget", "noise_aris", "noise_mu")


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Physical parameters. Powers are in watts, gains linear."""

    m_elements: int = 4
    n_ports: int = 100
    aperture: float = 5.0
    rician_k: float = 1.0
    mu_sq: float = 0.97
    tx_power: float = float(dbm_to_watts(10.0))
    aris_budget: float = float(dbm_to_watts(10.0))
    noise_aris: float = float(dbm_to_watts(-104.0))
    noise_mu: float = float(dbm_to_watts(-104.0))
    rho_max_sq: float = float(db_to_lin(40.0))
    pos_bs: tuple = (0.0, 0.0, 5.0)
    pos_aris: tuple = (15.0, 15.0, 5.0)
    pos_mu: tuple = (55.0, 0.0, 0.0)
    ple_aris_mu: float = 2.2
    ple_bs_aris: float = 2.0
    # free-space loss at 1 m for a 6 GHz carrier
    ref_loss_db: float = -48.0
    rate_min: float = 0.0
    rate_max: float = 6.0

    def __post_init__(self):
        for name in ("pos_bs", "pos_aris", "pos_mu"):
            pos = tuple(float(v) for v in getattr(self, name))
            if len(pos) != 3:
                raise ValueError(f"{name} must have three coordinates")
            object.__setattr__(self, name, pos)
        if any(not getattr(self, f) > 0 for f in POWER_FIELDS):
            raise ValueError("all powers must be positive")
        if not self.rho_max_sq > 0:
            raise ValueError("rho_max_sq must be positive")
        if self.m_elements < 1:
            raise ValueError("m_elements must be >= 1")
        if self.n_ports < 2:
            raise ValueError("n_ports must be >= 2")
        if not self.aperture > 0:
            raise ValueError("aperture must be positive")
        if not 0.0 < self.mu_sq < 1.0:
            raise ValueError("mu_sq must lie in (0, 1)")
        if self.rician_k < 0:
            raise ValueError("rician_k must be >= 0")
        if self.rate_min > self.rate_max:
            raise ValueError("rate_min must not exceed rate_max")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def with_power_dbm(self, p_dbm: float, tie_budget: bool = True) -> "SystemConfig":
        """Set the BS power (and by default the ARIS budget) in dBm."""
        p = float(dbm_to_watts(p_dbm))
        return self.replace(tx_power=p, aris_budget=p if tie_budget else self.aris_budget)


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SystemConfig))


def config_from_dict(doc: dict) -> SystemConfig:
    """Build a config from a JSON-style mapping with powers in dBm.

    Unknown keys are ignored so that a run document can carry extra blocks.
    ``aris_budget`` may be null, meaning "same as tx_power".
    """
    kw = {k: doc[k] for k in FIELD_NAMES if k in doc}
    if kw.get("aris_budget", 0) is None:
        kw["aris_budget"] = kw.get("tx_power", watts_to_dbm(SystemConfig.tx_power))
    elif "tx_power" in kw and "aris_budget" not in kw:
        kw["aris_budget"] = kw["tx_power"]
    for k in POWER_FIELDS:
        if k in kw:
            kw[k] = float(dbm_to_watts(float(kw[k])))
    for k in ("m_elements", "n_ports"):
        if k in kw:
            if float(kw[k]) != int(kw[k]):
                raise ValueError(f"{k} must be an integer")
            kw[k] = int(kw[k])
    return SystemConfig(**kw)


def config_to_dict(cfg: SystemConfig) -> dict:
    doc = dataclasses.asdict(cfg)
    for k in POWER_FIELDS:
        doc[k] = float(watts_to_dbm(doc[k]))
    for k in ("pos_bs", "pos_aris", "pos_mu"):
        doc[k] = list(doc[k])
    return doc


def load_config(path) -> SystemConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: SystemConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)


@dataclass(frozen=True)
class DerivedParams:
    """Large-scale quantities derived from a config.

    ``p1`` and ``p2`` are the raw-SNR thresholds per unit of 2^R - 1; at a
    target rate R they are multiplied by 2^R - 1.  ``snr_power`` is the power
    multiplying A_k^2 in the SNR (P, or P * N_b with N_b BS antennas).
    """

    alpha: float
    beta: float
    sigma_bar_sq: float
    rho_star: float
    eta_abs: float
    a: float
    p1: float
    p2: float
    p1_bar: float
    p2_bar: float
    snr_power: float

    def replace(self, **changes) -> "DerivedParams":
        return dataclasses.replace(self, **changes)


def _thresholds(cfg: SystemConfig, sigma_bar_sq, rho_star, power):
    p1 = cfg.noise_aris / power
    p2 = cfg.noise_mu / (power * rho_star**2)
    return p1, p2, 2.0 * p1 / sigma_bar_sq, 2.0 * p2 / sigma_bar_sq


def derive_params(cfg: SystemConfig) -> DerivedParams:
    bs, aris, mu = (np.asarray(p) for p in (cfg.pos_bs, cfg.pos_aris, cfg.pos_mu))
    d_ba = float(np.linalg.norm(aris - bs))
    d_am = float(np.linalg.norm(mu - aris))
    if d_ba == 0.0 or d_am == 0.0:
        raise ValueError("coincident node positions")
    ref_gain = float(db_to_lin(cfg.ref_loss_db))
    alpha = ref_gain * d_am ** (-cfg.ple_aris_mu)
    beta = ref_gain * d_ba ** (-cfg.ple_bs_aris)
    m, k = cfg.m_elements, cfg.rician_k
    rho_star = min(
        np.sqrt(cfg.aris_budget / (m * (cfg.tx_power * beta + cfg.noise_aris))),
        np.sqrt(cfg.rho_max_sq),
    )
    sigma_bar_sq = m * alpha * beta / (k + 1.0)
    p1, p2, p1b, p2b = _thresholds(cfg, sigma_bar_sq, rho_star, cfg.tx_power)
    return DerivedParams(
        alpha=alpha,
        beta=beta,
        sigma_bar_sq=sigma_bar_sq,
        rho_star=float(rho_star),
        eta_abs=float(np.sqrt(sigma_bar_sq * k * m)),
        a=float(np.sqrt(2.0 * k * m)),
        p1=p1,
        p2=p2,
        p1_bar=p1b,
        p2_bar=p2b,
        snr_power=cfg.tx_power,
    )


@dataclass(frozen=True)
class ChannelSample:
    """One or more channel realisations.

    Random arrays carry an optional leading trial axis:
    ``h_tilde_blocks`` (..., B, M), ``port_innovations`` and ``h_ports``
    (..., N, M).  ``g`` and ``h_bar`` are deterministic M-vectors.
    """

    g: np.ndarray
    h_bar: np.ndarray
    h_tilde_blocks: np.ndarray
    port_innovations: np.ndarray
    h_ports: np.ndarray
    block_of_port: np.ndarray = field(repr=False)


def los_vectors(m: int, seed: int = AUX_SEED):
    """Unit-modulus LoS vectors (h_bar, g_bar) with fixed pseudo-random phases."""
    rng = np.random.default_rng(seed)
    ph = rng.uniform(0.0, 2.0 * np.pi, size=(2, m))
    return np.exp(1j * ph[0]), np.exp(1j * ph[1])


def _cn(rng, var, shape):
    z = rng.standard_normal(shape + (2,)).view(np.complex128)[..., 0]
    z *= np.sqrt(var / 2.0)
    return z


def sample_channel(cfg: SystemConfig, partition: BlockPartition, rng: np.random.Generator,
                   params: DerivedParams | None = None, trials: int | None = None) -> ChannelSample:
    """Draw ``trials`` realisations (a single one when ``trials`` is None)."""
    if partition.n_ports != cfg.n_ports:
        raise ValueError("partition does not cover cfg.n_ports ports")
    if params is None:
        params = derive_params(cfg)
    m, k, mu_sq = cfg.m_elements, cfg.rician_k, cfg.mu_sq
    lead = () if trials is None else (int(trials),)
    var = params.alpha / (k + 1.0)
    h_bar, g_bar = los_vectors(m)
    g = np.sqrt(params.beta) * g_bar
    h_tilde = _cn(rng, var, lead + (partition.n_blocks, m))
    e = _cn(rng, var, lead + (cfg.n_ports, m))
    blocks = partition.block_of_port()
    h = (np.sqrt(params.alpha * k / (k + 1.0)) * h_bar
         + np.sqrt(mu_sq) * h_tilde[..., blocks, :]
         + np.sqrt(1.0 - mu_sq) * e)
    return ChannelSample(g=g, h_bar=h_bar, h_tilde_blocks=h_tilde, port_innovations=e,
                         h_ports=h, block_of_port=blocks)
