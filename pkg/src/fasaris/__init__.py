"""Outage and throughput analysis of a fluid-antenna receiver behind an active RIS."""
from .channel import (
    DerivedParams,
    SystemConfig,
    config_from_dict,
    derive_params,
    load_config,
    sample_channel,
)
from .corrmodel import BlockPartition, CorrelationSpec, bdma_partition, jakes_matrix
from .ctrl import direct_link_bounds, nb_transform, optimal_phases, perfect_csi_config
from .mcsim import McEstimate, SimMode, mc_outage, mc_throughput
from .outage import QuadratureSpec, outage_bdma, outage_iae
from .ratemax import OptimizerSettings, RateSearchResult, optimize_rate, throughput

__version__ = "0.1.0"


def partition_for(cfg: SystemConfig) -> BlockPartition:
    """Block partition for the port array described by ``cfg``."""
    return bdma_partition(CorrelationSpec(cfg.n_ports, cfg.aperture, cfg.mu_sq))
