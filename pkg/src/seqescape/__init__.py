"""Sequential noise-induced escapes in networks of coupled bistable units."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Diffusive,
    GaussianPulse,
    NetworkSpec,
    UnitParams,
    chain_network,
    drift_unit,
    network_drift,
    potential,
    two_node_network,
)
from .stochastic import EscapeRecord, SimConfig, run_ensemble, simulate_realization  # noqa: E402
