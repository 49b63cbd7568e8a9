"""Interbank exposure networks: construction, structural metrics and default cascades."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    DegreeRecord,
    InterbankNetwork,
    Transaction,
    build_daily_network,
    degrees,
    in_neighbors,
    out_neighbors,
)
from .contagion import (  # noqa: E402
    BalanceSheet,
    CascadeResult,
    ContagionParams,
    all_seed_clusters,
    buffer_sweep,
    build_balance_sheets,
    cascade,
    is_insolvent,
)
from .synth import GeneratorConfig, generate_days, generate_network  # noqa: E402
