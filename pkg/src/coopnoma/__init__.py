"""Cooperative NOMA downlink: SNR-level simulator and outage analysis."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    ChannelRealization,
    CooperationMode,
    RelayBehavior,
    SystemConfig,
    gamma_order_cdf,
    ordered_gain_cdf_exact,
    sample_realization,
)
from .protocol import (  # noqa: E402
    DecodeOutcome,
    Scheme,
    evaluate_decode,
    pair_rates_noma,
    pair_rates_tdma,
    snr_cooperative,
    snr_direct,
)
from .outage import (  # noqa: E402
    OutageFloorError,
    ZSpec,
    diversity_slope,
    outage_union_bound,
    overall_outage,
    z_cdf,
    z_cdf_high_snr,
)
from .pairing import gap_high_snr, pairing_study, sum_rate_gap_exact  # noqa: E402
from .montecarlo import (  # noqa: E402
    SweepSpec,
    run_bound_validation,
    run_capacity_search,
    run_outage_sweep,
)
