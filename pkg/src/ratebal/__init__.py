"""Optimal finite-rate sensor quantizers and rate balancing for distributed detection."""

__version__ = "0.1.0"

from ratebal.models import (  # noqa: E402
    KINDS,
    REAL_LINE,
    ExtendedInterval,
    ObservationModel,
    b_infinity,
    chernoff_infinity,
)
from ratebal.quantizer import (  # noqa: E402
    Design,
    DesignConfig,
    MonotoneQuantizer,
    QuantizerPmf,
    SizeCapError,
    beta_asymptotic,
    bhattacharyya,
    cell_pmf,
    chernoff,
    design_compander,
    design_coordinate_descent,
    optimal_design,
)
from ratebal.conditions import (  # noqa: E402
    check_split,
    concavity_check,
    laplacian_certificate,
    lemma3_check,
    scan_conjecture,
)
from ratebal.network import (  # noqa: E402
    EQUAL_PRIORS,
    Majorization,
    NetworkDesign,
    Priors,
    RateAllocation,
    analytic_pe,
    balanced_allocation,
    designed_network,
    joint_pmf,
    majorizes,
    network_bhattacharyya,
    pe_upper_bound,
    rebalance_pair,
    snr_to_m,
)
from ratebal.montecarlo import SimConfig, SimResult, simulate_pe  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
