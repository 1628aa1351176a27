"""MC-Tree option pricing: Monte Carlo mixing over the shape of a recombining binomial tree."""

from mctree.tree import (
    MarketParams,
    OneStepTree,
    ScaledStep,
    LatticeValuation,
    one_step_from_theta,
    one_step_from_tau,
    scale_to_market,
    bias_lambda,
    terminal_distribution,
    european_tree_value,
    american_tree_value,
    call_payoff,
    put_payoff,
)
from mctree.mixing import MixingDensity, normalization_constant, pdf, cdf_theta, sample_theta
from mctree.density import CompoundDensity, q_direct, scaled_pdf, density_metrics, correction_factor
from mctree.rational import RationalNumerator, rational_numerator
from mctree.pricing import (
    PricingResult,
    RunConfig,
    mc_tree_european,
    mc_tree_european_many,
    mc_tree_american,
    put_call_parity_report,
)
from mctree.baselines import BaselineQuote, black_scholes, crr_price, jr_price, mc_gbm_european, lsm_american
from mctree.cva import DefaultModel, ExposureProfile, reach_probabilities, expected_exposure, cva_single_tree, mc_tree_cva

__version__ = "0.1.0"
