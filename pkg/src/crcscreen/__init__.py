"""Decision-support engine for personalized colorectal-cancer screening.

Computes CRC posteriors from patient evidence, values screening strategies
by an information-theoretic multi-attribute utility, recommends optimal
screening/colonoscopy policies, allocates tests across populations under
operational limits, and benchmarks new screening devices.
"""

__version__ = "0.1.0"

from .bn import (
    DiscreteNetwork,
    PatientEvidence,
    load_bundled_network,
    load_network,
    posterior,
    posterior_crc,
)
from .infovalue import entropy, expected_v_info, expected_v_info_given_result, v_info
from .policy import (
    Strategy,
    StrategyEvaluation,
    col_if_positive,
    dominance_filter,
    enumerate_strategies,
    evaluate_strategy,
    recommend,
)
from .population import (
    Population,
    allocate,
    generate_population,
    load_population,
    national_baseline,
    simulate,
)
from .preferences import (
    PreferenceParams,
    calibrate_utility,
    default_params,
    elicit_lambda_pair,
    replay_transcript,
    robustify_lambda,
)
from .screening import (
    InterventionCatalog,
    InterventionSpec,
    combined_comfort,
    default_catalog,
    result_distribution,
)

__all__ = [
    "__version__",
    "DiscreteNetwork", "PatientEvidence", "load_network", "load_bundled_network",
    "posterior", "posterior_crc",
    "entropy", "v_info", "expected_v_info", "expected_v_info_given_result",
    "Strategy", "StrategyEvaluation", "col_if_positive", "enumerate_strategies",
    "evaluate_strategy", "recommend", "dominance_filter",
    "Population", "generate_population", "load_population",
    "allocate", "national_baseline", "simulate",
    "PreferenceParams", "default_params", "calibrate_utility",
    "elicit_lambda_pair", "robustify_lambda", "replay_transcript",
    "InterventionCatalog", "InterventionSpec", "default_catalog",
    "result_distribution", "combined_comfort",
]
