"""Population MCMC over tempered reversible-jump mixture chains."""

from .core import DEFAULT_BANDS, DEFAULT_CONSTRAINED_ZETA, Population
from .crossover import crossover_fixed_dim, crossover_variable_dim, permute_labels
from .exchange import constrained_exchange, exchange_basic, exchange_delayed_rejection
from .ladder import (
    GaussianTemperedToy,
    Ladder,
    LadderTuneResult,
    exchange_criterion,
    ladder_geometric,
    ladder_tune_iba,
    pilot_mean_loglik,
)
from .snooker import snooker_birth_death
from .sweep import PopulationConfig, population_sweep
from .tempering import StConfig, simulated_tempering_sweep, st_contexts

__all__ = [
    "DEFAULT_BANDS",
    "DEFAULT_CONSTRAINED_ZETA",
    "GaussianTemperedToy",
    "Ladder",
    "LadderTuneResult",
    "Population",
    "PopulationConfig",
    "StConfig",
    "constrained_exchange",
    "crossover_fixed_dim",
    "crossover_variable_dim",
    "exchange_basic",
    "exchange_criterion",
    "exchange_delayed_rejection",
    "ladder_geometric",
    "ladder_tune_iba",
    "permute_labels",
    "pilot_mean_loglik",
    "population_sweep",
    "simulated_tempering_sweep",
    "snooker_birth_death",
    "st_contexts",
]
