"""
Critical-time estimators
"""
from vnv.estimators.base import (
    ALGORITHMS, PHASE_TRANSITION, SUBORDINATED, BaseEstimator, FitResult,
    PhaseTransitionParams, SearchConfig, median_estimate, registry,
)
from vnv.estimators.phase_transition import (
    PhaseTransitionEstimator, fit_exp_trend, fit_phase_transition,
)
from vnv.estimators.subordinated import SubordinatedEstimator, fit_subordinated

registry.register(SUBORDINATED, SubordinatedEstimator)
registry.register(PHASE_TRANSITION, PhaseTransitionEstimator)

__all__ = [
    'ALGORITHMS', 'PHASE_TRANSITION', 'SUBORDINATED', 'BaseEstimator', 'FitResult',
    'PhaseTransitionEstimator', 'PhaseTransitionParams', 'SearchConfig',
    'SubordinatedEstimator', 'fit_exp_trend', 'fit_phase_transition',
    'fit_subordinated', 'median_estimate', 'registry',
]
