"""Fourier space time-stepping (FST) option pricing.

Prices European, barrier and American options under exponential-Lévy models,
Markov regime switching and two correlated assets by evolving the value
function with the model's characteristic exponent in frequency space.
"""
from .engine import (StepPlan, price_european, price_knock_in,
                     price_path_dependent, read_price, step)
from .estimator import FSTPricer
from .grid import Grid, ValueSurface, build_grid, default_half_width, sample_payoff
from .levy import (CGMY, GBM, VG, Kou, MarketTerms, Merton, char_exponent,
                   risk_neutral_drift, validate_params)
from .payoffs import (American, Barrier, Call, Custom, DigitalCall,
                      NoConstraint, Put, Straddle, apply_constraint, eval_payoff)
from .regime import RegimeModel, build_generator, matrix_exponential, price_rs, rs_step

__version__ = "0.1.0"

__all__ = [
    "American", "Barrier", "CGMY", "Call", "Custom", "DigitalCall", "FSTPricer", "GBM",
    "Grid", "Kou", "MarketTerms", "Merton", "NoConstraint", "Put", "RegimeModel",
    "StepPlan", "Straddle", "VG", "ValueSurface", "apply_constraint", "build_generator",
    "build_grid", "char_exponent", "default_half_width", "eval_payoff",
    "matrix_exponential", "price_european", "price_knock_in", "price_path_dependent",
    "price_rs", "read_price", "risk_neutral_drift", "rs_step", "sample_payoff", "step",
    "validate_params",
]
