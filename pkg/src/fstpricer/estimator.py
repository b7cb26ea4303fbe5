"""scikit-learn style wrapper around the Fourier pricer.

``fit`` solves the pricing problem backward once on a grid centred on the
spot; ``predict`` reads prices off the solved surface at any spots inside the
grid. Parameters follow the estimator conventions so the pricer can be
cloned, grid-searched over numerics, or embedded in a pipeline.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .engine import (StepPlan, default_steps, price_european,
                     price_path_dependent, read_price)
from .grid import ValueSurface, build_grid, default_half_width
from .levy import MarketTerms, risk_neutral_drift
from .payoffs import Barrier, NoConstraint
from .regime import RegimeModel, RegimeSurfaces, price_rs


class FSTPricer(BaseEstimator):
    """Fourier space time-stepping option pricer.

    Parameters
    ----------
    model : LevyModel or RegimeModel
        Uncorrected model; the risk-neutral drift is set during ``fit``.
    payoff : PayoffSpec
    constraint : ConstraintSpec, optional
        ``None`` prices a European claim.
    spot, r, q, maturity : float
        Market terms. For regime models ``r`` is ignored in favour of the
        per-regime rates.
    n_points : int
        Grid size, a power of two.
    half_width : float, optional
        Log-space half-width; defaults to ``max(7.5, 10 sigma_eff sqrt(T))``.
    n_steps : int, optional
        Time steps; defaults to 1 for European claims and ``max(64, 256 T)``
        otherwise.
    continuity_correction : bool
        Shift a barrier to mimic continuous monitoring.

    Attributes
    ----------
    grid_ : Grid
    surface_ : ValueSurface or RegimeSurfaces
    price_ : float or ndarray of shape (K,)
    effective_barrier_ : float or None
    """

    def __init__(self, model=None, payoff=None, constraint=None, spot=100.0, r=0.0,
                 q=0.0, maturity=1.0, n_points=4096, half_width=None, n_steps=None,
                 continuity_correction=False):
        self.model = model
        self.payoff = payoff
        self.constraint = constraint
        self.spot = spot
        self.r = r
        self.q = q
        self.maturity = maturity
        self.n_points = n_points
        self.half_width = half_width
        self.n_steps = n_steps
        self.continuity_correction = continuity_correction

    def fit(self, X=None, y=None):
        """Solve backward to the valuation date. ``X`` and ``y`` are ignored."""
        if self.model is None or self.payoff is None:
            raise ValueError("FSTPricer needs both a model and a payoff")
        terms = MarketTerms(float(self.spot), float(self.r), float(self.q), float(self.maturity))
        constraint = NoConstraint() if self.constraint is None else self.constraint
        regime = isinstance(self.model, RegimeModel)
        self.model_ = (self.model.corrected(terms.q, terms.T) if regime
                       else risk_neutral_drift(self.model, terms))
        models = list(self.model_.models) if regime else self.model_
        L = self.half_width if self.half_width is not None else default_half_width(models, terms.T)
        self.grid_ = build_grid(terms.S0, L, self.n_points)
        M = self.n_steps if self.n_steps is not None else default_steps(constraint, terms.T)
        self.n_steps_ = M

        knock_in = isinstance(constraint, Barrier) and constraint.is_knock_in
        plan = StepPlan(M, constraint.knock_out_twin() if knock_in else constraint,
                        self.continuity_correction)
        solve = (lambda p: price_rs(self.model_, self.payoff, p, terms, self.grid_)) if regime else (
            lambda p: price_path_dependent(self.model_, self.payoff, p, terms, self.grid_))

        if isinstance(constraint, NoConstraint) and M == 1 and not regime:
            surface = price_european(self.model_, self.payoff, terms, self.grid_)
        else:
            surface = solve(plan)
        if knock_in:
            # parity holds node by node, so keep the whole knock-in surface
            vanilla = solve(StepPlan(M))
            surface = type(surface)(self.grid_, vanilla.values - surface.values,
                                    as_of_time=terms.T, meta=surface.meta)
        self.surface_ = surface
        self.effective_barrier_ = surface.meta.get("effective_barrier")
        self.price_ = (surface.center_values if isinstance(surface, RegimeSurfaces)
                       else surface.center_value)
        return self

    def predict(self, X):
        """Prices at the spots in ``X`` (shape (n,) or (n, 1)).

        Returns shape (n,) for a single model and (n, K) for K regimes.
        """
        check_is_fitted(self, "surface_")
        spots = check_array(X, ensure_2d=False, dtype=float)
        if spots.ndim == 2:
            if spots.shape[1] != 1:
                raise ValueError(f"expected one spot column, got {spots.shape[1]}")
            spots = spots[:, 0]
        if np.any(spots <= 0):
            raise ValueError("spot prices must be positive")
        surface = self.surface_
        if isinstance(surface, RegimeSurfaces):
            rows = [ValueSurface(self.grid_, v) for v in surface.values]
            return np.array([[read_price(s, x) for s in rows] for x in spots])
        return np.array([read_price(surface, x) for x in spots])
