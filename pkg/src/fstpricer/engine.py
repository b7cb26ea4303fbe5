"""Fourier space time-stepping kernel.

One backward step of length dt is exact in frequency space: the transformed
value function is multiplied by ``exp((psi(omega) - r) * dt)``. Early exercise
and knock-out features are imposed in real space between steps.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import (InvalidConstraint, NumericalBlowup, OutOfDomain,
                         TrustedRegionWarning)
from .grid import ValueSurface, sample_payoff
from .levy import char_exponent, effective_volatility
from .payoffs import (American, Barrier, NoConstraint, apply_constraint,
                      knockout_mask, snap_barrier)

logger = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e12
RESIDUE_WARN = 1e-10
RESIDUE_ABORT = 1e-6
CONTINUITY_BETA = 0.5826  # -zeta(1/2) / sqrt(2 pi)


@dataclass(frozen=True)
class StepPlan:
    M: int = 1
    constraint: object = field(default_factory=NoConstraint)
    continuity_correction: bool = False

    def __post_init__(self):
        if not (isinstance(self.M, (int, np.integer)) and self.M >= 1):
            raise ValueError(f"step count M must be an integer >= 1, got {self.M!r}")
        if self.continuity_correction and not isinstance(self.constraint, Barrier):
            raise ValueError("continuity_correction only applies to barrier constraints")

    def dt(self, T: float) -> float:
        return T / self.M


def default_steps(constraint, T: float) -> int:
    if isinstance(constraint, NoConstraint):
        return 1
    return max(64, math.ceil(256 * T))


def _check_corrected(model, r, q):
    gap = abs(char_exponent(model, -1j) - (r - q))
    if gap > 1e-10:
        raise ValueError(
            f"model is not drift-corrected for r={r}, q={q} (psi(-i) misses by {gap:.3g}); "
            "pass it through risk_neutral_drift first")


def frequency_multiplier(model, r: float, dt: float, grid) -> np.ndarray:
    """``exp((psi - r) * dt)`` on the half spectrum, Hermitian at the Nyquist bin."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    mult = np.exp((char_exponent(model, grid.omega_half) - r) * dt)
    # the Nyquist bin is its own mirror image; average it with its conjugate
    mult[-1] = mult[-1].real
    return mult


def evolve(values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    """Apply a half-spectrum multiplier to real nodal values."""
    n = values.shape[-1]
    coeffs = np.fft.rfft(values, axis=-1) * mult
    residue = (np.max(np.abs(coeffs[..., 0].imag)) + np.max(np.abs(coeffs[..., -1].imag))) / n
    if residue > RESIDUE_ABORT:
        raise NumericalBlowup(f"imaginary residue {residue:.3g} after inverse transform")
    if residue > RESIDUE_WARN:
        logger.warning("imaginary residue %.3g discarded", residue)
    out = np.fft.irfft(coeffs, n=n, axis=-1)
    scale = max(np.max(np.abs(values)), np.finfo(float).tiny)
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > BLOWUP_FACTOR * scale:
        raise NumericalBlowup("evolved values exceed 1e12 times the input magnitude; "
                              "check the model parameters and the domain width")
    return out


def step(surface: ValueSurface, model, r: float, dt: float, grid) -> ValueSurface:
    """Advance ``surface`` by ``dt`` years of time-to-maturity."""
    mult = frequency_multiplier(model, r, dt, grid)
    return replace(surface, values=evolve(surface.values, mult),
                   as_of_time=surface.as_of_time + dt, meta=dict(surface.meta))


def price_european(model, payoff, terms, grid) -> ValueSurface:
    """Single step of length T; the spot price is the centre node."""
    _check_corrected(model, terms.r, terms.q)
    return step(sample_payoff(payoff, grid), model, terms.r, terms.T, grid)


def resolve_constraint(plan: StepPlan, model, T: float, grid):
    """Return the constraint actually applied and the snapped barrier level (or None)."""
    constraint = plan.constraint
    if not isinstance(constraint, Barrier):
        return constraint, None
    H = constraint.H
    if plan.continuity_correction:
        shift = CONTINUITY_BETA * _sigma_eff(model) * math.sqrt(plan.dt(T))
        # move the discrete barrier towards the spot
        H = H * math.exp(shift if constraint.is_down else -shift)
        constraint = replace(constraint, H=H)
    snapped = snap_barrier(H, grid)
    return constraint, (None if snapped is None else snapped[1])


def _sigma_eff(model) -> float:
    models = getattr(model, "models", None)
    if models is not None:
        return max(effective_volatility(m) for m in models)
    return effective_volatility(model)


def price_path_dependent(model, payoff, plan: StepPlan, terms, grid) -> ValueSurface:
    """M steps with the plan's constraint imposed after each one.

    Knock-outs are also imposed on the terminal payoff. The snapped barrier is
    reported in ``surface.meta["effective_barrier"]``.
    """
    constraint = plan.constraint
    if isinstance(constraint, Barrier) and constraint.is_knock_in:
        raise InvalidConstraint("knock-in barriers are priced by price_knock_in")
    _check_corrected(model, terms.r, terms.q)

    constraint, effective = resolve_constraint(plan, model, terms.T, grid)
    intrinsic = sample_payoff(payoff, grid)
    surface = apply_constraint(constraint, intrinsic, intrinsic, grid)
    dt = plan.dt(terms.T)
    mult = frequency_multiplier(model, terms.r, dt, grid)
    values = surface.values
    knocked = knockout_mask(constraint, grid) if isinstance(constraint, Barrier) else None
    for _ in range(plan.M):
        values = evolve(values, mult)
        if isinstance(constraint, American):
            values = np.maximum(values, intrinsic.values)
        elif knocked is not None:
            values[knocked] = constraint.rebate
    meta = {"M": plan.M, "dt": dt}
    if isinstance(constraint, Barrier):
        meta["effective_barrier"] = effective
        meta["continuity_correction"] = plan.continuity_correction
    return ValueSurface(grid, values, as_of_time=terms.T, meta=meta)


def price_knock_in(model, payoff, barrier: Barrier, plan: StepPlan, terms, grid) -> float:
    """Knock-in price at S0 as vanilla minus the zero-rebate knock-out.

    The vanilla leg uses the same M steps as the knock-out leg, so a barrier
    outside the grid gives exactly zero.
    """
    if not barrier.is_knock_in:
        raise InvalidConstraint(f"{barrier.kind} is not a knock-in barrier")
    out_plan = replace(plan, constraint=barrier.knock_out_twin())
    vanilla = price_path_dependent(model, payoff, replace(plan, constraint=NoConstraint(),
                                                          continuity_correction=False),
                                   terms, grid)
    knocked = price_path_dependent(model, payoff, out_plan, terms, grid)
    return vanilla.center_value - knocked.center_value


def read_price(surface: ValueSurface, S_query: float, grid=None) -> float:
    """Value at ``S_query`` by 4-point Lagrange interpolation in log price."""
    grid = surface.grid if grid is None else grid
    x = grid.nodes
    if not (S_query > 0):
        raise OutOfDomain(f"query price must be positive, got {S_query!r}")
    xq = math.log(S_query)
    if xq < x[0] or xq > x[-1]:
        raise OutOfDomain(f"S={S_query} lies outside the grid "
                          f"[{grid.prices[0]:.6g}, {grid.prices[-1]:.6g}]")
    lo, hi = grid.trusted_region()
    if not lo <= S_query <= hi:
        warnings.warn(f"S={S_query} is outside the trusted region [{lo:.6g}, {hi:.6g}]",
                      TrustedRegionWarning, stacklevel=2)
    pos = (xq - x[0]) / grid.dx
    j = int(round(pos))
    if abs(pos - j) < 1e-9:
        return float(surface.values[j])
    i = min(max(int(math.floor(pos)) - 1, 0), grid.N - 4)
    t = pos - i
    v = surface.values[i:i + 4]
    return float(
        -v[0] * (t - 1) * (t - 2) * (t - 3) / 6
        + v[1] * t * (t - 2) * (t - 3) / 2
        - v[2] * t * (t - 1) * (t - 3) / 2
        + v[3] * t * (t - 1) * (t - 2) / 6
    )
