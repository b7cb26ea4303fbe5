"""Markov-modulated Lévy pricing.

With K regimes the transformed values form a K-vector per frequency that
evolves by ``exp((Psi(omega) + A - R) * dt)``, where ``Psi`` and ``R`` are the
diagonal matrices of regime exponents and rates and ``A`` is the generator
(rows sum to zero, ``A[j, k]`` is the j -> k intensity per year).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import RESIDUE_ABORT, StepPlan, resolve_constraint
from .exceptions import InvalidConstraint, NegativeRate, NumericalBlowup
from .grid import Grid, sample_payoff
from .levy import MarketTerms, char_exponent, risk_neutral_drift
from .payoffs import American, Barrier, knockout_mask

MAX_REGIMES = 8

# degree-6 diagonal Pade coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
_PADE6 = np.array([
    math.factorial(12 - k) * math.factorial(6)
    / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k))
    for k in range(7)
])


def build_generator(off_diagonal_rates) -> np.ndarray:
    """Generator with the given off-diagonal intensities; the input diagonal is ignored."""
    A = np.array(off_diagonal_rates, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("transition rates must form a square matrix")
    np.fill_diagonal(A, 0.0)
    if np.any(A < 0):
        raise NegativeRate("transition rates must be non-negative")
    if not np.all(np.isfinite(A)):
        raise ValueError("transition rates must be finite")
    np.fill_diagonal(A, -A.sum(axis=1))
    return A


def matrix_exponential(B):
    """exp(B) for one matrix or a stack of shape (..., K, K).

    Scaling and squaring around a degree-6 Pade approximant, with the scaling
    chosen per matrix so that the scaled 1-norm is at most 1/2.
    """
    B = np.asarray(B)
    stack = B.reshape((-1,) + B.shape[-2:]).astype(complex)
    K = stack.shape[-1]
    norms = np.abs(stack).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        squarings = np.where(norms > 0.5, np.ceil(np.log2(norms / 0.5)), 0).astype(int)
    out = np.empty_like(stack)
    eye = np.eye(K)
    for s in np.unique(squarings):
        sel = squarings == s
        X = stack[sel] / 2.0 ** s
        X2 = X @ X
        X4 = X2 @ X2
        X6 = X4 @ X2
        even = _PADE6[0] * eye + _PADE6[2] * X2 + _PADE6[4] * X4 + _PADE6[6] * X6
        odd = X @ (_PADE6[1] * eye + _PADE6[3] * X2 + _PADE6[5] * X4)
        E = np.linalg.solve(even - odd, even + odd)
        for _ in range(s):
            E = E @ E
        out[sel] = E
    out = out.reshape(B.shape)
    if not np.iscomplexobj(B):
        out = out.real
    return out


@dataclass(frozen=True, eq=False)
class RegimeModel:
    """K Lévy regimes with per-regime rates, coupled by a generator matrix."""

    models: tuple
    rates: tuple
    generator: np.ndarray

    def __post_init__(self):
        K = len(self.models)
        if not 2 <= K <= MAX_REGIMES:
            raise ValueError(f"regime count must be between 2 and {MAX_REGIMES}, got {K}")
        if len(self.rates) != K:
            raise ValueError("need one rate per regime")
        A = np.asarray(self.generator, dtype=float)
        if A.shape != (K, K):
            raise ValueError(f"generator must be {K}x{K}")
        off = A - np.diag(np.diag(A))
        if np.any(off < 0):
            raise NegativeRate("generator off-diagonal rates must be non-negative")
        if np.any(np.abs(A.sum(axis=1)) > 1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("generator rows must sum to zero; build it with build_generator")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "generator", A)

    @property
    def K(self) -> int:
        return len(self.models)

    @classmethod
    def from_rates(cls, models, rates, transition_rates):
        return cls(tuple(models), tuple(rates), build_generator(transition_rates))

    def corrected(self, q: float, T: float = 1.0) -> "RegimeModel":
        """Each regime drift-corrected against its own rate and the shared q."""
        models = tuple(risk_neutral_drift(m, MarketTerms(1.0, r, q, T))
                       for m, r in zip(self.models, self.rates))
        return replace(self, models=models)


@dataclass(eq=False)
class RegimeSurfaces:
    grid: Grid
    values: np.ndarray  # shape (K, N)
    as_of_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.N:
            raise ValueError(f"expected shape (K, {self.grid.N}), got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("surface values must be finite")

    @property
    def center_values(self) -> np.ndarray:
        return self.values[:, self.grid.center_index].copy()


def regime_propagators(rm: RegimeModel, dt: float, grid: Grid) -> np.ndarray:
    """Per-frequency K x K propagators on the half spectrum, shape (N/2+1, K, K)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    psi = np.stack([char_exponent(m, grid.omega_half) for m in rm.models], axis=-1)
    B = np.broadcast_to(rm.generator - np.diag(rm.rates), psi.shape[:1] + (rm.K, rm.K)).astype(complex)
    idx = np.arange(rm.K)
    B[:, idx, idx] += psi
    P = matrix_exponential(B * dt)
    # the Nyquist bin pairs with itself; keep its Hermitian part
    P[-1] = P[-1].real
    return P


def _apply(values: np.ndarray, P: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    coeffs = np.fft.rfft(values, axis=-1)  # (K, F)
    mixed = np.einsum("fjk,kf->jf", P, coeffs)
    residue = (np.max(np.abs(mixed[:, 0].imag)) + np.max(np.abs(mixed[:, -1].imag))) / n
    if residue > RESIDUE_ABORT:
        raise NumericalBlowup(f"imaginary residue {residue:.3g} after inverse transform")
    out = np.fft.irfft(mixed, n=n, axis=-1)
    scale = max(np.max(np.abs(values)), np.finfo(float).tiny)
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > 1e12 * scale:
        raise NumericalBlowup("regime step blew up; check the generator and model parameters")
    return out


def rs_step(surfaces: RegimeSurfaces, rm: RegimeModel, dt: float, grid: Grid) -> RegimeSurfaces:
    P = regime_propagators(rm, dt, grid)
    return replace(surfaces, values=_apply(surfaces.values, P),
                   as_of_time=surfaces.as_of_time + dt, meta=dict(surfaces.meta))


def price_rs(rm: RegimeModel, payoff, plan: StepPlan, terms: MarketTerms, grid: Grid) -> RegimeSurfaces:
    """Values for every starting regime; ``center_values`` are the prices at S0.

    ``rm`` must already be drift-corrected (see :meth:`RegimeModel.corrected`).
    The market ``r`` is unused; each regime discounts at its own rate.
    """
    constraint = plan.constraint
    if isinstance(constraint, Barrier) and constraint.is_knock_in:
        raise InvalidConstraint("knock-in barriers are priced by parity")
    for m, r in zip(rm.models, rm.rates):
        gap = abs(char_exponent(m, -1j) - (r - terms.q))
        if gap > 1e-10:
            raise ValueError("regime model is not drift-corrected; call RegimeModel.corrected(q)")

    constraint, effective = resolve_constraint(plan, rm, terms.T, grid)
    intrinsic = sample_payoff(payoff, grid).values
    values = np.tile(intrinsic, (rm.K, 1))
    knocked = knockout_mask(constraint, grid) if isinstance(constraint, Barrier) else None
    if knocked is not None:
        values[:, knocked] = constraint.rebate
    dt = plan.dt(terms.T)
    P = regime_propagators(rm, dt, grid)
    for _ in range(plan.M):
        values = _apply(values, P)
        if isinstance(constraint, American):
            values = np.maximum(values, intrinsic)
        elif knocked is not None:
            values[:, knocked] = constraint.rebate
    meta = {"M": plan.M, "dt": dt}
    if knocked is not None:
        meta["effective_barrier"] = effective
    return RegimeSurfaces(grid, values, as_of_time=terms.T, meta=meta)
