"""Exponential-Lévy model families and their characteristic exponents.

Each model's exponent psi satisfies E[exp(i*omega*X_t)] = exp(t*psi(omega)) for
the log-return process X. The drift ``gamma`` is not a user input: it is set
by :func:`risk_neutral_drift` so that the discounted stock is a martingale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy.special import gamma as gamma_fn

from .exceptions import (DomainError, InfeasibleCorrection, InvalidParameters,
                         PoleEvaluation)


@dataclass(frozen=True)
class GBM:
    sigma: float
    gamma: float = 0.0


@dataclass(frozen=True)
class Merton:
    sigma: float
    lam: float
    muJ: float
    sigmaJ: float
    gamma: float = 0.0


@dataclass(frozen=True)
class Kou:
    sigma: float
    lam: float
    p: float
    eta1: float
    eta2: float
    gamma: float = 0.0


@dataclass(frozen=True)
class VG:
    sigmaVG: float
    nu: float
    theta: float
    gamma: float = 0.0


@dataclass(frozen=True)
class CGMY:
    C: float
    G: float
    M: float
    Y: float
    gamma: float = 0.0


LevyModel = Union[GBM, Merton, Kou, VG, CGMY]
FAMILIES = {"gbm": GBM, "merton": Merton, "kou": Kou, "vg": VG, "cgmy": CGMY}


@dataclass(frozen=True)
class MarketTerms:
    """Spot, rates and maturity shared by every pricing call."""

    S0: float
    r: float
    q: float
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive, got {self.T!r}")
        if not (math.isfinite(self.S0) and self.S0 > 0):
            raise ValueError(f"S0 must be positive, got {self.S0!r}")
        if not (math.isfinite(self.r) and math.isfinite(self.q)):
            raise ValueError("r and q must be finite")


# Violations that make the martingale correction itself undefined.
_CORRECTION_VIOLATIONS = (
    "eta1 must exceed 1",
    "M must exceed 1",
    "VG feasibility requires 1 - theta*nu - sigmaVG^2*nu/2 > 0",
)


def validate_params(model) -> list[str]:
    """Return every violated parameter invariant; an empty list means ok."""
    errors = []

    def need(cond, msg):
        if not cond:
            errors.append(msg)

    values = [v for v in vars(model).values() if isinstance(v, (int, float))]
    if not all(math.isfinite(v) for v in values):
        return ["parameters must be finite"]

    if isinstance(model, (GBM, Merton, Kou)):
        need(model.sigma >= 0, "sigma must be non-negative")
    if isinstance(model, (Merton, Kou)):
        need(model.lam >= 0, "lambda must be non-negative")
    if isinstance(model, Merton):
        need(model.sigmaJ >= 0, "sigmaJ must be non-negative")
    elif isinstance(model, Kou):
        need(0 <= model.p <= 1, "p must lie in [0, 1]")
        need(model.eta1 > 1, "eta1 must exceed 1")
        need(model.eta2 > 0, "eta2 must be positive")
    elif isinstance(model, VG):
        need(model.sigmaVG >= 0, "sigmaVG must be non-negative")
        need(model.nu > 0, "nu must be positive")
        if model.nu > 0:
            need(1 - model.theta * model.nu - 0.5 * model.sigmaVG ** 2 * model.nu > 0,
                 _CORRECTION_VIOLATIONS[2])
    elif isinstance(model, CGMY):
        need(model.C > 0, "C must be positive")
        need(model.G > 0, "G must be positive")
        need(model.M > 1, "M must exceed 1")
        need(model.Y < 2, "Y must be below 2")
        need(model.Y not in (0, 1), "Y must avoid {0,1}")
    elif not isinstance(model, GBM):
        raise TypeError(f"unknown model type {type(model).__name__}")
    return errors


def _compensator(model) -> float:
    """psi(-i) of the model with gamma = 0, i.e. log E[exp(X_1)] minus drift."""
    if isinstance(model, GBM):
        return 0.5 * model.sigma ** 2
    if isinstance(model, Merton):
        jump = math.expm1(model.muJ + 0.5 * model.sigmaJ ** 2)
        return 0.5 * model.sigma ** 2 + model.lam * jump
    if isinstance(model, Kou):
        p, e1, e2 = model.p, model.eta1, model.eta2
        jump = p * e1 / (e1 - 1) + (1 - p) * e2 / (e2 + 1) - 1
        return 0.5 * model.sigma ** 2 + model.lam * jump
    if isinstance(model, VG):
        nu = model.nu
        return -math.log(1 - model.theta * nu - 0.5 * model.sigmaVG ** 2 * nu) / nu
    if isinstance(model, CGMY):
        C, G, M, Y = model.C, model.G, model.M, model.Y
        return C * gamma_fn(-Y) * ((M - 1) ** Y - M ** Y + (G + 1) ** Y - G ** Y)
    raise TypeError(f"unknown model type {type(model).__name__}")


def risk_neutral_drift(model, terms: MarketTerms):
    """Return a copy of ``model`` whose drift makes psi(-i) equal r - q."""
    violations = validate_params(model)
    if violations:
        if any(v in _CORRECTION_VIOLATIONS for v in violations):
            raise InfeasibleCorrection(violations)
        raise InvalidParameters(violations)
    return replace(model, gamma=terms.r - terms.q - _compensator(model))


def char_exponent(model, omega):
    """Evaluate psi(omega) for scalar or array ``omega`` (complex allowed)."""
    w = np.asarray(omega, dtype=complex)
    iw = 1j * w
    drift = model.gamma * iw

    if isinstance(model, (GBM, Merton, Kou)):
        out = drift - 0.5 * model.sigma ** 2 * w * w
        if isinstance(model, Merton) and model.lam != 0:
            out = out + model.lam * np.expm1(model.muJ * iw - 0.5 * model.sigmaJ ** 2 * w * w)
        elif isinstance(model, Kou) and model.lam != 0:
            up = model.eta1 - iw
            down = model.eta2 + iw
            if np.any(up == 0) or np.any(down == 0):
                raise PoleEvaluation("Kou exponent evaluated at a pole of the jump transform")
            # written so that psi(0) is exactly zero
            out = out + model.lam * (model.p * iw / up - (1 - model.p) * iw / down)
    elif isinstance(model, VG):
        nu = model.nu
        arg = 1 - model.theta * nu * iw + 0.5 * model.sigmaVG ** 2 * nu * w * w
        _check_vg_branch(model, w)
        out = drift - np.log(arg) / nu
    elif isinstance(model, CGMY):
        C, G, M, Y = model.C, model.G, model.M, model.Y
        if np.any(M + w.imag <= 0) or np.any(G - w.imag <= 0):
            raise DomainError("CGMY exponent only defined for -M < Im(omega) < G")
        Mc, Gc = complex(M), complex(G)
        tails = (np.power(Mc - iw, Y) - np.power(Mc, Y)
                 + np.power(Gc + iw, Y) - np.power(Gc, Y))
        out = drift + C * gamma_fn(-Y) * tails
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")
    return out[()] if out.ndim == 0 else out


def _check_vg_branch(model, w):
    # arg(t) = 1 + b t + c t^2 along the ray t*omega, t in [0, 1]; the principal
    # log is continuous unless that path meets the non-positive real axis.
    w = np.atleast_1d(w)
    w = w[w.imag != 0]
    if w.size == 0:
        return
    nu = model.nu
    b = -1j * model.theta * nu * w
    c = 0.5 * model.sigmaVG ** 2 * nu * w * w
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(c.imag != 0, -b.imag / c.imag, np.nan)
    cand = np.stack([t, np.ones_like(t)])
    vals = 1 + b * cand + c * cand * cand
    inside = np.isfinite(cand) & (cand > 0) & (cand <= 1)
    crossing = inside & (np.abs(vals.imag) <= 1e-14 * np.abs(vals)) & (vals.real <= 0)
    if np.any(crossing):
        raise DomainError("VG log argument crosses the negative real axis")


def second_cumulant(model) -> float:
    """Variance of X_1, used as a total-volatility proxy for domain sizing."""
    if isinstance(model, GBM):
        return model.sigma ** 2
    if isinstance(model, Merton):
        return model.sigma ** 2 + model.lam * (model.muJ ** 2 + model.sigmaJ ** 2)
    if isinstance(model, Kou):
        p, e1, e2 = model.p, model.eta1, model.eta2
        return model.sigma ** 2 + model.lam * (2 * p / e1 ** 2 + 2 * (1 - p) / e2 ** 2)
    if isinstance(model, VG):
        return model.sigmaVG ** 2 + model.theta ** 2 * model.nu
    if isinstance(model, CGMY):
        C, G, M, Y = model.C, model.G, model.M, model.Y
        return C * gamma_fn(2 - Y) * (M ** (Y - 2) + G ** (Y - 2))
    raise TypeError(f"unknown model type {type(model).__name__}")


def effective_volatility(model) -> float:
    return math.sqrt(second_cumulant(model))


def make_model(family: str, **params):
    """Build a model from a family name such as ``"kou"`` and its parameters."""
    try:
        cls = FAMILIES[family.lower()]
    except KeyError:
        raise ValueError(f"unknown model family {family!r}; expected one of {sorted(FAMILIES)}") from None
    return cls(**params)
