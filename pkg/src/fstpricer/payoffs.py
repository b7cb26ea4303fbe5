"""Terminal payoffs and the real-space constraints applied between steps."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Union

import numpy as np

from .exceptions import InvalidConstraint


class _Struck:
    def __post_init__(self):
        _check_strike(self)


@dataclass(frozen=True)
class Call(_Struck):
    K: float


@dataclass(frozen=True)
class Put(_Struck):
    K: float


@dataclass(frozen=True)
class DigitalCall(_Struck):
    """Pays 1 when S >= K (the strike itself is in the money)."""

    K: float


@dataclass(frozen=True)
class Straddle(_Struck):
    K: float


@dataclass(frozen=True)
class Custom:
    """Piecewise-linear payoff through ``table`` rows of (S, value).

    Values outside the table are held flat at the end points.
    """

    table: tuple

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ValueError("Custom payoff needs at least two (S, value) rows")
        if np.any(np.diff(arr[:, 0]) <= 0):
            raise ValueError("Custom payoff S column must be strictly increasing")
        if not np.all(np.isfinite(arr)) or np.any(arr[:, 1] < 0):
            raise ValueError("Custom payoff values must be finite and non-negative")
        object.__setattr__(self, "table", tuple(map(tuple, arr.tolist())))


PayoffSpec = Union[Call, Put, DigitalCall, Straddle, Custom]
PAYOFFS = {"call": Call, "put": Put, "digital_call": DigitalCall,
           "straddle": Straddle, "custom": Custom}


def _check_strike(payoff):
    K = getattr(payoff, "K", None)
    if K is not None and not (math.isfinite(K) and K > 0):
        raise ValueError(f"strike must be positive, got {K!r}")


def eval_payoff(payoff, S):
    """Payoff value at price(s) ``S``; scalar in, scalar out."""
    S = np.asarray(S, dtype=float)
    if isinstance(payoff, Call):
        out = np.maximum(S - payoff.K, 0.0)
    elif isinstance(payoff, Put):
        out = np.maximum(payoff.K - S, 0.0)
    elif isinstance(payoff, DigitalCall):
        out = (S >= payoff.K).astype(float)
    elif isinstance(payoff, Straddle):
        out = np.abs(S - payoff.K)
    elif isinstance(payoff, Custom):
        table = np.asarray(payoff.table)
        out = np.interp(S, table[:, 0], table[:, 1])
    else:
        raise TypeError(f"unknown payoff type {type(payoff).__name__}")
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class NoConstraint:
    pass


@dataclass(frozen=True)
class American:
    pass


BarrierKind = Literal["down-and-out", "up-and-out", "down-and-in", "up-and-in"]
BARRIER_KINDS = ("down-and-out", "up-and-out", "down-and-in", "up-and-in")


@dataclass(frozen=True)
class Barrier:
    kind: BarrierKind
    H: float
    rebate: float = 0.0

    def __post_init__(self):
        if self.kind not in BARRIER_KINDS:
            raise ValueError(f"barrier kind must be one of {BARRIER_KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.H) and self.H > 0):
            raise ValueError(f"barrier level H must be positive, got {self.H!r}")
        if not (math.isfinite(self.rebate) and self.rebate >= 0):
            raise ValueError(f"rebate must be non-negative, got {self.rebate!r}")

    @property
    def is_down(self) -> bool:
        return self.kind.startswith("down")

    @property
    def is_knock_in(self) -> bool:
        return self.kind.endswith("-in")

    def knock_out_twin(self) -> "Barrier":
        """The knock-out with the same level and zero rebate."""
        return Barrier(self.kind.replace("-in", "-out"), self.H, 0.0)


ConstraintSpec = Union[NoConstraint, American, Barrier]


def snap_barrier(H, grid):
    """Return ``(index, level)`` of the node nearest ``H`` in log space.

    ``None`` is returned when ``H`` lies outside the grid, in which case a
    knock-out region on that side of the grid is empty.
    """
    x = grid.nodes
    h = math.log(H)
    if h < x[0] or h > x[-1]:
        return None
    j = int(np.rint((h - x[0]) / grid.dx))
    j = min(max(j, 0), grid.N - 1)
    return j, math.exp(x[j])


def knockout_mask(barrier: Barrier, grid):
    """Boolean mask of the nodes knocked out by ``barrier``, snapped barrier node included."""
    mask = np.zeros(grid.N, dtype=bool)
    snapped = snap_barrier(barrier.H, grid)
    if snapped is None:
        # a barrier beyond the far side of the grid knocks out everything
        beyond = math.log(barrier.H) > grid.nodes[-1]
        mask[:] = beyond if barrier.is_down else not beyond
        return mask
    j, _ = snapped
    if barrier.is_down:
        mask[: j + 1] = True
    else:
        mask[j:] = True
    return mask


def apply_constraint(constraint, surface, intrinsic, grid):
    if isinstance(constraint, NoConstraint):
        return surface
    if isinstance(constraint, American):
        return replace(surface, values=np.maximum(surface.values, intrinsic.values))
    if isinstance(constraint, Barrier):
        if constraint.is_knock_in:
            raise InvalidConstraint("knock-in barriers are priced by in-out parity, not stepwise")
        values = surface.values.copy()
        values[knockout_mask(constraint, grid)] = constraint.rebate
        return replace(surface, values=values)
    raise TypeError(f"unknown constraint type {type(constraint).__name__}")
