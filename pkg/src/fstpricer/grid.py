"""Uniform log-price lattice, its DFT frequencies, and sampled value surfaces."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import levy
from ._validation import is_power_of_two
from .exceptions import BadDomain, BadGridSize
from .payoffs import eval_payoff

MIN_HALF_WIDTH = 7.5
TRUSTED_FRACTION = 0.8


@dataclass(frozen=True)
class Grid:
    """N nodes spaced ``dx = 2L/N`` apart, with node N/2 at ``x_center``."""

    N: int
    half_width: float
    x_center: float

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        # offset from the centre so node N/2 equals x_center bit for bit
        x = self.x_center + (np.arange(self.N) - self.N // 2) * self.dx
        x.flags.writeable = False
        return x

    @cached_property
    def prices(self) -> np.ndarray:
        return np.exp(self.nodes)

    @cached_property
    def omega(self) -> np.ndarray:
        """Full signed DFT frequencies; index N/2 carries +pi/dx."""
        k = np.arange(self.N)
        k = np.where(k <= self.N // 2, k, k - self.N)
        return np.pi * k / self.half_width

    @cached_property
    def omega_half(self) -> np.ndarray:
        """Frequencies of the half spectrum, k = 0..N/2."""
        return np.pi * np.arange(self.N // 2 + 1) / self.half_width

    @property
    def center_index(self) -> int:
        return self.N // 2

    def trusted_slice(self) -> slice:
        margin = int(round(self.N * (1 - TRUSTED_FRACTION) / 2))
        return slice(margin, self.N - margin)

    def trusted_region(self) -> tuple[float, float]:
        """Price bounds of the inner 80% of nodes, away from wrap-around."""
        s = self.trusted_slice()
        return float(self.prices[s.start]), float(self.prices[s.stop - 1])


def build_grid(S0: float, L: float, N: int) -> Grid:
    """Grid of ``N`` nodes centred on ``ln S0`` spanning ``[ln S0 - L, ln S0 + L)``."""
    if not is_power_of_two(N) or N < 8:
        raise BadGridSize(f"N must be a power of two >= 8, got {N!r}")
    if not (math.isfinite(L) and L > 0):
        raise BadDomain(f"half-width L must be positive, got {L!r}")
    if not (math.isfinite(S0) and S0 > 0):
        raise BadDomain(f"S0 must be positive, got {S0!r}")
    return Grid(int(N), float(L), math.log(S0))


def default_half_width(models, T: float) -> float:
    """max(7.5, 10 * sigma_eff * sqrt(T)) over one model or several regimes."""
    if not isinstance(models, (list, tuple)):
        models = [models]
    sigma = max(levy.effective_volatility(m) for m in models)
    return max(MIN_HALF_WIDTH, 10.0 * sigma * math.sqrt(T))


@dataclass(eq=False)
class ValueSurface:
    grid: Grid
    values: np.ndarray
    as_of_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.N,):
            raise ValueError(f"surface needs {self.grid.N} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("surface values must be finite")

    @property
    def center_value(self) -> float:
        return float(self.values[self.grid.center_index])

    def to_csv(self, path=None):
        """Write ``x,S,value`` rows at full precision; returns the text if no path."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "S", "value"])
        for x, s, v in zip(self.grid.nodes, self.grid.prices, self.values):
            writer.writerow([f"{x:.17g}", f"{s:.17g}", f"{v:.17g}"])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


def read_surface_csv(path_or_text, grid: Grid) -> ValueSurface:
    if "\n" in str(path_or_text):
        rows = list(csv.DictReader(io.StringIO(path_or_text)))
    else:
        with open(path_or_text, newline="") as fh:
            rows = list(csv.DictReader(fh))
    return ValueSurface(grid, np.array([float(r["value"]) for r in rows]))


def sample_payoff(payoff, grid: Grid) -> ValueSurface:
    """Pointwise payoff values at the node prices, at maturity."""
    return ValueSurface(grid, eval_payoff(payoff, grid.prices), as_of_time=0.0)
