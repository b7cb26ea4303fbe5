"""Two-asset Fourier pricing under correlated geometric Brownian motion.

The kernel works on a D-dimensional frequency mesh; only D = 2 is exposed.
An optional common-Poisson jump term with bivariate normal jump sizes can be
switched on through :class:`BivariateJumps`.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import NumericalBlowup
from .grid import Grid, build_grid
from .payoffs import eval_payoff


@dataclass(frozen=True)
class BivariateJumps:
    lam: float
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    rho: float = 0.0

    def compensators(self):
        return (self.lam * math.expm1(self.mu1 + 0.5 * self.sigma1 ** 2),
                self.lam * math.expm1(self.mu2 + 0.5 * self.sigma2 ** 2))


@dataclass(frozen=True)
class Model2D:
    sigma1: float
    sigma2: float
    rho: float
    q1: float = 0.0
    q2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    jumps: BivariateJumps | None = None

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("volatilities must be non-negative")
        if not -1 <= self.rho <= 1:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.rho}")

    def corrected(self, r: float) -> "Model2D":
        """Set both drifts so each discounted asset is a martingale."""
        j1, j2 = self.jumps.compensators() if self.jumps else (0.0, 0.0)
        return replace(self,
                       gamma1=r - self.q1 - 0.5 * self.sigma1 ** 2 - j1,
                       gamma2=r - self.q2 - 0.5 * self.sigma2 ** 2 - j2)


def char_exponent_2d(m: Model2D, omega1, omega2):
    w1 = np.asarray(omega1, dtype=complex)
    w2 = np.asarray(omega2, dtype=complex)
    s1, s2 = m.sigma1, m.sigma2
    out = (1j * (m.gamma1 * w1 + m.gamma2 * w2)
           - 0.5 * (s1 * s1 * w1 * w1 + 2 * m.rho * s1 * s2 * w1 * w2 + s2 * s2 * w2 * w2))
    if m.jumps is not None:
        J = m.jumps
        quad = (J.sigma1 ** 2 * w1 * w1 + 2 * J.rho * J.sigma1 * J.sigma2 * w1 * w2
                + J.sigma2 ** 2 * w2 * w2)
        out = out + J.lam * np.expm1(1j * (J.mu1 * w1 + J.mu2 * w2) - 0.5 * quad)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Grid2D:
    axes: tuple  # one Grid per asset

    @property
    def shape(self):
        return tuple(g.N for g in self.axes)

    @property
    def center_index(self):
        return tuple(g.center_index for g in self.axes)

    def frequency_mesh(self):
        """Frequencies of the real-input transform: full on all axes but the last."""
        freqs = [g.omega for g in self.axes[:-1]] + [self.axes[-1].omega_half]
        return np.meshgrid(*freqs, indexing="ij")

    def price_mesh(self):
        return np.meshgrid(*(g.prices for g in self.axes), indexing="ij")


def build_grid_2d(S01, S02, L1, L2, N1=512, N2=512) -> Grid2D:
    return Grid2D((build_grid(S01, L1, N1), build_grid(S02, L2, N2)))


def default_half_widths_2d(m: Model2D, T: float, floor: float = 1.0):
    """Per-axis ``max(floor, 10 sigma_d sqrt(T))``.

    Narrower than the one-dimensional default so a 2^9 mesh is fine enough.
    """
    return tuple(max(floor, 10.0 * s * math.sqrt(T)) for s in (m.sigma1, m.sigma2))


@dataclass(eq=False)
class Surface2D:
    grid: Grid2D
    values: np.ndarray
    as_of_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {self.values.shape}")

    @property
    def center_value(self) -> float:
        return float(self.values[self.grid.center_index])

    def to_csv(self, path=None):
        g1, g2 = self.grid.axes
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x1", "x2", "S1", "S2", "value"])
        for i in range(g1.N):
            for j in range(g2.N):
                writer.writerow([f"{g1.nodes[i]:.17g}", f"{g2.nodes[j]:.17g}",
                                 f"{g1.prices[i]:.17g}", f"{g2.prices[j]:.17g}",
                                 f"{self.values[i, j]:.17g}"])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


@dataclass(frozen=True)
class Spread:
    """max(S1 - S2 - K, 0)."""

    K: float

    def evaluate(self, S1, S2):
        return np.maximum(S1 - S2 - self.K, 0.0)


def ExchangeCall():
    return Spread(0.0)


@dataclass(frozen=True)
class Basket:
    """max(w1 S1 + w2 S2 - K, 0)."""

    w1: float
    w2: float
    K: float

    def evaluate(self, S1, S2):
        return np.maximum(self.w1 * S1 + self.w2 * S2 - self.K, 0.0)


@dataclass(frozen=True)
class ProductPayoff:
    """f(S1) * g(S2) for two one-dimensional payoffs."""

    first: object
    second: object

    def evaluate(self, S1, S2):
        return eval_payoff(self.first, S1) * eval_payoff(self.second, S2)


def _evolve_nd(values, mult):
    axes = tuple(range(values.ndim))
    out = np.fft.irfftn(np.fft.rfftn(values, axes=axes) * mult, s=values.shape, axes=axes)
    scale = max(np.max(np.abs(values)), np.finfo(float).tiny)
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > 1e12 * scale:
        raise NumericalBlowup("two-asset step blew up")
    return out


def price_european_2d(m: Model2D, payoff2d, r: float, T: float, grid: Grid2D) -> Surface2D:
    """Single step of length T on the 2-D mesh.

    ``m`` must be corrected for ``r``; the price at (S01, S02) is ``center_value``.
    """
    for d, (w, q) in enumerate((((-1j, 0), m.q1), ((0, -1j), m.q2))):
        if abs(char_exponent_2d(m, *w) - (r - q)) > 1e-10:
            raise ValueError(f"asset {d + 1} drift is not corrected; call Model2D.corrected(r)")
    W1, W2 = grid.frequency_mesh()
    mult = np.exp((char_exponent_2d(m, W1, W2) - r) * T)
    mult = _hermitian_fix(mult, grid.shape)
    S1, S2 = grid.price_mesh()
    values = _evolve_nd(payoff2d.evaluate(S1, S2), mult)
    return Surface2D(grid, values, as_of_time=T)


def _hermitian_fix(mult, shape):
    """Project the multiplier onto the symmetry a real-to-real transform needs.

    On the last-axis planes k=0 and k=N/2 the coefficient at index (i, k) is
    conjugate-paired with (-i mod N, k); average the multiplier across pairs.
    """
    n0 = shape[0]
    mirror = (-np.arange(n0)) % n0
    for k in {0, mult.shape[1] - 1}:
        col = mult[:, k]
        mult[:, k] = 0.5 * (col + np.conj(col[mirror]))
    return mult
