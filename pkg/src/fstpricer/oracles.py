"""Reference pricers used to check the Fourier engine.

Nothing here calls into the engine, the grid or the characteristic exponents:
the only shared code is the domain dataclasses. Drift corrections are derived
again from each family's moment generating function.

Monte Carlo uses numpy's counter-based Philox generator. A run with seed ``s``
draws batch ``b`` from ``Philox(SeedSequence(s).spawn(n_batches)[b])``, so the
result depends only on the seed and ``n_paths``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

from .exceptions import NoOracle, UnsupportedCase, UnsupportedModel
from .levy import CGMY, GBM, VG, Kou, MarketTerms, Merton
from .payoffs import Barrier, Call, Custom, DigitalCall, Put, Straddle

BATCH = 250_000


def bs_closed_form(kind, terms: MarketTerms, sigma, K):
    """Black-Scholes-Merton price of a European call or put."""
    S, r, q, T = terms.S0, terms.r, terms.q, terms.T
    fwd_s = S * math.exp(-q * T)
    df_k = K * math.exp(-r * T)
    if sigma * math.sqrt(T) < 1e-300:
        call = max(fwd_s - df_k, 0.0)
    else:
        vol = sigma * math.sqrt(T)
        d1 = (math.log(S / K) + (r - q + 0.5 * sigma * sigma) * T) / vol
        d2 = d1 - vol
        call = fwd_s * norm.cdf(d1) - df_k * norm.cdf(d2)
    if kind == "call":
        return float(call)
    if kind == "put":
        return float(call - fwd_s + df_k)
    raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")


def merton_series(kind, terms: MarketTerms, sigma, lam, muJ, sigmaJ, K, n_terms=60):
    """Merton jump-diffusion price as a Poisson mixture of BSM prices."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    T = terms.T
    mean_jump = math.exp(muJ + 0.5 * sigmaJ ** 2)
    lam_prime = lam * mean_jump
    total = 0.0
    for n in range(n_terms + 1):
        if lam_prime == 0 and n > 0:
            break
        log_w = -lam_prime * T + (n * math.log(lam_prime * T) if n else 0.0) - gammaln(n + 1)
        sigma_n = math.sqrt(sigma ** 2 + n * sigmaJ ** 2 / T)
        r_n = terms.r - lam * (mean_jump - 1) + n * (muJ + 0.5 * sigmaJ ** 2) / T
        # the lambda' weights already absorb the exp((r_n - r) T) discount gap
        sub = MarketTerms(terms.S0, r_n, terms.q, T)
        total += math.exp(log_w) * bs_closed_form(kind, sub, sigma_n, K)
    return total


def barrier_closed_form(terms: MarketTerms, sigma, K, H):
    """Continuously monitored down-and-out call (Reiner-Rubinstein), H < S0."""
    S, r, q, T = terms.S0, terms.r, terms.q, terms.T
    if H >= S:
        raise UnsupportedCase("down-and-out formula requires H < S0")
    vol = sigma * math.sqrt(T)
    lam = (r - q + 0.5 * sigma ** 2) / sigma ** 2
    dq, dr = math.exp(-q * T), math.exp(-r * T)
    hs = H / S
    if H <= K:
        y = math.log(H * H / (S * K)) / vol + lam * vol
        c_di = (S * dq * hs ** (2 * lam) * norm.cdf(y)
                - K * dr * hs ** (2 * lam - 2) * norm.cdf(y - vol))
        return bs_closed_form("call", terms, sigma, K) - float(c_di)
    x1 = math.log(S / H) / vol + lam * vol
    y1 = math.log(H / S) / vol + lam * vol
    return float(S * dq * norm.cdf(x1) - K * dr * norm.cdf(x1 - vol)
                 - S * dq * hs ** (2 * lam) * norm.cdf(y1)
                 + K * dr * hs ** (2 * lam - 2) * norm.cdf(y1 - vol))


def margrabe(S1, S2, sigma1, sigma2, rho, T, q1=0.0, q2=0.0):
    """Option to exchange asset 2 for asset 1 at T."""
    vol = math.sqrt(max(sigma1 ** 2 - 2 * rho * sigma1 * sigma2 + sigma2 ** 2, 0.0) * T)
    f1, f2 = S1 * math.exp(-q1 * T), S2 * math.exp(-q2 * T)
    if vol < 1e-300:
        return max(f1 - f2, 0.0)
    d1 = (math.log(f1 / f2) + 0.5 * vol * vol) / vol
    return float(f1 * norm.cdf(d1) - f2 * norm.cdf(d1 - vol))


def binomial_american(kind, terms: MarketTerms, sigma, K, n_steps, american=True):
    """Cox-Ross-Rubinstein tree with optional exercise at every node."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dt = terms.T / n_steps
    u = math.exp(sigma * math.sqrt(dt))
    d = 1 / u
    p = (math.exp((terms.r - terms.q) * dt) - d) / (u - d)
    disc = math.exp(-terms.r * dt)
    sign = 1.0 if kind == "call" else -1.0
    # level k holds prices S0 u^j for j = k, k-2, ..., -k; indexing one table keeps the root at S0 exactly
    powers = terms.S0 * u ** np.arange(n_steps, -n_steps - 1, -1.0)
    V = np.maximum(sign * (powers[::2] - K), 0.0)
    for k in range(n_steps - 1, -1, -1):
        V = disc * (p * V[:-1] + (1 - p) * V[1:])
        if american:
            S = powers[n_steps - k:n_steps + k + 1:2]
            np.maximum(V, sign * (S - K), out=V)
    return float(V[0])


# --- Monte Carlo -----------------------------------------------------------

def _payoff(payoff, S):
    if isinstance(payoff, Call):
        return np.maximum(S - payoff.K, 0.0)
    if isinstance(payoff, Put):
        return np.maximum(payoff.K - S, 0.0)
    if isinstance(payoff, DigitalCall):
        return np.where(S >= payoff.K, 1.0, 0.0)
    if isinstance(payoff, Straddle):
        return np.abs(S - payoff.K)
    if isinstance(payoff, Custom):
        table = np.asarray(payoff.table)
        return np.interp(S, table[:, 0], table[:, 1])
    raise NoOracle(f"no Monte Carlo payoff for {type(payoff).__name__}")


def _log_mgf_unit(model):
    """log E[exp(Z_1)] for the model's driftless part Z."""
    if isinstance(model, GBM):
        return 0.5 * model.sigma ** 2
    if isinstance(model, Merton):
        return 0.5 * model.sigma ** 2 + model.lam * (math.exp(model.muJ + 0.5 * model.sigmaJ ** 2) - 1)
    if isinstance(model, Kou):
        up = model.p * model.eta1 / (model.eta1 - 1)
        down = (1 - model.p) * model.eta2 / (model.eta2 + 1)
        return 0.5 * model.sigma ** 2 + model.lam * (up + down - 1)
    if isinstance(model, VG):
        # E[exp(theta G + s sqrt(G) Z)] = E[exp((theta + s^2/2) G)], G ~ Gamma(1/nu, nu)
        return -math.log(1 - model.nu * (model.theta + 0.5 * model.sigmaVG ** 2)) / model.nu
    raise UnsupportedModel(f"no path simulation for {type(model).__name__}")


def _increments(model, dt, rng, drift):
    """Log-price increments over (possibly per-path) horizons ``dt``."""
    dt = np.asarray(dt, dtype=float)
    n = dt.shape[0]
    if isinstance(model, CGMY):
        raise UnsupportedModel("CGMY path simulation is not supported")
    if isinstance(model, VG):
        shape = dt / model.nu
        g = np.zeros(n)
        pos = shape > 0
        g[pos] = rng.gamma(shape[pos], model.nu)
        return drift * dt + model.theta * g + model.sigmaVG * np.sqrt(g) * rng.standard_normal(n)

    x = drift * dt + model.sigma * np.sqrt(dt) * rng.standard_normal(n)
    if isinstance(model, (Merton, Kou)) and model.lam > 0:
        counts = rng.poisson(model.lam * dt)
        if isinstance(model, Merton):
            x += counts * model.muJ + model.sigmaJ * np.sqrt(counts) * rng.standard_normal(n)
        else:
            total = int(counts.sum())
            owner = np.repeat(np.arange(n), counts)
            up = rng.random(total) < model.p
            sizes = np.where(up, rng.exponential(1 / model.eta1, total),
                             -rng.exponential(1 / model.eta2, total))
            x += np.bincount(owner, weights=sizes, minlength=n)
    return x


def _batches(n_paths, seed):
    n_batches = -(-n_paths // BATCH)
    seqs = np.random.SeedSequence(seed).spawn(n_batches)
    for b, ss in enumerate(seqs):
        size = min(BATCH, n_paths - b * BATCH)
        yield size, np.random.Generator(np.random.Philox(ss))


def _summarise(samples):
    disc = np.concatenate(samples)
    if np.all(disc == disc[0]):
        return float(disc[0]), 0.0
    return float(disc.mean()), float(disc.std(ddof=1) / math.sqrt(disc.size))


def mc_levy(model, payoff, terms: MarketTerms, n_paths=1_000_000, seed=0,
            monitoring_dates=None, barrier: Barrier | None = None):
    """Discounted-payoff mean and standard error by exact path simulation.

    With ``barrier`` the paths are checked on ``monitoring_dates`` (defaults to
    T only). A rebate is paid, discounted, at the first knock-out date.
    """
    if n_paths < 1000:
        raise ValueError("n_paths must be at least 1000")
    drift = terms.r - terms.q - _log_mgf_unit(model)
    if barrier is None or monitoring_dates is None:
        dates = np.array([terms.T])
    else:
        dates = np.unique(np.append(np.asarray(monitoring_dates, dtype=float), terms.T))
        if dates[0] <= 0 or dates[-1] > terms.T:
            raise ValueError("monitoring dates must lie in (0, T]")
        dates = dates[dates > 0]
    steps = np.diff(np.concatenate([[0.0], dates]))
    lnH = None if barrier is None else math.log(barrier.H)
    monitored = set() if barrier is None or monitoring_dates is None else set(np.asarray(monitoring_dates, dtype=float))
    if barrier is not None and monitoring_dates is None:
        monitored = {terms.T}

    samples = []
    for size, rng in _batches(n_paths, seed):
        x = np.full(size, math.log(terms.S0))
        alive = np.ones(size, dtype=bool)
        rebate = np.zeros(size)
        if barrier is not None:
            alive &= ~_crossed(barrier, x, lnH)
        for t, h in zip(dates, steps):
            x = x + _increments(model, np.full(size, h), rng, drift)
            if barrier is not None and t in monitored:
                hit = alive & _crossed(barrier, x, lnH)
                rebate[hit] = barrier.rebate * math.exp(-terms.r * t)
                alive &= ~hit
        value = math.exp(-terms.r * terms.T) * _payoff(payoff, np.exp(x))
        if barrier is not None:
            if barrier.is_knock_in:
                value = np.where(alive, 0.0, value)
            else:
                value = np.where(alive, value, rebate)
        samples.append(value)
    return _summarise(samples)


def _crossed(barrier, x, lnH):
    return x <= lnH if barrier.is_down else x >= lnH


def mc_bridge_barrier_gbm(terms: MarketTerms, sigma, K, H, n_paths=200_000, n_dates=64, seed=0):
    """Continuously monitored down-and-out call under GBM via Brownian-bridge crossing probabilities."""
    drift = terms.r - terms.q - 0.5 * sigma ** 2
    dt = terms.T / n_dates
    lnH = math.log(H)
    samples = []
    for size, rng in _batches(n_paths, seed):
        x = np.full(size, math.log(terms.S0))
        survive = np.ones(size)
        for _ in range(n_dates):
            nxt = x + drift * dt + sigma * math.sqrt(dt) * rng.standard_normal(size)
            a, b = x - lnH, nxt - lnH
            p_cross = np.where((a > 0) & (b > 0), np.exp(-2 * a * b / (sigma ** 2 * dt)), 1.0)
            survive *= 1 - p_cross
            x = nxt
        samples.append(math.exp(-terms.r * terms.T) * survive * np.maximum(np.exp(x) - K, 0.0))
    return _summarise(samples)


def mc_regime(models, rates, generator, payoff, terms: MarketTerms, start, n_paths=1_000_000, seed=0):
    """European price under a Markov-modulated Lévy model started in regime ``start``.

    ``models[k]`` drives the log price while the chain sits in regime ``k``,
    with drift fixed by the regime's own rate ``rates[k]``; discounting uses
    the integral of the visited rates.
    """
    A = np.asarray(generator, dtype=float)
    K = A.shape[0]
    exit_rates = -np.diag(A)
    drifts = np.array([rates[k] - terms.q - _log_mgf_unit(models[k]) for k in range(K)])
    jump_probs = np.zeros_like(A)
    for k in range(K):
        if exit_rates[k] > 0:
            jump_probs[k] = np.where(np.arange(K) == k, 0.0, A[k]) / exit_rates[k]
    samples = []
    for size, rng in _batches(n_paths, seed):
        occupancy = np.zeros((K, size))
        state = np.full(size, start)
        clock = np.zeros(size)
        active = np.ones(size, dtype=bool)
        while active.any():
            idx = np.flatnonzero(active)
            lam = exit_rates[state[idx]]
            with np.errstate(divide="ignore"):
                hold = np.where(lam > 0, rng.exponential(1.0, idx.size) / np.where(lam > 0, lam, 1), np.inf)
            stay = np.minimum(hold, terms.T - clock[idx])
            np.add.at(occupancy, (state[idx], idx), stay)
            clock[idx] += stay
            done = clock[idx] >= terms.T
            active[idx[done]] = False
            moving = idx[~done]
            if moving.size:
                cum = np.cumsum(jump_probs[state[moving]], axis=1)
                u = rng.random(moving.size)[:, None]
                state[moving] = np.minimum((u > cum).sum(axis=1), K - 1)
        x = np.full(size, math.log(terms.S0))
        for k in range(K):
            x += _increments(models[k], occupancy[k], rng, drifts[k])
        discount = np.exp(-np.asarray(rates) @ occupancy)
        samples.append(discount * _payoff(payoff, np.exp(x)))
    return _summarise(samples)
