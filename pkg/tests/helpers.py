"""Shared test utilities: independent oracles and small config builders.

The oracles here re-implement the exposure definitions in deliberately
straight-line Python so they cannot share bugs with the engine's vectorized
or compiled paths.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from ccpnet.market import AssetClass, Dealer, Marginal, MarketConfig


def make_config(notionals, betas, rho=0.0, marginals=None, names=None):
    """Small market from a plain nested list of notionals (dealers x classes)."""
    notionals = [list(row) for row in notionals]
    k = len(notionals[0])
    marginals = marginals or [Marginal.GAUSSIAN] * k
    names = names or [f"c{j}" for j in range(k)]
    classes = tuple(
        AssetClass(id=j, name=names[j], beta=float(betas[j]), marginal=marginals[j])
        for j in range(k)
    )
    dealers = tuple(
        Dealer(id=i, name=f"dealer{i}", notionals=tuple(row))
        for i, row in enumerate(notionals)
    )
    return MarketConfig(dealers=dealers, classes=classes, rho=rho)


def quad_positive_mean(sigma: float) -> float:
    """E[max(X, 0)] for X ~ N(0, sigma^2) by numerical quadrature."""
    if sigma == 0.0:
        return 0.0
    pdf = lambda x: math.exp(-x * x / (2 * sigma * sigma)) / (
        sigma * math.sqrt(2 * math.pi)
    )
    val, _ = quad(lambda x: x * pdf(x), 0.0, 40.0 * sigma, limit=200)
    return val


def quad_bilateral_ee(config: MarketConfig, i: int) -> float:
    """Bilateral expected exposure of dealer i via per-pair quadrature.

    Builds each pair's cross-class covariance explicitly, then integrates
    the positive part of the Gaussian sum numerically; independent of the
    engine's folded-mean prefactor.
    """
    z = config.notional_matrix()
    corr = config.correlation_matrix()
    betas = config.betas()
    k = config.n_classes
    total = 0.0
    for j in range(config.n_dealers):
        if j == i:
            continue
        s = np.zeros(k)
        for kk in range(k):
            denom = z[:, kk].sum() - z[i, kk]
            if z[i, kk] > 0 and z[j, kk] > 0:
                s[kk] = betas[kk] * z[i, kk] * z[j, kk] / denom
        var = float(s @ corr @ s)
        total += quad_positive_mean(math.sqrt(var))
    return total


def quad_tail_stats(sigma: float, level: float) -> tuple[float, float]:
    """(quantile, conditional tail mean) of max(X, 0), X ~ N(0, sigma^2),
    by root solving plus quadrature."""
    from scipy.optimize import brentq

    pdf = lambda x: math.exp(-x * x / (2 * sigma * sigma)) / (
        sigma * math.sqrt(2 * math.pi)
    )
    cdf_above = lambda q: quad(pdf, q, 40 * sigma, limit=200)[0]
    q = brentq(lambda x: cdf_above(x) - (1.0 - level), 0.0, 10.0 * sigma, xtol=1e-12)
    tail_mean = quad(lambda x: x * pdf(x), q, 40 * sigma, limit=200)[0] / cdf_above(q)
    return q, tail_mean


def oracle_exposures(x, scenarios):
    """Straight-line re-implementation of the scenario exposure definitions.

    x: one draw as a nested structure indexable as x[i][j][k]. Returns
    {scenario name: [exposure per dealer]}.
    """
    n = len(x)
    k = len(x[0][0])
    out = {}
    for scen in scenarios:
        resid = [1.0] * k
        ccps: dict[int, list] = {}
        for c in scen.cleared:
            resid[c.class_id] = 1.0 - c.fraction
            ccps.setdefault(c.ccp, []).append((c.class_id, c.fraction))
        per_dealer = []
        for i in range(n):
            e = 0.0
            for j in range(n):
                if j == i:
                    continue
                net = 0.0
                for kk in range(k):
                    net += resid[kk] * x[i][j][kk]
                if net > 0.0:
                    e += net
            for cleared in ccps.values():
                net = 0.0
                for j in range(n):
                    if j == i:
                        continue
                    for kk, w in cleared:
                        net += w * x[i][j][kk]
                if net > 0.0:
                    e += net
            per_dealer.append(e)
        out[scen.name] = per_dealer
    return out
