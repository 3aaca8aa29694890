"""Closed-form expected exposures and the minimum-clearing-member model.

The Gaussian closed forms give, per dealer, the expected net exposure under
pure bilateral netting and under one, two or a joint CCP. The homogeneous
model answers the market-design question: how many clearing members does a
single-class CCP need before it beats bilateral cross-class netting?

For the shipped six-class credit-exposure dataset the cleared class is the
CDS class; that reading (all six classes kept, CDS alpha scaled) is the one
that reproduces the published thresholds and is an inference, not stated in
the source data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .market import (
    ClearingScenario,
    ConfigError,
    HomogeneousSpec,
    MarketConfig,
    pair_scale_matrix,
    validate,
)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gaussian_positive_mean(sigma: float) -> float:
    """Mean of max(X, 0) for centered Gaussian X: sigma / sqrt(2 pi)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return sigma * _INV_SQRT_2PI


@dataclass(frozen=True)
class ExpectedExposureResult:
    """Per-dealer expected exposures for one scenario plus their total."""

    scenario: str
    per_dealer: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.per_dealer))


def _require_closed_form(config: MarketConfig) -> None:
    validate(config).raise_if_invalid()
    if config.has_t_marginals():
        raise ConfigError(
            "closed forms are Gaussian-only; use the Monte Carlo engine for "
            "t-distributed marginals"
        )


def _expected_exposure(
    config: MarketConfig,
    i: int,
    resid_w: np.ndarray,
    ccp_groups: list[np.ndarray],
) -> float:
    """Bilateral-residual term plus one multilateral term per CCP group.

    Exposures to different counterparties are independent, so each CCP's
    netted position has variance equal to the sum over counterparties of the
    weighted within-pair covariance.
    """
    s = pair_scale_matrix(config, i)
    corr = config.correlation_matrix()
    a = s * resid_w
    pair_var = np.einsum("jk,km,jm->j", a, corr, a)
    ee = np.sqrt(np.maximum(pair_var, 0.0)).sum() * _INV_SQRT_2PI
    for wvec in ccp_groups:
        g = s * wvec
        var = float(np.einsum("jk,km,jm->", g, corr, g))
        ee += math.sqrt(max(var, 0.0)) * _INV_SQRT_2PI
    return float(ee)


def expected_exposure_bilateral(config: MarketConfig, i: int) -> float:
    """Expected net exposure of dealer ``i`` with no central clearing."""
    _require_closed_form(config)
    return _expected_exposure(config, i, np.ones(config.n_classes), [])


def expected_exposure_one_ccp(
    config: MarketConfig, i: int, cleared: tuple[int, float]
) -> float:
    """Expected exposure of dealer ``i`` with one class partially cleared."""
    _require_closed_form(config)
    k, w = cleared
    _check_fraction(w)
    resid = np.ones(config.n_classes)
    resid[k] -= w
    wvec = np.zeros(config.n_classes)
    wvec[k] = w
    return _expected_exposure(config, i, resid, [wvec])


def expected_exposure_two_ccp(
    config: MarketConfig, i: int, cleared: list[tuple[int, float]]
) -> float:
    """Two separately cleared classes: one multilateral term per CCP."""
    _require_closed_form(config)
    resid = np.ones(config.n_classes)
    groups = []
    for k, w in cleared:
        _check_fraction(w)
        resid[k] -= w
        wvec = np.zeros(config.n_classes)
        wvec[k] = w
        groups.append(wvec)
    return _expected_exposure(config, i, resid, groups)


def expected_exposure_joint_ccp(
    config: MarketConfig, i: int, cleared: list[tuple[int, float]]
) -> float:
    """All cleared classes netted at a single CCP: the multilateral term
    keeps cross-class correlation inside one max."""
    _require_closed_form(config)
    resid = np.ones(config.n_classes)
    wvec = np.zeros(config.n_classes)
    for k, w in cleared:
        _check_fraction(w)
        resid[k] -= w
        wvec[k] = w
    return _expected_exposure(config, i, resid, [wvec])


def scenario_expected_exposures(
    config: MarketConfig, scenario: ClearingScenario
) -> ExpectedExposureResult:
    """Closed-form per-dealer expected exposures for any clearing scenario."""
    _require_closed_form(config)
    resid = scenario.residual_weights(config.n_classes)
    groups = scenario.ccp_groups(config.n_classes)
    per = tuple(
        _expected_exposure(config, i, resid, groups) for i in range(config.n_dealers)
    )
    return ExpectedExposureResult(scenario=scenario.name, per_dealer=per)


def _check_fraction(w: float) -> None:
    if not 0.0 <= w <= 1.0:
        raise ConfigError(f"clearing fraction {w} outside [0, 1]")


# ---------------------------------------------------------------------------
# Homogeneous market: expected exposures and member threshold
# ---------------------------------------------------------------------------


def _pair_stds(spec: HomogeneousSpec, w: float) -> tuple[float, float]:
    """Std dev of a pair's class-sum position: all classes bilateral (A) and
    with the cleared class reduced to its 1-w remainder (B)."""
    sig = spec.sigmas()
    corr = spec.correlation_matrix()
    a = math.sqrt(float(sig @ corr @ sig))
    resid = np.ones(spec.n_classes)
    resid[spec.cleared_class] -= w
    sr = sig * resid
    b = math.sqrt(float(sr @ corr @ sr))
    return a, b


def homogeneous_ee(
    spec: HomogeneousSpec, n: int, with_ccp: bool, w: float = 1.0
) -> float:
    """Expected exposure of one dealer in an N-dealer homogeneous market.

    Bilateral: (N-1) pairs, each contributing the folded-Gaussian mean of the
    cross-class sum. With a CCP on the cleared class: the bilateral remainder
    plus a multilateral term whose netted variance grows like N-1 instead of
    (N-1)^2, which is the entire source of the CCP's advantage.
    """
    if n < 2:
        raise ConfigError("N >= 2 required")
    _check_fraction(w)
    a, b = _pair_stds(spec, w)
    if not with_ccp:
        return (n - 1) * a * _INV_SQRT_2PI
    sigma_c = float(spec.sigmas()[spec.cleared_class])
    return ((n - 1) * b + w * sigma_c * math.sqrt(n - 1)) * _INV_SQRT_2PI


@dataclass(frozen=True)
class ThresholdResult:
    """Minimal member count at which the CCP strictly beats bilateral netting,
    with both expected-exposure curves evaluable at any N."""

    spec: HomogeneousSpec
    w: float
    n_star: int

    def bilateral_ee(self, n: int) -> float:
        return homogeneous_ee(self.spec, n, with_ccp=False)

    def ccp_ee(self, n: int) -> float:
        return homogeneous_ee(self.spec, n, with_ccp=True, w=self.w)


def min_clearing_members(spec: HomogeneousSpec, w: float = 1.0) -> ThresholdResult:
    """Smallest integer N >= 2 where clearing the chosen class lowers
    expected exposure below the pure bilateral value.

    Solved in closed form via sqrt(N-1) > w*sigma_c / (A - B), then confirmed
    by an integer scan up to 10x the solution so a floating-point edge can
    never misplace the crossing. A <= B would mean the CCP never wins; that
    cannot happen for rho >= 0 and a positive cleared-class sigma.
    """
    _check_fraction(w)
    if w == 0.0:
        raise ConfigError("clearing fraction w = 0 never changes exposures")
    a, b = _pair_stds(spec, w)
    if a <= b:
        raise ConfigError("CCP never reduces expected exposure for this spec")
    sigma_c = float(spec.sigmas()[spec.cleared_class])
    x = w * sigma_c / (a - b)
    n_star = max(2, math.floor(1.0 + x * x) + 1)

    # confirm by integer scan up to 10x the closed-form solution so a
    # floating-point edge cannot misplace the crossing; for gigantic
    # thresholds a window around the solution bounds the memory instead
    # (the gap (N-1)(A-B) - w*sigma_c*sqrt(N-1) is increasing once positive,
    # so a single crossing is guaranteed)
    if n_star <= 100_000:
        ns = np.arange(2, 10 * n_star + 1)
    else:
        ns = np.arange(max(2, n_star - 1000), n_star + 1000)
    bilat = (ns - 1) * a
    ccp = (ns - 1) * b + w * sigma_c * np.sqrt(ns - 1.0)
    below = ccp < bilat
    crossing = np.flatnonzero(below)
    if crossing.size == 0:
        raise ConfigError("CCP never reduces expected exposure for this spec")
    n_scan = int(ns[crossing[0]])
    if not below[crossing[0]:].all():
        raise ConfigError("expected-exposure curves cross more than once")
    return ThresholdResult(spec=spec, w=w, n_star=n_scan)


def threshold_surface(
    spec: HomogeneousSpec,
    alpha_grid,
    rho_grid,
    w: float = 1.0,
) -> np.ndarray:
    """Member threshold over a grid of cleared-class riskiness multipliers
    and cross-class correlations; entry [a, r] pairs alpha_grid[a] with
    rho_grid[r]."""
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    rho_grid = np.asarray(rho_grid, dtype=float)
    if alpha_grid.size == 0 or rho_grid.size == 0:
        raise ConfigError("grids must be non-empty")
    if (alpha_grid <= 0).any():
        raise ConfigError("alpha grid values must be > 0")
    if ((rho_grid < 0) | (rho_grid >= 1)).any():
        raise ConfigError("rho grid values must lie in [0, 1)")
    out = np.empty((alpha_grid.size, rho_grid.size), dtype=np.int64)
    for ai, alpha in enumerate(alpha_grid):
        alphas = list(spec.alphas)
        alphas[spec.cleared_class] = float(alpha)
        for ri, rho in enumerate(rho_grid):
            cell = HomogeneousSpec(
                credit_exposures=spec.credit_exposures,
                alphas=tuple(alphas),
                rho=float(rho),
                cleared_class=spec.cleared_class,
                class_names=spec.class_names,
            )
            out[ai, ri] = min_clearing_members(cell, w=w).n_star
    return out


def write_surface(path, alpha_grid, rho_grid, surface: np.ndarray) -> None:
    """Emit the surface as delimited text with columns alpha, rho, n_star."""
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    rho_grid = np.asarray(rho_grid, dtype=float)
    with open(path, "w") as fh:
        fh.write("alpha,rho,n_star\n")
        for ai, alpha in enumerate(alpha_grid):
            for ri, rho in enumerate(rho_grid):
                fh.write(f"{float(alpha)!r},{float(rho)!r},{int(surface[ai, ri])}\n")
