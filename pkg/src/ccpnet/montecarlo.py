"""Copula-based exposure sampling and risk-measure estimation.

Sampling is counter-based: the uniform block feeding (path, pair, class) is a
pure function of (seed, path, pair, class), implemented with numpy's Philox
generator plus explicit block arithmetic. Workers therefore cannot influence
results; a report is bit-identical for a fixed (seed, n_paths, chunk_size)
at any thread count.

All clearing scenarios are evaluated on the same draws (common random
numbers), which is what makes scenario differences and the exposure-reduction
histograms low-variance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import kernels
from .market import (
    MILLIONS_PER_BILLION,
    ClearingScenario,
    ConfigError,
    Marginal,
    MarketConfig,
    ScenarioKind,
    pair_scale,
    validate,
)

# smallest uniform we map through ndtri; anything below only occurs with
# probability 2^-53 per draw and would otherwise produce -inf
_MIN_UNIFORM = 2.0 ** -53


# ---------------------------------------------------------------------------
# Normalized t3 marginal
# ---------------------------------------------------------------------------


def student_t3_unit_cdf(x):
    """CDF of a Student-t with 3 dof rescaled to unit variance.

    For v = t3/sqrt(3) the CDF collapses to 1/2 + (arctan v + v/(1+v^2))/pi.
    """
    v = np.asarray(x, dtype=float)
    return 0.5 + (np.arctan(v) + v / (1.0 + v * v)) / np.pi


def student_t3_unit_ppf(u):
    """Quantile of the unit-variance t3 marginal by Halley iteration.

    There is no algebraic closed form at 3 dof (the CDF mixes arctan with a
    rational term), so we invert numerically: cubic-tail / linear-center
    starting points, then five Halley steps. The round-trip defect
    |cdf(ppf(u)) - u| is at machine epsilon; relative accuracy vs an
    independent inversion is ~1e-10 and limited only by float64
    conditioning in the extreme tails.
    """
    u = np.asarray(u, dtype=float)
    lower = u < 0.5
    q = np.where(lower, u, 1.0 - u)
    # tail: 1 - F(v) ~ 2/(3 pi v^3); center: slope pi/2 at the median
    tail = np.cbrt(2.0 / (3.0 * np.pi * np.maximum(q, 1e-300)))
    center = (u - 0.5) * (np.pi / 2.0) / (1.0 - (u - 0.5) ** 2 * 1.6)
    v = np.where(q < 0.15, tail, np.abs(center))
    v = np.where(lower, -v, v)
    for _ in range(5):
        f = student_t3_unit_cdf(v) - u
        d = (2.0 / np.pi) / (1.0 + v * v) ** 2
        d2 = -8.0 * v / (np.pi * (1.0 + v * v) ** 3)
        v = v - f / d / (1.0 - 0.5 * f * d2 / (d * d))
    return v


# ---------------------------------------------------------------------------
# Sampling model and pair layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingModel:
    """How pair shocks are drawn: copula correlation, per-class marginal law,
    and whether the two directions of a pair are two sides of one trade.

    The t3 marginal is the raw t3 scaled by 1/sqrt(3), so its variance is
    exactly one by construction.
    """

    rho: float
    marginals: tuple[Marginal, ...]
    antisymmetric: bool = True

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError("copula correlation rho must lie in [0, 1)")

    @property
    def n_classes(self) -> int:
        return len(self.marginals)

    @classmethod
    def from_config(cls, config: MarketConfig, antisymmetric: bool = True):
        return cls(
            rho=config.scalar_rho(),
            marginals=config.marginals(),
            antisymmetric=antisymmetric,
        )


@dataclass(frozen=True)
class _PairLayout:
    """Pair bookkeeping shared by every chunk of a run.

    Each row holds one copula draw. Antisymmetric mode: one row per unordered
    pair i<j, feeding dealer i with scale ``s_plus`` and dealer j with the
    negated draw and scale ``s_minus``. Independent mode: one row per ordered
    pair, ``s_minus`` all zero.
    """

    pair_i: np.ndarray
    pair_j: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    n_dealers: int
    n_classes: int

    @property
    def n_pairs(self) -> int:
        return self.pair_i.shape[0]

    @property
    def draws_per_path(self) -> int:
        # one common factor plus one idiosyncratic shock per class, per row
        return self.n_pairs * (self.n_classes + 1)

    @property
    def padded_draws(self) -> int:
        # Philox advances whole blocks of 4 doubles; pad so each path starts
        # exactly on a block boundary
        return -(-self.draws_per_path // 4) * 4


def _build_layout(
    config: MarketConfig, model: SamplingModel, unit_scale: float
) -> _PairLayout:
    z = config.notional_matrix()
    beta = config.betas()
    denom = z.sum(axis=0) - z
    safe = np.where(denom > 0, denom, 1.0)
    n = config.n_dealers
    if model.antisymmetric:
        ii, jj = np.triu_indices(n, k=1)
    else:
        grid = np.arange(n)
        ii, jj = np.meshgrid(grid, grid, indexing="ij")
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
    s_plus = beta * z[ii] * z[jj] / safe[ii] * unit_scale
    if model.antisymmetric:
        s_minus = beta * z[jj] * z[ii] / safe[jj] * unit_scale
    else:
        s_minus = np.zeros_like(s_plus)
    return _PairLayout(
        pair_i=ii.astype(np.intp),
        pair_j=jj.astype(np.intp),
        s_plus=np.ascontiguousarray(s_plus),
        s_minus=np.ascontiguousarray(s_minus),
        n_dealers=n,
        n_classes=config.n_classes,
    )


def _uniforms(seed: int, layout: _PairLayout, start: int, count: int) -> np.ndarray:
    """Uniform block for paths [start, start+count): shape (count, pairs, K+1).

    Pure function of (seed, path index): path p owns doubles
    [p * padded_draws, p * padded_draws + draws_per_path).
    """
    bg = np.random.Philox(key=seed)
    bg.advance(start * layout.padded_draws // 4)
    u = np.random.Generator(bg).random(count * layout.padded_draws)
    u = u.reshape(count, layout.padded_draws)[:, : layout.draws_per_path]
    return np.maximum(u, _MIN_UNIFORM).reshape(
        count, layout.n_pairs, layout.n_classes + 1
    )


def _copula_values(u: np.ndarray, rho: float, marginals) -> np.ndarray:
    """Map uniforms (..., K+1) to standardized class shocks (..., K).

    Gaussian coordinates come from the equicorrelation factor split
    sqrt(rho) * common + sqrt(1-rho) * idiosyncratic; t3 classes are pushed
    through the Gaussian copula (normal CDF, then the t3 quantile).
    """
    z = ndtri(u)
    y = math.sqrt(rho) * z[..., :1] + math.sqrt(1.0 - rho) * z[..., 1:]
    for k, marginal in enumerate(marginals):
        if marginal is Marginal.STUDENT_T3:
            y[..., k] = student_t3_unit_ppf(ndtr(y[..., k]))
    return y


def sample_pair_exposures(
    config: MarketConfig, model: SamplingModel, i: int, j: int, u: np.ndarray
):
    """Per-class position values for the pair (i, j) given uniform noise.

    ``u`` has shape (..., K+1): one common factor and K idiosyncratic
    coordinates. Returns ``(x_ij, x_ji)`` where the reverse direction is the
    negated draw under its own scale; ``x_ji`` is None when directions are
    sampled independently.
    """
    if not i < j:
        raise ConfigError("canonical pair ordering requires i < j")
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != config.n_classes + 1:
        raise ConfigError("noise must provide K+1 uniforms per draw")
    y = _copula_values(u, model.rho, model.marginals)
    s_ij = np.array([pair_scale(config, i, j, k) for k in range(config.n_classes)])
    x_ij = y * s_ij
    if not model.antisymmetric:
        return x_ij, None
    s_ji = np.array([pair_scale(config, j, i, k) for k in range(config.n_classes)])
    return x_ij, -y * s_ji


# ---------------------------------------------------------------------------
# Draw matrices and the reference scenario evaluator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExposureDraw:
    """One sampled position matrix; ``x[i, j, k]`` is what dealer i holds in
    class k facing dealer j (millions USD for billions-denominated configs)."""

    x: np.ndarray


def sample_draws(
    config: MarketConfig,
    model: SamplingModel,
    seed: int,
    start: int,
    count: int,
    unit_scale: float = MILLIONS_PER_BILLION,
) -> np.ndarray:
    """Position matrices for paths [start, start+count): (count, N, N, K).

    Identical to what the simulation kernel consumes for the same seed and
    path indices; used by the oracle-equivalence tests.
    """
    layout = _build_layout(config, model, unit_scale)
    y = _copula_values(_uniforms(seed, layout, start, count), model.rho, model.marginals)
    n, k = layout.n_dealers, layout.n_classes
    x = np.zeros((count, n, n, k))
    x[:, layout.pair_i, layout.pair_j, :] = y * layout.s_plus
    if model.antisymmetric:
        x[:, layout.pair_j, layout.pair_i, :] = -y * layout.s_minus
    return x


@dataclass(frozen=True, eq=False)
class ScenarioExposures:
    """Realized per-dealer exposures of one scenario on one draw; ``eps`` is
    the per-dealer reduction against the no-clearing base, defined only when
    both were evaluated on the same draw."""

    scenario: str
    e: np.ndarray
    eps: np.ndarray | None = None


def evaluate_scenarios(draw: ExposureDraw, scenarios) -> list[ScenarioExposures]:
    """Evaluate every scenario on one common draw; when a scenario clearing
    nothing is present, attach each scenario's exposure reduction against it."""
    n = np.asarray(draw.x).shape[0]
    realized = [
        np.array([evaluate_scenario(draw, scen, i) for i in range(n)])
        for scen in scenarios
    ]
    base = next(
        (e for e, scen in zip(realized, scenarios) if _is_base(scen)), None
    )
    return [
        ScenarioExposures(
            scenario=scen.name,
            e=e,
            eps=None if base is None else base - e,
        )
        for e, scen in zip(realized, scenarios)
    ]


def evaluate_scenario(draw: ExposureDraw, scenario: ClearingScenario, i: int) -> float:
    """Realized net exposure of dealer ``i`` on one draw under one scenario:
    per-counterparty max over the bilateral remainder plus one max per CCP."""
    x = np.asarray(draw.x, dtype=float)
    n, _, k = x.shape
    if not 0 <= i < n:
        raise IndexError(f"dealer index {i} out of range")
    others = np.arange(n) != i
    resid = scenario.residual_weights(k)
    e = float(np.maximum((x[i, others] * resid).sum(axis=1), 0.0).sum())
    for wvec in scenario.ccp_groups(k):
        e += max(float((x[i, others] * wvec).sum()), 0.0)
    return e


def _scenario_arrays(scenarios, n_classes: int):
    resid = np.empty((len(scenarios), n_classes))
    groups: list[np.ndarray] = []
    offsets = [0]
    for s, scen in enumerate(scenarios):
        resid[s] = scen.residual_weights(n_classes)
        groups.extend(scen.ccp_groups(n_classes))
        offsets.append(len(groups))
    ccp_w = (
        np.vstack(groups) if groups else np.zeros((0, n_classes))
    )
    return resid, ccp_w, np.asarray(offsets, dtype=np.intp)


def exposures_for_paths(
    config: MarketConfig,
    model: SamplingModel,
    scenarios,
    seed: int,
    start: int,
    count: int,
    backend: str | None = None,
    unit_scale: float = MILLIONS_PER_BILLION,
) -> np.ndarray:
    """Realized exposures (count, scenarios, dealers) for the given paths.

    This is exactly the simulation hot path; ``simulate`` runs it chunk by
    chunk and aggregates.
    """
    layout = _build_layout(config, model, unit_scale)
    resid, ccp_w, offsets = _scenario_arrays(scenarios, layout.n_classes)
    y = _copula_values(_uniforms(seed, layout, start, count), model.rho, model.marginals)
    return kernels.scenario_exposures(
        y,
        layout.s_plus,
        layout.s_minus,
        layout.pair_i,
        layout.pair_j,
        resid,
        ccp_w,
        offsets,
        layout.n_dealers,
        backend=backend,
    )


# ---------------------------------------------------------------------------
# Risk measures
# ---------------------------------------------------------------------------


def empirical_quantile(sorted_sample, level: float) -> float:
    """Order-statistic quantile with linear interpolation between adjacent
    order statistics: index h = (n-1) * level into the ascending sample."""
    x = np.asarray(sorted_sample, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if x.size == 1:
        return float(x[0])
    h = (x.size - 1) * level
    lo = int(math.floor(h))
    frac = h - lo
    if lo >= x.size - 1:
        return float(x[-1])
    return float(x[lo] + frac * (x[lo + 1] - x[lo]))


def _tail_stats(sorted_sample: np.ndarray, level: float) -> tuple[float, float, int]:
    """(VaR, ES, exceedance count): ES is the mean of values above VaR and
    falls back to VaR itself when nothing exceeds it."""
    var = empirical_quantile(sorted_sample, level)
    idx = np.searchsorted(sorted_sample, var, side="right")
    tail = sorted_sample[idx:]
    if tail.size == 0:
        return var, var, 0
    return var, float(tail.mean()), int(tail.size)


def freedman_diaconis_edges(values: np.ndarray, max_bins: int = 2000) -> np.ndarray:
    """Histogram bin edges with the Freedman-Diaconis width, capped."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return np.array([lo - 0.5, hi + 0.5])
    q25, q75 = np.percentile(v, [25.0, 75.0])
    width = 2.0 * (q75 - q25) / v.size ** (1.0 / 3.0)
    if width <= 0:
        n_bins = 1
    else:
        n_bins = int(np.clip(math.ceil((hi - lo) / width), 1, max_bins))
    return np.linspace(lo, hi, n_bins + 1)


# ---------------------------------------------------------------------------
# Simulation driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RiskReport:
    """Per-dealer and per-scenario risk measures from one common-random-numbers
    pass, all in millions USD, plus ratios against the no-CCP base."""

    dealer_names: tuple[str, ...]
    scenario_names: tuple[str, ...]
    n_paths: int
    seed: int
    level: float
    backend: str
    ee: np.ndarray              # (scenarios, dealers)
    ee_se: np.ndarray           # standard error of each EE estimate
    var: np.ndarray             # empirical quantile at `level`
    es: np.ndarray              # mean exceedance beyond the quantile
    es_exceedances: np.ndarray  # tail sample size behind each ES cell
    mean_max: np.ndarray        # (scenarios,) mean over paths of max_i e_i
    base_index: int | None
    assumptions: tuple[str, ...] = ()
    histograms: dict | None = None   # scenario name -> (bin edges, counts)
    samples: np.ndarray | None = None  # (scenarios, paths, dealers) float32

    @property
    def total_ee(self) -> np.ndarray:
        return self.ee.sum(axis=1)

    def _ratio(self, values: np.ndarray) -> np.ndarray:
        if self.base_index is None:
            raise ValueError("report has no no-CCP base scenario")
        base = values[self.base_index]
        return np.divide(
            values, base, out=np.full_like(values, np.nan), where=base != 0
        )

    @property
    def ee_ratio(self) -> np.ndarray:
        return self._ratio(self.ee)

    @property
    def var_ratio(self) -> np.ndarray:
        return self._ratio(self.var)

    @property
    def es_ratio(self) -> np.ndarray:
        return self._ratio(self.es)

    @property
    def total_ee_ratio(self) -> np.ndarray:
        return self._ratio(self.total_ee)

    @property
    def mean_max_ratio(self) -> np.ndarray:
        return self._ratio(self.mean_max)

    @property
    def low_confidence(self) -> np.ndarray:
        """ES cells whose tail holds fewer than 100 samples."""
        return self.es_exceedances < 100


def _is_base(scenario: ClearingScenario) -> bool:
    return scenario.kind is ScenarioKind.NO_CCP or all(
        c.fraction == 0.0 for c in scenario.cleared
    )


def _check_pathwise(e: np.ndarray, scenarios) -> None:
    if (e < 0.0).any():
        raise AssertionError("negative realized exposure")
    # a joint CCP nets across classes inside one max, so pathwise it can
    # never exceed the matching two-CCP scenario
    keyed: dict[tuple, dict] = {}
    for s, scen in enumerate(scenarios):
        key = tuple(sorted((c.class_id, c.fraction) for c in scen.cleared))
        keyed.setdefault(key, {})[scen.kind] = s
    for key, kinds in keyed.items():
        if ScenarioKind.JOINT_CCP in kinds and ScenarioKind.TWO_CCPS in kinds:
            ej = e[:, kinds[ScenarioKind.JOINT_CCP], :]
            et = e[:, kinds[ScenarioKind.TWO_CCPS], :]
            tol = 1e-9 * (1.0 + np.abs(et))
            if (ej > et + tol).any():
                raise AssertionError("joint-CCP exposure exceeded two-CCP exposure")


def simulate(
    config: MarketConfig,
    model: SamplingModel | None,
    scenarios,
    n_paths: int,
    seed: int,
    *,
    threads: int = 1,
    chunk_size: int = 4096,
    level: float = 0.99,
    backend: str | None = None,
    collect_histograms: bool = False,
    check_invariants: bool = False,
    keep_samples: bool = False,
    assumptions: tuple[str, ...] = (),
) -> RiskReport:
    """Estimate EE, VaR, ES and mean-max for every scenario in one pass.

    Parameters
    ----------
    config, model
        Market and sampling model; ``model=None`` derives the model from the
        config (scalar rho, per-class marginals, antisymmetric directions).
    scenarios
        Clearing scenarios, all evaluated on the same draws. Ratios are
        reported against the first scenario that clears nothing.
    n_paths, seed
        Path count (>= 1000) and Philox key. Fixed (seed, n_paths,
        chunk_size) gives a bit-identical report at any ``threads``.
    """
    validate(config).raise_if_invalid()
    if model is None:
        model = SamplingModel.from_config(config)
    if model.n_classes != config.n_classes:
        raise ConfigError("sampling model class count does not match config")
    scenarios = tuple(scenarios)
    if not scenarios:
        raise ConfigError("at least one scenario required")
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique")
    if n_paths < 1000:
        raise ConfigError("n_paths below the 10^3 floor")
    if chunk_size < 1:
        raise ConfigError("chunk_size must be >= 1")
    if not 0.0 < level < 1.0:
        raise ConfigError("risk-measure level must lie in (0, 1)")
    if seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    backend_name = backend or kernels.DEFAULT_BACKEND

    layout = _build_layout(config, model, MILLIONS_PER_BILLION)
    resid, ccp_w, offsets = _scenario_arrays(scenarios, layout.n_classes)
    n_scen, n_dealers = len(scenarios), layout.n_dealers

    base_candidates = [s for s, scen in enumerate(scenarios) if _is_base(scen)]
    base_index = base_candidates[0] if base_candidates else None

    samples = np.empty((n_scen, n_paths, n_dealers), dtype=np.float32)

    chunks = [
        (ci, start, min(chunk_size, n_paths - start))
        for ci, start in enumerate(range(0, n_paths, chunk_size))
    ]

    def run_chunk(job):
        ci, start, count = job
        y = _copula_values(
            _uniforms(seed, layout, start, count), model.rho, model.marginals
        )
        e = kernels.scenario_exposures(
            y,
            layout.s_plus,
            layout.s_minus,
            layout.pair_i,
            layout.pair_j,
            resid,
            ccp_w,
            offsets,
            n_dealers,
            backend=backend_name,
        )
        if check_invariants:
            _check_pathwise(e, scenarios)
        samples[:, start : start + count, :] = e.transpose(1, 0, 2)
        return ci, e.sum(axis=0), (e * e).sum(axis=0), e.max(axis=2).sum(axis=0)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run_chunk, chunks))
    else:
        partials = [run_chunk(job) for job in chunks]

    ee_sum = np.zeros((n_scen, n_dealers))
    sq_sum = np.zeros((n_scen, n_dealers))
    mm_sum = np.zeros(n_scen)
    for _, esum, sqsum, mmsum in sorted(partials, key=lambda p: p[0]):
        ee_sum += esum
        sq_sum += sqsum
        mm_sum += mmsum

    ee = ee_sum / n_paths
    ee_se = np.sqrt(np.maximum(sq_sum / n_paths - ee * ee, 0.0) / n_paths)
    mean_max = mm_sum / n_paths

    var = np.empty((n_scen, n_dealers))
    es = np.empty((n_scen, n_dealers))
    exceed = np.empty((n_scen, n_dealers), dtype=np.int64)
    for s in range(n_scen):
        for n in range(n_dealers):
            xs = np.sort(samples[s, :, n].astype(np.float64))
            var[s, n], es[s, n], exceed[s, n] = _tail_stats(xs, level)

    histograms = None
    if collect_histograms and base_index is not None:
        histograms = {}
        base = samples[base_index].astype(np.float64)
        for s, scen in enumerate(scenarios):
            if s == base_index:
                continue
            eps = (base - samples[s].astype(np.float64)).ravel()
            edges = freedman_diaconis_edges(eps)
            counts, _ = np.histogram(eps, bins=edges)
            histograms[scen.name] = (edges, counts)

    return RiskReport(
        dealer_names=tuple(d.name for d in config.dealers),
        scenario_names=tuple(names),
        n_paths=n_paths,
        seed=seed,
        level=level,
        backend=backend_name,
        ee=ee,
        ee_se=ee_se,
        var=var,
        es=es,
        es_exceedances=exceed,
        mean_max=mean_max,
        base_index=base_index,
        assumptions=tuple(assumptions),
        histograms=histograms,
        samples=samples if keep_samples else None,
    )


def write_path_dump(report: RiskReport, path) -> None:
    """Per-path diagnostic dump: one ``scenario,dealer,value`` row per
    realized exposure. Needs a report built with ``keep_samples=True``."""
    if report.samples is None:
        raise ValueError("report was built without keep_samples=True")
    with open(path, "w") as fh:
        fh.write("scenario,dealer,value\n")
        for s, sname in enumerate(report.scenario_names):
            for n, dname in enumerate(report.dealer_names):
                for v in report.samples[s, :, n]:
                    fh.write(f"{sname},{dname},{float(v)!r}\n")
