"""Backend parity: the compiled kernel and the numpy fallback must agree."""

import numpy as np
import pytest

from ccpnet import kernels
from ccpnet.market import no_ccp, single_ccp, standard_scenarios
from ccpnet.montecarlo import _scenario_arrays
from helpers import oracle_exposures

pytestmark = pytest.mark.skipif(
    not kernels.HAVE_COMPILED, reason="compiled kernel not built"
)


def _random_problem(seed, n_paths=64, n_dealers=5, n_classes=3):
    rng = np.random.default_rng(seed)
    ii, jj = np.triu_indices(n_dealers, k=1)
    n_pairs = ii.size
    y = rng.standard_normal((n_paths, n_pairs, n_classes))
    s_plus = rng.uniform(0.0, 2.0, (n_pairs, n_classes))
    s_minus = rng.uniform(0.0, 2.0, (n_pairs, n_classes))
    scenarios = standard_scenarios(irs_class=1, cds_class=2, w_irs=0.9, w_cds=0.85)
    resid, ccp_w, offsets = _scenario_arrays(scenarios, n_classes)
    return y, s_plus, s_minus, ii.astype(np.intp), jj.astype(np.intp), resid, ccp_w, offsets, n_dealers


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_backends_agree(seed):
    args = _random_problem(seed)
    out_np = kernels.scenario_exposures(*args, backend="numpy")
    out_cy = kernels.scenario_exposures(*args, backend="cython")
    scale = np.abs(out_np).max()
    assert np.allclose(out_np, out_cy, rtol=1e-12, atol=1e-12 * max(scale, 1.0))


def test_no_ccp_only_and_empty_groups():
    y, sp, sm, pi, pj, *_ , n = _random_problem(7)
    resid, ccp_w, offsets = _scenario_arrays([no_ccp()], 3)
    assert ccp_w.shape[0] == 0
    for backend in kernels.available_backends():
        out = kernels.scenario_exposures(
            y, sp, sm, pi, pj, resid, ccp_w, offsets, n, backend=backend
        )
        assert out.shape == (y.shape[0], 1, n)
        assert (out >= 0).all()


def test_zero_fraction_scenario_bitwise_equals_base():
    y, sp, sm, pi, pj, *_ , n = _random_problem(11)
    scens = [no_ccp(), single_ccp(1, 0.0, name="idle_ccp")]
    resid, ccp_w, offsets = _scenario_arrays(scens, 3)
    for backend in kernels.available_backends():
        out = kernels.scenario_exposures(
            y, sp, sm, pi, pj, resid, ccp_w, offsets, n, backend=backend
        )
        assert np.array_equal(out[:, 0, :], out[:, 1, :])


@pytest.mark.parametrize("backend", ["numpy", "cython"])
def test_kernel_matches_straight_line_oracle(backend):
    y, sp, sm, pi, pj, resid, ccp_w, offsets, n = _random_problem(
        3, n_paths=8, n_dealers=4, n_classes=3
    )
    scenarios = standard_scenarios(irs_class=1, cds_class=2, w_irs=0.9, w_cds=0.85)
    out = kernels.scenario_exposures(
        y, sp, sm, pi, pj, resid, ccp_w, offsets, n, backend=backend
    )
    for c in range(y.shape[0]):
        x = np.zeros((n, n, 3))
        x[pi, pj] = y[c] * sp
        x[pj, pi] = -y[c] * sm
        ref = oracle_exposures(x, scenarios)
        for s, scen in enumerate(scenarios):
            assert np.allclose(out[c, s], ref[scen.name], rtol=1e-12, atol=1e-10)
