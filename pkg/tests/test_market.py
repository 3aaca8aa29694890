"""Market types: validation reporting, pair scales, scenario invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccpnet.market import (
    ClearedClass,
    ClearingScenario,
    ConfigError,
    Dealer,
    Marginal,
    ScenarioKind,
    joint_ccp,
    no_ccp,
    pair_scale,
    single_ccp,
    standard_scenarios,
    two_ccps,
    validate,
)
from helpers import make_config


def test_validate_rejects_single_dealer():
    config = make_config([[1.0]], betas=[1.0])
    report = validate(config)
    assert not report.ok
    assert any("N >= 2" in v for v in report.violations)
    with pytest.raises(ConfigError):
        report.raise_if_invalid()


def test_validate_accepts_plain_market():
    config = make_config(np.ones((3, 4)), betas=[0.5] * 4, rho=0.1)
    assert validate(config).ok


def test_validate_flags_zero_counterparty_denominator():
    # one dealer holds the entire class: nobody to face
    config = make_config([[1.0], [0.0], [0.0]], betas=[1.0])
    report = validate(config)
    assert any("zero counterparty notional denominator" in v for v in report.violations)


def test_validate_rho_bounds():
    assert not validate(make_config([[1.0], [1.0]], [1.0], rho=1.0)).ok
    assert not validate(make_config([[1.0], [1.0]], [1.0], rho=-0.1)).ok
    assert validate(make_config([[1.0], [1.0]], [1.0], rho=0.0)).ok


def test_validate_correlation_matrix():
    good = ((1.0, 0.2), (0.2, 1.0))
    bad_diag = ((0.9, 0.2), (0.2, 1.0))
    not_pd = ((1.0, 1.2), (1.2, 1.0))
    base = dict(notionals=np.ones((2, 2)), betas=[1.0, 1.0])
    assert validate(make_config(**base, rho=good)).ok
    assert not validate(make_config(**base, rho=bad_diag)).ok
    assert not validate(make_config(**base, rho=not_pd)).ok


def test_validate_negative_notional_and_beta():
    assert not validate(make_config([[1.0], [-1.0]], [1.0])).ok
    assert not validate(make_config([[1.0], [1.0]], [0.0])).ok


def test_pair_scale_two_dealers_unit():
    config = make_config([[1.0], [1.0]], betas=[1.0])
    assert pair_scale(config, 0, 1, 0) == 1.0


def test_pair_scale_hand_value():
    # beta * Z_i * Z_j / (sum of the others): 0.5 * 10 * 4 / 10 = 2
    config = make_config([[10.0], [4.0], [6.0]], betas=[0.5])
    assert pair_scale(config, 0, 1, 0) == pytest.approx(2.0, abs=0.0)


def test_pair_scale_zero_notional_is_zero():
    config = make_config([[10.0], [0.0], [6.0]], betas=[0.5])
    assert pair_scale(config, 0, 1, 0) == 0.0
    assert pair_scale(config, 1, 0, 0) == 0.0


def test_pair_scale_rejects_diagonal():
    config = make_config([[1.0], [1.0]], betas=[1.0])
    with pytest.raises(ConfigError):
        pair_scale(config, 1, 1, 0)


@given(
    z=st.lists(
        st.lists(st.floats(0.1, 100.0), min_size=2, max_size=2),
        min_size=2,
        max_size=4,
    ),
    beta=st.floats(0.01, 5.0),
    c=st.floats(0.01, 100.0),
)
@settings(max_examples=50, deadline=None)
def test_pair_scale_homogeneous_in_notionals(z, beta, c):
    config = make_config(z, betas=[beta, beta])
    scaled = make_config([[c * v for v in row] for row in z], betas=[beta, beta])
    for k in range(2):
        assert pair_scale(scaled, 0, 1, k) == pytest.approx(
            c * pair_scale(config, 0, 1, k), rel=1e-12
        )


@given(
    z=st.lists(
        st.lists(st.floats(0.1, 100.0), min_size=1, max_size=1),
        min_size=2,
        max_size=5,
    ),
    beta=st.floats(0.01, 5.0),
)
@settings(max_examples=50, deadline=None)
def test_pair_scales_sum_to_beta_times_own_notional(z, beta):
    config = make_config(z, betas=[beta])
    n = len(z)
    for i in range(n):
        total = sum(pair_scale(config, i, j, 0) for j in range(n) if j != i)
        assert total == pytest.approx(beta * z[i][0], rel=1e-12)


def test_scenario_fraction_bounds():
    with pytest.raises(ConfigError):
        single_ccp(0, 1.5)
    with pytest.raises(ConfigError):
        single_ccp(0, -0.1)
    single_ccp(0, 0.0)  # all-zero clearing is legal and equals no clearing


def test_scenario_distinct_classes():
    with pytest.raises(ConfigError):
        joint_ccp([(0, 0.5), (0, 0.6)])


def test_no_ccp_scenario_must_be_empty():
    with pytest.raises(ConfigError):
        ClearingScenario(ScenarioKind.NO_CCP, (ClearedClass(0, 0.5),), "bad")
    assert no_ccp().cleared == ()


def test_two_ccps_need_distinct_ccp_ids():
    entries = (ClearedClass(0, 0.5, ccp=0), ClearedClass(1, 0.5, ccp=0))
    with pytest.raises(ConfigError):
        ClearingScenario(ScenarioKind.TWO_CCPS, entries, "bad")
    assert two_ccps([(0, 0.5), (1, 0.5)]).kind is ScenarioKind.TWO_CCPS


def test_joint_ccp_shares_one_ccp_id():
    entries = (ClearedClass(0, 0.5, ccp=0), ClearedClass(1, 0.5, ccp=1))
    with pytest.raises(ConfigError):
        ClearingScenario(ScenarioKind.JOINT_CCP, entries, "bad")


def test_scenario_weight_vectors():
    scen = two_ccps([(2, 0.9), (3, 0.85)])
    resid = scen.residual_weights(4)
    assert resid.tolist() == [1.0, 1.0, pytest.approx(0.1), pytest.approx(0.15)]
    groups = scen.ccp_groups(4)
    assert len(groups) == 2
    assert groups[0].tolist() == [0.0, 0.0, 0.9, 0.0]
    assert groups[1].tolist() == [0.0, 0.0, 0.0, 0.85]
    joint = joint_ccp([(2, 0.9), (3, 0.85)])
    assert len(joint.ccp_groups(4)) == 1


def test_standard_scenarios_shape():
    scens = standard_scenarios()
    assert [s.name for s in scens] == [
        "no_ccp",
        "irs_ccp",
        "cds_ccp",
        "two_ccps",
        "joint_ccp",
    ]
    assert scens[0].kind is ScenarioKind.NO_CCP
    assert scens[3].kind is ScenarioKind.TWO_CCPS


def test_dealer_notionals_coerced_to_floats():
    d = Dealer(id=0, name="x", notionals=(1, 2))
    assert d.notionals == (1.0, 2.0)


def test_marginal_flags():
    config = make_config(
        np.ones((2, 2)),
        betas=[1.0, 1.0],
        marginals=[Marginal.GAUSSIAN, Marginal.STUDENT_T3],
    )
    assert config.has_t_marginals()
    assert config.marginals()[1] is Marginal.STUDENT_T3
