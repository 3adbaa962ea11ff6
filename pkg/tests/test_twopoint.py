import numpy as np
import pytest

from contourcred.errors import InputError
from contourcred.twopoint import (REFERENCE_CASES, TwoPointParams,
                                  compare_to_oracle, two_point_F_oracle,
                                  two_point_endpoint_values)

# joint band probabilities at the segment ends, frozen from a dense
# bivariate-normal evaluation run before this implementation existed
CASE_A_F0 = 0.6909856723713373
CASE_B_JOINT = 0.5099724831223362
CASE_C_JOINT = 0.5008621546547196

# marginal band probabilities at the endpoints of each case
CASE_A_P0 = 0.6914624612740131
CASE_A_P1 = 0.9331927987311419
CASE_B_P0 = 0.509972518195238
CASE_B_P1 = 0.9821355794371834


def test_reference_case_parameters():
    a = REFERENCE_CASES["a"]
    assert (a.params.mu0, a.params.mu1, a.params.sd0, a.params.sd1, a.params.rho) \
        == (0.0, 1.0, 1.0, 1.0, 0.9)
    assert a.u == -0.5
    b = REFERENCE_CASES["b"]
    assert (b.params.mu0, b.params.mu1, b.params.sd0, b.params.sd1, b.params.rho) \
        == (0.0, 2.0, 4.0, 1.0, 0.9)
    assert b.u == -0.1
    c = REFERENCE_CASES["c"]
    assert c.params.rho == 0.0 and c.u == -0.1


def test_frozen_joint_values():
    a, b, c = (REFERENCE_CASES[k] for k in "abc")
    assert two_point_F_oracle(a.params, a.u, 0.0) == pytest.approx(CASE_A_F0, abs=1e-12)
    assert two_point_F_oracle(b.params, b.u, 0.0) == pytest.approx(CASE_B_JOINT, abs=1e-12)
    assert two_point_F_oracle(c.params, c.u, 0.0) == pytest.approx(CASE_C_JOINT, abs=1e-12)


def test_segment_ends_recover_marginals_or_joint():
    # at s=1 only the second endpoint's constraint can bind for case (a),
    # so the oracle returns the plain marginal there
    a = REFERENCE_CASES["a"]
    assert two_point_F_oracle(a.params, a.u, 1.0) == pytest.approx(CASE_A_P1, abs=1e-12)
    ev, ep = two_point_endpoint_values(a.params, a.u)
    assert ep[0] == pytest.approx(CASE_A_P0, abs=1e-12)
    assert ep[1] == pytest.approx(CASE_A_P1, abs=1e-12)
    # the less certain endpoint carries the joint value, the other its marginal
    assert ev[0] == pytest.approx(CASE_A_F0, abs=1e-12)
    assert ev[1] == pytest.approx(CASE_A_P1, abs=1e-12)

    b = REFERENCE_CASES["b"]
    evb, epb = two_point_endpoint_values(b.params, b.u)
    assert epb[0] == pytest.approx(CASE_B_P0, abs=1e-12)
    assert epb[1] == pytest.approx(CASE_B_P1, abs=1e-12)
    assert evb[0] == pytest.approx(CASE_B_JOINT, abs=1e-12)
    assert evb[1] == pytest.approx(CASE_B_P1, abs=1e-12)


def test_oracle_bounded_and_dominated_by_marginal():
    rng = np.random.default_rng(21)
    for case in REFERENCE_CASES.values():
        for s in rng.random(40):
            F = two_point_F_oracle(case.params, case.u, float(s))
            assert 0.0 <= F <= 1.0
            # the joint constraint set is a subset of the single constraint
            m = case.params.mean_at(float(s))
            sd = np.sqrt(case.params.var_at(float(s)))
            from contourcred._kernels import phi
            p_single = phi(abs(m - case.u) / sd)
            assert F <= p_single + 1e-12


def test_step_is_conservative_on_grid():
    for case in REFERENCE_CASES.values():
        comp = compare_to_oracle(case.params, case.u, grid=101)
        assert comp.max_signed_deviation("step") <= 1e-8


def test_linear_overshoots_in_case_b():
    b = REFERENCE_CASES["b"]
    comp = compare_to_oracle(b.params, b.u, grid=101)
    exact = np.asarray(comp.exact)
    lin = np.asarray(comp.interpolated["linear"])
    assert np.any((lin > exact) & (exact < 0.9))


def test_log_closer_than_linear_in_case_c():
    c = REFERENCE_CASES["c"]
    comp = compare_to_oracle(c.params, c.u, grid=101)
    exact = np.asarray(comp.exact)
    lin = np.asarray(comp.interpolated["linear"])
    lg = np.asarray(comp.interpolated["log"])
    both = (lin > exact) & (lg > exact)
    assert both.any()
    assert np.all(np.abs(lg[both] - exact[both])
                  <= np.abs(lin[both] - exact[both]) + 1e-12)


def test_comparison_grid_structure():
    a = REFERENCE_CASES["a"]
    comp = compare_to_oracle(a.params, a.u, grid=11)
    assert len(comp.s) == 11
    assert comp.s[0] == 0.0 and comp.s[-1] == 1.0
    assert set(comp.interpolated) == {"step", "linear", "log"}
    for arr in comp.interpolated.values():
        assert len(arr) == 11


def test_independent_case_factorizes():
    # rho = 0: the joint at any s with both constraints at distinct t is a
    # plain product of the component probabilities
    c = REFERENCE_CASES["c"]
    F0 = two_point_F_oracle(c.params, c.u, 0.0)
    assert F0 <= CASE_B_P0 + 1e-12


def test_params_validation():
    with pytest.raises(InputError):
        TwoPointParams(0.0, 1.0, 0.0, 1.0, 0.5)
    with pytest.raises(InputError):
        TwoPointParams(0.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(InputError):
        TwoPointParams(0.0, 1.0, 1.0, 1.0, -1.5)


def test_oracle_rejects_bad_position():
    a = REFERENCE_CASES["a"]
    with pytest.raises(InputError):
        two_point_F_oracle(a.params, a.u, -0.1)
    with pytest.raises(InputError):
        two_point_F_oracle(a.params, a.u, 1.5)
