import numpy as np
import pytest

from contourcred.contours import (ContourLevelSet, assign_level_sets,
                                  contour_avoiding_mask, contour_function,
                                  levels_from_values, marginal_bounds,
                                  marginal_p, measure_P0, measure_P1,
                                  measure_P2, pretty_levels, quality_report,
                                  select_K, standard_levels)
from contourcred.errors import ComputationError, ConstantFieldError, InputError
from contourcred.gmrf import (MaternSpec, ObservationSet,
                              build_matern_precision,
                              condition_on_observations, sample_field)
from contourcred.linalg import SparseSymMatrix
from contourcred.gmrf import PrecisionModel
from contourcred.mesh import interpolation_matrix, lattice_mesh


def posterior_fixture(seed=101, shape=(10, 10), obs=50, noise=0.01, nu=1,
                      spatial_range=4.0):
    rng = np.random.default_rng(seed)
    spec = MaternSpec.from_range(nu=nu, spatial_range=spatial_range, sill=1.0)
    mesh = lattice_mesh(shape[0], shape[1], bounds=((0.0, 0.0), (10.0, 10.0)))
    prior = build_matern_precision(mesh, spec)
    truth = sample_field(prior, seed=(seed, 1), count=1)[0]
    locs = rng.uniform(0.5, 9.5, size=(obs, 2))
    A = interpolation_matrix(mesh, locs)
    y = A @ truth + rng.normal(0.0, np.sqrt(noise), obs)
    post = condition_on_observations(
        prior, ObservationSet(locations=locs, values=y, noise_var=noise), mesh)
    return mesh, post


def test_standard_levels_example():
    lv = standard_levels((0.1, 9.7), 5)
    assert np.allclose(lv.levels, [1.7, 3.3, 4.9, 6.5, 8.1])
    assert lv.K == 5
    assert lv.strategy == "standard"


def test_pretty_levels_examples():
    lv = pretty_levels((0.1, 9.7), 5)
    assert np.allclose(lv.levels, [2.0, 4.0, 6.0, 8.0])
    assert lv.spacing == 2.0
    lv = pretty_levels((-1.2, 1.3), 3)
    assert np.allclose(lv.levels, [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert lv.spacing == 0.5
    # spacings come from the 1-2-5 ladder only
    for k in range(1, 9):
        got = pretty_levels((0.037, 11.9), k)
        mant = got.spacing / 10.0 ** np.floor(np.log10(got.spacing))
        assert min(abs(mant - c) for c in (1.0, 2.0, 5.0)) < 1e-9


def test_levels_require_variation():
    with pytest.raises(ConstantFieldError):
        standard_levels(np.full(5, 2.0), 3)
    with pytest.raises(ConstantFieldError):
        pretty_levels((1.0, 1.0), 3)
    with pytest.raises(InputError):
        standard_levels((0.0, 1.0), 0)


def test_levels_from_values_spacing_detection():
    lv = levels_from_values(np.array([-2.0, 3.0]), [0.0, 0.5, 1.0])
    assert lv.spacing == 0.5
    lv = levels_from_values(np.array([-2.0, 3.0]), [0.0, 0.3, 1.0])
    assert lv.spacing is None
    with pytest.raises(InputError):
        levels_from_values(np.array([-2.0, 3.0]), [1.0, 0.0])
    with pytest.raises(InputError):
        levels_from_values(np.array([-2.0, 3.0]), [])


def test_level_bands_and_midpoints():
    lv = levels_from_values(np.array([-5.0, 5.0]), [0.0, 1.0])
    assert np.allclose(lv.midpoints, [-0.5, 0.5, 1.5])
    j = np.array([-1, 0, 1, 2, 3])
    assert np.array_equal(lv.level_array(j),
                          [-np.inf, -np.inf, 0.0, 1.0, np.inf])
    assert np.array_equal(lv.mid_array(np.array([-1, 0, 1, 2, 3])),
                          [-np.inf, -0.5, 0.5, 1.5, np.inf])


def test_assignment_ties_join_the_lower_set():
    lv = levels_from_values(np.array([-5.0, 5.0]), [0.0, 1.0])
    a = assign_level_sets(np.array([-0.5, 0.0, 0.5, 1.0, 1.5]), lv)
    assert a.k.tolist() == [0, 0, 1, 1, 2]


def test_single_level_set_geometry():
    lv = standard_levels((0.0, 3.0), 1)
    assert np.allclose(lv.levels, [1.5])
    assert np.allclose(lv.midpoints, [0.0, 3.0])


def test_marginal_containment_chain():
    # whole-set widening contains half-set widening contains the band itself
    rng = np.random.default_rng(23)
    mesh, post = posterior_fixture()
    for K in (1, 2, 3, 5):
        lv = standard_levels(post.mu, K)
        a = assign_level_sets(post.mu, lv)
        p = marginal_p(post, a, lv)
        b = marginal_bounds(post, a, lv)
        assert np.all(b.whole_set >= b.half_set - 1e-12)
        assert np.all(b.half_set >= p - 1e-12)
        assert np.all((p >= 0) & (p <= 1))


def test_rectangle_measures_respect_bounds():
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 2)
    a = assign_level_sets(post.mu, lv)
    b = marginal_bounds(post, a, lv)
    r1 = measure_P1(post, a, lv, samples=3000, seed=1)
    r2 = measure_P2(post, a, lv, samples=3000, seed=2)
    assert r1.estimate <= b.whole_set.min() + 3 * r1.std_error + 1e-12
    assert r2.estimate <= b.half_set.min() + 3 * r2.std_error + 1e-12
    assert r2.estimate <= r1.estimate + 3 * (r1.std_error + r2.std_error)


def test_single_level_rectangle_measure_is_one():
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 1)
    a = assign_level_sets(post.mu, lv)
    r1 = measure_P1(post, a, lv, samples=100, seed=0)
    assert r1.estimate == 1.0
    assert r1.std_error == 0.0


def test_contour_function_properties():
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 2)
    a = assign_level_sets(post.mu, lv)
    cf = contour_function(post, a, lv, samples=3000, seed=4)
    assert np.all((cf.values >= 0.0) & (cf.values <= 1.0))
    # each node's joint value cannot beat its own marginal
    assert np.all(cf.values <= cf.marginals + 3 * cf.std_error + 1e-12)
    # sweep order ranks marginals from most to least probable
    p_sorted = cf.marginals[cf.order]
    assert np.all(np.diff(p_sorted) <= 1e-15)
    # running joints shrink along that order
    assert np.all(np.diff(cf.values[cf.order]) <= 0.0)


def test_contour_function_weight_validation():
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 2)
    a = assign_level_sets(post.mu, lv)
    with pytest.raises(InputError):
        contour_function(post, a, lv, samples=100, seed=0,
                         weights=np.zeros(post.n))
    with pytest.raises(InputError):
        contour_function(post, a, lv, samples=100, seed=0,
                         weights=np.ones(post.n - 1))


def test_average_measure_identity():
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 2)
    a = assign_level_sets(post.mu, lv)
    w = mesh.vertex_areas
    cf = contour_function(post, a, lv, samples=2000, seed=5, weights=w)
    p0 = measure_P0(cf)
    wn = w / w.sum()
    assert abs(p0.estimate - float(np.dot(wn, cf.values))) <= 1e-12
    assert p0.std_error > 0
    # passing matching weights explicitly is allowed, others are not
    assert measure_P0(cf, w).estimate == p0.estimate
    with pytest.raises(InputError):
        measure_P0(cf, np.ones(post.n))


def test_avoiding_set_is_prefix_and_matches_threshold():
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 3)
    a = assign_level_sets(post.mu, lv)
    cf = contour_function(post, a, lv, samples=3000, seed=6)
    for alpha in (0.01, 0.05, 0.1, 0.25, 0.5):
        mask = contour_avoiding_mask(cf, alpha)
        # definition: joint credibility strictly above 1 - alpha
        assert np.array_equal(mask, cf.values > 1.0 - alpha)
        inmask = mask[cf.order]
        k = int(inmask.sum())
        assert np.all(inmask[:k]) and not np.any(inmask[k:])
    with pytest.raises(InputError):
        contour_avoiding_mask(cf, 0.0)
    with pytest.raises(InputError):
        contour_avoiding_mask(cf, 1.5)


def test_refinement_consistency():
    # doubling the sample count must stay within joint error bars
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 2)
    a = assign_level_sets(post.mu, lv)
    c1 = contour_function(post, a, lv, samples=2000, seed=7)
    c2 = contour_function(post, a, lv, samples=8000, seed=8)
    gap = np.abs(c1.values - c2.values)
    assert np.all(gap <= 3.0 * (c1.std_error + c2.std_error) + 1e-9)


def test_quality_report_contents():
    mesh, post = posterior_fixture()
    lv = standard_levels(post.mu, 2)
    rep = quality_report(post, lv, samples=1500, seed=9,
                         weights=mesh.vertex_areas)
    assert rep.K == 2
    assert 0.0 <= rep.P0 <= 1.0
    assert rep.P2 <= rep.P1 + 3 * (rep.se_P1 + rep.se_P2)
    assert rep.P1 <= rep.bound_rho1 + 3 * rep.se_P1 + 1e-12
    assert rep.P2 <= rep.bound_rho2 + 3 * rep.se_P2 + 1e-12
    d = rep.to_json_dict()
    assert "wall_time" not in d
    assert d["K"] == 2 and len(d["levels"]) == 2
    # same seed reproduces every number
    rep2 = quality_report(post, lv, samples=1500, seed=9,
                          weights=mesh.vertex_areas)
    assert rep2.to_json_dict() == d


def test_selection_scans_downward():
    mesh, post = posterior_fixture()
    sel = select_K(post, target=0.2, measure="p2", strategy="standard",
                   k_max=6, samples=1200, seed=10)
    assert sel.K >= 1
    assert sel.report is not None
    assert sel.report.P2 >= 0.2
    ks = [e.requested_K for e in sel.scan]
    assert ks == sorted(ks, reverse=True)
    # everything above the selected K fell short of the target
    for e in sel.scan:
        if e.requested_K > sel.K and e.evaluated:
            assert e.estimate < 0.2 or not e.selected


def test_selection_zero_target_keeps_largest_K():
    mesh, post = posterior_fixture()
    sel = select_K(post, target=0.0, measure="p2", strategy="standard",
                   k_max=4, samples=600, seed=11)
    assert sel.K == 4


def test_selection_impossible_target_returns_zero():
    mesh, post = posterior_fixture()
    sel = select_K(post, target=1.0, measure="p2", strategy="standard",
                   k_max=5, samples=400, seed=12)
    assert sel.K == 0
    assert sel.report is None and sel.levels is None
    assert all(not e.evaluated for e in sel.scan)


def test_selection_audit_evaluates_rejected_candidates():
    mesh, post = posterior_fixture()
    plain = select_K(post, target=0.6, measure="p2", strategy="standard",
                     k_max=5, samples=500, seed=13)
    audit = select_K(post, target=0.6, measure="p2", strategy="standard",
                     k_max=5, samples=500, seed=13, audit=True)
    assert audit.K == plain.K
    assert all(e.evaluated for e in audit.scan)
    # the bound-based rejection must never skip a candidate that would pass
    for e in audit.scan:
        if e.requested_K > audit.K:
            assert e.estimate < 0.6 or e.bound < 0.6


def test_selection_input_validation():
    mesh, post = posterior_fixture()
    with pytest.raises(InputError):
        select_K(post, target=1.5)
    with pytest.raises(InputError):
        select_K(post, target=0.5, measure="p9")
    with pytest.raises(InputError):
        select_K(post, target=0.5, strategy="fancy")
    with pytest.raises(InputError):
        select_K(post, target=0.5, k_max=0)


def test_measures_on_independent_nodes_match_products():
    # diagonal precision makes every rectangle measure a closed-form product
    d = np.array([1.0, 1.0, 4.0, 0.25])
    Q = SparseSymMatrix.from_triplets(4, np.arange(4), np.arange(4), d)
    mu = np.array([0.0, 1.0, 2.0, 3.0])
    model = PrecisionModel(mu, Q)
    lv = levels_from_values(mu, [0.5, 1.5, 2.5])
    a = assign_level_sets(mu, lv)
    p = marginal_p(model, a, lv)
    from scipy.stats import norm
    sd = 1.0 / np.sqrt(d)
    lo = lv.level_array(a.k)
    hi = lv.level_array(a.k + 1)
    expect = norm.cdf((hi - mu) / sd) - norm.cdf((lo - mu) / sd)
    assert np.allclose(p, expect, atol=1e-14)
    cf = contour_function(model, a, lv, samples=64, seed=1)
    # independence: the running joint is the running product of marginals
    run = np.cumprod(p[cf.order])
    assert np.allclose(cf.values[cf.order], run, atol=1e-12)
