import random
from fractions import Fraction

import pytest
from conftest import brute_moments, brute_nc, random_cumulants, random_moments

from ncmeixner.ncseries import NCSeries, left_derive, words
from ncmeixner.ncstates import (
    CumulantFunctional,
    MomentFunctional,
    NormalizationError,
    check_conditionally_positive,
    check_positive,
    cumulants_from_moments,
    cyclic_cumulant_check,
    exp_oplus,
    free_product,
    free_product_cumulants,
    functional_from_json,
    gram_matrix,
    is_noncrossing,
    is_tracial,
    moments_from_cumulants,
    nc_partitions,
    scale_cumulants,
    semicircular_system,
    solve_cumulant_relation,
)

CATALAN = [1, 1, 2, 5, 14, 42, 132, 429]


@pytest.mark.parametrize("k", range(1, 8))
def test_nc_partition_count_is_catalan(k):
    ps = nc_partitions(k)
    assert len(ps) == CATALAN[k]
    assert sorted(sorted(map(sorted, p)) for p in ps) == sorted(brute_nc(k))


def test_is_noncrossing():
    assert is_noncrossing([[1, 4], [2, 3]])
    assert not is_noncrossing([[1, 3], [2, 4]])


def test_moments_match_brute_force_nc_sum():
    r = random_cumulants(random.Random(1), 2, 5)
    m = moments_from_cumulants(r)
    bf = brute_moments(r)
    assert all(m[u] == bf[u] for u in bf)


def test_semicircular_moments_are_catalan():
    r = semicircular_system([0], [1], 10)
    m = moments_from_cumulants(r)
    assert [m[(1,) * k] for k in range(1, 11)] == [0, 1, 0, 2, 0, 5, 0, 14, 0, 42]


def test_cumulant_routes_agree_and_invert():
    rng = random.Random(7)
    for _ in range(5):
        m = random_moments(rng, 2, 5)
        r1 = cumulants_from_moments(m)
        assert r1 == solve_cumulant_relation(m)
        assert moments_from_cumulants(r1) == m


def test_cumulant_moment_functional_equation():
    r = random_cumulants(random.Random(3), 2, 5)
    m = moments_from_cumulants(r)
    from ncmeixner.ncseries import compose
    from ncmeixner.ncstates import cumulant_tuple

    m4 = m.with_order(4)
    tup = cumulant_tuple(m4)
    for i in (1, 2):
        lhs = m4.one_plus() * compose(left_derive(i, r.series), tup)
        assert lhs == left_derive(i, m.series)


def test_free_product_mixed_cumulants_vanish():
    a = semicircular_system([0], [1], 4)
    b = CumulantFunctional(NCSeries(1, 4, {(1, 1): 1, (1, 1, 1): 2, (1, 1, 1, 1): 3}), normalized=True)
    r = free_product_cumulants([a, b])
    assert r[(1, 2)] == 0 and r[(2, 2, 2)] == 2
    m = moments_from_cumulants(r)
    # phi[x1 x2 x1 x2] = 0 for centered free variables
    assert m[(1, 2, 1, 2)] == 0
    assert m[(1, 1, 2, 2)] == 1
    mp = free_product([moments_from_cumulants(a), moments_from_cumulants(b)])
    assert mp == m


def test_normalization_enforced():
    with pytest.raises(NormalizationError):
        MomentFunctional(NCSeries(1, 2, {(1, 1): 2}), normalized=True)
    with pytest.raises(NormalizationError):
        CumulantFunctional(NCSeries(1, 2, {(1,): 1, (1, 1): 1}), normalized=True)


def test_gram_matrix_semicircle():
    m = moments_from_cumulants(semicircular_system([0], [1], 4))
    g = gram_matrix(m, 2)
    assert g == [[1, 0, 1], [0, 1, 0], [1, 0, 2]]
    rep = check_positive(m, 2)
    assert rep.is_positive and rep.is_faithful
    assert sorted(v for _, v in rep.pivots) == [Fraction(1, 2), 1, 2]


def test_positivity_witness():
    # phi[x^2] = 1, phi[x^4] = 1/2 violates Cauchy-Schwarz: phi[x^4] >= phi[x^2]^2
    m = MomentFunctional(NCSeries(1, 4, {(1, 1): 1, (1, 1, 1, 1): Fraction(1, 2)}))
    rep = check_positive(m, 2)
    assert not rep.is_positive
    g = gram_matrix(m, 2)
    v = rep.witness
    q = sum(v[i] * g[i][j] * v[j] for i in range(3) for j in range(3))
    assert q < 0 and q == rep.witness_value


def test_nonfaithful_is_psd_not_pd():
    # Bernoulli +-1: x^2 = 1
    m = MomentFunctional(NCSeries(1, 4, {(1, 1): 1, (1, 1, 1, 1): 1}))
    rep = check_positive(m, 2)
    assert rep.is_positive and not rep.is_faithful


def test_conditional_positivity():
    assert check_conditionally_positive(semicircular_system([0, 0], [1, 1], 6), 3)
    r = CumulantFunctional(NCSeries(1, 4, {(1, 1): 1, (1, 1, 1, 1): Fraction(-1, 2)}), normalized=True)
    assert not check_conditionally_positive(r, 2)


def test_conditional_positivity_scale_invariant():
    r = CumulantFunctional(NCSeries(1, 4, {(1, 1): 1, (1, 1, 1, 1): Fraction(-1, 2)}), normalized=True)
    for t in (Fraction(1, 3), 1, 2, 10):
        assert not check_conditionally_positive(scale_cumulants(r, t), 2).is_positive


def test_scale_cumulants_rejects_nonpositive():
    r = semicircular_system([0], [1], 4)
    with pytest.raises(ValueError):
        scale_cumulants(r, 0)


def test_exp_oplus_structure():
    psi = moments_from_cumulants(semicircular_system([1, 0], [1, 0], 4))
    r = exp_oplus([psi, psi])
    assert r.order == 6 and r.normalized
    assert r[(1, 1)] == 1 and r[(1, 2)] == 0
    assert r[(2, 1, 2)] == 1  # phi_2[x_1] = mean 1
    assert r[(1, 1, 1, 1)] == psi[(1, 1)]
    assert r[(1, 2, 1)] == 0


def test_tracial():
    m = moments_from_cumulants(semicircular_system([0, 0], [1, 1], 6))
    assert is_tracial(m)
    assert cyclic_cumulant_check(m)
    m2 = MomentFunctional(NCSeries(2, 3, {(1, 1): 1, (2, 2): 1, (1, 1, 2): 1}))
    res = is_tracial(m2)
    assert not res
    u, v = res.witness
    assert m2[u + v] != m2[v + u]


def test_json_roundtrip():
    r = random_cumulants(random.Random(5), 2, 3)
    obj = r.to_json()
    assert obj["kind"] == "cumulants"
    assert len(obj["terms"]) == len(list(words(2, 3, 1)))
    assert functional_from_json(obj) == r


def test_partition_route_cap():
    m = MomentFunctional(NCSeries(1, 13))
    with pytest.raises(ValueError):
        cumulants_from_moments(m)


def test_negative_variance_witness_is_degree_one_vector():
    m = MomentFunctional(NCSeries(1, 2, {(1, 1): -1}))
    rep = check_positive(m, 1)
    assert not rep.is_positive
    assert rep.witness == [0, 1] and rep.witness_value == -1


def test_free_poisson_product_positive_matches_eigenvalues():
    import numpy as np

    r = free_product_cumulants([CumulantFunctional(NCSeries(1, 6, {(1,) * k: 1 for k in range(2, 7)}), True)] * 2)
    m = moments_from_cumulants(r)
    rep = check_positive(m, 3)
    assert rep.is_positive and rep.is_faithful
    eig = np.linalg.eigvalsh(np.array(gram_matrix(m, 3), dtype=float))
    assert eig.min() > 0
