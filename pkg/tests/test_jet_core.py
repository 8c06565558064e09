from itertools import combinations_with_replacement, product

import pytest
from hypothesis import given
from hypothesis import strategies as st

import witten_dolbeault.jet_algebra as ja
from witten_dolbeault.jet_algebra import (ANTIHOLO, G, H, HOLO, OMEGA, OMEGABAR, JetVariable,
                                          Monomial, Polynomial, canonicalize)


def g(U, V):
    return JetVariable(G, U, V)


def mono(*vs):
    return canonicalize(vs)


# weight ---------------------------------------------------------------------

def test_weight_of_metric_variable():
    assert ja.weight(g((1, 1, 2), (1, 1))) == 3


def test_bare_omega_contributes_one():
    A = mono(ja.omega1(1))
    assert A.xi_holo == (1,) and ja.weight(A) == 1


def test_empty_monomial_has_weight_zero():
    assert ja.weight(ja.ONE) == 0 and ja.ONE.length == 0


def test_weight_conventions_per_kind():
    assert JetVariable(H, (1,), (1,), 1, 1).weight == 2
    assert JetVariable(OMEGA, (1,), (1,)).weight == 2
    assert JetVariable(OMEGABAR, (2,), (1, 1)).weight == 3


# degree ---------------------------------------------------------------------

def test_degree_counts_by_hand():
    A = mono(g((1, 2), (1, 2)), g((1, 2), (1, 1)))
    assert ja.degree(A, 1, HOLO) == 2
    assert ja.degree(A, 2, ANTIHOLO) == 1
    assert ja.degree(A, 1, ANTIHOLO) == 3


def test_absent_index_has_degree_zero():
    assert ja.degree(mono(g((1, 1), (1, 1))), 3, HOLO) == 0


def test_degree_out_of_range():
    with pytest.raises(ja.DimensionError):
        ja.degree(ja.ONE, 0)
    with pytest.raises(ja.DimensionError):
        ja.degree(ja.ONE, 3, HOLO, m=2)


# canonicalize ---------------------------------------------------------------

def test_canonicalize_sorts_indices():
    A = canonicalize([{"kind": G, "U": (2, 1), "V": (1, 1)}])
    assert A.factors == (g((1, 2), (1, 1)),)


def test_canonicalize_moves_bare_omega_to_xi():
    A = canonicalize([ja.omega1(1), g((1, 1), (1, 1))])
    assert A.factors == (g((1, 1), (1, 1)),)
    assert A.xi_holo == (1,) and A.xi_antiholo == ()
    assert A.length == 2


def test_malformed_variables_rejected():
    with pytest.raises(ja.MalformedVariableError):
        g((1,), (1, 1))
    with pytest.raises(ja.MalformedVariableError):
        JetVariable(H, (), (1, 1), 1, 1)
    with pytest.raises(ja.MalformedVariableError):
        JetVariable(OMEGA, (), (1,))
    with pytest.raises(ja.MalformedVariableError):
        JetVariable(H, (1,), (1,))
    with pytest.raises(ja.MalformedVariableError):
        Monomial((ja.omega1(1),))


# enumeration ----------------------------------------------------------------

def _brute_force_monomials(m, w, dimE=1):
    """Every product of well-formed raw variables of total weight ``w``, by trial construction."""
    singles = set()
    for kind in (G, H, OMEGA, OMEGABAR):
        for nu in range(0, w + 3):
            for nv in range(0, w + 3 - nu):
                for U in product(range(1, m + 1), repeat=nu):
                    for V in product(range(1, m + 1), repeat=nv):
                        for p, q in (product(range(1, dimE + 1), repeat=2) if kind == H else [(None, None)]):
                            try:
                                v = JetVariable(kind, U, V, p, q)
                            except ja.MalformedVariableError:
                                continue
                            if v.weight <= w:
                                singles.add(v)
    singles = sorted(singles, key=JetVariable.sort_key)
    out = {ja.ONE} if w == 0 else set()
    for k in range(1, w + 1):
        for combo in combinations_with_replacement(singles, k):
            if sum(v.weight for v in combo) == w:
                out.add(canonicalize(combo))
    return out


def test_enumerate_weight_one():
    got = ja.enumerate_monomials(1, 1, 1)
    assert set(got) == {mono(ja.omega1(1)), mono(ja.omegabar1(1))}


def test_enumerate_weight_zero():
    assert set(ja.enumerate_monomials(1, 0, 1)) == {ja.ONE}


def test_enumerate_weight_two_contains_listed_monomials():
    got = set(ja.enumerate_monomials(1, 2, 1))
    listed = [mono(g((1, 1), (1, 1))), mono(JetVariable(H, (1,), (1,), 1, 1)),
              mono(JetVariable(OMEGA, (1,), (1,))), mono(JetVariable(OMEGABAR, (1,), (1,))),
              mono(ja.omega1(1), ja.omegabar1(1)), mono(ja.omega1(1), ja.omega1(1)),
              mono(ja.omegabar1(1), ja.omegabar1(1))]
    assert set(listed) <= got
    assert len(got) == 9


@pytest.mark.parametrize("m,w,dimE", [(1, 2, 1), (1, 3, 1), (2, 2, 1), (1, 2, 2), (2, 3, 1)])
def test_enumerate_matches_brute_force(m, w, dimE):
    got = ja.enumerate_monomials(m, w, dimE)
    assert len(got) == len(set(got))
    assert set(got) == _brute_force_monomials(m, w, dimE)


def test_enumerate_resource_guard():
    with pytest.raises(ja.ResourceLimitError):
        ja.enumerate_monomials(1, 7, 1)
    assert ja.enumerate_monomials(1, 7, 1, bounds={"weight": 7})


# restriction ----------------------------------------------------------------

def test_restrict_kills_top_index():
    assert not ja.restrict(Polynomial.monomial(mono(g((2, 2), (2, 2)))), 2)


def test_restrict_filters_terms():
    P = Polynomial.monomial(mono(g((1, 1), (1, 1)))) + Polynomial.monomial(mono(g((2, 2), (2, 2))))
    assert ja.restrict(P, 2) == Polynomial.monomial(mono(g((1, 1), (1, 1))))


def test_restrict_scalar_curvature_type_sum():
    def tau(m):
        P = Polynomial()
        for a in range(1, m + 1):
            for b in range(1, m + 1):
                P = P + Polynomial.monomial(mono(g((a, b), (a, b))))
        return P
    assert ja.restrict(tau(3), 3) == tau(2)


def test_restrict_dimension_underflow():
    with pytest.raises(ja.DimensionError):
        ja.restrict(Polynomial(), 0)


# properties -----------------------------------------------------------------

M_MAX = 3


@st.composite
def variables(draw):
    kind = draw(st.sampled_from([G, H, OMEGA, OMEGABAR]))
    idx = st.integers(1, M_MAX)
    lo_u, lo_v = {G: (2, 2), H: (1, 1), OMEGA: (1, 0), OMEGABAR: (0, 1)}[kind]
    U = draw(st.lists(idx, min_size=lo_u, max_size=lo_u + 2))
    V = draw(st.lists(idx, min_size=lo_v, max_size=lo_v + 2))
    if kind == H:
        return JetVariable(H, U, V, draw(st.integers(1, 2)), draw(st.integers(1, 2)))
    return JetVariable(kind, U, V)


monomials = st.lists(variables(), max_size=4).map(canonicalize)


@given(st.lists(variables(), max_size=4))
def test_canonicalize_idempotent_and_preserves_gradings(vs):
    A = canonicalize(vs)
    B = canonicalize(ja.monomial_variables(A))
    assert A == B
    assert A.weight == sum(v.weight for v in vs)
    for a in range(1, M_MAX + 1):
        for fl in (HOLO, ANTIHOLO):
            assert A.degree(a, fl) == sum(v.degree(a, fl) for v in vs)


@given(st.lists(variables(), max_size=4).map(lambda vs: (canonicalize(vs), vs)))
def test_canonicalize_order_independent(pair):
    A, vs = pair
    assert canonicalize(list(reversed(vs))) == A


@given(monomials, monomials)
def test_weight_and_degree_additive(A, B):
    AB = A * B
    assert AB.weight == A.weight + B.weight
    for a in range(1, M_MAX + 1):
        for fl in (HOLO, ANTIHOLO):
            assert AB.degree(a, fl) == A.degree(a, fl) + B.degree(a, fl)
    assert AB.length <= A.length + B.length


polys = st.lists(st.tuples(monomials, st.integers(-3, 3)), max_size=4).map(
    lambda ts: sum((Polynomial.monomial(A, c) for A, c in ts), Polynomial()))


@given(polys, polys, st.integers(0, 2))
def test_restrict_is_ring_morphism(P, Q, extra):
    m = max(P.max_index(), Q.max_index(), 1) + extra
    r = ja.restrict
    assert r(P * Q, m) == r(P, m) * r(Q, m)
    assert r(P + Q, m) == r(P, m) + r(Q, m)
    assert len(r(P, m)) <= len(P)


@given(polys)
def test_polynomial_arithmetic(P):
    assert not (P - P)
    assert P + Polynomial() == P
    assert P * Polynomial.monomial(ja.ONE) == P
