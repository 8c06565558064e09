import itertools
import math

import numpy as np
import pytest
import sympy

from witten_dolbeault import char_forms as cf
from witten_dolbeault import geometry as geo
from witten_dolbeault.char_forms import CurvatureMatrix, RealCurvature
from witten_dolbeault.forms import Form, FourierFunction, top_coefficient

from conftest import sin_omega

TOL = 1e-12


def const_form(m, I, J, c):
    return Form(m, {(I, J): c})


# pfaffian ---------------------------------------------------------------------

def _grassmann_pairing(i, j):
    """``g(e^{i1} ^ .. ^ e^{in}, e^{j1} ^ .. ^ e^{jn})`` for an orthonormal coframe."""
    return np.linalg.det(np.equal.outer(np.array(i), np.array(j)).astype(float))


def _brute_force_pfaffian(R):
    n = R.shape[0]
    k = n // 2
    total = 0.0
    for i in itertools.product(range(n), repeat=n):
        if len(set(i)) < n:
            continue
        for j in itertools.product(range(n), repeat=n):
            if len(set(j)) < n:
                continue
            prod = 1.0
            for a in range(k):
                prod *= R[i[2 * a], i[2 * a + 1], j[2 * a], j[2 * a + 1]]
            total += prod * _grassmann_pairing(i, j)
    return (-1) ** k / (8 ** k * math.pi ** k * math.factorial(k)) * total


def _all_tuples_pfaffian(R):
    """Same sum with no shortcut: every ``n^(2n)`` index tuple is visited."""
    n = R.shape[0]
    k = n // 2
    total = 0.0
    for idx in itertools.product(range(n), repeat=2 * n):
        i, j = idx[:n], idx[n:]
        pair = _grassmann_pairing(i, j)
        if pair == 0:
            continue
        prod = 1.0
        for a in range(k):
            prod *= R[i[2 * a], i[2 * a + 1], j[2 * a], j[2 * a + 1]]
        total += prod * pair
    return (-1) ** k / (8 ** k * math.pi ** k * math.factorial(k)) * total


def _surface_tensor(r1212):
    R = np.zeros((2, 2, 2, 2))
    R[0, 1, 0, 1] = R[1, 0, 1, 0] = r1212
    R[0, 1, 1, 0] = R[1, 0, 0, 1] = -r1212
    return R


def test_pfaffian_of_zero():
    assert cf.pfaffian(RealCurvature(np.zeros((4, 4, 4, 4)))) == 0


def test_pfaffian_single_component_against_all_tuples():
    R = np.zeros((2, 2, 2, 2))
    R[0, 1, 0, 1] = 1.3
    assert np.isclose(cf.pfaffian(RealCurvature(R)), _all_tuples_pfaffian(R))
    R = _surface_tensor(1.3)
    nonzero = [t for t in itertools.product(range(2), repeat=4) if R[t] != 0]
    assert len(nonzero) == 4
    assert np.isclose(cf.pfaffian(RealCurvature(R)), -1.3 / (2 * np.pi))
    assert np.isclose(_all_tuples_pfaffian(R), -1.3 / (2 * np.pi))


def test_pfaffian_random_four_tensor_against_brute_force():
    R = np.random.default_rng(0).normal(size=(4, 4, 4, 4))
    assert np.isclose(cf.pfaffian(RealCurvature(R), 4), _brute_force_pfaffian(R))


def test_sphere_euler_characteristic():
    # unit round sphere: R_1212 = -1, area 4 pi
    assert np.isclose(cf.pfaffian(RealCurvature(_surface_tensor(-1.0))) * 4 * np.pi, 2.0)
    assert np.isclose(RealCurvature(_surface_tensor(-1.0)).scalar(), 2.0)


def test_pfaffian_dimension_errors():
    with pytest.raises(ValueError):
        cf.pfaffian(RealCurvature(np.zeros((3, 3, 3, 3))))
    with pytest.raises(ValueError):
        cf.pfaffian(RealCurvature(np.zeros((2, 2, 2, 2))), m=4)


def test_gauss_bonnet_on_conformal_torus(conformal_spec):
    n = 64
    R = geo.real_curvature(conformal_spec, n)
    pf = cf.pfaffian(R).to_grid(n).real
    dvol = 2 * conformal_spec.metric[0][0].to_grid(n).real
    assert abs((pf * dvol).mean()) < 1e-12
    tau = R.scalar()
    assert np.abs(pf - tau / (4 * np.pi)).max() < 1e-12


# chern character --------------------------------------------------------------

def test_chern_character_of_zero():
    ch = cf.chern_character(CurvatureMatrix.zero(2, 3), 4)
    assert (ch - Form.function(3.0, 2)).is_zero()


def test_ch1_of_line_bundle(conformal_spec):
    F = geo.tangent_curvature(conformal_spec)
    ch = cf.chern_character(F, 2)
    assert (ch.part(2) - F.entries[0][0] * (1j / (2 * np.pi))).is_zero(TOL)


def test_ch2_of_diagonal_rank_two():
    m = 2
    a, b = 0.3, -0.7
    F = CurvatureMatrix([[const_form(m, (1,), (1,), a), Form.zero(m)],
                         [Form.zero(m), const_form(m, (2,), (2,), b)]])
    ch = cf.chern_character(F, 4)
    x1 = const_form(m, (1,), (1,), a * 1j / (2 * np.pi))
    x2 = const_form(m, (2,), (2,), b * 1j / (2 * np.pi))
    # exp(x1) + exp(x2) with x_i ^ x_i = 0
    assert (ch - (Form.function(2.0, m) + x1 + x2)).is_zero(TOL)


# todd -------------------------------------------------------------------------

def test_todd_of_zero():
    assert (cf.todd(CurvatureMatrix.zero(2, 2), 4) - Form.function(1.0, 2)).is_zero()


def test_todd_log_coefficients_against_series():
    x = sympy.symbols("x")
    series = sympy.series(x / (1 - sympy.exp(-x)), x, 0, 7).removeO()
    t = cf.todd_log_coefficients(6)
    ours = sympy.series(sympy.exp(sum(sympy.nsimplify(c) * x ** j for j, c in enumerate(t))),
                        x, 0, 7).removeO()
    assert sympy.expand(series - ours) == 0
    assert sympy.Poly(series, x).all_coeffs()[::-1][:3] == [1, sympy.Rational(1, 2), sympy.Rational(1, 12)]


def _unitary(seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return Q


def _conjugated(F: CurvatureMatrix, U) -> CurvatureMatrix:
    r = F.rank
    Ui = U.conj().T
    out = [[sum((F.entries[k][l] * (U[i, k] * Ui[l, j]) for k in range(r) for l in range(r)),
                Form.zero(F.m)) for j in range(r)] for i in range(r)]
    return CurvatureMatrix(out)


def test_todd_symbolic_product_oracle():
    """``Td = (1 + x1/2)(1 + x2/2)`` for nilpotent Chern roots, in any unitary frame."""
    m = 2
    a, b = 0.4, 1.1
    D = CurvatureMatrix([[const_form(m, (1,), (1,), a), Form.zero(m)],
                         [Form.zero(m), const_form(m, (2,), (2,), b)]])
    x1 = const_form(m, (1,), (1,), a * 1j / (2 * np.pi))
    x2 = const_form(m, (2,), (2,), b * 1j / (2 * np.pi))
    one = Form.function(1.0, m)
    expected = (one + x1 * 0.5).wedge(one + x2 * 0.5)
    for F in (D, _conjugated(D, _unitary(0)), _conjugated(D, _unitary(1))):
        td = cf.todd(F, 4)
        assert (td - expected).is_zero(1e-12)
        c1 = x1 + x2
        c2 = x1.wedge(x2)
        assert (td.part(4) - (c1.wedge(c1) + c2) * (1 / 12)).is_zero(1e-12)


def test_todd2_is_half_c1(conformal_spec):
    F = geo.tangent_curvature(conformal_spec)
    td = cf.todd(F, 2)
    assert (td.part(2) - F.trace() * (1j / (4 * np.pi))).is_zero(TOL)


def test_conformal_star_todd2_is_tau_over_8pi(conformal_spec):
    n = 64
    td2 = cf.todd(geo.tangent_curvature(conformal_spec), 2).part(2)
    from witten_dolbeault.forms import hodge_star_top
    star = hodge_star_top(td2, conformal_spec.metric, grid=n).to_grid(n).real
    tau = geo.scalar_curvature(conformal_spec, n).to_grid(n).real
    assert np.abs(star - tau / (8 * np.pi)).max() < 1e-12


# theta ------------------------------------------------------------------------

def test_theta_of_zero():
    assert (cf.theta(Form.zero(1), 2) - Form.function(1.0, 1)).is_zero()


def test_theta_on_surface():
    th = cf.theta(sin_omega(), 2)
    expected = FourierFunction.cos(1, (1, 0), 2.0)
    assert (top_coefficient(th.part(2)) - expected).max_abs() < TOL
    assert (th.part(0).coefficient() - FourierFunction.constant(1, 1.0)).is_zero()


def test_theta_quadratic_term_on_four_torus():
    omega = Form(2, {((1,), ()): FourierFunction.sin(2, (1, 0, 0, 0)),
                     ((2,), ()): FourierFunction.sin(2, (0, 0, 0, 1), 0.5j)})
    dim = geo.d_im_omega(omega)
    th = cf.theta(omega, 4)
    assert (th.part(4) - dim.wedge(dim) * (1 / (2 * np.pi ** 2))).is_zero(TOL)
    assert (th.part(2) - dim * (1 / np.pi)).is_zero(TOL)


def test_theta_trivial_when_d_im_omega_vanishes():
    th = cf.theta(Form.dz(2, 1) * (0.3 + 2j) + Form.dz(2, 2) * 1.5, 4)
    assert (th - Form.function(1.0, 2)).is_zero()


def test_theta_rejects_non_closed():
    with pytest.raises(cf.NotClosedError):
        cf.theta(Form(2, {((1,), ()): FourierFunction.cos(2, (0, 0, 1, 0))}), 4)


# closedness -------------------------------------------------------------------

@pytest.fixture(scope="module")
def curved_four_torus():
    f = FourierFunction.cos(2, (1, 0, 1, 0), 0.0005) + FourierFunction.sin(2, (0, 1, 0, 0), 0.0005)
    h = FourierFunction.cos(2, (1, 0, 0, 1), 0.05) + 1.0
    omega = Form(2, {((1,), ()): FourierFunction.sin(2, (1, 0, 0, 0)),
                     ((2,), ()): FourierFunction.sin(2, (0, 0, 0, 1), 0.5j)})
    spec = geo.ManifoldSpec.from_potential(f, omega)
    spec.bundle = [[h]]
    return spec


def test_characteristic_forms_are_closed(curved_four_torus):
    spec = curved_four_torus
    T = geo.tangent_curvature(spec, 16)
    E = geo.bundle_curvature(spec, 24)
    for form in (cf.todd(T, 4), cf.chern_character(T, 4), cf.chern_character(E, 4),
                 cf.theta(spec.omega, 4)):
        assert form.d().max_abs() < 1e-10


def test_rank_two_bundle_chern_character_closed():
    m = 1
    a = FourierFunction.cos(1, (1, 0), 0.2)
    b = FourierFunction.sin(1, (0, 1), 0.1)
    one = FourierFunction.constant(1, 1.0)
    H = [[one + a, b * 0.5j], [b * -0.5j, one - a * 0.5]]
    spec = geo.ManifoldSpec(1, geo.ManifoldSpec.flat(1).metric, H)
    spec.validate()
    F = geo.bundle_curvature(spec, 64)
    assert F.skew_hermitian_defect(H) < 1e-10
    ch = cf.chern_character(F, 2)
    assert abs(top_coefficient(ch.part(2)).mean()) < 1e-12


# index density ----------------------------------------------------------------

def test_density_flat_trivial():
    assert cf.index_density(geo.ManifoldSpec.flat(1)).is_zero()


def test_density_flat_sin(flat_sin_spec):
    d = cf.index_density(flat_sin_spec)
    assert (d - FourierFunction.cos(1, (1, 0), 2.0)).max_abs() < TOL


def test_density_isin_y(isin_y_spec):
    d = cf.index_density(isin_y_spec)
    assert (d - FourierFunction.cos(1, (0, 1), -1.0)).max_abs() < TOL


def test_density_conformal(conformal_spec):
    n = 64
    d = cf.index_density(conformal_spec, grid=n).to_grid(n).real
    tau = geo.scalar_curvature(conformal_spec, n).to_grid(n).real
    assert np.abs(d - tau / (8 * np.pi)).max() < 1e-12
    dvol = 2 * conformal_spec.metric[0][0].to_grid(n).real
    assert abs((d * dvol).mean()) < 1e-12


def test_omega_contribution_integrates_to_zero(curved_four_torus):
    flat = geo.ManifoldSpec.flat(2, curved_four_torus.omega)
    assert abs(cf.index_density(flat).mean()) < 1e-12


@pytest.mark.parametrize("pair", ["flat", "curved"])
def test_density_of_product_factorizes(pair, flat_sin_spec, isin_y_spec, conformal_spec):
    M1 = flat_sin_spec if pair == "flat" else conformal_spec
    M2 = isin_y_spec
    n = 32
    d = cf.index_density(geo.product_spec(M1, M2), grid=n).to_grid(n)
    d1 = cf.index_density(M1, grid=n).to_grid(n)
    d2 = cf.index_density(M2, grid=n).to_grid(n)
    assert np.abs(d - d1[:, :, None, None] * d2[None, None, :, :]).max() < 1e-10


def test_density_rejects_non_kahler():
    spec = geo.ManifoldSpec.flat(2)
    spec.metric[0][0] = spec.metric[0][0] + FourierFunction.cos(2, (0, 0, 1, 0), 0.1)
    with pytest.raises(cf.NotKahlerError):
        cf.index_density(spec)
