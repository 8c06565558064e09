import numpy as np
import pytest
import scipy.sparse as sp

from witten_dolbeault import char_forms as cf
from witten_dolbeault import geometry as geo
from witten_dolbeault import spectral as S
from witten_dolbeault.forms import Form, FourierFunction

from conftest import sin_omega


def _modes(N):
    ks = np.arange(-N, N + 1)
    return np.array([(a, b) for a in ks for b in ks])


# assembly ---------------------------------------------------------------------

def test_flat_spectrum_is_minus_laplacian():
    N = 6
    gc = S.assemble(geo.ManifoldSpec.flat(1), N)
    expected = np.sort(4 * np.pi ** 2 * (_modes(N) ** 2).sum(axis=1))
    for lev in gc.levels:
        assert np.allclose(np.sort(lev.eigvals), expected, atol=1e-9)


@pytest.mark.parametrize("c", [0.7, 1.5 - 2j])
def test_constant_omega_per_mode_spectrum(c):
    N = 5
    gc = S.assemble(geo.ManifoldSpec.flat(1, Form.dz(1, 1) * c), N)
    k = _modes(N)
    symbol = np.pi * 1j * (k[:, 0] + 1j * k[:, 1]) + np.conj(c)
    expected = np.sort(4 * np.abs(symbol) ** 2)
    for lev in gc.levels:
        assert np.allclose(np.sort(lev.eigvals), expected, atol=1e-9)
    assert len(gc.blocks) == len(k)


def test_laplacian_identity_and_positivity(flat_sin_spec, conformal_spec):
    for spec in (flat_sin_spec, conformal_spec):
        gc = S.assemble(spec, 2 * spec.max_frequency() + 1)
        assert gc.laplacian_defect() < 1e-10
        for lev in gc.levels:
            assert lev.eigvals.min() > -1e-9


def test_block_decomposition_matches_dense(flat_sin_spec):
    gc = S.assemble(flat_sin_spec, 6)
    assert len(gc.blocks) == 13
    d = gc.d.toarray()
    M0, M1 = (lev.mass.toarray() for lev in gc.levels)
    A = d.conj().T @ M1 @ d
    lam = np.sort(np.linalg.eigvals(np.linalg.solve(M0, A)).real)
    assert np.allclose(lam, np.sort(gc.levels[0].eigvals), atol=1e-8)


def test_assemble_errors():
    with pytest.raises(S.CutoffError):
        S.assemble(geo.ManifoldSpec.flat(1, sin_omega(k=(3, 0))), 6)
    with pytest.raises(S.UnsupportedSpecError):
        S.assemble(geo.ManifoldSpec.flat(2), 4)
    one = FourierFunction.constant(1, 1.0)
    zero = FourierFunction.constant(1, 0.0)
    with pytest.raises(S.UnsupportedSpecError):
        S.assemble(geo.ManifoldSpec(1, geo.ManifoldSpec.flat(1).metric, [[one, zero], [zero, one]]), 4)


# supertraces ------------------------------------------------------------------

def test_flat_supertrace_vanishes():
    gc = S.assemble(geo.ManifoldSpec.flat(1), 10)
    for t in S.default_t_grid():
        assert abs(S.heat_supertrace(gc, t)) < 1e-12 * gc.levels[0].trace(t)


@pytest.mark.parametrize("name", ["flat_sin_complex", "isin_y_complex", "conformal_complex"])
def test_supertrace_constancy_and_index(name, request):
    gc = request.getfixturevalue(name)
    for lo, hi in [S.DEFAULT_T_RANGE, (0.02, 0.2)]:
        vals = [S.heat_supertrace(gc, t) for t in S.default_t_grid(lo, hi)]
        assert max(vals) - min(vals) < 1e-8
    idx, spread = S.mckean_singer_index(gc)
    assert idx == 0 and spread < 1e-8


def test_supertrace_rejects_nonpositive_time(flat_sin_complex):
    with pytest.raises(ValueError):
        S.heat_supertrace(flat_sin_complex, 0.0)


def test_index_reports_under_resolution():
    class Fake:
        def supertrace(self, t):
            return 0.5
    with pytest.raises(S.UnderResolvedError):
        S.mckean_singer_index(Fake())


# densities --------------------------------------------------------------------

@pytest.mark.parametrize("name", ["flat_sin_complex", "conformal_complex"])
def test_density_integrates_to_supertrace(name, request):
    gc = request.getfixturevalue(name)
    ser = S.heat_series(gc, grid=32)
    assert np.abs(ser.integrated_densities() - ser.supertrace).max() < 1e-8


def test_level_density_integrates_to_level_trace(conformal_complex):
    gc = conformal_complex
    t = 0.01
    vol = gc.volume_on_grid(32)
    for rho, tr in zip(gc.level_densities([t], 32), gc.level_traces(t)):
        assert abs((rho[0] * vol).mean() - tr) < 1e-8 * tr


def test_flat_density_vanishes():
    gc = S.assemble(geo.ManifoldSpec.flat(1), 8)
    assert np.abs(S.pointwise_density(gc, 0.01, grid=16)).max() < 1e-12


def test_constant_omega_density_is_translation_invariant():
    gc = S.assemble(geo.ManifoldSpec.flat(1, Form.dz(1, 1) * (0.8 + 0.3j)), 12)
    rho = S.pointwise_density(gc, 0.01, grid=16)
    assert np.ptp(rho) < 1e-10


def test_pointwise_density_at_a_point(flat_sin_complex):
    rho = S.pointwise_density(flat_sin_complex, 0.01, grid=32)
    assert S.pointwise_density(flat_sin_complex, 0.01, x=(0.25, 0.5), grid=32) == rho[8, 16]
    with pytest.raises(S.OffGridError):
        S.pointwise_density(flat_sin_complex, 0.01, x=(0.1, 0.5), grid=32)


# fitting ----------------------------------------------------------------------

def test_scalar_laplacian_leading_coefficient():
    gc = S.assemble(geo.ManifoldSpec.flat(1), 24)
    ts = S.default_t_grid()
    series = S.HeatTraceSeries(ts, np.array([gc.levels[0].trace(t) for t in ts]), 2)
    fit = S.fit_coefficients(series)
    # periodic images add exp(-1/4t) ~ 4e-6 at the top of the window
    assert abs(fit.coefficient(0) - 1 / (4 * np.pi)) < 1e-6


def test_zero_series_fits_to_zero():
    ts = S.default_t_grid()
    fit = S.fit_coefficients(S.HeatTraceSeries(ts, np.zeros(len(ts)), 2))
    assert all(c == 0 for c in fit.coefficients)


def test_pointwise_index_density_sin_omega(flat_sin_complex, grid32):
    ser = S.heat_series(flat_sin_complex, grid=32)
    fit = S.fit_coefficients(ser, pointwise=True)
    X, _ = grid32
    assert np.abs(fit.coefficient(1) - 2 * np.cos(2 * np.pi * X)).max() < 1e-3
    assert np.abs(fit.coefficient(0)).max() < 1e-6
    assert abs(S.fit_coefficients(ser).coefficient(1)) < 1e-8


def test_pointwise_density_conformal_matches_todd(conformal_spec, conformal_complex):
    ser = S.heat_series(conformal_complex, grid=32)
    fit = S.fit_coefficients(ser, pointwise=True)
    analytic = cf.index_density(conformal_spec, grid=32).to_grid(32).real
    assert np.abs(fit.coefficient(1) - analytic).max() < 5e-3


def test_fit_errors(flat_sin_complex):
    ser = S.heat_series(flat_sin_complex, grid=None)
    with pytest.raises(S.IllConditionedFitError):
        S.fit_coefficients(ser, max_condition=10.0)
    with pytest.raises(ValueError):
        S.fit_coefficients(ser, pointwise=True)
    with pytest.raises(ValueError):
        S.fit_coefficients(S.HeatTraceSeries([0.01, 0.02, 0.03], np.zeros(3), 2))
    with pytest.raises(ValueError):
        S.HeatTraceSeries([-0.1, 0.1], np.zeros(2), 2)


# products ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_product(flat_sin_spec, isin_y_spec):
    return S.tensor_product(S.assemble(flat_sin_spec, 3), S.assemble(isin_y_spec, 3))


def test_product_nilpotent_and_laplacian(small_product):
    ops = small_product.explicit_operators()
    d0, d1 = ops["d"]
    assert abs(d1 @ d0).max() == 0
    for L, B in zip(ops["laplacian"], small_product.blockwise_laplacians()):
        assert abs(L - B).max() < 1e-10 * max(abs(B).max(), 1.0)


def test_product_explicit_densities_match_factorized(small_product):
    ts = S.default_t_grid()[::4]
    explicit = small_product.explicit_densities(ts, 6)
    factorized = small_product.densities(ts, 6)
    assert np.abs(explicit - factorized).max() < 1e-9


def test_product_supertrace_factorizes(flat_sin_complex, isin_y_complex):
    pc = S.tensor_product(flat_sin_complex, isin_y_complex)
    for t in S.default_t_grid():
        prod = flat_sin_complex.supertrace(t) * isin_y_complex.supertrace(t)
        assert abs(pc.supertrace(t) - prod) < 1e-10 * max(1.0, pc.level_trace(0, t))


def test_product_density_factorizes(flat_sin_complex, isin_y_complex):
    pc = S.tensor_product(flat_sin_complex, isin_y_complex)
    ts = S.default_t_grid()[:3]
    r = pc.densities(ts, 8)
    r1, r2 = flat_sin_complex.densities(ts, 8), isin_y_complex.densities(ts, 8)
    assert np.abs(r - r1[:, :, :, None, None] * r2[:, None, None, :, :]).max() < 1e-8


def test_product_index_is_zero(flat_sin_complex, isin_y_complex):
    idx, spread = S.mckean_singer_index(S.tensor_product(flat_sin_complex, isin_y_complex))
    assert idx == 0 and spread < 1e-8


def test_product_explicit_size_guard(flat_sin_complex, isin_y_complex):
    with pytest.raises(S.CutoffError):
        S.tensor_product(flat_sin_complex, isin_y_complex).explicit_operators()


def test_tensor_product_rejects_non_surfaces(flat_sin_complex, small_product):
    with pytest.raises(S.UnsupportedSpecError):
        S.tensor_product(flat_sin_complex, small_product)
