"""Fourier-Galerkin realization of the deformed Dolbeault complex on ``T^2``.

On a surface with metric ``g_{1 1bar}``, line bundle metric ``h`` and twisting
form ``omega = w dz`` the complex is

    C^inf(E)  --d-->  C^inf(Lambda^{0,1} E),   d u = sqrt(2) (du/dzbar + conj(w) u) dzbar,

truncated to the Fourier modes ``|k1|, |k2| <= N`` on both levels.  With the
``sqrt(2)`` factor the Laplacian on functions of the flat torus is exactly
``-(d_xx + d_yy)``.  Inner products carry the metric: functions are weighted
by ``h dvol = 2 h g_{1 1bar} dx dy`` and ``(0,1)``-forms ``v dzbar`` by
``h |dzbar|^2 dvol = 2 h dx dy``.  Adjoints are taken with respect to these
Gram matrices, so each Laplacian is a generalized Hermitian eigenproblem.

Products of surfaces are handled by :func:`tensor_product`, which combines
factor eigenpairs instead of assembling four-dimensional matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .forms import FourierFunction
from .geometry import ManifoldSpec

__all__ = ["GalerkinComplex", "Level", "Block", "ProductComplex", "HeatTraceSeries", "FitResult",
           "assemble", "heat_supertrace", "pointwise_density", "heat_series",
           "fit_coefficients", "tensor_product", "mckean_singer_index", "default_t_grid",
           "UnsupportedSpecError", "CutoffError", "IllConditionedFitError", "OffGridError",
           "UnderResolvedError", "DEFAULT_T_RANGE", "DEFAULT_T_POINTS"]

DEFAULT_T_RANGE = (0.002, 0.02)
DEFAULT_T_POINTS = 12
DEFAULT_CUTOFF = 24


class UnsupportedSpecError(ValueError):
    pass


class CutoffError(ValueError):
    pass


class IllConditionedFitError(RuntimeError):
    pass


class OffGridError(ValueError):
    pass


class UnderResolvedError(RuntimeError):
    pass


def default_t_grid(lo: float = DEFAULT_T_RANGE[0], hi: float = DEFAULT_T_RANGE[1],
                   num: int = DEFAULT_T_POINTS) -> np.ndarray:
    """Geometric grid of heat times.

    The default window stays well below the scale ``1/(4 pi^2) ~ 0.025`` where
    the periodic images of the heat kernel (distance 1 on the unit torus,
    size ``~ exp(-1/4t)``) start to contaminate the local expansion.
    """
    return np.geomspace(lo, hi, num)


def _modes(N: int) -> np.ndarray:
    ks = np.arange(-N, N + 1)
    K1, K2 = np.meshgrid(ks, ks, indexing="ij")
    return np.stack([K1.ravel(), K2.ravel()], axis=1)


def _multiplication_matrix(f: FourierFunction, N: int) -> sp.csr_matrix:
    """Galerkin matrix of ``u -> f u`` on the mode box: ``M[a, b] = fhat(a - b)``."""
    side = 2 * N + 1
    n = side * side
    modes = _modes(N)
    b_idx = np.arange(n)
    rows, cols, vals = [], [], []
    for q, c in zip(f.freqs, f.amps):
        a = modes + q
        ok = np.all(np.abs(a) <= N, axis=1)
        rows.append((a[ok, 0] + N) * side + (a[ok, 1] + N))
        cols.append(b_idx[ok])
        vals.append(np.full(int(ok.sum()), c, dtype=complex))
    if not rows:
        return sp.csr_matrix((n, n), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def _gen_eigh(A: np.ndarray, M: np.ndarray):
    """Solve ``A v = lam M v`` with ``v^H M v = 1``.

    Uses a Cholesky reduction to a standard Hermitian problem, which is much
    faster than the generalized LAPACK driver at these sizes.
    """
    L = np.linalg.cholesky(0.5 * (M + M.conj().T))
    B = sla.solve_triangular(L, 0.5 * (A + A.conj().T), lower=True)
    C = sla.solve_triangular(L, B.conj().T, lower=True).conj().T
    lam, Y = sla.eigh(0.5 * (C + C.conj().T), driver="evr")
    V = sla.solve_triangular(L.conj().T, Y, lower=False)
    return lam, V


@dataclass
class Block:
    """Modes closed under ``d`` and both Gram matrices, with their eigenpairs per level."""

    index: np.ndarray
    stiffness: list
    mass: list
    eigvals: list
    eigvecs: list


@dataclass
class Level:
    """Spectral data of one level ``Lambda^{0,i}``.

    ``fiber_weight`` converts ``|coefficient|^2`` to the pointwise norm.
    """

    degree: int
    mass: sp.csr_matrix
    fiber_weight: FourierFunction
    eigvals: np.ndarray

    @property
    def dim(self) -> int:
        return self.mass.shape[0]

    def trace(self, t: float) -> float:
        return float(np.exp(-t * self.eigvals).sum())


@dataclass
class GalerkinComplex:
    """Truncated two-level complex on a surface torus.

    The mode box splits into blocks that ``d`` and the Gram matrices never
    couple (for data depending on ``x`` only, one block per ``k2``); every
    block is diagonalized separately.
    """

    spec: ManifoldSpec
    N: int
    modes: np.ndarray
    d: sp.csr_matrix
    levels: list
    blocks: list
    volume_weight: FourierFunction

    @property
    def m(self) -> int:
        """Real dimension."""
        return 2 * self.spec.m

    @property
    def dim(self) -> int:
        return len(self.modes)

    def eigvecs(self, i: int) -> np.ndarray:
        """Dense ``M_i``-orthonormal eigenvectors, columns ordered as ``levels[i].eigvals``."""
        V = np.zeros((self.dim, self.dim), dtype=complex)
        col = 0
        for b in self.blocks:
            k = len(b.index)
            V[b.index, col:col + k] = b.eigvecs[i]
            col += k
        return V

    def laplacian(self, i: int) -> np.ndarray:
        """Dense matrix of ``D_i`` acting on mode coefficients."""
        D = np.zeros((self.dim, self.dim), dtype=complex)
        for b in self.blocks:
            D[np.ix_(b.index, b.index)] = np.linalg.solve(b.mass[i], b.stiffness[i])
        return D

    def laplacian_defect(self) -> float:
        """``max |D_i - (d* d + d d*)_i|`` relative to ``max |D_i|``, from the dense operators."""
        d = self.d.toarray()
        M0, M1 = self.levels[0].mass.toarray(), self.levels[1].mass.toarray()
        dstar = np.linalg.solve(M0, d.conj().T @ M1)
        D0, D1 = self.laplacian(0), self.laplacian(1)
        e0 = np.abs(D0 - dstar @ d).max() / max(np.abs(D0).max(), 1.0)
        e1 = np.abs(D1 - d @ dstar).max() / max(np.abs(D1).max(), 1.0)
        return float(max(e0, e1))

    def evaluation_matrix(self, grid: int) -> np.ndarray:
        xs = np.arange(grid) / grid
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        return np.exp(2j * np.pi * (np.outer(X.ravel(), self.modes[:, 0])
                                    + np.outer(Y.ravel(), self.modes[:, 1])))

    def level_profiles(self, grid: int) -> list[np.ndarray]:
        """``|phi_j(x)|^2`` times the fiber weight, shape ``(grid*grid, dim)`` per level."""
        cache = self.__dict__.setdefault("_profiles", {})
        if grid not in cache:
            E = self.evaluation_matrix(grid)
            out = []
            for i, lev in enumerate(self.levels):
                w = lev.fiber_weight.to_grid(grid).real.ravel()
                P = np.concatenate([np.abs(E[:, b.index] @ b.eigvecs[i]) ** 2
                                    for b in self.blocks], axis=1)
                out.append(P * w[:, None])
            cache[grid] = out
        return cache[grid]

    def level_densities(self, ts, grid: int) -> list[np.ndarray]:
        """Per level ``sum_j exp(-t lam_j) |phi_j(x)|^2``, shape ``(len(ts), grid, grid)``."""
        ts = np.asarray(ts, dtype=float)
        out = []
        for lev, P in zip(self.levels, self.level_profiles(grid)):
            heat = np.exp(-np.outer(ts, lev.eigvals))
            out.append((heat @ P.T).reshape(len(ts), grid, grid))
        return out

    def densities(self, ts, grid: int) -> np.ndarray:
        rho0, rho1 = self.level_densities(ts, grid)
        return rho0 - rho1

    def level_traces(self, t: float) -> list[float]:
        return [lev.trace(t) for lev in self.levels]

    def supertrace(self, t: float) -> float:
        tr0, tr1 = self.level_traces(t)
        return tr0 - tr1

    def volume_on_grid(self, grid: int) -> np.ndarray:
        """``dvol / (dx dy)`` sampled on the grid."""
        return self.volume_weight.to_grid(grid).real


def _coupled_blocks(*mats: sp.spmatrix) -> list[np.ndarray]:
    pattern = sum(abs(A) for A in mats)
    _, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    return np.split(order, splits)


def assemble(spec: ManifoldSpec, N: int = DEFAULT_CUTOFF) -> GalerkinComplex:
    """Assemble and diagonalize the truncated complex of a surface spec.

    Raises
    ------
    UnsupportedSpecError
        For ``m != 1`` (use :func:`tensor_product`) or bundles of rank > 1.
    CutoffError
        If ``N`` does not exceed twice the Fourier support of the data.
    """
    if spec.m != 1:
        raise UnsupportedSpecError("assemble handles surfaces; build products with tensor_product")
    if spec.rank != 1:
        raise UnsupportedSpecError("the spectral path supports line bundles only")
    support = spec.max_frequency()
    if N <= 2 * support:
        raise CutoffError(f"cutoff N={N} must exceed twice the data support {support}")
    g = spec.metric[0][0]
    h = spec.bundle[0][0]
    w = spec.omega.coefficient((1,), ())
    modes = _modes(N)
    k = modes[:, 0] + 1j * modes[:, 1]
    d = (sp.diags(np.pi * 1j * k) + _multiplication_matrix(w.conj(), N)) * np.sqrt(2)
    d = sp.csr_matrix(d)

    w0 = h * g * 2.0
    w1 = h * 2.0
    M0 = _multiplication_matrix(w0, N)
    M1 = _multiplication_matrix(w1, N)
    blocks = []
    for idx in _coupled_blocks(d, M0, M1):
        db = d[idx][:, idx].toarray()
        m0 = M0[idx][:, idx].toarray()
        m1 = M1[idx][:, idx].toarray()
        m0, m1 = 0.5 * (m0 + m0.conj().T), 0.5 * (m1 + m1.conj().T)
        a0 = db.conj().T @ m1 @ db
        L0 = np.linalg.cholesky(m0)
        Z = sla.solve_triangular(L0, db.conj().T @ m1, lower=True)
        a1 = Z.conj().T @ Z
        lam0, v0 = _gen_eigh(a0, m0)
        lam1, v1 = _gen_eigh(a1, m1)
        blocks.append(Block(idx, [a0, a1], [m0, m1], [lam0, lam1], [v0, v1]))
    ginv = _reciprocal(g, 4 * (g.max_frequency() + 8))
    levels = [Level(0, M0, h, np.concatenate([b.eigvals[0] for b in blocks])),
              Level(1, M1, h * ginv, np.concatenate([b.eigvals[1] for b in blocks]))]
    return GalerkinComplex(spec, N, modes, d, levels, blocks, g * 2.0)


def _reciprocal(f: FourierFunction, grid: int) -> FourierFunction:
    if f.max_frequency() == 0:
        return FourierFunction.constant(f.m, 1.0 / f.mean())
    return FourierFunction.from_grid(1.0 / f.to_grid(grid).real)


def heat_supertrace(gc, t: float) -> float:
    """``sum_i (-1)^i Tr exp(-t D_i)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return gc.supertrace(t)


def _grid_index(x, grid: int) -> tuple[int, ...]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    j = np.round(x * grid)
    if np.abs(j - x * grid).max() > 1e-9:
        raise OffGridError(f"point {x.tolist()} is not on the {grid}-point grid")
    return tuple(int(v) % grid for v in j)


def pointwise_density(gc, t: float, x=None, grid: int = 32):
    """Pointwise heat supertrace density against ``dvol``.

    Returns the whole grid (shape ``(grid,) * m``) when ``x`` is omitted,
    otherwise the value at the grid point ``x``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    rho = gc.densities(np.array([t]), grid)[0]
    if x is None:
        return rho
    return float(rho[_grid_index(x, grid)])


@dataclass
class HeatTraceSeries:
    """Supertraces (and optionally pointwise densities) on a grid of heat times."""

    t: np.ndarray
    supertrace: np.ndarray
    m: int
    densities: np.ndarray | None = None
    grid: int | None = None
    volume: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if np.any(self.t <= 0):
            raise ValueError("heat times must be positive")
        if not np.all(np.isfinite(self.supertrace)):
            raise ValueError("non-finite supertrace values")

    def integrated_densities(self) -> np.ndarray:
        """Quadrature of each density against ``dvol``."""
        if self.densities is None:
            raise ValueError("no pointwise densities stored")
        axes = tuple(range(1, self.densities.ndim))
        npts = np.prod(self.densities.shape[1:])
        return (self.densities * self.volume).sum(axis=axes) / npts


def heat_series(gc, ts=None, grid: int | None = 32) -> HeatTraceSeries:
    ts = default_t_grid() if ts is None else np.asarray(ts, dtype=float)
    st = np.array([heat_supertrace(gc, t) for t in ts])
    if grid is None:
        return HeatTraceSeries(ts, st, gc.m)
    return HeatTraceSeries(ts, st, gc.m, gc.densities(ts, grid), grid, gc.volume_on_grid(grid))


@dataclass
class FitResult:
    """Least-squares estimates of ``a_{m,2n}``, ``n = 0..len(powers)-1``."""

    powers: np.ndarray
    coefficients: list
    residual: float
    condition: float

    def coefficient(self, n: int):
        return self.coefficients[n]


def fit_coefficients(series: HeatTraceSeries, m: int | None = None, n_terms: int | None = None,
                     pointwise: bool = False, max_condition: float = 1e10) -> FitResult:
    """Fit ``sum_n c_n t^{(2n - m)/2}`` to the supertrace or the pointwise densities.

    ``n_terms`` defaults to ``m/2 + 3`` (``n <= m/2 + 2``): one term beyond the
    index coefficient to absorb the first remainder, and one more for the
    next.  Raises :class:`IllConditionedFitError` when the column-scaled
    design matrix is too ill-conditioned.
    """
    m = series.m if m is None else m
    n_terms = m // 2 + 3 if n_terms is None else n_terms
    t = series.t
    if len(t) < max(4, n_terms):
        raise ValueError(f"need at least {max(4, n_terms)} heat times, got {len(t)}")
    powers = (2 * np.arange(n_terms) - m) / 2.0
    A = t[:, None] ** powers[None, :]
    scale = np.linalg.norm(A, axis=0)
    As = A / scale
    cond = float(np.linalg.cond(As))
    if cond > max_condition:
        raise IllConditionedFitError(f"design matrix condition {cond:.3g} exceeds {max_condition:.3g}")
    if pointwise:
        if series.densities is None:
            raise ValueError("series has no pointwise densities")
        shape = series.densities.shape[1:]
        b = series.densities.reshape(len(t), -1)
    else:
        shape = ()
        b = np.asarray(series.supertrace, dtype=float)[:, None]
    c, *_ = np.linalg.lstsq(As, b, rcond=None)
    c = c / scale[:, None]
    resid = float(np.abs(A @ c - b).max())
    coeffs = [c[i].reshape(shape) if shape else float(c[i, 0]) for i in range(n_terms)]
    return FitResult(powers, coeffs, resid, cond)


def mckean_singer_index(gc, ts=None, tol: float = 1e-3) -> tuple[int, float]:
    """Index read off the supertrace, with the spread over ``ts`` as certificate."""
    ts = default_t_grid() if ts is None else np.asarray(ts)
    vals = np.array([heat_supertrace(gc, t) for t in ts])
    mid = vals[len(vals) // 2]
    idx = int(round(mid))
    if abs(mid - idx) > tol:
        raise UnderResolvedError(f"supertrace {mid:.6g} is not an integer")
    return idx, float(vals.max() - vals.min())


@dataclass
class ProductComplex:
    """Tensor product of two surface complexes.

    Level ``k`` is the direct sum of the blocks ``(i, j)`` with ``i + j = k``;
    on each block ``D = D_{1,i} x 1 + 1 x D_{2,j}``, so spectra and profiles
    come from the factor eigenpairs.
    """

    first: GalerkinComplex
    second: GalerkinComplex

    @property
    def m(self) -> int:
        return self.first.m + self.second.m

    def blocks(self, k: int) -> list[tuple[int, int]]:
        return [(i, k - i) for i in range(2) if 0 <= k - i < 2]

    def level_trace(self, k: int, t: float) -> float:
        """``Tr exp(-t D_k)`` as a sum over combined eigenvalues ``lam_a + mu_b``."""
        total = 0.0
        for i, j in self.blocks(k):
            lam = self.first.levels[i].eigvals
            mu = self.second.levels[j].eigvals
            total += float(np.exp(-t * np.add.outer(lam, mu)).sum())
        return total

    def supertrace(self, t: float) -> float:
        return sum((-1) ** k * self.level_trace(k, t) for k in range(3))

    def level_densities(self, ts, grid: int) -> list[np.ndarray]:
        """Per level densities on the product grid, shape ``(len(ts),) + (grid,) * 4``."""
        r1 = self.first.level_densities(ts, grid)
        r2 = self.second.level_densities(ts, grid)
        out = []
        for k in range(3):
            acc = 0.0
            for i, j in self.blocks(k):
                acc = acc + r1[i][:, :, :, None, None] * r2[j][:, None, None, :, :]
            out.append(acc)
        return out

    def densities(self, ts, grid: int) -> np.ndarray:
        lv = self.level_densities(ts, grid)
        return lv[0] - lv[1] + lv[2]

    def volume_on_grid(self, grid: int) -> np.ndarray:
        v1, v2 = self.first.volume_on_grid(grid), self.second.volume_on_grid(grid)
        return v1[:, :, None, None] * v2[None, None, :, :]

    # explicit Kronecker realization, for checks at small cutoff -------------

    def explicit_operators(self, max_dim: int = 20000) -> dict:
        """Sparse Kronecker-assembled ``d_k``, Gram matrices and Laplacians of the product.

        Levels are ordered ``E0 = V0 x W0``, ``E1 = V1 x W0 + V0 x W1``,
        ``E2 = V1 x W1`` and ``d_k = d_1 x 1 + (-1)^i 1 x d_2`` on ``V_i x W_j``.
        """
        n1, n2 = self.first.dim, self.second.dim
        if 2 * n1 * n2 > max_dim:
            raise CutoffError(f"explicit product of size {2 * n1 * n2} exceeds {max_dim}")
        D1, D2 = self.first.d, self.second.d
        I1, I2 = sp.identity(n1, format="csr"), sp.identity(n2, format="csr")
        A = [lev.mass for lev in self.first.levels]
        B = [lev.mass for lev in self.second.levels]
        d0 = sp.vstack([sp.kron(D1, I2), sp.kron(I1, D2)]).tocsc()
        d1 = sp.hstack([-sp.kron(I1, D2), sp.kron(D1, I2)]).tocsc()
        M0 = sp.kron(A[0], B[0]).tocsc()
        M1 = sp.block_diag([sp.kron(A[1], B[0]), sp.kron(A[0], B[1])]).tocsc()
        M2 = sp.kron(A[1], B[1]).tocsc()
        adj0 = sp.csc_matrix(spla.spsolve(M0, (d0.conj().T @ M1).tocsc()))
        adj1 = sp.csc_matrix(spla.spsolve(M1, (d1.conj().T @ M2).tocsc()))
        lap = [adj0 @ d0, d0 @ adj0 + adj1 @ d1, d1 @ adj1]
        return {"d": [d0, d1], "mass": [M0, M1, M2], "laplacian": lap}

    def blockwise_laplacians(self) -> list[sp.spmatrix]:
        """``D_{1,i} x 1 + 1 x D_{2,j}`` arranged in the explicit level ordering."""
        I1 = sp.identity(self.first.dim, format="csr")
        I2 = sp.identity(self.second.dim, format="csr")
        L1 = [sp.csr_matrix(self.first.laplacian(i)) for i in range(2)]
        L2 = [sp.csr_matrix(self.second.laplacian(j)) for j in range(2)]
        blk = {(i, j): sp.kron(L1[i], I2) + sp.kron(I1, L2[j]) for i in range(2) for j in range(2)}
        return [blk[(0, 0)], sp.block_diag([blk[(1, 0)], blk[(0, 1)]]), blk[(1, 1)]]

    def explicit_densities(self, ts, grid: int, max_dim: int = 20000) -> np.ndarray:
        """Pointwise supertrace density from eigenpairs of the assembled product Laplacians."""
        ops = self.explicit_operators(max_dim)
        E = np.kron(self.first.evaluation_matrix(grid), self.second.evaluation_matrix(grid))
        f, s = self.first.levels, self.second.levels
        ts = np.asarray(ts, dtype=float)
        total = np.zeros((len(ts), E.shape[0]))
        for k in range(3):
            M = ops["mass"][k]
            S = M @ ops["laplacian"][k]
            blocks = self.blocks(k)
            sizes = [f[i].dim * s[j].dim for i, j in blocks]
            offsets = np.cumsum([0] + sizes)
            weights = [np.outer(f[i].fiber_weight.to_grid(grid).real.ravel(),
                                s[j].fiber_weight.to_grid(grid).real.ravel()).ravel()
                       for i, j in blocks]
            for idx in _coupled_blocks(S, M):
                lam, V = _gen_eigh(S[idx][:, idx].toarray(), M[idx][:, idx].toarray())
                heat = np.exp(-np.outer(ts, lam))
                for b in range(len(blocks)):
                    sel = (idx >= offsets[b]) & (idx < offsets[b + 1])
                    if not sel.any():
                        continue
                    vals = E[:, idx[sel] - offsets[b]] @ V[sel]
                    total += (-1) ** k * (heat @ (np.abs(vals) ** 2).T) * weights[b][None, :]
        return total.reshape((len(ts),) + (grid,) * 4)


def tensor_product(G1: GalerkinComplex, G2: GalerkinComplex) -> ProductComplex:
    if not (isinstance(G1, GalerkinComplex) and isinstance(G2, GalerkinComplex)):
        raise UnsupportedSpecError("tensor_product combines surface complexes")
    return ProductComplex(G1, G2)
