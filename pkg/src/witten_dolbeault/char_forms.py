"""Chern-Weil forms: Chern character, Todd form, Pfaffian and the twisting factor.

All series are expanded through power sums ``p_k = tr(X^k)`` of the
normalized curvature ``X = (i / 2 pi) F``.  Entries of ``X`` are 2-forms and
commute, so no diagonalization is needed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from sympy import bernoulli

from .forms import FourierFunction, Form, hodge_star_top, imag_part_one_form

__all__ = ["CurvatureMatrix", "RealCurvature", "chern_character", "todd", "theta",
           "pfaffian", "pfaffian_at_point", "index_density", "power_sums", "todd_log_coefficients",
           "NotClosedError", "NotKahlerError"]


class NotClosedError(ValueError):
    pass


class NotKahlerError(ValueError):
    pass


@dataclass
class CurvatureMatrix:
    """``rank x rank`` matrix of ``(1,1)``-forms.

    Row convention: the curvature endomorphism sends the frame vector ``e_i``
    to ``sum_k entries[i][k] e_k``.
    """

    entries: list

    @property
    def rank(self) -> int:
        return len(self.entries)

    @property
    def m(self) -> int:
        return self.entries[0][0].m

    @classmethod
    def zero(cls, m: int, rank: int) -> "CurvatureMatrix":
        return cls([[Form.zero(m) for _ in range(rank)] for _ in range(rank)])

    def matmul(self, other: "CurvatureMatrix") -> "CurvatureMatrix":
        r = self.rank
        out = []
        for i in range(r):
            row = []
            for j in range(r):
                acc = Form.zero(self.m)
                for k in range(r):
                    acc = acc + self.entries[i][k].wedge(other.entries[k][j])
                row.append(acc)
            out.append(row)
        return CurvatureMatrix(out)

    def scale(self, c) -> "CurvatureMatrix":
        return CurvatureMatrix([[f * c for f in row] for row in self.entries])

    def trace(self) -> Form:
        acc = Form.zero(self.m)
        for i in range(self.rank):
            acc = acc + self.entries[i][i]
        return acc

    def max_abs(self) -> float:
        return max(f.max_abs() for row in self.entries for f in row)

    def skew_hermitian_defect(self, metric) -> float:
        """Size of ``F H + (F H)^*``, which vanishes for a metric connection.

        ``H`` is the frame metric; ``*`` transposes and conjugates the forms.
        """
        r = self.rank
        FH = [[sum((self.entries[i][k] * metric[k][j] for k in range(r)), Form.zero(self.m))
               for j in range(r)] for i in range(r)]
        return max((FH[i][j] + FH[j][i].conj()).max_abs() for i in range(r) for j in range(r))


@dataclass
class RealCurvature:
    """Components ``R_ijkl = g(R(e_i, e_j) e_k, e_l)`` in an orthonormal real frame.

    ``values`` has shape ``grid_shape + (n, n, n, n)`` with ``n = 2m``; an empty
    ``grid_shape`` means a single point.  With this convention the round unit
    sphere has ``R_1212 = -1``.
    """

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    def symmetry_defect(self) -> float:
        R = self.values
        a = np.abs(R + np.swapaxes(R, -4, -3)).max()
        b = np.abs(R + np.swapaxes(R, -2, -1)).max()
        pair = np.moveaxis(R, (-4, -3, -2, -1), (-2, -1, -4, -3))
        c = np.abs(R - pair).max()
        bianchi = R + np.moveaxis(R, (-4, -3, -2), (-3, -2, -4)) + np.moveaxis(R, (-4, -3, -2), (-2, -4, -3))
        return float(max(a, b, c, np.abs(bianchi).max()))

    def scalar(self) -> np.ndarray:
        """``tau = sum_ij R_ijji``; equals ``2K`` on a surface."""
        return np.einsum("...ijji->...", self.values)


def power_sums(X: CurvatureMatrix, top: int) -> dict[int, Form]:
    """``p_k = tr(X^k)`` for ``1 <= 2k <= top``."""
    out = {}
    P = X
    for k in range(1, top // 2 + 1):
        out[k] = P.trace()
        P = P.matmul(X)
    return out


def _truncate(f: Form, top: int) -> Form:
    return Form(f.m, {k: v for k, v in f.components.items() if len(k[0]) + len(k[1]) <= top})


def _exp_form(f: Form, top: int) -> Form:
    """``exp`` of a form with no degree-0 part, truncated at ``top``."""
    m = f.m
    out = Form.function(1.0, m)
    term = Form.function(1.0, m)
    for k in range(1, top // 2 + 1):
        term = _truncate(term.wedge(f), top) * (1.0 / k)
        if term.is_zero():
            break
        out = out + term
    return out


def _normalized(F: CurvatureMatrix) -> CurvatureMatrix:
    return F.scale(1j / (2 * np.pi))


def chern_character(F: CurvatureMatrix, top: int) -> Form:
    """``tr exp(i F / 2 pi)`` through form degree ``top``."""
    X = _normalized(F)
    out = Form.function(float(F.rank), F.m)
    for k, p in power_sums(X, top).items():
        out = out + p * (1.0 / math.factorial(k))
    return out


@lru_cache(maxsize=None)
def todd_log_coefficients(kmax: int) -> tuple[float, ...]:
    """Coefficients ``t_j`` of ``log(x / (1 - e^-x)) = sum_j t_j x^j`` for ``j <= kmax``."""
    coeffs = [0.0] * (kmax + 1)
    if kmax >= 1:
        coeffs[1] = 0.5
    for j in range(2, kmax + 1, 2):
        coeffs[j] = -float(bernoulli(j)) / (j * math.factorial(j))
    return tuple(coeffs)


def todd(F: CurvatureMatrix, top: int) -> Form:
    """Todd form ``exp(sum_j t_j p_j)`` of the curvature ``F``; ``Td_2 = c_1 / 2``."""
    X = _normalized(F)
    ps = power_sums(X, top)
    t = todd_log_coefficients(top // 2)
    log = Form.zero(F.m)
    for j, p in ps.items():
        if t[j]:
            log = log + p * t[j]
    return _exp_form(log, top)


def theta(omega: Form, top: int, tol: float = 1e-10) -> Form:
    """``sum_k (d Im omega)^k / (k! pi^k)`` through degree ``top``."""
    if not omega.partial().is_zero(tol):
        raise NotClosedError("d omega has a nonzero (2,0) part")
    dim = imag_part_one_form(omega).d() if omega.components else Form.zero(omega.m)
    return _exp_form(dim * (1 / np.pi), top)


def _perm_sign(p) -> int:
    s = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


@lru_cache(maxsize=None)
def _pfaffian_terms(n: int):
    perms = [(p, _perm_sign(p)) for p in itertools.permutations(range(n))]
    return perms


def pfaffian_at_point(R: np.ndarray) -> np.ndarray:
    """Euler integrand from ``R[..., i, j, k, l]`` in an orthonormal frame.

    ``(-1)^k / (8^k pi^k k!) sum R_{i1 i2 j1 j2} ... R_{i(n-1) i_n j(n-1) j_n}``
    times the Grassmann pairing of ``e^{i1}..e^{i_n}`` with ``e^{j1}..e^{j_n}``,
    ``n = 2k``.  The pairing vanishes unless both tuples are permutations of
    ``1..n``, so the sum runs over pairs of permutations.
    """
    R = np.asarray(R)
    n = R.shape[-1]
    if n % 2:
        raise ValueError("the Euler form needs even real dimension")
    k = n // 2
    total = np.zeros(R.shape[:-4])
    for s, ss in _pfaffian_terms(n):
        for r, rs in _pfaffian_terms(n):
            term = ss * rs
            prod = np.ones(R.shape[:-4])
            for a in range(k):
                prod = prod * R[..., s[2 * a], s[2 * a + 1], r[2 * a], r[2 * a + 1]]
            total = total + term * prod
    return (-1) ** k / (8 ** k * np.pi ** k * math.factorial(k)) * total


def pfaffian(R: RealCurvature, m: int | None = None):
    """Euler form density; a FourierFunction for grid data, a float at a point."""
    n = R.n
    if m is not None and m != n:
        raise ValueError(f"real dimension {m} does not match curvature of size {n}")
    if n % 2:
        raise ValueError("odd real dimension")
    vals = pfaffian_at_point(R.values)
    if vals.ndim == 0:
        return float(vals)
    return FourierFunction.from_grid(vals)


def index_density(spec, grid: int | None = None) -> FourierFunction:
    """``star`` of the top-degree part of ``Td(TM) ^ ch(E) ^ Theta(omega)``."""
    from .geometry import bundle_curvature, check_kahler, tangent_curvature

    if not check_kahler(spec):
        raise NotKahlerError("metric is not Kaehler")
    top = 2 * spec.m
    td = todd(tangent_curvature(spec), top)
    ch = chern_character(bundle_curvature(spec), top)
    th = theta(spec.omega, top)
    total = _truncate(td.wedge(ch), top)
    total = _truncate(total.wedge(th), top).part(top)
    if not total.components:
        return FourierFunction(spec.m)
    return hodge_star_top(total, None if spec.is_flat() else spec.metric,
                          grid=grid or spec.grid_size())
