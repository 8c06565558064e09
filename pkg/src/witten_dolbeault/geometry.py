"""Model Kähler tori: metric data, curvature, products and the twisting form.

A :class:`ManifoldSpec` describes ``T^{2m}`` with a Hermitian metric
``g_{a bbar} = g(d/dz^a, d/dzbar^b)`` (the flat metric ``sum dx^2 + dy^2`` has
``g_{a abar} = 1/2``), a Hermitian line or vector bundle metric ``h_{p qbar}``
in a holomorphic frame, and a ``(1,0)``-form ``omega``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .char_forms import CurvatureMatrix, RealCurvature
from .forms import BidegreeError, FourierFunction, Form, imag_part_one_form

__all__ = ["ManifoldSpec", "SingularMetricError", "kahler_form", "check_kahler",
           "tangent_curvature", "bundle_curvature", "curvature_on_grid", "real_curvature", "scalar_curvature",
           "product_spec", "d_im_omega", "check_del_closed", "lift_function", "lift_form",
           "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


class SingularMetricError(ValueError):
    pass


def _const(m: int, c: complex) -> FourierFunction:
    return FourierFunction.constant(m, c)


@dataclass
class ManifoldSpec:
    """Torus ``T^{2m}`` with Kähler metric, bundle metric and twisting form."""

    m: int
    metric: list
    bundle: list = None
    omega: Form = None
    label: str = ""

    def __post_init__(self):
        if self.bundle is None:
            self.bundle = [[_const(self.m, 1.0)]]
        if self.omega is None:
            self.omega = Form.zero(self.m)
        if len(self.metric) != self.m or any(len(r) != self.m for r in self.metric):
            raise ValueError("metric must be an m x m matrix")
        if self.omega.m != self.m:
            raise ValueError("omega has the wrong dimension")
        if self.omega.components and self.omega.bidegrees() != {(1, 0)}:
            raise BidegreeError("omega must be a (1,0)-form")

    # constructors ---------------------------------------------------------

    @classmethod
    def flat(cls, m: int, omega: Form | None = None, label: str = "flat") -> "ManifoldSpec":
        g = [[_const(m, 0.5 if a == b else 0.0) for b in range(m)] for a in range(m)]
        return cls(m, g, None, omega, label)

    @classmethod
    def conformal(cls, phi: FourierFunction, omega: Form | None = None, grid: int = 64,
                  label: str = "conformal") -> "ManifoldSpec":
        """Surface metric ``e^{2 phi}(dx^2 + dy^2)``."""
        if phi.m != 1:
            raise ValueError("conformal specs are surfaces")
        g = FourierFunction.from_grid(0.5 * np.exp(2 * phi.to_grid(grid).real))
        return cls(1, [[g]], None, omega, label)

    @classmethod
    def from_potential(cls, f: FourierFunction, omega: Form | None = None,
                       label: str = "potential") -> "ManifoldSpec":
        """Metric ``g_{a bbar} = delta_ab / 2 + d^2 f / dz^a dzbar^b``, Kähler by construction.

        Positivity is the caller's concern (keep ``f`` small); see :meth:`validate`.
        """
        m = f.m
        g = [[f.dz(a + 1).dzbar(b + 1) + (0.5 if a == b else 0.0) for b in range(m)]
             for a in range(m)]
        return cls(m, g, None, omega, label)

    @property
    def rank(self) -> int:
        return len(self.bundle)

    @property
    def real_dim(self) -> int:
        return 2 * self.m

    def is_flat(self, tol: float = 0.0) -> bool:
        for a in range(self.m):
            for b in range(self.m):
                f = self.metric[a][b] - (0.5 if a == b else 0.0)
                if not f.is_zero(tol):
                    return False
        return True

    def max_frequency(self) -> int:
        fs = [f for row in self.metric for f in row] + [f for row in self.bundle for f in row]
        fs += list(self.omega.components.values())
        return max((f.max_frequency() for f in fs), default=0)

    def grid_size(self, minimum: int = 16) -> int:
        """Smallest power of two above twice the largest frequency (at least ``minimum``)."""
        n = minimum
        while n <= 2 * self.max_frequency():
            n *= 2
        return n

    def validate(self, grid: int | None = None, tol: float = 1e-10) -> None:
        """Raise unless ``g`` and ``h`` are pointwise Hermitian positive definite."""
        n = grid or self.grid_size()
        for name, mat in (("metric", self.metric), ("bundle", self.bundle)):
            vals = _matrix_on_grid(mat, n)
            herm = np.abs(vals - np.conj(np.swapaxes(vals, -1, -2))).max()
            if herm > tol:
                raise SingularMetricError(f"{name} is not Hermitian (defect {herm:.2e})")
            if np.linalg.eigvalsh(vals).min() <= 0:
                raise SingularMetricError(f"{name} is not positive definite")

    # serialization --------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "m": self.m, "label": self.label,
                "metric": [[f.to_json_obj() for f in row] for row in self.metric],
                "bundle": [[f.to_json_obj() for f in row] for row in self.bundle],
                "omega": self.omega.to_json_obj()}

    @classmethod
    def from_json_obj(cls, d: dict) -> "ManifoldSpec":
        if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d['schema_version']!r}")
        m = d["m"]
        metric = [[FourierFunction.from_json_obj(f) for f in row] for row in d["metric"]]
        bundle = ([[FourierFunction.from_json_obj(f) for f in row] for row in d["bundle"]]
                  if "bundle" in d else None)
        omega = Form.from_json_obj(d["omega"]) if "omega" in d else None
        return cls(m, metric, bundle, omega, d.get("label", ""))

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "ManifoldSpec":
        return cls.from_json_obj(json.loads(s))


def _matrix_on_grid(mat, n: int) -> np.ndarray:
    return np.stack([np.stack([f.to_grid(n) for f in row], axis=-1) for row in mat], axis=-2)


def kahler_form(spec: ManifoldSpec) -> Form:
    """``Omega = i sum g_{a bbar} dz^a ^ dzbar^b``, so that flat ``T^2`` gives ``dx ^ dy``."""
    out = Form.zero(spec.m)
    for a in range(spec.m):
        for b in range(spec.m):
            out = out + Form(spec.m, {((a + 1,), (b + 1,)): spec.metric[a][b] * 1j})
    return out


def check_kahler(spec: ManifoldSpec, tol: float = 1e-10) -> bool:
    return kahler_form(spec).d().is_zero(tol)


def curvature_on_grid(H: list, m: int, n: int) -> np.ndarray:
    """Pointwise Chern curvature ``F = dbar(dH H^{-1})`` of a Hermitian frame metric ``H``.

    Returns ``C[..., a, b, i, k]``, the coefficient of ``dz^a ^ dzbar^b`` in
    ``F_ik``, sampled on the ``n``-point grid.  Only exact derivatives of the
    Fourier data and a pointwise inverse are used, so nothing is truncated:

        F_ab = -(d_a dbar_b H) H^{-1} + (d_a H) H^{-1} (dbar_b H) H^{-1}.
    """
    r = len(H)
    Hg = _matrix_on_grid(H, n)
    det = np.abs(np.linalg.det(Hg))
    if det.min() < 1e-12:
        raise SingularMetricError("metric is singular on the grid")
    Hinv = np.linalg.inv(Hg)
    dH = [_matrix_on_grid([[f.dz(a + 1) for f in row] for row in H], n) for a in range(m)]
    dbH = [_matrix_on_grid([[f.dzbar(b + 1) for f in row] for row in H], n) for b in range(m)]
    out = np.zeros((n,) * (2 * m) + (m, m, r, r), dtype=complex)
    for a in range(m):
        A = dH[a] @ Hinv
        for b in range(m):
            ddH = _matrix_on_grid([[f.dz(a + 1).dzbar(b + 1) for f in row] for row in H], n)
            out[..., a, b, :, :] = -ddH @ Hinv + A @ dbH[b] @ Hinv
    return out


def _chern_curvature(H: list, m: int, n: int) -> CurvatureMatrix:
    r = len(H)
    if all(f.max_frequency() == 0 for row in H for f in row):
        return CurvatureMatrix.zero(m, r)
    C = curvature_on_grid(H, m, n)
    entries = []
    for i in range(r):
        row = []
        for k in range(r):
            comps = {((a + 1,), (b + 1,)): FourierFunction.from_grid(C[..., a, b, i, k])
                     for a in range(m) for b in range(m)}
            row.append(Form(m, comps))
        entries.append(row)
    return CurvatureMatrix(entries)


def tangent_curvature(spec: ManifoldSpec, grid: int | None = None) -> CurvatureMatrix:
    """Chern (= Levi-Civita) curvature of ``T^{1,0}`` in the frame ``d/dz^a``."""
    return _chern_curvature(spec.metric, spec.m, grid or spec.grid_size())


def bundle_curvature(spec: ManifoldSpec, grid: int | None = None) -> CurvatureMatrix:
    return _chern_curvature(spec.bundle, spec.m, grid or spec.grid_size())


def _real_metric(g: np.ndarray) -> np.ndarray:
    """Riemannian metric in the ordering ``(x^1..x^m, y^1..y^m)``."""
    re, im = g.real, g.imag
    top = np.concatenate([re, im], axis=-1)
    bot = np.concatenate([-im, re], axis=-1)
    return 2 * np.concatenate([top, bot], axis=-2)


def _realify(A: np.ndarray) -> np.ndarray:
    re, im = A.real, A.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _coframe_values(m: int) -> tuple[np.ndarray, np.ndarray]:
    """``dz^a(e_c)`` and ``dzbar^a(e_c)`` for the real coordinate vectors ``e_c``."""
    dz = np.zeros((m, 2 * m), dtype=complex)
    for a in range(m):
        dz[a, a] = 1.0
        dz[a, m + a] = 1j
    return dz, np.conj(dz)


def real_curvature(spec: ManifoldSpec, grid: int | None = None) -> RealCurvature:
    """``R_ijkl = g(R(e_i, e_j) e_k, e_l)`` on a grid in the orthonormal frame ``G^{-1/2}``.

    Real coordinates are ordered ``(x^1..x^m, y^1..y^m)``; ``T^{1,0}`` is
    identified with the tangent bundle through ``d/dz^a -> d/dx^a``.
    """
    n = grid or spec.grid_size()
    m = spec.m
    if spec.is_flat():
        return RealCurvature(np.zeros((n,) * (2 * m) + (2 * m,) * 4))
    C = curvature_on_grid(spec.metric, m, n)
    dz, dzb = _coframe_values(m)
    pairing = np.einsum("ac,bd->abcd", dz, dzb) - np.einsum("ad,bc->abcd", dz, dzb)
    # F_ik(e_c, e_d), then the endomorphism e_i -> sum_k F_ik e_k as a matrix (k, i)
    vals = np.einsum("...abik,abcd->...cdki", C, pairing, optimize=True)
    Rend = _realify(vals)
    G = _real_metric(_matrix_on_grid(spec.metric, n))
    w, V = np.linalg.eigh(G)
    P = (V / np.sqrt(w)[..., None, :]) @ np.swapaxes(V, -1, -2)
    T = np.einsum("...cdef,...eg->...cdfg", Rend, G, optimize=True)
    R = np.einsum("...cdfg,...ci->...idfg", T, P, optimize=True)
    R = np.einsum("...idfg,...dj->...ijfg", R, P, optimize=True)
    R = np.einsum("...ijfg,...fk->...ijkg", R, P, optimize=True)
    R = np.einsum("...ijkg,...gl->...ijkl", R, P, optimize=True)
    return RealCurvature(R.real)


def scalar_curvature(spec: ManifoldSpec, grid: int | None = None) -> FourierFunction:
    """``tau = sum R_ijji``; the round unit sphere has ``tau = 2``."""
    if spec.is_flat():
        return FourierFunction(spec.m)
    return FourierFunction.from_grid(real_curvature(spec, grid).scalar())


def lift_function(f: FourierFunction, m_total: int, offset: int) -> FourierFunction:
    """Pull back along the projection onto complex coordinates ``offset+1 .. offset+f.m``."""
    freqs = np.zeros((len(f), 2 * m_total), dtype=np.int64)
    freqs[:, 2 * offset:2 * (offset + f.m)] = f.freqs
    return FourierFunction(m_total, freqs, f.amps)


def lift_form(w: Form, m_total: int, offset: int) -> Form:
    comps = {}
    for (I, J), f in w.components.items():
        comps[(tuple(i + offset for i in I), tuple(j + offset for j in J))] = \
            lift_function(f, m_total, offset)
    return Form(m_total, comps)


def product_spec(M1: ManifoldSpec, M2: ManifoldSpec) -> ManifoldSpec:
    """Riemannian product with the pulled back forms and the tensor product bundle."""
    m = M1.m + M2.m
    g = [[_const(m, 0.0) for _ in range(m)] for _ in range(m)]
    for a in range(M1.m):
        for b in range(M1.m):
            g[a][b] = lift_function(M1.metric[a][b], m, 0)
    for a in range(M2.m):
        for b in range(M2.m):
            g[M1.m + a][M1.m + b] = lift_function(M2.metric[a][b], m, M1.m)
    r1, r2 = M1.rank, M2.rank
    h = [[None] * (r1 * r2) for _ in range(r1 * r2)]
    for p1 in range(r1):
        for p2 in range(r2):
            for q1 in range(r1):
                for q2 in range(r2):
                    h[p1 * r2 + p2][q1 * r2 + q2] = (lift_function(M1.bundle[p1][q1], m, 0)
                                                     * lift_function(M2.bundle[p2][q2], m, M1.m))
    omega = lift_form(M1.omega, m, 0) + lift_form(M2.omega, m, M1.m)
    return ManifoldSpec(m, g, h, omega, f"{M1.label}x{M2.label}")


def d_im_omega(spec_or_omega) -> Form:
    omega = spec_or_omega.omega if isinstance(spec_or_omega, ManifoldSpec) else spec_or_omega
    if not omega.components:
        return Form.zero(omega.m)
    return imag_part_one_form(omega).d()


def check_del_closed(spec_or_omega, tol: float = 1e-10) -> bool:
    omega = spec_or_omega.omega if isinstance(spec_or_omega, ManifoldSpec) else spec_or_omega
    return omega.partial().is_zero(tol)
