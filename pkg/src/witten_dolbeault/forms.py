"""Complex differential forms on the flat torus ``T^{2m} = R^{2m} / Z^{2m}``.

Coordinates are ``x^1, y^1, ..., x^m, y^m`` with ``z^a = x^a + i y^a``.
Coefficient functions are finite Fourier series in these coordinates, and a
form is stored in the frame ``dz^I ^ dzbar^J`` with ``I`` and ``J`` sorted.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = ["FourierFunction", "Form", "DimensionMismatchError", "BidegreeError",
           "wedge", "dbar", "partial", "d", "imag_part_one_form", "hodge_star_top",
           "top_coefficient"]


class DimensionMismatchError(ValueError):
    pass


class BidegreeError(ValueError):
    pass


# products of series with more terms than this go through an FFT grid
_DIRECT_PRODUCT_LIMIT = 200_000


def _combine(freqs: np.ndarray, amps: np.ndarray, tol: float = 0.0):
    if len(amps) == 0:
        return freqs.reshape(0, freqs.shape[1]), amps
    uniq, inv = np.unique(freqs, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    out = np.zeros(len(uniq), dtype=complex)
    np.add.at(out, inv, amps)
    keep = np.abs(out) > tol
    return uniq[keep], out[keep]


class FourierFunction:
    """Finite trigonometric sum ``sum_k a_k exp(2 pi i k.(x1, y1, ..., xm, ym))``.

    Parameters
    ----------
    m : int
        Complex dimension; frequency vectors have length ``2m``.
    freqs : array_like of int, shape (K, 2m)
    amps : array_like of complex, shape (K,)
    """

    __slots__ = ("m", "freqs", "amps")

    def __init__(self, m: int, freqs=None, amps=None, *, tol: float = 0.0):
        self.m = int(m)
        if freqs is None:
            freqs = np.zeros((0, 2 * self.m), dtype=np.int64)
            amps = np.zeros(0, dtype=complex)
        freqs = np.asarray(freqs, dtype=np.int64).reshape(-1, 2 * self.m)
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if len(freqs) != len(amps):
            raise ValueError("freqs and amps differ in length")
        self.freqs, self.amps = _combine(freqs, amps, tol)

    # constructors -------------------------------------------------------

    @classmethod
    def constant(cls, m: int, c: complex) -> "FourierFunction":
        return cls(m, np.zeros((1, 2 * m), dtype=np.int64), [c])

    @classmethod
    def from_dict(cls, m: int, amplitudes: Mapping[tuple, complex]) -> "FourierFunction":
        if not amplitudes:
            return cls(m)
        keys = list(amplitudes)
        return cls(m, np.array(keys), np.array([amplitudes[k] for k in keys]))

    @classmethod
    def exp_mode(cls, m: int, k: Iterable[int], c: complex = 1.0) -> "FourierFunction":
        return cls(m, np.array([list(k)]), [c])

    @classmethod
    def cos(cls, m: int, k: Iterable[int], c: float = 1.0) -> "FourierFunction":
        k = np.array(list(k))
        return cls(m, np.stack([k, -k]), [c / 2, c / 2])

    @classmethod
    def sin(cls, m: int, k: Iterable[int], c: float = 1.0) -> "FourierFunction":
        k = np.array(list(k))
        return cls(m, np.stack([k, -k]), [c / 2j, -c / 2j])

    @classmethod
    def from_grid(cls, values: np.ndarray, tol: float = 1e-14) -> "FourierFunction":
        """Interpolating series of samples on the uniform grid ``j/n`` in every coordinate.

        Frequencies are taken in ``-n/2 < k <= n/2`` (the Nyquist mode is
        split symmetrically).  Amplitudes below ``tol * max|a|`` are dropped.
        """
        values = np.asarray(values)
        d = values.ndim
        if d % 2:
            raise DimensionMismatchError("grid must have 2m axes")
        coef = np.fft.fftn(values) / values.size
        freqs_1d = [np.fft.fftfreq(n, 1.0 / n).astype(np.int64) for n in values.shape]
        mesh = np.meshgrid(*freqs_1d, indexing="ij")
        freqs = np.stack([a.reshape(-1) for a in mesh], axis=1)
        amps = coef.reshape(-1)
        # split Nyquist modes so real samples give real series
        for ax, n in enumerate(values.shape):
            if n % 2 == 0:
                ny = freqs[:, ax] == -(n // 2)
                if ny.any():
                    mirrored = freqs[ny].copy()
                    mirrored[:, ax] = n // 2
                    half = amps[ny] / 2
                    amps = amps.copy()
                    amps[ny] = half
                    freqs = np.concatenate([freqs, mirrored])
                    amps = np.concatenate([amps, half])
        scale = np.abs(amps).max() if len(amps) else 0.0
        # frequencies are distinct here, so pruning before combining is safe
        keep = np.abs(amps) > tol * scale
        return cls(d // 2, freqs[keep], amps[keep], tol=tol * scale)

    # basic properties ---------------------------------------------------

    def __len__(self):
        return len(self.amps)

    def max_frequency(self) -> int:
        return int(np.abs(self.freqs).max()) if len(self.amps) else 0

    def mean(self) -> complex:
        zero = np.all(self.freqs == 0, axis=1)
        return complex(self.amps[zero].sum())

    def max_abs(self) -> float:
        return float(np.abs(self.amps).sum()) if len(self.amps) else 0.0

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def prune(self, tol: float) -> "FourierFunction":
        keep = np.abs(self.amps) > tol
        return FourierFunction(self.m, self.freqs[keep], self.amps[keep])

    def as_dict(self) -> dict[tuple, complex]:
        return {tuple(int(x) for x in k): complex(a) for k, a in zip(self.freqs, self.amps)}

    # arithmetic -----------------------------------------------------------

    def _check(self, other: "FourierFunction"):
        if other.m != self.m:
            raise DimensionMismatchError(f"dimension {self.m} vs {other.m}")

    def _coerce(self, other) -> "FourierFunction":
        if isinstance(other, FourierFunction):
            self._check(other)
            return other
        return FourierFunction.constant(self.m, complex(other))

    def __add__(self, other):
        other = self._coerce(other)
        return FourierFunction(self.m, np.concatenate([self.freqs, other.freqs]),
                               np.concatenate([self.amps, other.amps]))

    __radd__ = __add__

    def __neg__(self):
        return FourierFunction(self.m, self.freqs, -self.amps)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, FourierFunction):
            return FourierFunction(self.m, self.freqs, self.amps * complex(other))
        self._check(other)
        if len(self) == 0 or len(other) == 0:
            return FourierFunction(self.m)
        if len(self) * len(other) > _DIRECT_PRODUCT_LIMIT:
            n = 2 * (self.max_frequency() + other.max_frequency()) + 2
            return FourierFunction.from_grid(self.to_grid(n) * other.to_grid(n))
        freqs = (self.freqs[:, None, :] + other.freqs[None, :, :]).reshape(-1, 2 * self.m)
        amps = (self.amps[:, None] * other.amps[None, :]).reshape(-1)
        return FourierFunction(self.m, freqs, amps)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / complex(c))

    def conj(self) -> "FourierFunction":
        return FourierFunction(self.m, -self.freqs, np.conj(self.amps))

    @property
    def real(self) -> "FourierFunction":
        return (self + self.conj()) * 0.5

    @property
    def imag(self) -> "FourierFunction":
        return (self - self.conj()) * (-0.5j)

    # derivatives ------------------------------------------------------------

    def dx(self, a: int) -> "FourierFunction":
        return FourierFunction(self.m, self.freqs, self.amps * 2j * np.pi * self.freqs[:, 2 * (a - 1)])

    def dy(self, a: int) -> "FourierFunction":
        return FourierFunction(self.m, self.freqs, self.amps * 2j * np.pi * self.freqs[:, 2 * a - 1])

    def dz(self, a: int) -> "FourierFunction":
        """``d/dz^a = (d/dx^a - i d/dy^a) / 2``."""
        k, l = self.freqs[:, 2 * (a - 1)], self.freqs[:, 2 * a - 1]
        return FourierFunction(self.m, self.freqs, self.amps * np.pi * 1j * (k - 1j * l))

    def dzbar(self, a: int) -> "FourierFunction":
        """``d/dzbar^a = (d/dx^a + i d/dy^a) / 2``."""
        k, l = self.freqs[:, 2 * (a - 1)], self.freqs[:, 2 * a - 1]
        return FourierFunction(self.m, self.freqs, self.amps * np.pi * 1j * (k + 1j * l))

    def laplacian(self) -> "FourierFunction":
        """Flat ``sum_a (d_xx + d_yy)``."""
        return FourierFunction(self.m, self.freqs,
                               -4 * np.pi ** 2 * (self.freqs ** 2).sum(axis=1) * self.amps)

    # evaluation -------------------------------------------------------------

    def __call__(self, points) -> np.ndarray:
        """Evaluate at points of shape ``(..., 2m)``."""
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 2 * self.m)
        if len(self.amps) == 0:
            return np.zeros(shape, dtype=complex)
        phase = np.exp(2j * np.pi * flat @ self.freqs.T)
        return (phase @ self.amps).reshape(shape)

    def to_grid(self, n: int | tuple[int, ...]) -> np.ndarray:
        """Samples on the grid ``j/n`` in each of the ``2m`` coordinates, exact for ``n > 2 max|k|``
        (and aliased otherwise)."""
        shape = (n,) * (2 * self.m) if np.isscalar(n) else tuple(n)
        arr = np.zeros(shape, dtype=complex)
        if len(self.amps):
            idx = tuple((self.freqs[:, i] % shape[i]) for i in range(2 * self.m))
            np.add.at(arr, idx, self.amps)
        return np.fft.ifftn(arr) * arr.size

    def __repr__(self):
        return f"FourierFunction(m={self.m}, terms={len(self)})"

    def to_json_obj(self) -> dict:
        return {"m": self.m, "freqs": self.freqs.tolist(),
                "re": self.amps.real.tolist(), "im": self.amps.imag.tolist()}

    @classmethod
    def from_json_obj(cls, d: dict) -> "FourierFunction":
        amps = np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)
        return cls(d["m"], np.array(d["freqs"], dtype=np.int64).reshape(-1, 2 * d["m"]), amps)


def _sign_of_sort(keys: list) -> int:
    """Sign of the permutation sorting ``keys`` (0 if a key repeats)."""
    if len(set(keys)) != len(keys):
        return 0
    sign = 1
    keys = list(keys)
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if keys[i] > keys[j]:
                sign = -sign
    return sign


def _basis_product(I1, J1, I2, J2):
    keys = [(0, i) for i in I1] + [(1, j) for j in J1] + [(0, i) for i in I2] + [(1, j) for j in J2]
    s = _sign_of_sort(keys)
    if s == 0:
        return 0, None
    return s, (tuple(sorted(I1 + I2)), tuple(sorted(J1 + J2)))


@dataclass
class Form:
    """Complex differential form ``sum f_{IJ} dz^I ^ dzbar^J`` on ``T^{2m}``."""

    m: int
    components: dict

    def __post_init__(self):
        clean = {}
        for (I, J), f in self.components.items():
            I, J = tuple(I), tuple(J)
            if list(I) != sorted(set(I)) or list(J) != sorted(set(J)):
                raise ValueError(f"index sets must be strictly increasing: {I}, {J}")
            if any(not 1 <= i <= self.m for i in I + J):
                raise DimensionMismatchError(f"index out of range in {(I, J)}")
            if not isinstance(f, FourierFunction):
                f = FourierFunction.constant(self.m, complex(f))
            if f.m != self.m:
                raise DimensionMismatchError("coefficient dimension mismatch")
            if len(f):
                clean[(I, J)] = f
        self.components = clean

    # constructors -------------------------------------------------------

    @classmethod
    def zero(cls, m: int) -> "Form":
        return cls(m, {})

    @classmethod
    def function(cls, f: FourierFunction | complex, m: int | None = None) -> "Form":
        if isinstance(f, FourierFunction):
            return cls(f.m, {((), ()): f})
        return cls(m, {((), ()): FourierFunction.constant(m, f)})

    @classmethod
    def dz(cls, m: int, a: int) -> "Form":
        return cls(m, {((a,), ()): 1.0})

    @classmethod
    def dzbar(cls, m: int, a: int) -> "Form":
        return cls(m, {((), (a,)): 1.0})

    @classmethod
    def dx(cls, m: int, a: int) -> "Form":
        return (cls.dz(m, a) + cls.dzbar(m, a)) * 0.5

    @classmethod
    def dy(cls, m: int, a: int) -> "Form":
        return (cls.dz(m, a) - cls.dzbar(m, a)) * (-0.5j)

    @classmethod
    def real_volume(cls, m: int) -> "Form":
        """``dx^1 ^ dy^1 ^ ... ^ dx^m ^ dy^m``."""
        out = cls.function(1.0, m)
        for a in range(1, m + 1):
            out = out.wedge(cls.dx(m, a)).wedge(cls.dy(m, a))
        return out

    # structure ----------------------------------------------------------

    def bidegrees(self) -> set[tuple[int, int]]:
        return {(len(I), len(J)) for I, J in self.components}

    def degrees(self) -> set[int]:
        return {p + q for p, q in self.bidegrees()}

    def part(self, p: int, q: int | None = None) -> "Form":
        """Bidegree ``(p, q)`` part, or total degree ``p`` part when ``q`` is None."""
        if q is None:
            return Form(self.m, {k: f for k, f in self.components.items()
                                 if len(k[0]) + len(k[1]) == p})
        return Form(self.m, {k: f for k, f in self.components.items()
                             if (len(k[0]), len(k[1])) == (p, q)})

    def coefficient(self, I=(), J=()) -> FourierFunction:
        return self.components.get((tuple(I), tuple(J)), FourierFunction(self.m))

    def max_abs(self) -> float:
        return max((f.max_abs() for f in self.components.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def prune(self, tol: float) -> "Form":
        return Form(self.m, {k: f.prune(tol) for k, f in self.components.items()})

    # algebra --------------------------------------------------------------

    def _check(self, other: "Form"):
        if other.m != self.m:
            raise DimensionMismatchError(f"dimension {self.m} vs {other.m}")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        out = dict(self.components)
        for k, f in other.components.items():
            out[k] = out[k] + f if k in out else f
        return Form(self.m, out)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, c) -> "Form":
        """Multiplication by a scalar or a function (a 0-form)."""
        return Form(self.m, {k: f * c for k, f in self.components.items()})

    __rmul__ = __mul__

    def wedge(self, other: "Form") -> "Form":
        self._check(other)
        out: dict = {}
        for (I1, J1), f in self.components.items():
            for (I2, J2), g in other.components.items():
                s, key = _basis_product(I1, J1, I2, J2)
                if s == 0:
                    continue
                term = f * g if s > 0 else -(f * g)
                out[key] = out[key] + term if key in out else term
        return Form(self.m, out)

    __xor__ = wedge

    def power(self, k: int) -> "Form":
        out = Form.function(1.0, self.m)
        for _ in range(k):
            out = out.wedge(self)
        return out

    def conj(self) -> "Form":
        out = {}
        for (I, J), f in self.components.items():
            s = -1.0 if (len(I) * len(J)) % 2 else 1.0
            out[(J, I)] = f.conj() * s
        return Form(self.m, out)

    # differentials ----------------------------------------------------------

    def dbar(self) -> "Form":
        out = Form.zero(self.m)
        for (I, J), f in self.components.items():
            basis = Form(self.m, {(I, J): 1.0})
            for b in range(1, self.m + 1):
                if b in J:
                    continue
                out = out + Form(self.m, {((), (b,)): f.dzbar(b)}).wedge(basis)
        return out

    def partial(self) -> "Form":
        out = Form.zero(self.m)
        for (I, J), f in self.components.items():
            basis = Form(self.m, {(I, J): 1.0})
            for a in range(1, self.m + 1):
                if a in I:
                    continue
                out = out + Form(self.m, {((a,), ()): f.dz(a)}).wedge(basis)
        return out

    def d(self) -> "Form":
        return self.partial() + self.dbar()

    # serialization --------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {"m": self.m, "components": [
            {"I": list(I), "J": list(J), "f": f.to_json_obj()}
            for (I, J), f in sorted(self.components.items())]}

    @classmethod
    def from_json_obj(cls, d: dict) -> "Form":
        return cls(d["m"], {(tuple(c["I"]), tuple(c["J"])): FourierFunction.from_json_obj(c["f"])
                            for c in d["components"]})

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "Form":
        return cls.from_json_obj(json.loads(s))


def wedge(a: Form, b: Form) -> Form:
    return a.wedge(b)


def dbar(f: Form) -> Form:
    return f.dbar()


def partial(f: Form) -> Form:
    return f.partial()


def d(f: Form) -> Form:
    return f.d()


def imag_part_one_form(omega: Form) -> Form:
    """``Im(omega) = (omega - conj(omega)) / (2i)`` for a ``(1,0)``-form."""
    if omega.components and omega.bidegrees() != {(1, 0)}:
        raise BidegreeError(f"expected a (1,0)-form, got bidegrees {sorted(omega.bidegrees())}")
    return (omega - omega.conj()) * (1 / 2j)


def top_coefficient(f: Form) -> FourierFunction:
    """Coefficient of ``f`` against ``dx^1 ^ dy^1 ^ ... ^ dx^m ^ dy^m``."""
    m = f.m
    if f.components and f.degrees() != {2 * m}:
        raise BidegreeError(f"expected a form of degree {2 * m}, got {sorted(f.degrees())}")
    full = (tuple(range(1, m + 1)), tuple(range(1, m + 1)))
    ref = Form.real_volume(m).coefficient(*full).mean()
    return f.coefficient(*full) * (1.0 / ref)


def hodge_star_top(f: Form, metric=None, grid: int = 32) -> FourierFunction:
    """Scalar ``s`` with ``f = s dvol``.

    Parameters
    ----------
    f : Form
        Form of top degree ``2m``.
    metric : sequence of sequences of FourierFunction or None
        Hermitian matrix ``g_{a bbar} = g(d/dz^a, d/dzbar^b)``; the flat torus
        (``g_{a abar} = 1/2``) when omitted.  The Riemannian volume density
        against ``dx^1 dy^1 ...`` is ``2^m det(g_{a bbar})``.
    grid : int
        Samples per axis used for the pointwise division (non-flat metrics).
    """
    c = top_coefficient(f)
    if metric is None:
        return c
    m = f.m
    vals = np.stack([np.stack([gab.to_grid(grid) for gab in row], axis=-1) for row in metric],
                    axis=-2)
    density = (2 ** m) * np.linalg.det(vals).real
    return FourierFunction.from_grid(c.to_grid(grid) / density)
