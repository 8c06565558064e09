"""Jet variables, monomials and polynomials of the normalized invariant algebra.

A jet variable is a formal symbol for a derivative of the Kähler metric ``g``,
the bundle metric ``h``, the twisting form ``omega`` or its conjugate, all
evaluated at a basepoint in normalized holomorphic coordinates.  Holomorphic
indices ``U`` and anti-holomorphic indices ``V`` are symmetric within each
group, so they are stored sorted.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

G, H, OMEGA, OMEGABAR = "g", "h", "omega", "omegabar"
KINDS = (G, H, OMEGA, OMEGABAR)
_KIND_RANK = {k: i for i, k in enumerate(KINDS)}

HOLO, ANTIHOLO = "holo", "antiholo"


class MalformedVariableError(ValueError):
    """Raised when raw variable data violates the shape rules of the algebra."""


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class JetVariable:
    """One generator ``g_(U;V)``, ``h_(pq;U;V)``, ``omega_(U;V)`` or ``omegabar_(U;V)``.

    For ``g`` the lists include the two base indices, so ``g_(U;V)`` has
    ``|U| >= 2`` and ``|V| >= 2``.  For ``omega`` the first holomorphic index is
    the form index and for ``omegabar`` the first anti-holomorphic one is.
    """

    kind: str
    U: tuple[int, ...] = ()
    V: tuple[int, ...] = ()
    p: int | None = None
    q: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedVariableError(f"unknown kind {self.kind!r}")
        U = tuple(sorted(int(i) for i in self.U))
        V = tuple(sorted(int(i) for i in self.V))
        if any(i < 1 for i in U + V):
            raise MalformedVariableError("indices start at 1")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        if self.kind == H:
            if self.p is None or self.q is None or self.p < 1 or self.q < 1:
                raise MalformedVariableError("h variables need bundle indices p, q >= 1")
        elif self.p is not None or self.q is not None:
            raise MalformedVariableError(f"{self.kind} variables carry no bundle indices")
        # Pure holomorphic / anti-holomorphic jets of g and h are normalized away.
        if self.kind == G and (len(U) < 2 or len(V) < 2):
            raise MalformedVariableError(f"g needs |U|>=2 and |V|>=2, got U={U} V={V}")
        if self.kind == H and (len(U) < 1 or len(V) < 1):
            raise MalformedVariableError(f"h needs |U|>=1 and |V|>=1, got U={U} V={V}")
        if self.kind == OMEGA and len(U) < 1:
            raise MalformedVariableError("omega needs a form index in U")
        if self.kind == OMEGABAR and len(V) < 1:
            raise MalformedVariableError("omegabar needs a form index in V")

    @property
    def weight(self) -> int:
        n = len(self.U) + len(self.V)
        return n - 2 if self.kind == G else n

    def degree(self, index: int, flavor: str = HOLO) -> int:
        return (self.U if flavor == HOLO else self.V).count(index)

    def sort_key(self):
        return (_KIND_RANK[self.kind], len(self.U) + len(self.V), self.U, self.V,
                self.p or 0, self.q or 0)

    def __lt__(self, other: "JetVariable") -> bool:
        return self.sort_key() < other.sort_key()

    def relabel(self, perm: Mapping[int, int]) -> "JetVariable":
        return JetVariable(self.kind, tuple(perm.get(i, i) for i in self.U),
                           tuple(perm.get(i, i) for i in self.V), self.p, self.q)

    def __str__(self):
        u = "".join(map(str, self.U)) or "-"
        v = "".join(map(str, self.V)) or "-"
        if self.kind == H:
            return f"h({self.p}{self.q}';{u};{v}')"
        return f"{self.kind}({u};{v}')"


def omega1(alpha: int) -> JetVariable:
    """The bare weight-1 variable ``omega_alpha``."""
    return JetVariable(OMEGA, (alpha,), ())


def omegabar1(beta: int) -> JetVariable:
    return JetVariable(OMEGABAR, (), (beta,))


@dataclass(frozen=True)
class Monomial:
    """A product of jet variables in the canonical form ``A = (factors) * Xi``.

    ``factors`` holds the variables of weight >= 2 (with repetition, sorted);
    the weight-1 variables ``omega_a`` and ``omegabar_b`` are collected in
    ``xi_holo`` and ``xi_antiholo``.
    """

    factors: tuple[JetVariable, ...] = ()
    xi_holo: tuple[int, ...] = ()
    xi_antiholo: tuple[int, ...] = ()

    def __post_init__(self):
        for f in self.factors:
            if f.weight < 2:
                raise MalformedVariableError(
                    f"weight-1 variable {f} belongs in Xi; build monomials with canonicalize()")
        object.__setattr__(self, "factors", tuple(sorted(self.factors, key=JetVariable.sort_key)))
        object.__setattr__(self, "xi_holo", tuple(sorted(self.xi_holo)))
        object.__setattr__(self, "xi_antiholo", tuple(sorted(self.xi_antiholo)))

    @property
    def weight(self) -> int:
        return sum(f.weight for f in self.factors) + len(self.xi_holo) + len(self.xi_antiholo)

    @property
    def length(self) -> int:
        return len(self.factors) + (1 if (self.xi_holo or self.xi_antiholo) else 0)

    @property
    def has_xi(self) -> bool:
        return bool(self.xi_holo or self.xi_antiholo)

    def degree(self, index: int, flavor: str = HOLO) -> int:
        xi = self.xi_holo if flavor == HOLO else self.xi_antiholo
        return sum(f.degree(index, flavor) for f in self.factors) + xi.count(index)

    def indices(self) -> set[int]:
        out = set(self.xi_holo) | set(self.xi_antiholo)
        for f in self.factors:
            out.update(f.U)
            out.update(f.V)
        return out

    def max_index(self) -> int:
        return max(self.indices(), default=0)

    def is_balanced(self) -> bool:
        """``deg_a == deg_abar`` for every index ``a``."""
        return all(self.degree(a, HOLO) == self.degree(a, ANTIHOLO) for a in self.indices())

    def blocks(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Index collections ``(U_i; V_i)``: one per factor, then one for Xi."""
        out = [(f.U, f.V) for f in self.factors]
        if self.has_xi:
            out.append((self.xi_holo, self.xi_antiholo))
        return out

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.factors + other.factors, self.xi_holo + other.xi_holo,
                        self.xi_antiholo + other.xi_antiholo)

    def relabel(self, perm: Mapping[int, int]) -> "Monomial":
        return Monomial(tuple(f.relabel(perm) for f in self.factors),
                        tuple(perm.get(i, i) for i in self.xi_holo),
                        tuple(perm.get(i, i) for i in self.xi_antiholo))

    def sort_key(self):
        return (self.weight, tuple(f.sort_key() for f in self.factors),
                self.xi_holo, self.xi_antiholo)

    def __lt__(self, other: "Monomial") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self):
        parts = [str(f) for f in self.factors]
        if self.has_xi:
            u = "".join(map(str, self.xi_holo)) or "-"
            v = "".join(map(str, self.xi_antiholo)) or "-"
            parts.append(f"Xi({u};{v}')")
        return "*".join(parts) or "1"


ONE = Monomial()


def canonicalize(variables: Iterable[JetVariable | Mapping]) -> Monomial:
    """Build the canonical monomial of a product of raw variables.

    Accepts :class:`JetVariable` instances or mappings with keys ``kind``,
    ``U``, ``V`` and optionally ``p``, ``q``.  Weight-1 omega variables are moved
    into the Xi slot.  Idempotent on monomials' factor lists.
    """
    factors, xh, xa = [], [], []
    for raw in variables:
        v = raw if isinstance(raw, JetVariable) else JetVariable(
            raw["kind"], tuple(raw.get("U", ())), tuple(raw.get("V", ())),
            raw.get("p"), raw.get("q"))
        if v.weight == 1 and v.kind == OMEGA:
            xh.append(v.U[0])
        elif v.weight == 1 and v.kind == OMEGABAR:
            xa.append(v.V[0])
        else:
            factors.append(v)
    return Monomial(tuple(factors), tuple(xh), tuple(xa))


def monomial_variables(A: Monomial) -> list[JetVariable]:
    """Inverse of :func:`canonicalize`: the flat list of variables, Xi expanded."""
    return list(A.factors) + [omega1(a) for a in A.xi_holo] + [omegabar1(b) for b in A.xi_antiholo]


def weight(x: JetVariable | Monomial) -> int:
    return x.weight


def degree(x: Monomial, index: int, flavor: str = HOLO, m: int | None = None) -> int:
    """Number of occurrences of ``index`` in the holomorphic or anti-holomorphic slots."""
    if index < 1 or (m is not None and index > m):
        raise DimensionError(f"index {index} out of range 1..{m}")
    if flavor not in (HOLO, ANTIHOLO):
        raise ValueError(f"flavor must be {HOLO!r} or {ANTIHOLO!r}")
    return x.degree(index, flavor)


def _clean(c):
    # sympy Gaussian rationals never compare equal to 0 but are falsy when zero
    return not c


def conj(c):
    """Complex conjugate of an exact or floating coefficient."""
    if hasattr(c, "conjugate"):
        return c.conjugate()
    return type(c)(c.x, -c.y)


@dataclass
class Polynomial:
    """Finite linear combination of canonical monomials with exact coefficients.

    Coefficients are normally :class:`fractions.Fraction`; any exact number
    type with ring arithmetic works (Gaussian rationals included).  Float or
    complex coefficients are accepted for numerical checks only.
    """

    terms: dict[Monomial, object] = field(default_factory=dict)

    def __post_init__(self):
        self.terms = {A: c for A, c in self.terms.items() if not _clean(c)}

    @classmethod
    def monomial(cls, A: Monomial, c=1) -> "Polynomial":
        return cls({A: Fraction(c) if isinstance(c, int) else c})

    @classmethod
    def from_variables(cls, variables: Iterable, c=1) -> "Polynomial":
        return cls.monomial(canonicalize(variables), c)

    def coefficient(self, A: Monomial):
        """``c(A, P)``; zero when ``A`` does not appear."""
        return self.terms.get(A, 0)

    def monomials(self) -> list[Monomial]:
        return sorted(self.terms)

    def __iter__(self) -> Iterator[tuple[Monomial, object]]:
        for A in self.monomials():
            yield A, self.terms[A]

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return (self - other).terms == {}

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.terms)
        for A, c in other.terms.items():
            out[A] = out.get(A, 0) + c
        return Polynomial(out)

    def __neg__(self):
        return Polynomial({A: -c for A, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "Polynomial":
        return Polynomial({A: s * c for A, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        out: dict[Monomial, object] = {}
        for A, a in self.terms.items():
            for B, b in other.terms.items():
                AB = A * B
                out[AB] = out.get(AB, 0) + a * b
        return Polynomial(out)

    __rmul__ = scale

    def weights(self) -> set[int]:
        return {A.weight for A in self.terms}

    def max_index(self) -> int:
        return max((A.max_index() for A in self.terms), default=0)

    def relabel(self, perm: Mapping[int, int]) -> "Polynomial":
        out: dict[Monomial, object] = {}
        for A, c in self.terms.items():
            B = A.relabel(perm)
            out[B] = out.get(B, 0) + c
        return Polynomial(out)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*{A}" for A, c in self)


def restrict(P: Polynomial, m: int) -> Polynomial:
    """Restriction ``r`` from complex dimension ``m`` to ``m - 1``.

    Multiplying a manifold by a flat torus kills every monomial in which the
    top index ``m`` occurs (holomorphically or anti-holomorphically); the other
    monomials are read verbatim in dimension ``m - 1``.
    """
    if m < 1:
        raise DimensionError("cannot restrict below complex dimension 0")
    if P.max_index() > m:
        raise DimensionError(f"polynomial uses index {P.max_index()} > m={m}")
    return Polynomial({A: c for A, c in P.terms.items() if m not in A.indices()})


def count_by_kind(A: Monomial) -> Counter:
    return Counter(f.kind for f in A.factors)
