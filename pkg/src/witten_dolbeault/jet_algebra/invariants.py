"""Unitary invariance, the restriction kernel, and the combinatorial lemmas.

Invariance under ``U(m)`` is reduced to exact linear algebra: a polynomial is
invariant iff it is killed by the infinitesimal generators of the group.  The
diagonal generators force ``deg_a == deg_abar`` on every monomial; the
off-diagonal ones act as derivations that move a single holomorphic index
``a -> b`` (coefficient +1 per slot) or a single anti-holomorphic index
``b -> a`` (coefficient -1 per slot).  Index permutations are added as explicit
constraints even though connectedness of ``U(m)`` already implies them.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .core import (ANTIHOLO, G, H, HOLO, OMEGA, OMEGABAR, JetVariable, Monomial,
                   Polynomial, canonicalize, conj, monomial_variables, restrict)
from .enumerate import check_bounds, enumerate_monomials


class NotInKernelError(ValueError):
    """The polynomial does not restrict to zero."""


# ---------------------------------------------------------------------------
# single index changes


def _replace(seq: tuple[int, ...], pos: int, new: int) -> tuple[int, ...]:
    return seq[:pos] + (new,) + seq[pos + 1:]


def _variable_changes(v: JetVariable, holo: tuple[int, int] | None,
                      anti: tuple[int, int] | None):
    """Yield ``(new_variable, sign)`` for each single slot change of ``v``."""
    if holo is not None:
        src, dst = holo
        for pos, i in enumerate(v.U):
            if i == src:
                yield JetVariable(v.kind, _replace(v.U, pos, dst), v.V, v.p, v.q), 1
    if anti is not None:
        src, dst = anti
        for pos, i in enumerate(v.V):
            if i == src:
                yield JetVariable(v.kind, v.U, _replace(v.V, pos, dst), v.p, v.q), -1


def single_changes(A: Monomial, holo: tuple[int, int] | None,
                   anti: tuple[int, int] | None, *, per_block: bool = False) -> Counter:
    """Signed count of the monomials reached from ``A`` by one slot change.

    ``holo=(a, b)`` changes one holomorphic ``a`` into ``b`` (sign +1);
    ``anti=(c, d)`` changes one anti-holomorphic ``c`` into ``d`` (sign -1).

    With ``per_block=False`` this is the Leibniz rule, i.e. the exact first
    order term of the multilinear index substitution: repeated factors count
    once per occurrence.  With ``per_block=True`` each *distinct* factor (and
    the Xi block) is counted once, slots inside it still counted separately.
    """
    out: Counter = Counter()
    variables = monomial_variables(A)
    if per_block:
        seen, kept = set(), []
        for i, v in enumerate(variables):
            if v.weight == 1 or v not in seen:
                kept.append(i)
                seen.add(v)
        positions = kept
    else:
        positions = range(len(variables))
    for i in positions:
        v = variables[i]
        rest = variables[:i] + variables[i + 1:]
        for w, s in _variable_changes(v, holo, anti):
            out[canonicalize(rest + [w])] += s
    return Counter({k: c for k, c in out.items() if c != 0})


def raising_derivation(A: Monomial, a: int, b: int) -> Counter:
    """Infinitesimal unitary generator: holo ``a -> b`` and antiholo ``b -> -a``."""
    return single_changes(A, (a, b), (b, a))


def apply_derivation(P: Polynomial, a: int, b: int) -> Polynomial:
    out: dict[Monomial, object] = {}
    for A, c in P.terms.items():
        for B, n in raising_derivation(A, a, b).items():
            out[B] = out.get(B, 0) + n * c
    return Polynomial(out)


# ---------------------------------------------------------------------------
# the set B(B) and the expansion coefficient of a rotation


@dataclass(frozen=True)
class BEntry:
    monomial: Monomial
    nu: int


def b_set(B: Monomial, src: int = 1, dst: int = 2) -> list[BEntry]:
    """Monomials ``A`` turning into ``B`` under one change ``src -> dst`` or ``dst' -> src'``.

    ``nu`` counts the slots of each distinct factor (and of Xi) whose change
    produces ``B``: +1 for a holomorphic change, -1 for an anti-holomorphic
    one.  A factor that occurs squared contributes once; see
    :func:`rotation_coefficients` for the true expansion coefficient, which
    multiplies by the factor's exponent.
    """
    candidates = set(single_changes(B, (dst, src), None)) | set(single_changes(B, None, (src, dst)))
    out = []
    for A in sorted(candidates):
        nu = single_changes(A, (src, dst), (dst, src), per_block=True).get(B, 0)
        if nu:
            out.append(BEntry(A, nu))
    return out


def rotation_coefficients(B: Monomial, src: int = 1, dst: int = 2) -> dict[Monomial, int]:
    """Exact coefficient of ``sin(phi) e^{i theta} cos(phi)^(u-1) B`` contributed by each ``A``.

    This is the first-order term in ``phi`` of the rotation mixing ``src`` and
    ``dst`` (multilinear expansion, Leibniz rule over repeated factors).
    """
    candidates = set(single_changes(B, (dst, src), None)) | set(single_changes(B, None, (src, dst)))
    out = {}
    for A in sorted(candidates):
        c = single_changes(A, (src, dst), (dst, src)).get(B, 0)
        if c:
            out[A] = c
    return out


def u_count(B: Monomial, i: int = 1, j: int = 2) -> int:
    """``deg_i + deg_j + deg_ibar + deg_jbar`` of ``B``."""
    return sum(B.degree(k, f) for k in (i, j) for f in (HOLO, ANTIHOLO))


# ---------------------------------------------------------------------------
# finite coordinate changes


def transform(P: Polynomial, matrix) -> Polynomial:
    """Rewrite ``P`` in the coordinates ``d/dw^a = sum_b matrix[a][b] d/dz^b``.

    Holomorphic indices are substituted by rows of ``matrix`` and
    anti-holomorphic ones by the conjugate rows, then every monomial is
    expanded multilinearly.  Entries may be exact or floating point.
    """
    m = len(matrix)
    rows = [[matrix[a][b] for b in range(m)] for a in range(m)]

    @lru_cache(maxsize=None)
    def expand(v: JetVariable) -> tuple[tuple[Monomial, object], ...]:
        acc: dict[tuple, object] = {((), ()): 1}
        for i in v.U:
            nxt: dict[tuple, object] = {}
            for (U, V), c in acc.items():
                for b in range(m):
                    e = rows[i - 1][b]
                    if e != 0:
                        key = (U + (b + 1,), V)
                        nxt[key] = nxt.get(key, 0) + c * e
            acc = nxt
        for j in v.V:
            nxt = {}
            for (U, V), c in acc.items():
                for b in range(m):
                    e = rows[j - 1][b]
                    if e != 0:
                        key = (U, V + (b + 1,))
                        nxt[key] = nxt.get(key, 0) + c * conj(e)
            acc = nxt
        out: dict[Monomial, object] = {}
        for (U, V), c in acc.items():
            M = canonicalize([JetVariable(v.kind, U, V, v.p, v.q)])
            out[M] = out.get(M, 0) + c
        return tuple(out.items())

    result = Polynomial()
    for A, c in P.terms.items():
        acc: dict[Monomial, object] = {Monomial(): c}
        for v in monomial_variables(A):
            nxt: dict[Monomial, object] = {}
            for M, a in acc.items():
                for N, b in expand(v):
                    MN = M * N
                    nxt[MN] = nxt.get(MN, 0) + a * b
            acc = nxt
        result = result + Polynomial(acc)
    return result


# ---------------------------------------------------------------------------
# exact linear algebra


def _to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def _nullspace(rows: list[dict[int, int]], ncols: int) -> list[dict[int, Fraction]]:
    if ncols == 0:
        return []
    data = {i: {j: QQ(v) for j, v in r.items() if v} for i, r in enumerate(rows)}
    data = {i: r for i, r in data.items() if r}
    nrows = max(len(rows), 1)
    M = DomainMatrix(data, (nrows, ncols), QQ)
    ns = M.nullspace().to_sdm()
    out = []
    for i in sorted(ns):
        out.append({j: _to_fraction(v) for j, v in ns[i].items()})
    return out


def _generator_rows(columns: Sequence[Monomial], m: int, dimE: int) -> list[dict[int, int]]:
    col = {A: j for j, A in enumerate(columns)}
    rows: list[dict[int, int]] = []
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            if a == b:
                continue
            images: dict[Monomial, dict[int, int]] = {}
            for j, A in enumerate(columns):
                for B, n in raising_derivation(A, a, b).items():
                    images.setdefault(B, {})[j] = images.get(B, {}).get(j, 0) + n
            rows.extend(images[B] for B in sorted(images))
    # adjacent transpositions generate the symmetric group
    for a in range(1, m):
        perm = {a: a + 1, a + 1: a}
        for j, A in enumerate(columns):
            k = col[A.relabel(perm)]
            if k != j:
                rows.append({j: 1, k: -1})
    for p in range(1, dimE):
        swap = {p: p + 1, p + 1: p}
        for j, A in enumerate(columns):
            k = col[_swap_bundle(A, swap)]
            if k != j:
                rows.append({j: 1, k: -1})
    return rows


def _swap_bundle(A: Monomial, swap: dict[int, int]) -> Monomial:
    fs = tuple(JetVariable(f.kind, f.U, f.V, swap.get(f.p, f.p), swap.get(f.q, f.q))
               if f.kind == H else f for f in A.factors)
    return Monomial(fs, A.xi_holo, A.xi_antiholo)


def _vectors_to_polys(vecs, columns) -> list[Polynomial]:
    return [Polynomial({columns[j]: c for j, c in v.items()}) for v in vecs]


def invariant_basis(m: int, weight: int, dimE: int = 1, bounds: dict | None = None,
                    *, support=None) -> list[Polynomial]:
    """Basis of the invariant polynomials of the given weight in complex dimension ``m``.

    ``support`` optionally restricts the candidate monomials (a predicate on
    :class:`Monomial`); the result is then the invariants supported there.
    """
    check_bounds(m, weight, dimE, bounds)
    columns = [A for A in enumerate_monomials(m, weight, dimE, bounds) if A.is_balanced()]
    if support is not None:
        columns = [A for A in columns if support(A)]
    if m == 1 and dimE == 1:
        # no rotations, permutations or bundle swaps: balance is the only constraint
        vecs = [{j: Fraction(1)} for j in range(len(columns))]
    else:
        vecs = _nullspace(_generator_rows(columns, m, dimE), len(columns))
    return _vectors_to_polys(vecs, columns)


def echelon_basis(polys: Sequence[Polynomial]) -> list[Polynomial]:
    """Reduced row echelon basis of the span of ``polys`` (canonical for comparisons)."""
    mons = sorted({A for P in polys for A in P.terms})
    idx = {A: j for j, A in enumerate(mons)}
    if not mons:
        return []
    data = {i: {idx[A]: QQ(c.numerator, c.denominator) for A, c in P.terms.items()}
            for i, P in enumerate(polys) if P}
    M = DomainMatrix(data, (max(len(polys), 1), len(mons)), QQ)
    R, pivots = M.rref()
    R = R.to_sdm()
    out = []
    for i in sorted(R):
        out.append(Polynomial({mons[j]: _to_fraction(v) for j, v in R[i].items()}))
    return out


def kernel_of_restriction(m: int, weight: int, dimE: int = 1,
                          bounds: dict | None = None) -> list[Polynomial]:
    """Basis of ``ker(r)`` inside the invariants of the given weight."""
    basis = invariant_basis(m, weight, dimE, bounds)
    if not basis:
        return []
    images = [restrict(P, m) for P in basis]
    mons = sorted({A for P in images for A in P.terms})
    row_of = {A: i for i, A in enumerate(mons)}
    rows: list[dict[int, int]] = [dict() for _ in mons]
    for j, P in enumerate(images):
        for A, c in P.terms.items():
            rows[row_of[A]][j] = c
    combos = _nullspace_fraction(rows, len(basis))
    kernel = []
    for v in combos:
        P = Polynomial()
        for j, c in v.items():
            P = P + basis[j].scale(c)
        kernel.append(P)
    return echelon_basis(kernel)


def _nullspace_fraction(rows, ncols):
    data = {i: {j: QQ(c.numerator, c.denominator) for j, c in r.items() if c}
            for i, r in enumerate(rows)}
    data = {i: r for i, r in data.items() if r}
    M = DomainMatrix(data, (max(len(rows), 1), ncols), QQ)
    ns = M.nullspace().to_sdm()
    return [{j: _to_fraction(v) for j, v in ns[i].items()} for i in sorted(ns)]


# ---------------------------------------------------------------------------
# lemma checks


def check_degree_balance(P: Polynomial) -> bool:
    """True iff every monomial has ``deg_a == deg_abar`` for all indices."""
    return all(A.is_balanced() for A in P.terms)


@dataclass
class TwoMonomialReport:
    ok: bool
    counterexample: Monomial | None = None
    pair: tuple[int, int] | None = None
    witness: Monomial | None = None

    def __bool__(self):
        return self.ok


def check_two_monomial_property(P: Polynomial, m: int | None = None) -> TwoMonomialReport:
    """For every ``B`` and ordered index pair, ``|B(B) ∩ P|`` is never exactly one."""
    m = m or P.max_index()
    support = set(P.terms)
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            if a == b:
                continue
            targets = set()
            for A in support:
                targets.update(single_changes(A, (a, b), None))
                targets.update(single_changes(A, None, (b, a)))
            for B in sorted(targets):
                hits = [e.monomial for e in b_set(B, a, b) if e.monomial in support]
                if len(hits) == 1:
                    return TwoMonomialReport(False, B, (a, b), hits[0])
    return TwoMonomialReport(True)


def in_top_weight_space(P: Polynomial) -> bool:
    """Membership in ``B_m + sum omega_a omegabar_b B_m``.

    ``B_m`` is generated by ``g_(ab;cd)``, ``h_(pq;a;b)``, ``omega_(a;b)`` and
    ``omegabar_(a;b)``.
    """
    for A in P.terms:
        for f in A.factors:
            if (len(f.U), len(f.V)) != ((2, 2) if f.kind == G else (1, 1)):
                return False
        if A.has_xi and (len(A.xi_holo), len(A.xi_antiholo)) != (1, 1):
            return False
    return True


def _block_normal_order(A: Monomial, m: int) -> list[int] | None:
    blocks = A.blocks()
    k = min(m, len(blocks))
    need_nonempty = len(blocks) == m
    chosen: list[int] = []

    def ok(i: int, nu: int) -> bool:
        U = blocks[i][0]
        if need_nonempty and not U:
            return False
        return all(x == nu for x in U)

    def rec(nu: int) -> bool:
        if nu > k:
            return True
        for i in range(len(blocks)):
            if i not in chosen and ok(i, nu):
                chosen.append(i)
                if rec(nu + 1):
                    return True
                chosen.pop()
        return False

    return list(chosen) if rec(1) else None


def is_top_weight_normal_form(A: Monomial, m: int) -> bool:
    """``A = g_(11;..)..g_(aa;..) h_(..;a+1;a+1)..omega_(..)..omegabar_(..) Xi``, ``Xi`` in {1, Xi_(m;m)}."""
    by_kind: dict[str, list[JetVariable]] = {k: [] for k in (G, H, OMEGA, OMEGABAR)}
    for f in A.factors:
        if f.weight != 2:
            return False
        by_kind[f.kind].append(f)
    if A.has_xi and (A.xi_holo, A.xi_antiholo) != ((m,), (m,)):
        return False
    gs = by_kind[G]
    a = len(gs)
    if sorted(f.U for f in gs) != [(nu, nu) for nu in range(1, a + 1)]:
        return False
    if any(x > a for f in gs for x in f.V) or any(len(f.V) != 2 for f in gs):
        return False
    start = a
    for kind in (H, OMEGA, OMEGABAR):
        fs = by_kind[kind]
        labels = sorted(f.U for f in fs)
        if labels != [(nu,) for nu in range(start + 1, start + len(fs) + 1)]:
            return False
        if any(f.V != f.U for f in fs):
            return False
        start += len(fs)
    return start + (1 if A.has_xi else 0) == m


@dataclass
class SpecialMonomialReport:
    found: bool
    m: int = 0
    monomial: Monomial | None = None
    length: int | None = None
    block_order: list[int] | None = None
    top_weight_witness: Monomial | None = None
    notes: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.found


def special_monomial(P: Polynomial, n: int | None = None, m: int | None = None
                     ) -> SpecialMonomialReport:
    """Search ``P`` (assumed invariant, in ``ker r``) for the normal-form monomials.

    Looks for a monomial whose index blocks can be ordered as
    ``U_1=(1..1), U_2=(2..2), ...`` with length ``>= m``; when the weight is
    ``2m`` it also looks for the sharper normal form of :func:`is_top_weight_normal_form`.
    Absence means ``P`` is zero or not invariant.
    """
    m = m or P.max_index()
    if m and restrict(P, m):
        raise NotInKernelError("polynomial does not restrict to zero")
    report = SpecialMonomialReport(False, m)
    if not P:
        report.notes.append("zero polynomial: no monomials")
        return report
    weights = P.weights()
    if n is None and len(weights) == 1:
        n = next(iter(weights)) // 2
    for A in P.monomials():
        order = _block_normal_order(A, m)
        if order is not None and A.length >= m:
            report.found = True
            report.monomial, report.length, report.block_order = A, A.length, order
            break
    if n is not None and 2 * n == 2 * m:
        for A in P.monomials():
            if is_top_weight_normal_form(A, m):
                report.top_weight_witness = A
                break
    return report


def block_normal_candidates(P: Polynomial, m: int) -> list[Monomial]:
    return [A for A in P.monomials() if _block_normal_order(A, m) is not None and A.length >= m]


def index_permutations(m: int):
    for perm in permutations(range(1, m + 1)):
        yield dict(zip(range(1, m + 1), perm))
