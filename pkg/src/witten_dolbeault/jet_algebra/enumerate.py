"""Exhaustive enumeration of canonical monomials in a fixed weight."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement, product

from .core import G, H, OMEGA, OMEGABAR, JetVariable, Monomial


class ResourceLimitError(RuntimeError):
    """Requested enumeration is beyond the configured size bounds."""


DEFAULT_BOUNDS = {"weight": 6, "m": 3, "dimE": 2}


def check_bounds(m: int, weight: int, dimE: int, bounds: dict | None = None) -> None:
    b = {**DEFAULT_BOUNDS, **(bounds or {})}
    if m < 1 or weight < 0 or dimE < 1:
        raise ValueError(f"need m >= 1, weight >= 0, dimE >= 1 (got {m}, {weight}, {dimE})")
    if weight > b["weight"] or m > b["m"] or dimE > b["dimE"]:
        raise ResourceLimitError(
            f"(m={m}, weight={weight}, dimE={dimE}) exceeds bounds {b}")


def _multisets(m: int, size: int):
    return list(combinations_with_replacement(range(1, m + 1), size))


@lru_cache(maxsize=None)
def variables_of_weight(m: int, w: int, dimE: int) -> tuple[JetVariable, ...]:
    """All canonical jet variables of weight ``w >= 2``."""
    out: list[JetVariable] = []
    # g: |U| + |V| = w + 2, both >= 2
    for nu in range(2, w + 1):
        nv = w + 2 - nu
        if nv < 2:
            continue
        for U, V in product(_multisets(m, nu), _multisets(m, nv)):
            out.append(JetVariable(G, U, V))
    for nu in range(1, w):
        for U, V in product(_multisets(m, nu), _multisets(m, w - nu)):
            for p, q in product(range(1, dimE + 1), repeat=2):
                out.append(JetVariable(H, U, V, p, q))
    for nu in range(1, w + 1):
        for U, V in product(_multisets(m, nu), _multisets(m, w - nu)):
            out.append(JetVariable(OMEGA, U, V))
    for nu in range(0, w):
        for U, V in product(_multisets(m, nu), _multisets(m, w - nu)):
            out.append(JetVariable(OMEGABAR, U, V))
    return tuple(sorted(out, key=JetVariable.sort_key))


def _xi_choices(m: int, w: int):
    for e in range(w + 1):
        for U in _multisets(m, e):
            for V in _multisets(m, w - e):
                yield U, V


def _factor_multisets(m: int, w: int, dimE: int):
    """Multisets of weight >= 2 variables with total weight ``w``."""
    pool = [v for k in range(2, w + 1) for v in variables_of_weight(m, k, dimE)]

    def rec(start: int, remaining: int, acc: list):
        if remaining == 0:
            yield tuple(acc)
            return
        for i in range(start, len(pool)):
            v = pool[i]
            if v.weight <= remaining:
                acc.append(v)
                yield from rec(i, remaining - v.weight, acc)
                acc.pop()

    yield from rec(0, w, [])


def enumerate_monomials(m: int, weight: int, dimE: int = 1,
                        bounds: dict | None = None) -> list[Monomial]:
    """Every canonical monomial of exactly the given weight, sorted, no duplicates."""
    check_bounds(m, weight, dimE, bounds)
    out = []
    for xi_w in range(weight + 1):
        for factors in _factor_multisets(m, weight - xi_w, dimE):
            for U, V in _xi_choices(m, xi_w):
                out.append(Monomial(factors, U, V))
    return sorted(set(out))
