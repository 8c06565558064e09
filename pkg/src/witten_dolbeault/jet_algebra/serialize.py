"""JSON form of monomials, polynomials and polynomial bases.

Schema (``schema_version`` 1)::

    {"schema_version": 1, "m": 2, "weight": 4, "dimE": 1,
     "polynomials": [[{"coefficient": "1/2", "monomial": {...}}, ...], ...]}

A monomial is ``{"factors": [{"kind", "U", "V", "p", "q"}, ...],
"xi_holo": [...], "xi_antiholo": [...]}``.  Coefficients are exact strings:
``"a/b"`` for rationals and ``"a/b+c/d i"`` for Gaussian rationals.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction

from sympy import QQ_I

from .core import JetVariable, Monomial, Polynomial

SCHEMA_VERSION = 1

_GAUSS = re.compile(r"^\s*([+-]?\d+(?:/\d+)?)\s*([+-])\s*(\d+(?:/\d+)?)\s*i\s*$")


def format_coefficient(c) -> str:
    if hasattr(c, "x") and hasattr(c, "y"):
        re_, im = Fraction(int(c.x.numerator), int(c.x.denominator)), \
            Fraction(int(c.y.numerator), int(c.y.denominator))
        if im == 0:
            return _frac(re_)
        sign = "-" if im < 0 else "+"
        return f"{_frac(re_)}{sign}{_frac(abs(im))} i"
    return _frac(Fraction(c))


def _frac(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def parse_coefficient(s: str):
    m = _GAUSS.match(s)
    if m is None:
        return Fraction(s.strip())
    re_, im = Fraction(m.group(1)), Fraction(m.group(3))
    if m.group(2) == "-":
        im = -im
    if im == 0:
        return re_
    return QQ_I(QQ_I.dom(re_.numerator, re_.denominator), QQ_I.dom(im.numerator, im.denominator))


def variable_to_dict(v: JetVariable) -> dict:
    return {"kind": v.kind, "U": list(v.U), "V": list(v.V), "p": v.p, "q": v.q}


def monomial_to_dict(A: Monomial) -> dict:
    return {"factors": [variable_to_dict(f) for f in A.factors],
            "xi_holo": list(A.xi_holo), "xi_antiholo": list(A.xi_antiholo)}


def monomial_from_dict(d: dict) -> Monomial:
    fs = tuple(JetVariable(f["kind"], tuple(f["U"]), tuple(f["V"]), f.get("p"), f.get("q"))
               for f in d.get("factors", []))
    return Monomial(fs, tuple(d.get("xi_holo", [])), tuple(d.get("xi_antiholo", [])))


def polynomial_to_list(P: Polynomial) -> list[dict]:
    return [{"coefficient": format_coefficient(P.terms[A]), "monomial": monomial_to_dict(A)}
            for A in P.monomials()]


def polynomial_from_list(items: list[dict]) -> Polynomial:
    out = {}
    for it in items:
        A = monomial_from_dict(it["monomial"])
        out[A] = out.get(A, 0) + parse_coefficient(it["coefficient"])
    return Polynomial(out)


def basis_to_json(polys, **meta) -> str:
    doc = {"schema_version": SCHEMA_VERSION, **meta,
           "polynomials": [polynomial_to_list(P) for P in polys]}
    return json.dumps(doc, sort_keys=True, indent=2)


def basis_from_json(text: str) -> tuple[list[Polynomial], dict]:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    polys = [polynomial_from_list(items) for items in doc["polynomials"]]
    meta = {k: v for k, v in doc.items() if k not in ("polynomials", "schema_version")}
    return polys, meta
