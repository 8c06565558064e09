"""Command line runner: lemma verification, analytic densities and heat-trace comparisons.

Every command reads an optional JSON config (``--config``); flags override
config values.  Outputs are written to ``--out`` as JSON (sorted keys,
``schema_version``) and CSV.  The exit status is 1 when a tolerance is
violated and 0 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jet_algebra as ja
from .char_forms import index_density
from .forms import FourierFunction, Form
from .geometry import ManifoldSpec, product_spec
from .spectral import (assemble, default_t_grid, fit_coefficients, heat_series,
                       mckean_singer_index, tensor_product)

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "max_error": 2e-2,        # pointwise fitted vs analytic density
    "integrated": 1e-4,       # integral of the fitted index density minus the index
    "lower_order": 1e-6,      # fitted coefficients below the index term
    "constancy": 1e-6,        # spread of the supertrace over the t-grid
    "factorization": 1e-8,    # product density vs product of factor densities
}

DEFAULT_LATTICE = [[1, 2], [1, 4], [2, 2], [2, 4]]


@dataclass
class RunConfig:
    command: str
    manifold: dict | None = None
    factors: list | None = None
    cutoff: int = 24
    t_grid: list | None = None
    grid: int = 32
    lattice: list = field(default_factory=lambda: [list(p) for p in DEFAULT_LATTICE])
    dimE: int = 1
    inject_fault: bool = False
    check_cutoff: int = 3
    out: str = "out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def validate(self):
        bad = {k: v for k, v in self.tolerances.items() if not v > 0}
        if bad:
            raise ValueError(f"tolerances must be positive: {bad}")
        if self.cutoff < 1:
            raise ValueError("cutoff must be positive")

    def ts(self) -> np.ndarray:
        if self.t_grid is None:
            return default_t_grid()
        if isinstance(self.t_grid, dict):
            return default_t_grid(self.t_grid["lo"], self.t_grid["hi"], self.t_grid.get("num", 12))
        return np.asarray(self.t_grid, dtype=float)


# ---------------------------------------------------------------------------
# manifold descriptions


def _fourier_from_terms(m: int, terms) -> FourierFunction:
    """``[{"freq": [..], "re": a, "im": b}, ...]`` to a FourierFunction."""
    if not terms:
        return FourierFunction(m)
    freqs = [t["freq"] for t in terms]
    amps = [t.get("re", 0.0) + 1j * t.get("im", 0.0) for t in terms]
    return FourierFunction(m, np.array(freqs), np.array(amps))


def spec_from_config(obj: dict) -> ManifoldSpec:
    """Full ManifoldSpec JSON (has ``metric``) or the torus shorthand.

    Shorthand: ``{"m": 1, "phi": terms, "omega": terms, "psi": terms}`` gives
    the metric ``e^{2 phi}(dx^2 + dy^2)``, ``omega = w dz`` with ``w`` from
    ``terms`` and the line bundle metric ``h = e^{-psi}``.
    """
    if "metric" in obj:
        return ManifoldSpec.from_json_obj(obj)
    m = obj.get("m", 1)
    omega = None
    if obj.get("omega"):
        if m != 1:
            raise ValueError("shorthand omega is for surfaces; use products for higher m")
        omega = Form(1, {((1,), ()): _fourier_from_terms(1, obj["omega"])})
    phi = _fourier_from_terms(m, obj.get("phi"))
    if len(phi):
        spec = ManifoldSpec.conformal(phi, omega, label=obj.get("label", "conformal"))
    else:
        spec = ManifoldSpec.flat(m, omega, label=obj.get("label", "flat"))
    psi = _fourier_from_terms(m, obj.get("psi"))
    if len(psi):
        grid = 64
        spec.bundle = [[FourierFunction.from_grid(np.exp(-psi.to_grid(grid).real))]]
    return spec


def _load_specs(cfg: RunConfig) -> list[ManifoldSpec]:
    if cfg.factors:
        return [spec_from_config(f) for f in cfg.factors]
    if cfg.manifold is None:
        raise ValueError("config needs 'manifold' or 'factors'")
    return [spec_from_config(cfg.manifold)]


# ---------------------------------------------------------------------------
# output


def write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"cannot serialize {type(x)}")


def write_csv(path: Path, header: list[str], rows) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.12e}" if isinstance(v, float) else v for v in r])
            n += 1
    return n


def _grid_rows(values: np.ndarray, *more: np.ndarray):
    grid = values.shape[0]
    for idx in np.ndindex(values.shape):
        coords = [i / grid for i in idx]
        yield coords + [float(values[idx])] + [float(a[idx]) for a in more]


def _coord_names(dim: int) -> list[str]:
    if dim == 2:
        return ["x", "y"]
    return [f"{c}{a}" for a in range(1, dim // 2 + 1) for c in ("x", "y")]


# ---------------------------------------------------------------------------
# commands


def verify_lemmas(lattice, dimE: int = 1, inject_fault: bool = False) -> dict:
    """Run the invariant-theory checks over a list of ``(m, weight)`` pairs."""
    results = []
    for m, w in lattice:
        entry = {"m": m, "weight": w, "dimE": dimE}
        try:
            basis = ja.invariant_basis(m, w, dimE)
            kernel = ja.kernel_of_restriction(m, w, dimE)
        except ja.ResourceLimitError as exc:
            entry.update(status="skipped", reason=str(exc))
            results.append(entry)
            continue
        if inject_fault and basis:
            P = basis[0]
            drop = P.monomials()[0]
            basis = [ja.Polynomial({A: c for A, c in P.terms.items() if A != drop})] + basis[1:]
        entry["basis_dim"] = len(basis)
        entry["kernel_dim"] = len(kernel)
        checks = {}
        checks["degree_balance"] = all(ja.check_degree_balance(P) for P in basis)
        two = [ja.check_two_monomial_property(P, m) for P in basis]
        checks["two_monomial"] = all(two)
        bad = next((r for r in two if not r), None)
        if bad is not None:
            entry["two_monomial_counterexample"] = {
                "B": str(bad.counterexample), "pair": list(bad.pair), "only_monomial": str(bad.witness)}
        if w < 2 * m:
            checks["kernel_vanishes_below_top_weight"] = not kernel
        witnesses = []
        for P in kernel:
            rep = ja.special_monomial(P, m=m)
            item = {"block_normal_form": str(rep.monomial) if rep.found else None,
                    "length": rep.length}
            if w == 2 * m:
                item["top_weight_normal_form"] = str(rep.top_weight_witness) if rep.top_weight_witness else None
                item["in_restricted_algebra"] = ja.in_top_weight_space(P)
            witnesses.append(item)
        checks["block_normal_form"] = all(x["block_normal_form"] for x in witnesses)
        if w == 2 * m:
            checks["top_weight_normal_form"] = all(x["top_weight_normal_form"] for x in witnesses)
            checks["kernel_in_restricted_algebra"] = all(x["in_restricted_algebra"] for x in witnesses)
        entry["checks"] = checks
        entry["kernel_witnesses"] = witnesses
        entry["status"] = "pass" if all(checks.values()) else "fail"
        results.append(entry)
    return {"results": results, "passed": all(r["status"] != "fail" for r in results)}


def _density_grid(spec: ManifoldSpec, grid: int) -> np.ndarray:
    return index_density(spec).to_grid(grid).real


def run_density(cfg: RunConfig) -> tuple[dict, bool]:
    specs = _load_specs(cfg)
    spec = specs[0] if len(specs) == 1 else product_spec(*specs)
    grid = cfg.grid if spec.m == 1 else min(cfg.grid, 16)
    dens = index_density(spec)
    vals = dens.to_grid(grid).real
    out = Path(cfg.out)
    rows = write_csv(out / "density.csv", _coord_names(2 * spec.m) + ["density"], _grid_rows(vals))
    doc = {"command": "density", "m": spec.m, "grid": grid, "rows": rows,
           "integral": float(dens.mean().real),
           "fourier": dens.to_json_obj()}
    write_json(out / "density.json", doc)
    return doc, True


def _complex_for(specs: list[ManifoldSpec], N: int):
    if len(specs) == 1:
        return assemble(specs[0], N)
    return tensor_product(assemble(specs[0], N), assemble(specs[1], N))


def run_heat(cfg: RunConfig) -> tuple[dict, bool]:
    specs = _load_specs(cfg)
    gc = _complex_for(specs, cfg.cutoff)
    series = heat_series(gc, cfg.ts(), grid=None)
    index, spread = mckean_singer_index(gc, cfg.ts())
    fit = fit_coefficients(series)
    out = Path(cfg.out)
    write_csv(out / "heat.csv", ["t", "supertrace"],
              ([float(t), float(s)] for t, s in zip(series.t, series.supertrace)))
    tol = cfg.tolerances
    lower = [abs(c) for c in fit.coefficients[:gc.m // 2]]
    passed = {"constancy": spread <= tol["constancy"],
              "lower_order": all(c <= tol["lower_order"] for c in lower)}
    doc = {"command": "heat", "cutoff": cfg.cutoff, "index": index, "supertrace_spread": spread,
           "coefficients": fit.coefficients, "powers": fit.powers, "residual": fit.residual,
           "condition": fit.condition, "tolerances": tol, "passed": passed}
    write_json(out / "heat.json", doc)
    return doc, all(passed.values())


def run_compare(cfg: RunConfig) -> tuple[dict, bool]:
    specs = _load_specs(cfg)
    gc = _complex_for(specs, cfg.cutoff)
    spec = specs[0] if len(specs) == 1 else product_spec(*specs)
    grid = cfg.grid if spec.m == 1 else min(cfg.grid, 16)
    ts = cfg.ts()
    series = heat_series(gc, ts, grid)
    fit = fit_coefficients(series, pointwise=True)
    top = gc.m // 2
    fitted = fit.coefficients[top]
    analytic = _density_grid(spec, grid)
    err = np.abs(fitted - analytic)
    vol = gc.volume_on_grid(grid)
    integral = float((fitted * vol).mean())
    index, spread = mckean_singer_index(gc, ts)
    lower = max((float(np.abs(c).max()) for c in fit.coefficients[:top]), default=0.0)
    lower_int = max((abs(c) for c in fit_coefficients(series).coefficients[:top]), default=0.0)
    tol = cfg.tolerances
    passed = {"max_error": float(err.max()) <= tol["max_error"],
              "integrated": abs(integral - index) <= tol["integrated"],
              "constancy": spread <= tol["constancy"],
              "lower_order": lower_int <= tol["lower_order"]}
    doc = {"command": "compare", "cutoff": cfg.cutoff, "grid": grid, "t_grid": ts,
           "max_error": float(err.max()), "mean_error": float(err.mean()),
           "integrated_density": integral, "index": index, "supertrace_spread": spread,
           "lower_order_pointwise_max": lower, "lower_order_integrated_max": lower_int,
           "fit_residual": fit.residual, "fit_condition": fit.condition}
    if len(specs) == 2:
        doc["factorization_residual"] = _factorization_residual(gc, ts, grid)
        passed["factorization"] = doc["factorization_residual"] <= tol["factorization"]
    doc["tolerances"] = tol
    doc["passed"] = passed
    out = Path(cfg.out)
    rows = write_csv(out / "compare.csv", _coord_names(gc.m) + ["fitted", "analytic", "abs_error"],
                     _grid_rows(fitted, analytic, err))
    doc["rows"] = rows
    write_json(out / "compare.json", doc)
    return doc, all(passed.values())


def _factorization_residual(pc, ts, grid: int) -> float:
    """Product density against the outer product of the factor supertrace densities."""
    prod = pc.densities(ts, grid)
    r1 = pc.first.densities(ts, grid)
    r2 = pc.second.densities(ts, grid)
    return float(np.abs(prod - r1[:, :, :, None, None] * r2[:, None, None, :, :]).max())


def run_product_check(cfg: RunConfig) -> tuple[dict, bool]:
    specs = _load_specs(cfg)
    if len(specs) != 2:
        raise ValueError("product-check needs two 'factors'")
    small = tensor_product(assemble(specs[0], cfg.check_cutoff), assemble(specs[1], cfg.check_cutoff))
    ops = small.explicit_operators()
    nil = float(abs(ops["d"][1] @ ops["d"][0]).max())
    lap = max(float(abs(a - b).max()) for a, b in zip(ops["laplacian"], small.blockwise_laplacians()))
    ts = cfg.ts()
    dgrid = 6
    explicit = small.explicit_densities(ts, dgrid)
    factored = small.densities(ts, dgrid)
    outer = small.first.densities(ts, dgrid)[:, :, :, None, None] * \
        small.second.densities(ts, dgrid)[:, None, None, :, :]
    dens_res = float(max(np.abs(explicit - factored).max(), np.abs(explicit - outer).max()))
    big = _complex_for(specs, cfg.cutoff)
    st = np.array([big.supertrace(t) for t in ts])
    st1 = np.array([big.first.supertrace(t) for t in ts])
    st2 = np.array([big.second.supertrace(t) for t in ts])
    str_res = float(np.abs(st - st1 * st2).max())
    tol = cfg.tolerances["factorization"]
    passed = {"nilpotency": nil <= tol, "laplacian": lap <= tol,
              "density_factorization": dens_res <= tol, "supertrace_factorization": str_res <= tol}
    doc = {"command": "product-check", "check_cutoff": cfg.check_cutoff, "cutoff": cfg.cutoff,
           "nilpotency_residual": nil, "laplacian_residual": lap,
           "density_factorization_residual": dens_res, "supertrace_factorization_residual": str_res,
           "tolerance": tol, "passed": passed}
    write_json(Path(cfg.out) / "product_check.json", doc)
    return doc, all(passed.values())


def run_verify_lemmas(cfg: RunConfig) -> tuple[dict, bool]:
    doc = verify_lemmas(cfg.lattice, cfg.dimE, cfg.inject_fault)
    doc["command"] = "verify-lemmas"
    write_json(Path(cfg.out) / "lemmas.json", doc)
    return doc, doc["passed"]


COMMANDS = {
    "verify-lemmas": run_verify_lemmas,
    "density": run_density,
    "heat": run_heat,
    "compare": run_compare,
    "product-check": run_product_check,
}


def _parse_tolerance(s: str) -> tuple[str, float]:
    if "=" not in s:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {s!r}")
    k, v = s.split("=", 1)
    return k.strip(), float(v)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="witten-dolbeault", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--cutoff", type=int, help="Fourier cutoff N per axis")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--tolerance", type=_parse_tolerance, action="append", default=[],
                        metavar="KEY=VALUE", help="override a tolerance (repeatable)")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config is not None:
        raw = json.loads(Path(args.config).read_text())
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(raw.pop("tolerances", {}))
    raw.pop("schema_version", None)
    raw.pop("command", None)
    cfg = RunConfig(command=args.command, tolerances=tolerances, **raw)
    if args.cutoff is not None:
        cfg.cutoff = args.cutoff
    if args.out is not None:
        cfg.out = str(args.out)
    for k, v in args.tolerance:
        cfg.tolerances[k] = v
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args)
    doc, ok = COMMANDS[cfg.command](cfg)
    status = "PASS" if ok else "FAIL"
    print(f"{cfg.command}: {status} (outputs in {cfg.out})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
