"""Command-line harness: configure a problem, run a method over a sweep of
Krylov dimensions, and emit CSV convergence data plus JSON diagnostics.

Usage:
    sketchmf run --gen conv-diff:n=32,D=1e-3 --fn inv-sqrt --method sgmres \
        --m-max 100 --k 4 --sketch srdct --s 200 --seed 7 \
        --quad-tol 1e-7 --policy two-pass --out curve.csv
    sketchmf compare --config a.cfg --config b.cfg --out merged.csv

Config files are flat key=value text; command-line flags override file
entries, which override defaults. Exit codes: 0 ok, 2 config error,
3 solver error, 4 I/O error.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import ingest, oracles
from .ingest import ProblemSpec, SquaredOperator
from .krylov import arnoldi_build, assemble, condition_estimate_of_state, \
    sketched_ritz, two_pass_assemble, whiten
from .linalg_core import SparseMatrix
from .matfun import FunctionSpec, adapt_quadrature, contour_rule, \
    stieltjes_rule
from .sfom import sfom_closed, sfom_quadrature, sfom_hhat
from .sgmres import _default_z_range, error_estimate, sgmres_solve
from .sketch import make_sketch

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

CSV_COLUMNS = ["m", "error_vs_exact", "error_estimate", "best_approx_error",
               "basis_condition_estimate", "eps_hat", "quad_ell",
               "wall_time_ms", "matvec_count"]

DEFAULTS = {
    "method": "sgmres",
    "fn": "inv-sqrt",
    "m_max": 100,
    "k": 4,
    "sketch": "srdct",
    "s": 0,             # 0 -> 2 * m_max
    "seed": 7,
    "quad_tol": 1e-7,
    "policy": "full",
    "d": 20,
    "record_every": 5,
    "rhs": "ones",
    "out": "curve.csv",
}


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def parse_fn(spec: str) -> FunctionSpec:
    if spec == "inv-sqrt":
        return FunctionSpec("inv-sqrt")
    if spec.startswith("inv-pow:"):
        return FunctionSpec("inv-pow", alpha=float(spec.split(":", 1)[1]))
    if spec == "log1p-over-z":
        return FunctionSpec("log1p-over-z")
    if spec == "exp-neg":
        return FunctionSpec("exp-neg")
    if spec == "sign":
        return FunctionSpec("sign-via-invsqrt")
    raise ConfigError(f"unknown function {spec!r}")


def parse_gen(spec: str):
    """'conv-diff:n=100,D=1e-3' or 'in-degree-laplacian:<edgelist path>'."""
    if spec.startswith("conv-diff:"):
        params = dict(kv.split("=") for kv in spec.split(":", 1)[1].split(","))
        n = int(params.get("n", 100))
        diff = float(params.get("D", 1e-3))
        return ingest.gen_convection_diffusion(n, diff)
    if spec.startswith("in-degree-laplacian:"):
        path = spec.split(":", 1)[1]
        adj = ingest.read_edge_list(path, directed=True)
        return ingest.in_degree_laplacian(adj)
    raise ConfigError(f"unknown generator {spec!r}")


def load_problem(cfg) -> tuple:
    """Returns (operator, post_multiplier_or_None, dense_for_oracle_or_None, b)."""
    if cfg.get("matrix"):
        mat = ingest.read_matrix_market(cfg["matrix"])
    elif cfg.get("edges"):
        mat = ingest.read_edge_list(cfg["edges"], directed=True)
    elif cfg.get("gen"):
        mat = parse_gen(cfg["gen"])
    else:
        raise ConfigError("one of --matrix/--edges/--gen is required")
    n = mat.n_rows
    rhs_spec = cfg.get("rhs", "ones")
    if rhs_spec == "ones":
        spec = ProblemSpec(("gen",), rhs=("ones",))
    elif rhs_spec.startswith("e"):
        spec = ProblemSpec(("gen",), rhs=("unit", int(rhs_spec[1:])))
    else:
        spec = ProblemSpec(("gen",), rhs=("file", rhs_spec))
    b = ingest.build_rhs(spec, n)
    fn = parse_fn(cfg["fn"])
    if fn.kind == "sign-via-invsqrt":
        # Krylov on Q^2 (matrix-free), final result multiplied by Q
        op = SquaredOperator(mat)
        return op, mat, mat, b
    return mat, None, mat, b


def _solver_for(method, fn, cfg, z_range):
    """Returns coeffs_fn(wb, state) -> (coeffs, quad_ell)."""
    quad_tol = float(cfg["quad_tol"])

    if method == "sfom-closed":
        def run(wb, state):
            r = sfom_closed(wb, fn)
            return r.coeffs, None
    elif method == "sfom-quad":
        def run(wb, state):
            if fn.classification == "stieltjes":
                def evaluate(order):
                    return sfom_quadrature(
                        wb, stieltjes_rule(fn, order, z_range)).coeffs
            else:
                def evaluate(order):
                    return sfom_quadrature(
                        wb, contour_rule(fn, sketched_ritz(wb), order)).coeffs
            coeffs, ell = adapt_quadrature(evaluate, 16, 23, quad_tol)
            return coeffs, ell
    elif method == "sgmres":
        def run(wb, state):
            r = sgmres_solve(wb, fn, quad_tol, z_range=z_range)
            return r.coeffs, r.order_final
    else:
        raise ConfigError(f"unknown method {method!r}")
    return run


def run_config(cfg) -> tuple:
    """Execute one run; returns (rows, diagnostics dict)."""
    op, post_mult, oracle_mat, b = load_problem(cfg)
    fn = parse_fn(cfg["fn"])
    method = cfg["method"]
    m_max = int(cfg["m_max"])
    k = int(cfg["k"])
    policy = cfg["policy"]
    d_cadence = int(cfg["d"])
    record_every = int(cfg["record_every"])
    n = op.shape[0] if hasattr(op, "shape") else op.n_rows
    s = int(cfg["s"]) or 2 * m_max
    if s <= m_max and method not in ("fom-oracle", "best-approx"):
        print(f"warning: sketch size s={s} <= m_max={m_max}; "
              "the embedding may be too weak", file=sys.stderr)

    records = list(range(record_every, m_max + 1, record_every))
    if records and records[-1] != m_max:
        records.append(m_max)

    # the inner function for the sign composite is the inverse square root
    inner_fn = FunctionSpec("inv-sqrt") if fn.kind == "sign-via-invsqrt" else fn

    dense = None
    exact = None
    if oracle_mat is not None and n <= oracles.DENSE_LIMIT:
        dense = oracle_mat.to_dense() if hasattr(oracle_mat, "to_dense") \
            else np.asarray(oracle_mat)
        exact = oracles.exact_fab(dense, b, fn)
    best_curve = {}
    if dense is not None and fn.kind != "sign-via-invsqrt":
        curve = oracles.best_approximation_curve(dense, b, fn, records)
        scale = np.linalg.norm(exact)
        best_curve = {m: v / scale for m, v in curve.items()}

    t0 = time.perf_counter()
    rows = []
    diagnostics = {"warnings": [], "method": method}

    if method in ("fom-oracle", "best-approx"):
        if dense is None:
            raise ConfigError(f"{method} needs a dense-size problem")
        inner_dense = dense @ dense if fn.kind == "sign-via-invsqrt" else dense
        for m in records:
            if method == "fom-oracle":
                approx = oracles.full_fom(inner_dense, b, inner_fn, m)
                if post_mult is not None:
                    approx = post_mult.to_scipy() @ approx
                err = np.linalg.norm(approx - exact) / np.linalg.norm(exact)
            else:
                err = oracles.best_approximation_error(inner_dense, b, inner_fn, m) \
                    / np.linalg.norm(exact)
            rows.append({"m": m, "error_vs_exact": err,
                         "best_approx_error": best_curve.get(m),
                         "wall_time_ms": (time.perf_counter() - t0) * 1e3,
                         "matvec_count": m})
        return rows, diagnostics

    sketch = make_sketch(cfg["sketch"], n, s, int(cfg["seed"]))
    build_policy = "window" if policy == "two-pass" else policy
    state = arnoldi_build(op, b, m_max, k, sketch, policy=build_policy)
    m_reached = state.m if not state.breakdown else state.m - 1
    records = [m for m in records if m <= m_reached] or [m_reached]

    wb_max = whiten(state, records[-1])
    z_range = None
    if inner_fn.classification == "stieltjes":
        z_range = _default_z_range(wb_max)
    solver = _solver_for(method, inner_fn, cfg, z_range)

    prev = {}  # recorded m -> coeffs, for iterate-difference estimates
    for m in records:
        wb = whiten(state, m)
        coeffs, quad_ell = solver(wb, state)
        est = None
        earlier = [mp for mp in prev if mp <= m - d_cadence]
        if earlier and state.eps_hat < 1.0:
            est = error_estimate(wb, coeffs, prev[max(earlier)], state.eps_hat)
        prev[m] = coeffs
        err = None
        if exact is not None:
            if policy == "full":
                approx = assemble_prefix(state, coeffs, m)
            else:
                approx = two_pass_assemble(op, b, coeffs, k, m)
            if post_mult is not None:
                approx = post_mult.to_scipy() @ approx
            err = float(np.linalg.norm(approx - exact) / np.linalg.norm(exact))
        cond = condition_estimate_of_state(state, m)
        rows.append({"m": m, "error_vs_exact": err, "error_estimate": est,
                     "best_approx_error": best_curve.get(m),
                     "basis_condition_estimate": cond,
                     "eps_hat": state.eps_hat, "quad_ell": quad_ell,
                     "wall_time_ms": (time.perf_counter() - t0) * 1e3,
                     "matvec_count": state.matvec_count})

    final_wb = whiten(state, records[-1])
    diagnostics["ritz_values"] = [[z.real, z.imag] for z in sketched_ritz(final_wb)]
    diagnostics["eps_hat"] = state.eps_hat
    if quad_ell is not None:
        # negated resolvent poles -t_i, on the same axes as the Ritz values
        if inner_fn.classification == "stieltjes":
            rule = stieltjes_rule(inner_fn, quad_ell, z_range)
        else:
            rule = contour_rule(inner_fn, sketched_ritz(final_wb), quad_ell)
        diagnostics["quad_nodes"] = [[(-t).real, (-t).imag]
                                     for t in rule.nodes]
    if state.embedding_weak:
        diagnostics["warnings"].append("embedding too weak (eps_hat >= 1)")
    return rows, diagnostics


def assemble_prefix(state, coeffs, m):
    from .krylov import accumulate_columns
    return accumulate_columns(state.basis[:m], coeffs)


def write_csv(rows, path, series=None):
    cols = CSV_COLUMNS if series is None else ["series"] + CSV_COLUMNS
    try:
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                vals = []
                if series is not None:
                    vals.append(str(row.get("series", "")))
                for c in CSV_COLUMNS:
                    v = row.get(c)
                    vals.append(str(v) if c in ("m", "matvec_count", "quad_ell")
                                and v is not None else _fmt(v))
                fh.write(",".join(vals) + "\n")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def read_config_file(path) -> dict:
    cfg = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}: bad line {line!r}")
                key, val = line.split("=", 1)
                cfg[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise IOError(f"cannot read {path}: {exc}") from exc
    return cfg


def _merge_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    for key in ("matrix", "edges", "gen", "fn", "method", "m_max", "k",
                "sketch", "s", "seed", "quad_tol", "policy", "d",
                "record_every", "rhs", "out"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _add_run_flags(p):
    p.add_argument("--config")
    p.add_argument("--matrix")
    p.add_argument("--edges")
    p.add_argument("--gen")
    p.add_argument("--fn")
    p.add_argument("--method")
    p.add_argument("--m-max", dest="m_max", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--sketch")
    p.add_argument("--s", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--quad-tol", dest="quad_tol", type=float)
    p.add_argument("--policy", choices=["full", "window", "two-pass"])
    p.add_argument("--d", type=int)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--rhs")
    p.add_argument("--out")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sketchmf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one method, write CSV + JSON")
    _add_run_flags(p_run)
    p_cmp = sub.add_parser("compare", help="run several configs, merge CSVs")
    p_cmp.add_argument("--config", action="append", required=True)
    p_cmp.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            cfg = _merge_config(args)
            rows, diagnostics = run_config(cfg)
            write_csv(rows, cfg["out"])
            json_path = str(cfg["out"]).rsplit(".", 1)[0] + ".json"
            with open(json_path, "w") as fh:
                json.dump(diagnostics, fh, indent=1)
            return EXIT_OK
        # compare
        if not args.config:
            raise ConfigError("compare needs at least one --config")
        merged = []
        problem_keys = None
        for path in args.config:
            cfg = dict(DEFAULTS)
            cfg.update(read_config_file(path))
            key = (cfg.get("matrix"), cfg.get("edges"), cfg.get("gen"),
                   cfg.get("fn"))
            if problem_keys is None:
                problem_keys = key
            elif key != problem_keys:
                raise ConfigError("compare configs must share problem and function")
            rows, _ = run_config(cfg)
            label = cfg.get("label", cfg["method"])
            for row in rows:
                row["series"] = label
            merged.extend(rows)
        write_csv(merged, args.out, series=True)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IOError, ingest.ParseError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
