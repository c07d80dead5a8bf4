"""Command line interface: ``cdesign {solve,weights,verify,table,glm}``.

Exit codes: 0 ok, 1 parse error, 2 optimization failure, 3 c not
estimable, 4 oracle cannot run on the instance, 5 turning point undefined,
6 certificate failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .design import DesignMeasure
from .elfving import prune_dependent_support, signs_and_weights
from .errors import DesignError, InvalidInputError, OracleInfeasibleError
from .linalg import DEFAULT_TOL, numerical_rank, psi
from .model import (
    PointSetModel,
    PolynomialModel,
    ProblemSpec,
    QuadraticLogisticModel,
    basis_vector,
    glm_transform,
    transform_point,
    turning_point_c,
)
from .optimizer import SolveResult, SolveSettings, solve, solve_glm
from .oracle import GridSpec, lp_elfving, sign_enumeration, weight_grid
from .problemfile import (
    SIG_DIGITS,
    ProblemFile,
    ProblemFileError,
    dump_document,
    load_problem,
    parse_c,
    round_sig,
)

log = logging.getLogger("cdesign")

EXIT_CERT_FAILED = 6
LP_MAX_K = 6
CURVE_SAMPLES = 401


def _fmt(x, digits=SIG_DIGITS) -> str:
    return f"{float(x):.{digits}g}"


# ---------------------------------------------------------------- documents


def _design_dict(design: DesignMeasure) -> dict:
    return {
        "u": None if design.u is None else design.u.tolist(),
        "points": design.points.tolist(),
        "weights": design.weights.tolist(),
    }


def _result_fields(result: SolveResult) -> dict:
    sol = result.solution
    return {
        "design": _design_dict(result.design),
        "signs": sol.signs.astype(int).tolist(),
        "gamma": sol.gamma,
        "elfving_point": sol.elfving_point.tolist(),
        "psi": result.psi,
        "objective_evals": result.objective_evals,
        "best_start": result.best_start,
    }


def _base_doc(command, seed=None) -> dict:
    return {"tool": "cdesign", "version": __version__, "command": command, "seed": seed}


def _design_from_doc(d: dict) -> DesignMeasure:
    return DesignMeasure(np.asarray(d["points"], float), np.asarray(d["weights"], float), d.get("u"))


def _text_report(doc: dict) -> str:
    out = io.StringIO()
    out.write(f"{doc['command']}: psi = {_fmt(doc['psi'], 8)}\n")
    d = doc["design"]
    label = "u" if d["u"] is not None else "point"
    out.write(f"{label:>14}  {'weight':>12}  sign\n")
    for i, p in enumerate(d["weights"]):
        loc = _fmt(d["u"][i], 6) if d["u"] is not None else str(d["points"][i])
        out.write(f"{loc:>14}  {_fmt(p, 6):>12}  {int(doc['signs'][i]):+d}\n")
    if doc.get("certificate"):
        cert = doc["certificate"]
        out.write(f"certificate ({cert['method']}): {'pass' if cert['passed'] else 'FAIL'}, gap {cert['gap']}\n")
    return out.getvalue()


def _csv_report(doc: dict) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    d = doc["design"]
    k = len(d["points"][0])
    w.writerow(["u", "weight", "sign"] + [f"x{i + 1}" for i in range(k)])
    for i, p in enumerate(d["weights"]):
        u = "" if d["u"] is None else _fmt(d["u"][i])
        w.writerow([u, _fmt(p), int(doc["signs"][i])] + [_fmt(v) for v in d["points"][i]])
    return out.getvalue()


def _emit(doc: dict, args, digits=SIG_DIGITS):
    fmt = args.format or "json"
    if fmt == "json":
        text = dump_document(doc, digits)
    elif fmt == "csv":
        text = _csv_report(round_sig(doc, digits))
    else:
        text = _text_report(doc)
    if args.out:
        Path(args.out).write_text(text)
    elif not args.quiet or fmt == "json":
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def _certify(spec: ProblemSpec, design: DesignMeasure, method: str, grid: int | None):
    k = spec.model.k
    checked = psi(design, spec.c, spec.tol)
    if method == "lp":
        if k > LP_MAX_K and not isinstance(spec.model, PointSetModel):
            raise OracleInfeasibleError(
                f"the grid LP is only supported for k <= {LP_MAX_K} (got k = {k}); "
                "monomial coordinates make it ill-conditioned beyond that"
            )
        return lp_elfving(spec, GridSpec(u_points=grid or 2001), solver_psi=checked)
    if method == "signs":
        return sign_enumeration(design.points, spec.c, solver_psi=checked, tol=spec.tol)
    if method == "grid":
        return weight_grid(
            design.points, spec.c, GridSpec(simplex_resolution=grid or 200), solver_psi=checked, tol=spec.tol
        )
    raise InvalidInputError(f"unknown method {method!r}")


def cmd_solve(args) -> int:
    pf = load_problem(args.problem)
    t0 = time.perf_counter()
    spec = pf.spec(seed=args.seed, starts=args.starts)
    doc = _base_doc("solve", spec.settings.seed)
    doc["problem"] = pf.echo()
    if pf.is_logistic:
        glm = solve_glm(
            pf.model["theta_hat"], spec.c, spec.settings, spec.tol, tuple(pf.model.get("domain", (-1, 1)))
        )
        doc.update(_result_fields(glm.result))
        doc["design"] = _design_dict(glm.design)
        doc["transformed"] = _transformed_fields(glm)
        check_spec, check_design = glm.transformed, glm.result.design
    else:
        result = solve(spec)
        doc.update(_result_fields(result))
        check_spec, check_design = spec, result.design
    doc["c"] = spec.c.tolist()
    doc["certificate"] = None
    if args.certify:
        doc["certificate"] = _certify(check_spec, check_design, args.certify, None).as_dict()
    doc["timing"] = {"seconds": time.perf_counter() - t0}
    _emit(doc, args, pf.output["precision"])
    if doc["certificate"] is not None and not doc["certificate"]["passed"]:
        return EXIT_CERT_FAILED
    return 0


def _transformed_fields(glm) -> dict:
    res = glm.result
    return {
        "B": glm.transform.B.tolist(),
        "Bc": glm.transformed.c.tolist(),
        "design": _design_dict(res.design),
        "psi": res.psi,
    }


def _read_support(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(v) for v in re.split(r"[,\s]+", line) if v])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ProblemFileError(f"{path}: support file needs rows of equal length")
    return np.asarray(rows)


def cmd_weights(args) -> int:
    try:
        rows = _read_support(args.support)
    except (OSError, ValueError) as err:
        raise ProblemFileError(f"{args.support}: {err}") from None
    if rows.shape[1] == 1 and (args.k or 0) != 1:
        u = rows[:, 0]
        k = args.k or (len(_split_floats(args.c)) if not args.c.startswith("e") else None)
        if k is None:
            raise ProblemFileError("--k is required with u-valued support files and c = e<j>")
        model = PolynomialModel(k=k, domain=(min(-1.0, u.min()), max(1.0, u.max())))
        X = model.features(u)
        model_echo = {"type": "polynomial", "k": k, "domain": list(model.domain)}
    else:
        u = None
        X = rows
        k = X.shape[1]
        model_echo = {"type": "points", "k": k, "points": X.tolist()}
    c = parse_c(args.c if args.c.startswith("e") else _split_floats(args.c), k)

    tags = np.arange(X.shape[0], dtype=float)
    row_tol = type(DEFAULT_TOL)(np.sqrt(DEFAULT_TOL.rank_tol), DEFAULT_TOL.span_tol, DEFAULT_TOL.merge_tol)
    if numerical_rank(X, row_tol) < X.shape[0]:
        start = DesignMeasure(X, np.full(X.shape[0], 1 / X.shape[0]), tags)
        kept = prune_dependent_support(start, c).u.astype(int)
        dropped = sorted(set(range(X.shape[0])) - set(kept.tolist()))
        names = [_fmt(u[i], 6) if u is not None else str(X[i].tolist()) for i in dropped]
        log.warning("support is linearly dependent; dropped points: %s", ", ".join(names))
        X = X[np.sort(kept)]
        u = None if u is None else u[np.sort(kept)]
    sol = signs_and_weights(X, c)
    design = DesignMeasure(sol.points, sol.weights, u)
    doc = _base_doc("weights")
    doc["problem"] = {"model": model_echo, "c": c.tolist()}
    doc.update(
        {
            "design": _design_dict(design),
            "signs": sol.signs.astype(int).tolist(),
            "gamma": sol.gamma,
            "elfving_point": sol.elfving_point.tolist(),
            "psi": sol.psi,
            "c": c.tolist(),
            "certificate": None,
        }
    )
    _emit(doc, args)
    return 0


def _split_floats(text):
    return [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]


def _spec_from_doc(doc) -> tuple[ProblemSpec, DesignMeasure]:
    problem = doc["problem"]
    model = problem["model"]
    c = np.asarray(doc["c"], float)
    if model["type"] == "logistic":
        t = doc["transformed"]
        g = glm_transform(model["theta_hat"])
        base = QuadraticLogisticModel(domain=tuple(model.get("domain", (-1, 1))), theta_hat=tuple(model["theta_hat"]))
        from .model import transformed_problem

        tp = transformed_problem(g, ProblemSpec(base, c))
        return tp, _design_from_doc(t["design"])
    if model["type"] == "polynomial":
        m = PolynomialModel(k=model["k"], domain=tuple(model.get("domain", (-1, 1))))
    else:
        m = PointSetModel(np.asarray(model["points"], float))
    return ProblemSpec(m, c), _design_from_doc(doc["design"])


def cmd_verify(args) -> int:
    try:
        doc = json.loads(Path(args.result).read_text())
        spec, design = _spec_from_doc(doc)
    except (OSError, ValueError, KeyError, TypeError) as err:
        raise ProblemFileError(f"{args.result}: not a result document ({err})") from None
    design = design.with_weights(design.weights / design.weights.sum())
    cert = _certify(spec, design, args.method, args.grid)
    out = _base_doc("verify")
    out["result_file"] = str(args.result)
    out["certificate"] = cert.as_dict()
    text = dump_document(out)
    if args.out:
        Path(args.out).write_text(text)
    elif not args.quiet:
        sys.stdout.write(text)
    return 0 if cert.passed else EXIT_CERT_FAILED


def _parse_range(text):
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", text)
    if not m:
        raise ProblemFileError(f"--k-range must look like 6..10, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2) or lo)
    if not 1 <= lo <= hi <= 25:
        raise ProblemFileError("--k-range must satisfy 1 <= lo <= hi <= 25")
    return range(lo, hi + 1)


def table_cell(k: int, j: int, settings: SolveSettings) -> dict:
    """Solve one (k, j) cell and lay it out like the published table."""
    try:
        res = solve(ProblemSpec(PolynomialModel(k), basis_vector(j, k)), settings)
    except DesignError as err:
        return {"k": k, "j": j, "status": f"failed: {err}"}
    u, p = res.design.u, res.design.weights
    center = np.abs(u) <= 1e-3
    pos = u > 1e-3
    return {
        "k": k,
        "j": j,
        "psi": res.psi,
        "xi0": float(p[center].sum()),
        "pairs": [(float(a), float(b)) for a, b in zip(u[pos], p[pos])],
        "support": [(float(a), float(b)) for a, b in zip(u, p)],
        "status": "ok",
    }


def table_csv(cells, max_pairs: int) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    header = ["k", "j", "psi", "xi0"]
    for i in range(1, max_pairs + 1):
        header += [f"u{i}", f"p{i}"]
    w.writerow(header + ["support", "status"])
    for cell in cells:
        if cell["status"] != "ok":
            w.writerow([cell["k"], cell["j"]] + [""] * (2 + 2 * max_pairs) + ["", cell["status"]])
            continue
        row = [cell["k"], cell["j"], _fmt(cell["psi"]), _fmt(cell["xi0"])]
        for i in range(max_pairs):
            if i < len(cell["pairs"]):
                row += [_fmt(cell["pairs"][i][0]), _fmt(cell["pairs"][i][1])]
            else:
                row += ["", ""]
        row.append(";".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in cell["support"]))
        row.append("ok")
        w.writerow(row)
    return out.getvalue()


def cmd_table(args) -> int:
    ks = _parse_range(args.k_range)
    settings = SolveSettings(
        starts=args.starts or SolveSettings.starts, seed=args.seed if args.seed is not None else 1
    )
    jobs = [(k, j) for k in ks for j in range(1, k + 1)]
    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            cells = list(pool.map(table_cell, *zip(*jobs), [settings] * len(jobs)))
    else:
        cells = []
        for k, j in jobs:
            t0 = time.perf_counter()
            cells.append(table_cell(k, j, settings))
            log.info("cell k=%d j=%d solved in %.2f s", k, j, time.perf_counter() - t0)
    text = table_csv(cells, max_pairs=(max(ks) + 1) // 2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [c for c in cells if c["status"] != "ok"]
    for c in failed:
        log.error("cell k=%d j=%d %s", c["k"], c["j"], c["status"])
    return 2 if failed else 0


def curve_table(theta_hat, domain=(-1.0, 1.0), samples: int = CURVE_SAMPLES) -> str:
    """CSV of the original curve, its transform and the reflected transform."""
    g = glm_transform(theta_hat)
    u = np.linspace(domain[0], domain[1], samples)
    X = PolynomialModel(3, domain)._map(u)
    G = transform_point(g, X)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["u", "x1", "x2", "x3", "g1", "g2", "g3", "gneg1", "gneg2", "gneg3"])
    for i in range(samples):
        w.writerow([_fmt(u[i])] + [_fmt(v) for v in X[i]] + [_fmt(v) for v in G[i]] + [_fmt(-v) for v in G[i]])
    return out.getvalue()


def cmd_glm(args) -> int:
    theta = np.asarray(args.theta, float)
    if theta.shape != (3,):
        raise ProblemFileError("--theta needs three numbers")
    if args.turning_point:
        c = turning_point_c(theta)
    else:
        c = np.asarray(args.c, float)
    domain = tuple(args.domain)
    settings = SolveSettings(
        starts=args.starts or SolveSettings.starts, seed=args.seed if args.seed is not None else 1
    )
    t0 = time.perf_counter()
    glm = solve_glm(theta, c, settings, domain=domain)
    doc = _base_doc("glm", settings.seed)
    doc["problem"] = {
        "model": {"type": "logistic", "k": 3, "theta_hat": theta.tolist(), "domain": list(domain)},
        "c": c.tolist(),
        "optimizer": {"starts": settings.starts, "seed": settings.seed},
    }
    doc.update(_result_fields(glm.result))
    doc["design"] = _design_dict(glm.design)
    doc["transformed"] = _transformed_fields(glm)
    doc["c"] = c.tolist()
    doc["certificate"] = None
    doc["timing"] = {"seconds": time.perf_counter() - t0}
    if args.emit_curves:
        Path(args.emit_curves).write_text(curve_table(theta, domain))
    _emit(doc, args)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed for the multi-start search")
    common.add_argument("--starts", type=int, default=None, help="number of random starts")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)
    common.add_argument("--quiet", action="store_true", help="suppress non-essential output")

    parser = argparse.ArgumentParser(prog="cdesign", description="c-optimal experimental designs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve a problem file")
    p.add_argument("problem")
    p.add_argument("--certify", choices=("lp", "signs", "grid"), default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("weights", parents=[common], help="optimal weights for a given support")
    p.add_argument("support", help="file with one u value or one vector per line")
    p.add_argument("--c", required=True, help="e<j> or comma-separated vector")
    p.add_argument("--k", type=int, default=None, help="polynomial dimension for u-valued supports")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("verify", parents=[common], help="certify a result document")
    p.add_argument("result")
    p.add_argument("--method", choices=("lp", "signs", "grid"), default="lp")
    p.add_argument("--grid", type=int, default=None, help="LP grid points or weight-lattice resolution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", parents=[common], help="designs for polynomial regression and c = e_j")
    p.add_argument("--k-range", default="6..10")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("glm", parents=[common], help="locally optimal design, quadratic logistic model")
    p.add_argument("--theta", type=float, nargs=3, required=True, metavar=("T1", "T2", "T3"))
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--c", type=float, nargs=3, metavar=("C1", "C2", "C3"))
    grp.add_argument("--turning-point", action="store_true", help="c = (0, -theta3, theta2)")
    p.add_argument("--domain", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--emit-curves", default=None, metavar="PATH")
    p.set_defaults(func=cmd_glm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="cdesign: %(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except DesignError as err:
        print(f"cdesign: error: {err}", file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
