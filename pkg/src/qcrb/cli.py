"""Command-line surface: analyze, bound, boundary, pvm, simulate, oracle.

Reports are JSON with 17-significant-digit floats; curves and samples are
CSV. Errors print a machine-readable JSON object to stderr and exit with
2 (schema/domain), 3 (model), 4 (oracle), or 5 (unsupported).
"""

import argparse
import json
import sys

import numpy as np

from . import __version__, analysis, matkernel, measurement, reportio
from . import errors
from . import model as model_mod
from . import oracle as oracle_mod


def _exit_code(exc):
    if isinstance(exc, (errors.SchemaError, errors.DomainError,
                        errors.SingularWeight)):
        return 2
    if isinstance(exc, (errors.Infeasible, errors.NonConvergence)):
        return 4
    if isinstance(exc, errors.NotSupported):
        return 5
    if isinstance(exc, errors.QcrbError):
        return 3
    return 1


def _load_json(path, what):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise errors.SchemaError(f"{what} file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise errors.SchemaError(f"{what} is not valid JSON: {exc}") from exc


def _resolve_weight(spec_str, fd):
    if spec_str is None or spec_str == "identity":
        return np.eye(fd.JS.shape[0]), "identity"
    if spec_str == "sld":
        return fd.JS.copy(), "sld"
    doc = _load_json(spec_str, "weight")
    try:
        g = np.asarray(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise errors.SchemaError("weight file must hold a numeric matrix") from exc
    m = fd.JS.shape[0]
    if g.shape != (m, m):
        raise errors.SchemaError(f"weight shape {g.shape} does not match m = {m}")
    g = matkernel.symmetrize(g)
    if not matkernel.is_psd(g):
        raise errors.DomainError("weight matrix must be PSD")
    return g, spec_str


def _model_and_point(args):
    doc = _load_json(args.config, "config")
    model = model_mod.model_from_config(doc)
    if model.theta0 is None:
        raise errors.SchemaError("config must carry a working point 'theta'")
    frame = model_mod.tangent_frame(model, model.theta0)
    fd = model_mod.fisher_data(frame)
    return doc, model, frame, fd


def _bound_report_obj(rep):
    return {
        "G": rep.G,
        "value": rep.value,
        "attained": rep.attained,
        "V_opt": rep.V_opt,
        "method": rep.method,
        "notes": rep.notes,
    }


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _base_report(command, doc, model, args):
    seed = getattr(args, "seed", None)
    return {
        "tool": "qcrb",
        "version": __version__,
        "command": command,
        "seed": 0 if seed is None else seed,
        "config": doc,
        "model": model.label,
        "theta": model.theta0,
    }


def cmd_analyze(args):
    doc, model, frame, fd = _model_and_point(args)
    spec = analysis.beta_spectrum(fd)
    rep = _base_report("analyze", doc, model, args)
    rep.update({
        "JS": fd.JS,
        "Jt": fd.Jt,
        "betas": spec.betas,
        "classification": spec.classification,
        "quasi_classical": analysis.quasi_classical_test(fd),
        "coherent": analysis.coherent_test(fd),
    })
    _emit(reportio.dumps(rep), args.out)
    return 0


def cmd_bound(args):
    doc, model, frame, fd = _model_and_point(args)
    g, wname = _resolve_weight(args.weight, fd)
    opts = dict(doc.get("oracle", {}))
    if args.seed is not None:
        opts["seed"] = args.seed
    bound = analysis.cr_bound(fd, g, oracle_options=opts)
    rep = _base_report("bound", doc, model, args)
    rep["weight"] = wname
    rep["bound"] = _bound_report_obj(bound)
    code = 0
    if args.oracle and bound.method != "oracle":
        problem = oracle_mod.OracleProblem(gram=fd.gram, G=g, **opts)
        result = oracle_mod.minimize(problem)
        diff = abs(result.value - bound.value)
        rep["oracle"] = {
            "value": result.value,
            "residuals": result.residuals,
            "difference": diff,
            "agreement": bool(diff <= 1e-4),
        }
        if diff > 1e-4:
            rep["DISAGREEMENT"] = True
            code = 4
    _emit(reportio.dumps(rep), args.out)
    if code:
        _error_json(errors.ConsistencyError(
            f"closed form and oracle disagree by {rep['oracle']['difference']!r}"), code)
    return code


def cmd_boundary(args):
    g = None
    if args.config:
        doc, model, frame, fd = _model_and_point(args)
        if fd.JS.shape[0] != 2:
            raise errors.DomainError("boundary curve requires a two-parameter model")
        beta = float(analysis.beta_spectrum(fd).betas[0])
        if args.weight is not None:
            g, _ = _resolve_weight(args.weight, fd)
            w = matkernel.invsqrt_psd(fd.JS)
            g = matkernel.symmetrize(w @ g @ w)
    elif args.beta is not None:
        beta = args.beta
        if args.weight is not None:
            if args.weight in ("identity", "sld"):
                g = np.eye(2)
            else:
                g = matkernel.symmetrize(np.asarray(
                    _load_json(args.weight, "weight"), dtype=float))
    else:
        raise errors.SchemaError("boundary needs --config or --beta")
    curve = analysis.boundary_2param(beta, count=args.samples,
                                     x_window=(args.window[0], args.window[1]))
    header = ["x", "z", "u", "v"]
    rows = curve.samples
    if g is not None:
        gvals, _ = np.linalg.eigh(g)
        tr = gvals[0] * rows[:, 2] + gvals[1] * rows[:, 3]
        rows = np.column_stack([rows, tr])
        header.append("trGV")
    _emit(reportio.csv_rows(header, rows), args.out)
    return 0


def cmd_pvm(args):
    doc, model, frame, fd = _model_and_point(args)
    g, wname = _resolve_weight(args.weight, fd)
    spec = analysis.beta_spectrum(fd)
    if spec.classification == "quasi_classical" or fd.JS.shape[0] == 1:
        ev = measurement.optimal_vectors_quasi_classical(frame, fd)
        space = frame
        closed = analysis.cr_bound(fd, g)
    elif spec.classification == "coherent":
        nf = measurement.naimark_frame(fd, theta=model.theta0)
        ev = measurement.optimal_vectors_coherent(nf, fd, g)
        space = nf
        closed = analysis.cr_bound_coherent(fd, g)
    else:
        raise errors.NotSupported(
            "no closed-form optimal measurement for generic multi-parameter models")
    pvm = measurement.pvm_from_vectors(ev, seed=args.seed or 0)
    v, unbiased = measurement.covariance_of_pvm(pvm, space)
    probs = measurement.outcome_probabilities(pvm, space.phi)
    rep = _base_report("pvm", doc, model, args)
    rep.update({
        "weight": wname,
        "classification": spec.classification,
        "closed_form_value": closed.value,
        "verification": {
            "algebra_residuals": measurement.pvm_algebra_residuals(pvm),
            "unbiased": unbiased,
            "covariance": v,
            "trGV": float(np.sum(g * v)),
            "probabilities": probs,
        },
        "pvm": measurement.pvm_to_obj(pvm, theta=model.theta0),
    })
    _emit(reportio.dumps(rep), args.out)
    return 0


def cmd_simulate(args):
    doc, model, frame, fd = _model_and_point(args)
    pvm_doc = _load_json(args.pvm, "pvm")
    if isinstance(pvm_doc, dict) and "pvm" in pvm_doc:
        pvm_doc = pvm_doc["pvm"]
    m = fd.JS.shape[0]
    pvm = measurement.pvm_from_obj(pvm_doc, m, theta=model.theta0)
    if pvm.dim == model.dim:
        space = frame
    elif pvm.dim == 2 * m + 1:
        space = measurement.naimark_frame(fd, theta=model.theta0)
    else:
        raise errors.SchemaError(
            f"PVM dimension {pvm.dim} matches neither the model ({model.dim}) "
            f"nor the embedding ({2 * m + 1})")
    result = measurement.sample_outcomes(pvm, space, args.samples, args.seed or 0)
    summary = _base_report("simulate", doc, model, args)
    summary["count"] = result.count
    summary["analytic_covariance"] = result.analytic_cov
    if result.count == 0:
        summary["insufficient_data"] = True
    else:
        theta = np.asarray(model.theta0, dtype=float)
        se_mean = np.sqrt(np.diag(result.analytic_cov) / result.count)
        summary["empirical_mean"] = result.mean
        summary["empirical_covariance"] = result.cov
        summary["z_mean"] = (result.mean - theta) / se_mean
        va = result.analytic_cov
        se_cov = np.sqrt((np.outer(np.diag(va), np.diag(va)) + va * va)
                         / result.count)
        summary["z_cov"] = (result.cov - va) / se_cov
    if args.out:
        header = [f"outcome_{i + 1}" for i in range(m)]
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(reportio.csv_rows(header, result.samples))
        summary["csv"] = args.out
    sys.stdout.write(reportio.dumps(summary))
    return 0


def cmd_oracle(args):
    doc, model, frame, fd = _model_and_point(args)
    g, wname = _resolve_weight(args.weight, fd)
    opts = dict(doc.get("oracle", {}))
    if args.seed is not None:
        opts["seed"] = args.seed
    problem = oracle_mod.OracleProblem(gram=fd.gram, G=g, **opts)
    result = oracle_mod.minimize(problem)
    cert = oracle_mod.stationarity_certificate(result)
    rep = _base_report("oracle", doc, model, args)
    rep.update({
        "weight": wname,
        "value": result.value,
        "residuals": result.residuals,
        "restarts": [
            {"restart": s.restart, "value": s.value, "residual": s.residual,
             "feasible": s.feasible} for s in result.restarts
        ],
        "certificate": {
            "Lambda": cert.Lambda,
            "residual": cert.residual,
            "extras": cert.extras,
        },
        "oracle_config": {
            "restarts": problem.restarts,
            "seed": problem.seed,
            "penalties": list(problem.penalties),
        },
    })
    try:
        closed = _closed_form_or_none(fd, g)
    except errors.QcrbError:
        closed = None
    if closed is not None:
        rep["closed_form"] = {
            "method": closed.method,
            "value": closed.value,
            "difference": abs(closed.value - result.value),
        }
    _emit(reportio.dumps(rep), args.out)
    return 0


def _closed_form_or_none(fd, g):
    m = fd.JS.shape[0]
    if m == 1 or analysis.quasi_classical_test(fd) or m == 2:
        return analysis.cr_bound(fd, g)
    spec = analysis.beta_spectrum(fd)
    g_pd = bool(np.linalg.eigvalsh(g).min()
                > matkernel.EIGEN_DUST * max(1.0, matkernel.mnorm(g)))
    if spec.classification == "coherent" and g_pd:
        return analysis.cr_bound_coherent(fd, g)
    if matkernel.mnorm(g - fd.JS) <= 1e-9 * max(1.0, matkernel.mnorm(fd.JS)):
        return analysis.cr_bound_js_weight(fd)
    return None


def _error_json(exc, code):
    sys.stderr.write(json.dumps({
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }) + "\n")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qcrb",
        description="SLD Fisher information, attainable bounds, and "
                    "bound-attaining projective measurements for pure-state models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="model config JSON")
        p.add_argument("--weight", default=None,
                       help="identity | sld | path to a JSON matrix")
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("analyze", help="Fisher matrices, beta spectrum, classification")
    common(p)
    p = sub.add_parser("bound", help="attainable bound for a weight matrix")
    common(p)
    p.add_argument("--oracle", action="store_true",
                   help="cross-check the closed form against the oracle")
    p = sub.add_parser("boundary", help="two-parameter stationary curve as CSV")
    common(p, config_required=False)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--window", type=float, nargs=2, default=(-1.0, 1.0),
                   help="x-window for the beta = 1 hyperbola")
    p = sub.add_parser("pvm", help="bound-attaining projective measurement")
    common(p)
    p = sub.add_parser("simulate", help="sample outcomes of a stored PVM")
    common(p)
    p.add_argument("--pvm", required=True, help="PVM JSON produced by the pvm command")
    p = sub.add_parser("oracle", help="brute-force bound with stationarity certificate")
    common(p)
    return parser


DEFAULT_SAMPLES = {"boundary": 101, "simulate": 100000}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.samples is None:
        args.samples = DEFAULT_SAMPLES.get(args.command, 0)
    handlers = {
        "analyze": cmd_analyze,
        "bound": cmd_bound,
        "boundary": cmd_boundary,
        "pvm": cmd_pvm,
        "simulate": cmd_simulate,
        "oracle": cmd_oracle,
    }
    try:
        return handlers[args.command](args)
    except errors.QcrbError as exc:
        code = _exit_code(exc)
        _error_json(exc, code)
        return code


if __name__ == "__main__":
    sys.exit(main())
