"""Batch front door: parse a problem file, run tasks, emit a JSON report.

Problem files are TOML with sections [manifold], [params], [objects],
[tasks] (array of tables), [verify]; the exact grammar is documented in the
package README.  Reports are deterministic JSON: two runs with the same
seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

import tomli

from . import __version__
from .constructions import (
    CONSTRUCTIONS,
    ConstructionError,
    HamiltonizationResult,
    decomposable,
    flaschka_ratiu,
    foliated_build,
    hojman,
    integrable_family,
    integrating_factor,
    linear_fr,
    metric_normal,
    normal_class_check,
    primitive,
    torus2,
    unimodularize,
)
from .expr import Chart, Expr, ExprError, RationalMatrix, normalize, parse
from .exterior import (
    ExteriorError,
    Metric,
    Tensor,
    VolumeForm,
    divergence,
    lie_derivative,
)
from .poisson import (
    Certificate,
    casimir_check,
    conformal_identity_check,
    hamiltonization_check,
    jacobi_check,
    poisson_vf_check,
    tensor_tristate,
)
from .verify import SamplerConfig, default_sampler, flow_conservation

EXIT_OK = 0
EXIT_NONZERO = 1
EXIT_INVALID = 2


class ProblemError(Exception):
    pass


# ---------------------------------------------------------------------------
# Task catalogue
# ---------------------------------------------------------------------------

CONSTRUCTION_INPUTS = {
    "flaschka_ratiu": "volume, casimirs=[names]",
    "integrable_family": "field, integrals=[names], volume",
    "linear_fr": "P, A (matrix objects)",
    "primitive": "form [, base=[rationals]]",
    "integrating_factor": "form [, degree_bound=4]",
    "unimodularize": "field, volume, rho [, factor | degree_bound]",
    "foliated_build": "volume, alphas=[names], beta [, field, hamiltonian]",
    "normal_class_check": "field, hamiltonian, section",
    "decomposable": "field, section",
    "hojman": "field, hamiltonian, symmetry",
    "metric_normal": "field, hamiltonian, metric",
    "torus2": "fields=[X1,X2], hamiltonians=[h1,h2], sections=[Y1,Y2]",
}

CHECK_INPUTS = {
    "jacobi": "bivector",
    "casimir": "bivector, function [, volume]",
    "poisson_vf": "bivector, field",
    "hamiltonization": "bivector, hamiltonian, field",
    "conformal": "bivector, function",
    "divergence_zero": "field, volume",
    "first_integral": "field, function",
}

EXPLANATIONS = {
    "flaschka_ratiu": [
        "inputs: a volume form and m-2 functions on an m-dimensional chart",
        "hypothesis: the differentials of the functions are independent on the working domain",
        "builds pi with i_pi Omega = dc_1 ^ ... ^ dc_(m-2); rank at most two",
        "certifies: Jacobi identity; each c_i is a Casimir (both the sharp and the wedge form)",
    ],
    "integrable_family": [
        "inputs: a vector field, m-1 first integrals, a volume form",
        "hypotheses: each h_j is a first integral of X; the dh_j are independent at samples",
        "builds one rank-two structure per integral with pi_i#dh_j = delta_ij X",
        "certifies: hamiltonization with recovered lambda_i; pi_i kills the other integrals; pairwise Schouten commutation",
    ],
    "linear_fr": [
        "inputs: P (n x (n-2), independent columns inside ker A^T) and trace-free A with rank at most two",
        "builds the constant bivector from signed maximal minors of P, the leaf-wise symplectic matrix W, and h = x^T(WA)x/2",
        "certifies: Jacobi; linear Casimirs P^T x; the recovered proportionality constant (pinned in conventions)",
    ],
    "primitive": [
        "input: a closed polynomial form on a star-shaped chart",
        "returns the radial-homotopy primitive; d(primitive(omega)) = omega exactly",
    ],
    "integrating_factor": [
        "input: a polynomial (m-2)-form",
        "solves d(a rho) = 0 for polynomial a up to the degree bound as an exact linear system",
        "returns a basis of solutions; empty means none at this bound",
    ],
    "unimodularize": [
        "inputs: divergence-free field X, volume Omega, primitive rho with i_X Omega = d rho, integrating factor a",
        "hypotheses: d(a rho) = 0; rho has rank at most two at samples",
        "builds pi with i_pi Omega = a rho and h = 1/a on {a != 0}",
        "certifies: Jacobi; pi#dh = X with lambda; modular field of pi vanishes; modular field of the rho-companion equals sigma X",
    ],
    "foliated_build": [
        "inputs: volume, pairwise-integrable 1-forms alpha_i, and a form beta",
        "hypotheses: d(alpha_i) ^ (other alphas) = 0; the full wedge alpha ^ beta is closed",
        "builds pi with i_pi Omega = alpha_1 ^ ... ^ alpha_k ^ beta",
        "certifies: closedness of the wedge; Jacobi; optional automorphism and hamiltonization checks",
    ],
    "normal_class_check": [
        "inputs: field X, first integral h, candidate section Y",
        "certifies: normalization dh(Y)X = X; invariance [X,Y]^X^Y = 0; the stronger form [X,Y]^X = 0",
    ],
    "decomposable": [
        "inputs: fields X and Y",
        "builds pi = Y ^ X",
        "certifies: Jacobi; the bracket identity [pi,pi] = 2 [X,Y]^X^Y",
    ],
    "hojman": [
        "inputs: field X, regular first integral h, symmetry Z",
        "hypotheses: L_X h = 0; dh(Z) nonvanishing on the box; [X,Z]^X^Z = 0",
        "builds pi = (1/dh(Z)) Z ^ X",
        "certifies: Jacobi; pi#dh = X with lambda = 1",
    ],
    "metric_normal": [
        "inputs: field X, first integral h regular on the box, invariant metric g",
        "builds the normal section Y0 = eta#dh / eta(dh,dh) and pi = Y0 ^ X",
        "certifies: L_X g = 0 (full invariance; the weaker transversal notion is not finitely certifiable); [X,Y0] = 0; Jacobi; pi#dh = X",
    ],
    "torus2": [
        "inputs: commuting fields X1,X2, invariant functions h1,h2, invariant sections Y1,Y2 with dh_i(Y_j) X_j summing to X_i",
        "builds pi = Y1^X1 + Y2^X2",
        "certifies: [pi,pi] = 2 [Y1,Y2]^X1^X2; dh_i([Y1,Y2]) = 0; Jacobi; momentum residuals pi#dh_i - X_i",
    ],
}


# ---------------------------------------------------------------------------
# Problem loading
# ---------------------------------------------------------------------------


def _chart_from(manifold: dict, bindings: dict) -> Chart:
    try:
        dim = manifold["dim"]
        coords = tuple(manifold["coords"])
    except KeyError as exc:
        raise ProblemError(f"[manifold] is missing key {exc}") from None
    if len(coords) != dim:
        raise ProblemError("[manifold] coords length does not match dim")
    params = tuple(manifold.get("params", ()))
    chart = Chart(coords, params)
    for text in manifold.get("exclude", ()):
        chart = chart.with_excluded(parse(text, chart))
    if bindings:
        unknown = set(bindings) - set(params)
        if unknown:
            raise ProblemError(f"[params] binds unknown names {sorted(unknown)}")
        chart = chart.with_bindings(**{k: float(v) for k, v in bindings.items()})
    return chart


def _parse_indices(key: str, grade: int) -> tuple:
    try:
        idx = tuple(int(part) - 1 for part in key.split(",")) if key else ()
    except ValueError:
        raise ProblemError(f"bad index key {key!r}") from None
    if len(idx) != grade:
        raise ProblemError(f"index {key!r} does not match grade {grade}")
    return idx


def _build_object(chart: Chart, name: str, spec):
    if isinstance(spec, str):
        return parse(spec, chart)
    if isinstance(spec, list):
        if len(spec) != chart.m:
            raise ProblemError(
                f"object {name!r}: component list length {len(spec)} != dim {chart.m}"
            )
        return Tensor.vector(chart, [parse(s, chart) for s in spec])
    if isinstance(spec, dict):
        if "volume" in spec:
            return VolumeForm(chart, parse(spec["volume"], chart))
        if "metric" in spec:
            rows = [[parse(s, chart) for s in row] for row in spec["metric"]]
            return Metric.from_matrix(chart, rows)
        if "matrix" in spec:
            rows = tuple(tuple(parse(str(s), chart) for s in row) for row in spec["matrix"])
            return RationalMatrix(rows)
        if "form" in spec or "multivector" in spec:
            kind = "form" if "form" in spec else "multivector"
            grade = int(spec[kind])
            entries = {
                _parse_indices(key, grade): parse(text, chart)
                for key, text in spec.get("entries", {}).items()
            }
            builder = Tensor.form if kind == "form" else Tensor.multivector
            return builder(chart, grade, entries)
    raise ProblemError(f"object {name!r} has an unrecognized shape")


class Problem:
    def __init__(self, blob: dict, path: str):
        if "manifold" not in blob:
            raise ProblemError("missing [manifold] section")
        self.path = path
        self.chart = _chart_from(blob["manifold"], blob.get("params", {}))
        self.objects = {}
        for name, spec in blob.get("objects", {}).items():
            try:
                self.objects[name] = _build_object(self.chart, name, spec)
            except (ExprError, ExteriorError) as exc:
                raise ProblemError(f"object {name!r}: {exc}") from None
        self.tasks = blob.get("tasks", [])
        if not isinstance(self.tasks, list):
            raise ProblemError("[tasks] must be an array of tables")
        for i, task in enumerate(self.tasks):
            if "kind" not in task:
                raise ProblemError(f"task #{i + 1} has no kind")
            kind = task["kind"]
            if kind not in CONSTRUCTION_INPUTS and kind not in CHECK_INPUTS:
                raise ProblemError(f"task #{i + 1}: unknown kind {kind!r}")
            for key, value in task.items():
                if key in ("kind", "name", "options"):
                    continue
                names = value if isinstance(value, list) else [value]
                for ref in names:
                    if isinstance(ref, str) and ref and not _is_literal(key):
                        if ref not in self.objects:
                            raise ProblemError(
                                f"task #{i + 1}: undefined object name {ref!r}"
                            )
        self.verify = blob.get("verify", {})

    def sampler(self, overrides) -> SamplerConfig:
        box = self.verify.get("box")
        cfg = default_sampler(
            self.chart,
            count=overrides.get("count") or self.verify.get("count", 64),
            seed=overrides.get("seed") or self.verify.get("seed", 42),
            tolerance=overrides.get("tolerance") or self.verify.get("tolerance", 1e-9),
            box=box,
        )
        if "margin" in self.verify:
            cfg = SamplerConfig(
                cfg.box, cfg.count, cfg.seed, cfg.tolerance, self.verify["margin"]
            )
        return cfg


def _is_literal(key: str) -> bool:
    return key in ("base", "degree_bound", "start", "horizon", "dt")


def load_problem(path: str) -> Problem:
    with open(path, "rb") as fh:
        try:
            blob = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ProblemError(f"TOML parse error: {exc}") from None
    return Problem(blob, path)


# ---------------------------------------------------------------------------
# Task dispatch
# ---------------------------------------------------------------------------


def _obj(problem: Problem, task: dict, key: str, optional: bool = False):
    if key not in task:
        if optional:
            return None
        raise ProblemError(f"task {task.get('kind')}: missing input {key!r}")
    return problem.objects[task[key]]


def _objs(problem: Problem, task: dict, key: str, optional: bool = False):
    if key not in task:
        if optional:
            return []
        raise ProblemError(f"task {task.get('kind')}: missing input {key!r}")
    return [problem.objects[name] for name in task[key]]


def run_task(problem: Problem, task: dict, sampler: SamplerConfig) -> dict:
    kind = task["kind"]
    out: dict = {}

    def from_result(result: HamiltonizationResult):
        blob = result.to_json()
        out["objects"] = {"pi": blob.pop("pi")}
        if blob.get("h"):
            out["objects"]["h"] = blob.pop("h")
        out.update(blob)

    if kind == "flaschka_ratiu":
        from_result(
            flaschka_ratiu(_obj(problem, task, "volume"),
                           _objs(problem, task, "casimirs"), sampler)
        )
    elif kind == "integrable_family":
        results = integrable_family(
            _obj(problem, task, "field"),
            _objs(problem, task, "integrals"),
            _obj(problem, task, "volume"),
            sampler,
        )
        out["family"] = [r.to_json() for r in results]
        out["certificates"] = {}
        out["certified"] = all(r.certified for r in results)
    elif kind == "linear_fr":
        from_result(
            linear_fr(_obj(problem, task, "P"), _obj(problem, task, "A"),
                      problem.chart if len(problem.chart.coords) == _obj(problem, task, "A").shape[0] else None,
                      sampler)
        )
    elif kind == "primitive":
        base = [Fraction(str(v)) for v in task.get("base", [])] or None
        rho = primitive(_obj(problem, task, "form"), base)
        out["objects"] = {"primitive": rho.to_json()}
        out["certificates"] = {}
        out["certified"] = True
    elif kind == "integrating_factor":
        basis = integrating_factor(
            _obj(problem, task, "form"), int(task.get("degree_bound", 4))
        )
        out["objects"] = {"factors": [str(normalize(b)) for b in basis]}
        out["certificates"] = {}
        out["certified"] = True
    elif kind == "unimodularize":
        rho = _obj(problem, task, "rho")
        factor = _obj(problem, task, "factor", optional=True)
        if factor is None:
            basis = integrating_factor(rho, int(task.get("degree_bound", 4)))
            if not basis:
                raise ConstructionError("no polynomial integrating factor found")
            factor = basis[0]
        from_result(
            unimodularize(_obj(problem, task, "field"), _obj(problem, task, "volume"),
                          rho, factor, sampler)
        )
    elif kind == "foliated_build":
        from_result(
            foliated_build(
                _obj(problem, task, "volume"),
                _objs(problem, task, "alphas"),
                _obj(problem, task, "beta"),
                X=_obj(problem, task, "field", optional=True),
                h=_obj(problem, task, "hamiltonian", optional=True),
                sampler=sampler,
            )
        )
    elif kind == "normal_class_check":
        cert = normal_class_check(
            _obj(problem, task, "field"),
            _obj(problem, task, "hamiltonian"),
            _obj(problem, task, "section"),
            sampler,
        )
        out["certificates"] = {"normal_class": cert.to_json()}
        out["certified"] = cert.overall != "nonzero"
    elif kind == "decomposable":
        from_result(
            decomposable(_obj(problem, task, "field"),
                         _obj(problem, task, "section"), sampler)
        )
    elif kind == "hojman":
        from_result(
            hojman(_obj(problem, task, "field"), _obj(problem, task, "hamiltonian"),
                   _obj(problem, task, "symmetry"), sampler)
        )
    elif kind == "metric_normal":
        from_result(
            metric_normal(_obj(problem, task, "field"), _obj(problem, task, "hamiltonian"),
                          _obj(problem, task, "metric"), sampler)
        )
    elif kind == "torus2":
        fields = _objs(problem, task, "fields")
        hams = _objs(problem, task, "hamiltonians")
        sections = _objs(problem, task, "sections")
        if len(fields) != 2 or len(hams) != 2 or len(sections) != 2:
            raise ProblemError("torus2 needs two fields, two hamiltonians, two sections")
        from_result(torus2(fields[0], fields[1], hams[0], hams[1],
                           sections[0], sections[1], sampler))
    elif kind == "jacobi":
        cert = jacobi_check(_obj(problem, task, "bivector"), sampler)
        out["certificates"] = {"jacobi": cert.to_json()}
        out["certified"] = cert.overall != "nonzero"
    elif kind == "casimir":
        cert = casimir_check(
            _obj(problem, task, "bivector"),
            _obj(problem, task, "function"),
            sampler,
            _obj(problem, task, "volume", optional=True),
        )
        out["certificates"] = {"casimir": cert.to_json()}
        out["certified"] = cert.overall != "nonzero"
    elif kind == "poisson_vf":
        cert = poisson_vf_check(
            _obj(problem, task, "bivector"), _obj(problem, task, "field"), sampler
        )
        out["certificates"] = {"poisson_vf": cert.to_json()}
        out["certified"] = cert.overall != "nonzero"
    elif kind == "hamiltonization":
        cert = hamiltonization_check(
            _obj(problem, task, "bivector"),
            _obj(problem, task, "hamiltonian"),
            _obj(problem, task, "field"),
            sampler,
        )
        out["certificates"] = {"hamiltonization": cert.to_json()}
        out["lambda"] = cert.to_json()["lambda"]
        out["certified"] = cert.overall != "nonzero"
    elif kind == "conformal":
        cert = conformal_identity_check(
            _obj(problem, task, "bivector"), _obj(problem, task, "function"), sampler
        )
        out["certificates"] = {"conformal": cert.to_json()}
        out["certified"] = cert.overall != "nonzero"
    elif kind == "divergence_zero":
        div = divergence(_obj(problem, task, "field"), _obj(problem, task, "volume"))
        cert = Certificate("divergence_zero", sampler=sampler)
        chart = problem.chart
        cert.add(
            "div(X,Omega)",
            tensor_tristate(Tensor.multivector(chart, 0, {(): div}), sampler),
        )
        out["certificates"] = {"divergence_zero": cert.to_json()}
        out["certified"] = cert.overall != "nonzero"
    elif kind == "first_integral":
        deriv = lie_derivative(
            _obj(problem, task, "field"), _obj(problem, task, "function")
        )
        cert = Certificate("first_integral", sampler=sampler)
        cert.add(
            "L_X f",
            tensor_tristate(
                Tensor.multivector(problem.chart, 0, {(): deriv}), sampler
            ),
        )
        out["certificates"] = {"first_integral": cert.to_json()}
        out["certified"] = cert.overall != "nonzero"
    else:  # pragma: no cover
        raise ProblemError(f"unknown task kind {kind!r}")
    return out


def _flow_reports(problem: Problem, sampler: SamplerConfig) -> list:
    reports = []
    for spec in problem.verify.get("flow", []):
        X = problem.objects[spec["field"]]
        invariants = [problem.objects[name] for name in spec.get("invariants", [])]
        pi_h = None
        if "bivector" in spec:
            pi_h = (problem.objects[spec["bivector"]], problem.objects[spec["hamiltonian"]])
        report = flow_conservation(
            X,
            invariants,
            start=spec["start"],
            horizon=float(spec["horizon"]),
            dt=float(spec["dt"]),
            pi_h=pi_h,
            box=spec.get("box"),
        )
        reports.append(dict(field=spec["field"], **report.to_json()))
    return reports


def run(path: str, seed=None, samples=None, tol=None, fail_fast=False,
        timings=False) -> tuple:
    """Execute a problem file; returns (report dict, exit code)."""
    try:
        problem = load_problem(path)
    except (ProblemError, OSError, ExprError) as exc:
        return {"error": str(exc)}, EXIT_INVALID
    overrides = {"seed": seed, "count": samples, "tolerance": tol}
    sampler = problem.sampler(overrides)
    report = {
        "schema": "hamiltonize-report/1",
        "tool": {"name": "hamiltonize", "version": __version__},
        "seed": sampler.seed,
        "sampler": sampler.to_json(),
        "tasks": [],
    }
    any_nonzero = False
    any_error = False
    for i, task in enumerate(problem.tasks):
        entry = {
            "name": task.get("name", f"task{i + 1}"),
            "kind": task["kind"],
            "status": "ok",
            "timing_ms": None,
        }
        started = time.perf_counter()
        try:
            entry.update(run_task(problem, task, sampler))
        except (ConstructionError, ProblemError, ExprError, ExteriorError) as exc:
            entry["status"] = "error"
            entry["error"] = str(exc)
            any_error = True
        if timings:
            entry["timing_ms"] = (time.perf_counter() - started) * 1000.0
        if entry.get("certified") is False:
            any_nonzero = True
        report["tasks"].append(entry)
        if fail_fast and entry["status"] == "error":
            break
    try:
        report["flow"] = _flow_reports(problem, sampler)
    except (KeyError, ExprError, ValueError) as exc:
        report["flow_error"] = str(exc)
        any_error = True
    code = EXIT_NONZERO if (any_nonzero or any_error) else EXIT_OK
    report["exit_code"] = code
    return report, code


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def list_tasks() -> str:
    lines = ["constructions:"]
    for name in sorted(CONSTRUCTION_INPUTS):
        lines.append(f"  {name:20s} {CONSTRUCTION_INPUTS[name]}")
    lines.append("checks:")
    for name in sorted(CHECK_INPUTS):
        lines.append(f"  {name:20s} {CHECK_INPUTS[name]}")
    return "\n".join(lines) + "\n"


def explain(task_id: str) -> str:
    if task_id not in EXPLANATIONS:
        raise ProblemError(f"unknown task {task_id!r}")
    return "\n".join([task_id + ":"] + [f"  - {line}" for line in EXPLANATIONS[task_id]]) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hamiltonize",
        description="Construct and certify Poisson structures that hamiltonize vector fields.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a problem file and emit a JSON report")
    runp.add_argument("path")
    runp.add_argument("--out", help="write the report here instead of stdout")
    runp.add_argument("--seed", type=int, help="override the sampler seed")
    runp.add_argument("--samples", type=int, help="override the sample count")
    runp.add_argument("--tol", type=float, help="override the tolerance")
    runp.add_argument("--fail-fast", action="store_true")
    runp.add_argument("--timings", action="store_true",
                      help="include wall-clock timings (breaks byte determinism)")

    sub.add_parser("list-tasks", help="print the available task identifiers")

    exp = sub.add_parser("explain", help="print the hypothesis checklist of a construction")
    exp.add_argument("task_id")

    args = ap.parse_args(argv)
    if args.command == "run":
        report, code = run(
            args.path,
            seed=args.seed,
            samples=args.samples,
            tol=args.tol,
            fail_fast=args.fail_fast,
            timings=args.timings,
        )
        text = report_to_json(report)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return code
    if args.command == "list-tasks":
        sys.stdout.write(list_tasks())
        return EXIT_OK
    if args.command == "explain":
        try:
            sys.stdout.write(explain(args.task_id))
        except ProblemError as exc:
            sys.stderr.write(str(exc) + "\n")
            return EXIT_INVALID
        return EXIT_OK
    return EXIT_INVALID  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
