"""Command-line front end: validate scenario files, run checks, write reports.

Scenarios are JSON documents (schema ``covlab/scenario-v1``) holding analytic
expressions in prefix form plus sampling and step-size settings.  Reports are
JSON documents (schema ``covlab/report-v1``) that are byte-identical across
runs with the same scenario and seed, except for the timestamp field.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .checks import CATALOG, RunContext, list_checks, run_checks
from .errors import CheckFailure, CovlabError, ValidationError
from .expr import max_var_index, parse
from .jets import FieldMap
from .parametrize import CovarianceField, FiberMetric, ParametrizedSystem
from .scenarios import SCENARIO_SCHEMA, random_points
from .theories import FieldTheory, make_theory

REPORT_SCHEMA = "covlab/report-v1"
_THEORY_NAMES = ("em", "kg_vector")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _parse_exprs(texts, count: int, dim: int, where: str, var: str) -> list:
    """Parse a list of prefix-form strings, checking arity and variable range."""
    _require(
        isinstance(texts, list) and len(texts) == count,
        f"{where} must be a list of {count} prefix-form expressions",
    )
    out = []
    for i, t in enumerate(texts):
        _require(isinstance(t, str), f"{where}[{i}] must be a string")
        try:
            e = parse(t)
        except ValueError as exc:
            raise ValidationError(f"{where}[{i}]: {exc}") from exc
        hi = max_var_index(e)
        _require(
            hi < dim,
            f"{where}[{i}] uses {var}{hi} but the dimension is {dim}",
        )
        out.append(e)
    return out


@dataclass
class Scenario:
    """A parsed scenario: analytic data plus sampling and step settings."""

    name: str
    dimension: int
    theory_doc: dict
    theory: FieldTheory
    fiber_metric: FiberMetric
    matter: FieldMap
    cov_field: CovarianceField
    checks: list[str]
    box: list[list[float]] | None
    count: int
    seed: int
    explicit_points: np.ndarray | None
    step: float
    richardson: bool
    source: str = "<memory>"

    def system(self) -> ParametrizedSystem:
        return ParametrizedSystem(
            self.theory, self.matter, self.cov_field, self.fiber_metric
        )

    def sample_points(
        self, seed: int | None = None, count: int | None = None
    ) -> tuple[np.ndarray, int]:
        """The evaluation points and the seed that governs the run."""
        used_seed = self.seed if seed is None else int(seed)
        if self.explicit_points is not None:
            pts = self.explicit_points
            if count is not None:
                _require(
                    0 < count <= len(pts),
                    f"--points {count} exceeds the {len(pts)} fixed points supplied",
                )
                pts = pts[:count]
            return pts, used_seed
        used_count = self.count if count is None else int(count)
        _require(used_count >= 1, "point count must be at least 1")
        rng = np.random.default_rng(used_seed)
        return random_points(self.box, used_count, rng), used_seed

    def dry_run(self, points: np.ndarray) -> None:
        """Evaluate everything once at each point; any blow-up is a bad scenario."""
        self.cov_field.validate_at(points)
        system = self.system()
        for p in points:
            try:
                system.metric_jet(p, 0).require_lorentzian()
                system.lagrangian(p)
            except ValidationError:
                raise
            except CovlabError as exc:
                raise ValidationError(
                    f"dry run failed at point {[float(v) for v in p]}: {exc}"
                ) from exc


def parse_scenario(doc, source: str = "<memory>") -> Scenario:
    _require(isinstance(doc, dict), "scenario document must be a JSON object")
    schema = doc.get("schema")
    _require(
        schema == SCENARIO_SCHEMA,
        f"unsupported schema {schema!r}; expected {SCENARIO_SCHEMA!r}",
    )
    name = doc.get("name", "unnamed")
    _require(isinstance(name, str) and name, "scenario name must be a nonempty string")

    dim = doc.get("dimension")
    _require(
        isinstance(dim, int) and dim in (2, 3, 4),
        f"dimension must be 2, 3 or 4, got {dim!r}",
    )

    theory_doc = doc.get("theory")
    _require(
        isinstance(theory_doc, dict) and theory_doc.get("name") in _THEORY_NAMES,
        f"theory.name must be one of {_THEORY_NAMES}",
    )
    mass = theory_doc.get("mass", 1.0)
    _require(
        isinstance(mass, (int, float)) and float(mass) > 0.0,
        "theory.mass must be a positive number",
    )
    theory = make_theory(theory_doc["name"], mass=float(mass))

    g_doc = doc.get("fiber_metric")
    _require(
        isinstance(g_doc, list) and len(g_doc) == dim,
        f"fiber_metric must be a {dim}x{dim} matrix of expressions",
    )
    rows = [
        _parse_exprs(row, dim, dim, f"fiber_metric[{r}]", "u")
        for r, row in enumerate(g_doc)
    ]
    fiber = FiberMetric(rows)

    matter = FieldMap(
        tuple(_parse_exprs(doc.get("matter"), dim, dim, "matter", "x")), dim
    )

    cov_doc = doc.get("covariance_field")
    _require(isinstance(cov_doc, dict) and "map" in cov_doc, "covariance_field.map missing")
    cov_map = FieldMap(
        tuple(_parse_exprs(cov_doc["map"], dim, dim, "covariance_field.map", "x")), dim
    )
    inv_doc = cov_doc.get("inverse")
    cov_inv = None
    if inv_doc is not None:
        cov_inv = FieldMap(
            tuple(
                _parse_exprs(inv_doc, dim, dim, "covariance_field.inverse", "x")
            ),
            dim,
        )
    cov = CovarianceField(cov_map, cov_inv)

    checks_doc = doc.get("checks")
    _require(
        isinstance(checks_doc, list) and checks_doc and all(isinstance(c, str) for c in checks_doc),
        "checks must be a nonempty list of check names",
    )
    for c in checks_doc:
        spec = CATALOG.get(c)
        _require(spec is not None, f"unknown check {c!r}; see `covlab list-checks`")
        if spec.coupling is not None and spec.coupling != theory.coupling_order:
            raise ValidationError(
                f"check {c!r} requires metric coupling order {spec.coupling}, "
                f"but theory {theory.name!r} has order {theory.coupling_order}"
            )

    explicit = None
    box = None
    count = 0
    seed = 0
    pts_doc = doc.get("points")
    sample = doc.get("sample")
    if sample is not None:
        _require(isinstance(sample, dict), "sample must be an object")
        box = sample.get("box")
        _require(
            isinstance(box, list) and len(box) == dim,
            f"sample.box must list {dim} [lo, hi] pairs",
        )
        for i, pair in enumerate(box):
            ok = (
                isinstance(pair, list)
                and len(pair) == 2
                and all(isinstance(v, (int, float)) for v in pair)
                and float(pair[0]) < float(pair[1])
                and np.isfinite(pair).all()
            )
            _require(ok, f"sample.box[{i}] must be a finite [lo, hi] pair with lo < hi")
        count = sample.get("count")
        _require(
            isinstance(count, int) and count >= 1,
            "sample.count must be a positive integer",
        )
        seed = sample.get("seed", 0)
        _require(
            isinstance(seed, int) and seed >= 0,
            "sample.seed must be a nonnegative integer",
        )
    if pts_doc is not None:
        _require(
            isinstance(pts_doc, list) and pts_doc,
            "points must be a nonempty list of coordinate vectors",
        )
        for i, row in enumerate(pts_doc):
            ok = (
                isinstance(row, list)
                and len(row) == dim
                and all(isinstance(v, (int, float)) for v in row)
                and np.isfinite(row).all()
            )
            _require(ok, f"points[{i}] must be a finite vector of length {dim}")
        explicit = np.asarray(pts_doc, dtype=float)
    _require(
        sample is not None or explicit is not None,
        "scenario must supply either a sample block or an explicit points list",
    )

    steps = doc.get("steps", {})
    _require(isinstance(steps, dict), "steps must be an object")
    step = steps.get("step", 1e-4)
    _require(
        isinstance(step, (int, float)) and 0.0 < float(step) < 0.1,
        "steps.step must be a small positive number",
    )
    richardson = steps.get("richardson", False)
    _require(isinstance(richardson, bool), "steps.richardson must be a boolean")

    return Scenario(
        name=name,
        dimension=dim,
        theory_doc=dict(theory_doc),
        theory=theory,
        fiber_metric=fiber,
        matter=matter,
        cov_field=cov,
        checks=list(checks_doc),
        box=box,
        count=count or 0,
        seed=seed,
        explicit_points=explicit,
        step=float(step),
        richardson=richardson,
        source=source,
    )


# ---- scenario loading -----------------------------------------------------------


def _builtin_dir():
    return resources.files("covlab").joinpath("data", "scenarios", "v1")


def builtin_names() -> list[str]:
    try:
        entries = list(_builtin_dir().iterdir())
    except (FileNotFoundError, ModuleNotFoundError):
        return []
    return sorted(e.name[:-5] for e in entries if e.name.endswith(".json"))


def load_scenario_doc(ref: str) -> tuple[dict, str]:
    """Resolve a path or a built-in scenario name to its JSON document."""
    path = Path(ref)
    if path.exists():
        text = path.read_text()
        source = str(path)
    else:
        res = _builtin_dir().joinpath(ref + ".json")
        if not (ref.endswith(".json") or "/" in ref) and res.is_file():
            text = res.read_text()
            source = f"builtin:{ref}"
        else:
            known = ", ".join(builtin_names()) or "none found"
            raise ValidationError(
                f"no scenario file {ref!r} and no such built-in; built-ins: {known}"
            )
    try:
        return json.loads(text), source
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}: not valid JSON: {exc}") from exc


# ---- report assembly ------------------------------------------------------------


def build_report(scn: Scenario, results, *, seed, npts, step, richardson) -> dict:
    failed = sum(r.status == "fail" for r in results)
    passed = sum(r.status == "pass" for r in results)
    na = sum(r.status == "n/a" for r in results)
    return {
        "schema": REPORT_SCHEMA,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "scenario": {
            "name": scn.name,
            "source": scn.source,
            "dimension": scn.dimension,
            "theory": scn.theory_doc,
            "checks": scn.checks,
        },
        "environment": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "rng": "pcg64",
            "seed": seed,
            "points": npts,
            "fixed_points": scn.explicit_points is not None,
            "step": step,
            "step_outer": 2.0 * step,
            "richardson": richardson,
        },
        "summary": {
            "status": "fail" if failed else "pass",
            "passed": passed,
            "failed": failed,
            "not_applicable": na,
        },
        "checks": [r.to_dict() for r in results],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# ---- subcommands ----------------------------------------------------------------


def _human_lines(scn: Scenario, results, seed, npts, step, richardson):
    yield (
        f"scenario {scn.name} ({scn.source}): theory={scn.theory.name} "
        f"dim={scn.dimension} points={npts} seed={seed} step={step:g} "
        f"richardson={richardson}"
    )
    for r in results:
        if r.status == "n/a":
            yield f"  {r.name:18s} n/a   ({r.note})"
        else:
            yield (
                f"  {r.name:18s} {r.status:4s}  max {r.max_residual:.3e} "
                f"vs tol {r.tolerance:g}  ({r.points} points)"
            )


def cmd_run(args) -> int:
    doc, source = load_scenario_doc(args.scenario)
    scn = parse_scenario(doc, source)
    step = scn.step if args.step is None else float(args.step)
    _require(0.0 < step < 0.1, "--step must be a small positive number")
    richardson = scn.richardson or args.richardson
    points, seed = scn.sample_points(args.seed, args.points)
    scn.dry_run(points)

    ctx = RunContext(scn.system(), points, seed=seed, step=step, richardson=richardson)
    results = run_checks(ctx, scn.checks)
    report = build_report(
        scn, results, seed=seed, npts=len(points), step=step, richardson=richardson
    )
    payload = report_json(report)

    human = sys.stdout
    if args.out:
        Path(args.out).write_text(payload)
    else:
        human = sys.stderr
        sys.stdout.write(payload)
    for line in _human_lines(scn, results, seed, len(points), step, richardson):
        print(line, file=human)

    failed = [r.name for r in results if r.status == "fail"]
    if failed:
        print(f"result: FAIL ({', '.join(failed)})", file=human)
        raise CheckFailure(", ".join(failed))
    print(f"result: PASS ({report['summary']['passed']} passed, "
          f"{report['summary']['not_applicable']} n/a)", file=human)
    return 0


def cmd_validate(args) -> int:
    doc, source = load_scenario_doc(args.scenario)
    scn = parse_scenario(doc, source)
    points, _ = scn.sample_points()
    scn.dry_run(points)
    print(
        f"OK: {scn.name} ({source}) is a valid scenario: theory={scn.theory.name}, "
        f"dim={scn.dimension}, {len(points)} points, {len(scn.checks)} checks"
    )
    return 0


def cmd_list_checks(args) -> int:
    for name, verifies in list_checks():
        print(f"{name:18s} {verifies}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="covlab",
        description=(
            "Run numerical verification checks for covariance-field "
            "parametrizations over JSON scenarios."
        ),
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run", help="run a scenario's checks and emit a JSON report"
    )
    run.add_argument(
        "scenario",
        help="path to a scenario JSON file, or a built-in scenario name",
    )
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--seed", type=int, default=None, help="override the sample seed")
    run.add_argument(
        "--points", type=int, default=None, help="override the number of points"
    )
    run.add_argument(
        "--step", type=float, default=None, help="override the differencing step"
    )
    run.add_argument(
        "--richardson",
        action="store_true",
        help="refine all total derivatives by Richardson extrapolation",
    )
    run.set_defaults(func=cmd_run)

    lc = sub.add_parser("list-checks", help="list the check catalog")
    lc.set_defaults(func=cmd_list_checks)

    val = sub.add_parser("validate", help="validate a scenario file")
    val.add_argument(
        "scenario",
        help="path to a scenario JSON file, or a built-in scenario name",
    )
    val.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except CovlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
