"""Command line: evaluate geometric objects at a point and run verification suites.

Exit codes: 0 success, 1 a verification check failed, 2 configuration error,
3 domain error (y = 0, x outside the domain, degenerate fundamental tensor).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import dsl, jets, verify
from .connections import LocalGeometry, shifted_spray_nonlinear
from .curvature import curvatures
from .metrics import CATALOG, ChartPoint, DomainError, FinslerMetric, MetricValidationError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


INDEX_ORDER = {
    "g": "g[j][k] = g_jk",
    "C": "C[i][j][k] = C_ijk",
    "ell": "ell[j] = ell_j",
    "hbar": "hbar[j][k]",
    "phi": "phi[i][j] = i-th component of phi(e_j)",
    "spray": "G[i], spray = y^i d/dx^i - 2 G^i d/dy^i",
    "barthel": "N[i][j], delta_j = d/dx^j - N^m_j d/dy^m",
    "connection": "N[i][j]; F[i][j][k] = i-th component of D_{delta_j} e_k; V[i][j][k] = i-th component of D_{d/dy^j} e_k, "
    "in the connection's own horizontal frame",
    "curvature": "X[i][j][k][l] = i-th component of X(e_k, e_l) e_j; hatted tensors [i][k][l] contract j with y; "
    "Q, T [i][j][k] = i-th component of Q(e_j, e_k), T(e_j, e_k)",
}
CONNECTIONS = ("cartan", "berwald", "hrf", "special-hrf")
CURVATURES = ("R", "P", "S", "Rhat", "Phat", "Shat", "Q", "T")
OBJECTS = (
    "g", "C", "ell", "hbar", "phi", "spray", "barthel", *CONNECTIONS,
    "hrf-spray", "special-hrf-spray", "hrf-nonlinear", "special-hrf-nonlinear", *CURVATURES,
)


@dataclass
class RunConfig:
    command: str
    metric: verify.MetricSpec | None = None
    form: verify.FormSpec | None = None
    dim: int | None = None
    point: ChartPoint | None = None
    object: str | None = None
    connection: str = "cartan"
    suite: str = "all"
    seed: int = 0
    points: int = verify.DEFAULT_POINTS
    tolerances: dict[str, float] = field(default_factory=dict)
    out: str | None = None


# -- parsing helpers -------------------------------------------------------------

def _floats(text: str, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated decimal numbers, got {text!r}") from None
    if not all(np.isfinite(vals)):
        raise ConfigError(f"{what}: numbers must be finite")
    return vals


def parse_point(text: str) -> ChartPoint:
    """Parse ``x=<csv>;y=<csv>``."""
    parts = {}
    for chunk in text.split(";"):
        if "=" not in chunk:
            raise ConfigError(f"point: expected 'x=<csv>;y=<csv>', got {text!r}")
        k, v = chunk.split("=", 1)
        parts[k.strip()] = v.strip()
    if set(parts) != {"x", "y"}:
        raise ConfigError(f"point: need exactly the keys x and y, got {sorted(parts)}")
    x, y = _floats(parts["x"], "point x"), _floats(parts["y"], "point y")
    if len(x) != len(y):
        raise ConfigError("point: x and y have different lengths")
    try:
        return ChartPoint(x, y)
    except DomainError:
        raise
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


def parse_params(text: str | None) -> tuple:
    if not text:
        return ()
    out = []
    for chunk in text.split(","):
        if "=" not in chunk:
            raise ConfigError(f"params: expected name=value pairs, got {chunk!r}")
        k, v = chunk.split("=", 1)
        try:
            out.append((k.strip(), float(v)))
        except ValueError:
            raise ConfigError(f"params: {k.strip()} must be a number, got {v!r}") from None
    return tuple(out)


def parse_tolerances(items: list[str] | None) -> dict[str, float]:
    tols = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--tol expects CHECK_ID=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            tols[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"--tol {k}: not a number: {v!r}") from None
    return tols


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hrfinsler", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def selectors(p: argparse.ArgumentParser) -> None:
        p.add_argument("--metric", choices=sorted(CATALOG), help="catalog metric")
        p.add_argument("--params", help="catalog parameters, e.g. b=0.1,s=0.2")
        p.add_argument("--metric-expr", help="metric L(x, y) in the expression language")
        p.add_argument("--dim", type=int, help="chart dimension")
        p.add_argument("--form", choices=("zero", "ell"), help="h-recurrence form")
        p.add_argument("--form-expr", help="form components separated by ';'")
        p.add_argument("--out", help="write JSON here instead of stdout")

    ev = sub.add_parser("eval", help="evaluate an object at a point")
    selectors(ev)
    ev.add_argument("--object", required=True, choices=OBJECTS)
    ev.add_argument("--connection", choices=CONNECTIONS, default="cartan", help="connection for curvature objects")
    ev.add_argument("--point", required=True, help="x=<csv>;y=<csv>")

    vf = sub.add_parser("verify", help="run a verification suite")
    selectors(vf)
    vf.add_argument("--suite", choices=sorted(verify.SUITES), default="all")
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--points", type=int, default=verify.DEFAULT_POINTS)
    vf.add_argument("--tol", action="append", metavar="CHECK_ID=VALUE", help="override a tolerance")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.metric and args.metric_expr:
        raise ConfigError("give either --metric or --metric-expr, not both")
    if args.form and args.form_expr:
        raise ConfigError("give either --form or --form-expr, not both")
    if args.params and not args.metric:
        raise ConfigError("--params needs --metric")
    cfg = RunConfig(command=args.command, dim=args.dim, out=args.out)
    if args.command == "eval":
        cfg.point = parse_point(args.point)
        if cfg.dim is None:
            cfg.dim = cfg.point.dim
        elif cfg.dim != cfg.point.dim:
            raise ConfigError(f"--dim {cfg.dim} does not match the point dimension {cfg.point.dim}")
        if not (args.metric or args.metric_expr):
            raise ConfigError("eval needs --metric or --metric-expr")
        cfg.object = args.object
        cfg.connection = args.connection
    else:
        cfg.suite = args.suite
        cfg.seed = args.seed
        if args.points < 1:
            raise ConfigError("--points must be positive")
        cfg.points = args.points
        cfg.tolerances = parse_tolerances(args.tol)
        unknown = [k for k in cfg.tolerances if k not in verify.SUITES["all"]]
        if unknown:
            raise ConfigError(f"--tol: unknown check ids {unknown}")
    if cfg.dim is not None and cfg.dim < 1:
        raise ConfigError("--dim must be positive")
    if args.metric_expr:
        if cfg.dim is None:
            raise ConfigError("--metric-expr needs --dim")
        cfg.metric = verify.MetricSpec("expr", cfg.dim, expr=args.metric_expr)
    elif args.metric:
        cfg.metric = verify.MetricSpec(args.metric, cfg.dim or 2, parse_params(args.params))
    if args.form_expr:
        comps = tuple(c.strip() for c in args.form_expr.split(";"))
        n = cfg.dim or 2
        if len(comps) != n:
            raise ConfigError(f"--form-expr has {len(comps)} components, dimension is {n}")
        for c in comps:
            dsl.parse(c, n)
        cfg.form = verify.FormSpec("form-expr", comps)
    elif args.form:
        cfg.form = verify.FormSpec(args.form)
    return cfg


# -- commands -------------------------------------------------------------

def _build_metric(spec: verify.MetricSpec) -> FinslerMetric:
    try:
        return spec.build()
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"metric {spec.label}: {exc}") from exc
    except MetricValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _jsonable(a):
    return np.asarray(a, dtype=float).tolist()


def evaluate_object(cfg: RunConfig) -> dict:
    m = _build_metric(cfg.metric)
    p = cfg.point
    m.check_point(p)
    obj = cfg.object
    form = (cfg.form or verify.FormSpec("zero")).build(m.dim)
    needs_curv = obj in CURVATURES
    geom = LocalGeometry(m, p, order=4 if needs_curv else 3)
    f = geom.field
    out: dict = {"object": obj, "metric": cfg.metric.label, "point": {"x": list(p.x), "y": list(p.y)}}

    def connection(name: str):
        if name == "cartan":
            return geom.cartan
        if name == "berwald":
            return geom.berwald
        if name == "hrf":
            return geom.hrf(form).connection
        return geom.special.connection

    if obj in ("g", "C", "ell", "hbar", "phi"):
        f.check_positive_definite()
        out["value"] = _jsonable(getattr(f, obj).value)
        out["index_order"] = INDEX_ORDER[obj]
    elif obj == "spray":
        out["value"] = _jsonable(geom.spray.value)
        out["index_order"] = INDEX_ORDER["spray"]
    elif obj == "barthel":
        out["value"] = _jsonable(geom.barthel.value)
        out["index_order"] = INDEX_ORDER["barthel"]
    elif obj in CONNECTIONS:
        D = connection(obj)
        out["value"] = {k: _jsonable(v) for k, v in D.coefficients().items()}
        out["index_order"] = INDEX_ORDER["connection"]
        if obj == "hrf":
            out["form"] = form.name
    elif obj in ("hrf-spray", "special-hrf-spray", "hrf-nonlinear", "special-hrf-nonlinear"):
        h = geom.special if obj.startswith("special") else geom.hrf(form)
        spray, nl = shifted_spray_nonlinear(h)
        if obj.endswith("spray"):
            out["value"] = _jsonable(spray.G)
            out["index_order"] = INDEX_ORDER["spray"]
        else:
            out["value"] = _jsonable(nl.N)
            out["index_order"] = INDEX_ORDER["barthel"]
        out["form"] = h.form.name
    else:
        D = connection(cfg.connection)
        cb = curvatures(D)
        out["connection"] = cfg.connection
        out["value"] = _jsonable(getattr(cb, obj))
        out["index_order"] = INDEX_ORDER["curvature"]
    return out


def run_verify(cfg: RunConfig) -> verify.VerificationReport:
    metrics = None
    if cfg.metric is not None:
        _build_metric(cfg.metric)
        metrics = [cfg.metric]
    elif cfg.dim is not None:
        metrics = [s for s in verify.default_metrics() if s.dim == cfg.dim]
    forms = [cfg.form] if cfg.form is not None else None
    return verify.run_suite(cfg.suite, cfg.seed, metrics, forms, cfg.points, cfg.tolerances)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = config_from_args(args)
        if cfg.command == "eval":
            _emit(evaluate_object(cfg), cfg.out)
            return EXIT_OK
        report = run_verify(cfg)
        _emit(report.to_dict(), cfg.out)
        if not report.passed:
            for r in report.failures():
                print(f"FAIL {r.id} [{r.anchor}] {r.metric} form={r.form}: {r.residual:.3e} > {r.tolerance:.1e}", file=sys.stderr)
            for a in report.missing_statements:
                print(f"MISSING {a}: no executed check", file=sys.stderr)
            return EXIT_FAILED
        return EXIT_OK
    except (ConfigError, dsl.ParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, MetricValidationError, jets.JetDomainError, dsl.EvalError, np.linalg.LinAlgError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
