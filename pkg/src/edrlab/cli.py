"""``edrlab`` command-line entry point.

Exit codes: 0 success, 2 usage error, 3 validation failure,
4 numerical-invariant breach.  Errors go to stderr prefixed with ``error:``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from edrlab.explorer import SearchSpec, SweepSpec, make_estimator, make_state, run_search, run_sweep, sweep_to_csv
from edrlab.inequalities import INEQUALITY_IDS, PREMISE_TOL, evaluate_report
from edrlab.measurement import Estimator, conditional_states
from edrlab.metrics import NumericalInvariantError
from edrlab.models import (
    ModelParseError,
    ModelValidationError,
    PreconditionError,
    build_model,
    load_model,
    validate_model,
)
from edrlab.sampler import default_threads, empirical_metrics, sample_readouts

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_sets(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = _scalar(v)
    return out


def _parse_state(text):
    if text is None:
        return None
    if text.startswith("gauss:"):
        parts = text[len("gauss:"):].split(",")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise UsageError(f"bad Gaussian state {text!r}") from exc
        keys = ("center", "width", "momentum")
        return dict(zip(keys, vals))
    if text[:1] in "[{":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad state {text!r}: {exc}") from exc
    return text


def _model(args):
    if args.model and args.builder:
        raise UsageError("give either --model or --builder, not both")
    if args.model:
        path = Path(args.model)
        if not path.exists():
            raise UsageError(f"model file {path} does not exist")
        return load_model(path)
    if args.builder:
        try:
            return build_model(args.builder, _parse_sets(args.set))
        except PreconditionError:
            raise
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError("a model is required: --model PATH or --builder NAME")


def _estimator(m, phi, choice: str) -> Estimator:
    if choice.startswith("file:"):
        path = Path(choice[len("file:"):])
        if not path.exists():
            raise UsageError(f"estimator file {path} does not exist")
        return Estimator.from_dict(json.loads(path.read_text()))
    try:
        return make_estimator(m, phi, choice)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _threads(args) -> int:
    return args.threads if args.threads else default_threads()


def _state(m, args):
    try:
        return make_state(m, _parse_state(args.state))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_eval(args) -> int:
    m = _model(args)
    phi = _state(m, args)
    f = _estimator(m, phi, args.estimator)
    report = evaluate_report(m, phi, f, tol=args.tol, premise_tol=args.premise_tol,
                             state_label=args.state or "default")
    _write(report.to_json(indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.builder:
        raise UsageError("sweep needs --builder")
    spec = SweepSpec(
        family=args.builder, param=args.param, start=args.start, stop=args.stop,
        steps=args.steps, spacing="log" if args.log else "linear",
        base_params=_parse_sets(args.set), state=_parse_state(args.state),
        estimator=args.estimator, ids=tuple(args.ids.split(",")) if args.ids else INEQUALITY_IDS,
        tol=args.tol,
    )
    rows = run_sweep(spec, threads=_threads(args))
    _write(sweep_to_csv(rows, spec.ids), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    m = _model(args)
    phi = _state(m, args)
    run = sample_readouts(m, phi, args.n, seed=args.seed, threads=_threads(args))
    if args.estimator:
        ens = conditional_states(m, phi)
        run = empirical_metrics(run, ens, _estimator(m, phi, args.estimator), m.x0)
    _write(json.dumps(run.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_search(args) -> int:
    variables = set(args.vars.split(",")) if args.vars else {"object"}
    unknown = variables - {"object", "probe"}
    if unknown:
        raise UsageError(f"unknown search variables {sorted(unknown)}")
    model = None
    if args.model:
        model = _model(args)
    elif not args.builder:
        raise UsageError("search needs --model or --builder")
    spec = SearchSpec(
        objective=args.objective, family=args.builder or "random",
        base_params=_parse_sets(args.set), object_state="object" in variables,
        probe_state="probe" in variables,
        params=tuple(args.search_param.split(",")) if args.search_param else (),
        estimator=args.estimator, budget=args.budget, starts=args.starts, seed=args.seed,
        model=model,
    )
    res = run_search(spec)
    point = {}
    for k, v in (res.best_point or {}).items():
        if k == "params":
            point[k] = v
        else:
            point[k] = [[float(a.real), float(a.imag)] for a in v]
    out = {"objective": args.objective, "best_slack": res.best_slack, "best_point": point,
           "evaluations": res.evaluations, "trace": list(res.trace)}
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    if not args.model:
        raise UsageError("validate needs --model")
    path = Path(args.model)
    if not path.exists():
        raise UsageError(f"model file {path} does not exist")
    m = load_model(path, validate=False)
    violations = validate_model(m, tol=args.tol if args.tol is not None else 1e-10)
    if violations:
        for v in violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_INVALID
    print(f"ok: {m.label} (d_obj={m.d_obj}, d_probe={m.d_probe})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edrlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("--model", help="model JSON file")
            p.add_argument("--builder", help="built-in family: cnot, identity, von_neumann, random")
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="builder parameter (repeatable)")
        p.add_argument("--state", help="plus, zero, one, minus, sy+, sy-, JSON amplitudes, or gauss:center,width")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None, help="slack tolerance override")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap (default $EDRLAB_THREADS or all cores)")

    p = sub.add_parser("eval", help="evaluate all inequalities and write a JSON report")
    common(p)
    p.add_argument("--estimator", default="optimal", help="optimal, identity, constant:C or file:PATH")
    p.add_argument("--premise-tol", type=float, default=PREMISE_TOL)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="sweep one builder parameter and write CSV")
    common(p)
    p.add_argument("--param", required=True, help="builder parameter to sweep")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--log", action="store_true", help="logarithmic spacing")
    p.add_argument("--estimator", default="identity")
    p.add_argument("--ids", help="comma-separated inequality ids (default all)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", help="Monte Carlo readout sampling")
    common(p)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--estimator", default=None, help="attach empirical resolution for this estimator")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("search", help="minimize an inequality slack")
    common(p)
    p.add_argument("--objective", required=True, choices=INEQUALITY_IDS)
    p.add_argument("--vars", default="object", help="comma-separated: object, probe")
    p.add_argument("--search-param", help="comma-separated builder parameters to vary")
    p.add_argument("--estimator", default="optimal")
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--starts", type=int, default=4)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelValidationError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (ModelParseError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalInvariantError as exc:
        print(f"error: numerical invariant breach: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
