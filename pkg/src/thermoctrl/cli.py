"""Command line front end.

Subcommands mirror the library layers: curve sampling, polytope export,
extreme points, transition-matrix synthesis, generator checking, the qubit
map algebra, toy-model simulation and bounds, and the qutrit geometry.  Data
goes to CSV/JSON (stdout or files); figures are matplotlib renderings saved
next to the delimited output.

Exit codes: 0 success, 1 domain outcome (infeasible transition, unreachable
target, query outside an operation's domain), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import core, gksl, qubit, qutrit, thermomaj, toymodel
from .errors import DomainError, IntegrationError, InvalidInputError

DIGITS = 12


def _fmt(x) -> str:
    return f"{float(x):.{DIGITS}g}"


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.{DIGITS}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return _round_floats(float(obj))
    return obj


def _emit_json(data, path: str | None):
    text = json.dumps(_round_floats(data), indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _emit_csv(header: list[str], rows, path: str | None):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse vector {text!r}: {exc}") from exc


def _vector3(text: str) -> np.ndarray:
    v = _vector(text)
    if v.size != 3:
        raise InvalidInputError(f"expected a 3-dimensional vector, got {v.size} entries")
    return v


def _geo_tol() -> float:
    raw = os.environ.get("THERMO_TOL")
    if raw is None:
        return core.GEO_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise InvalidInputError(f"THERMO_TOL={raw!r} is not a number") from exc
    if not (tol > 0.0):
        raise InvalidInputError("THERMO_TOL must be positive")
    return tol


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------

_SCHEMA = {
    "thermal": {"H0_diag": list, "T": (int, float)},
    "toy": {"a": (int, float), "B": list},
    "qubit": {"mu": (int, float), "eps": (int, float), "c": (dict, list)},
    "schedule": list,
    "H_tot": (dict, list),
    "H_B": (dict, list),
    "H": (dict, list),
}


def load_problem(path: str) -> dict:
    """Schema-checked problem file; unknown keys are rejected with location."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{path}: top level must be an object")
    for key, val in doc.items():
        if key not in _SCHEMA:
            raise InvalidInputError(f"{path}: unknown key {key!r} at top level")
        spec = _SCHEMA[key]
        if isinstance(spec, dict):
            if not isinstance(val, dict):
                raise InvalidInputError(f"{path}: {key!r} must be an object")
            for sub, subval in val.items():
                if sub not in spec:
                    raise InvalidInputError(f"{path}: unknown key {key}.{sub}")
                if not isinstance(subval, spec[sub]):
                    raise InvalidInputError(f"{path}: {key}.{sub} has wrong type")
        elif not isinstance(val, spec):
            raise InvalidInputError(f"{path}: {key!r} has wrong type")
    return doc


def _toy_generator_from(args, doc: dict | None) -> toymodel.ToyGenerator:
    n = getattr(args, "n", 3)
    if getattr(args, "x0", None) not in (None, "d", "uniform"):
        n = _vector(args.x0).size
    if getattr(args, "a", None) is not None:
        return toymodel.toy_generator_ladder(args.a, n)
    if doc and "toy" in doc:
        toy = doc["toy"]
        if "B" in toy:
            return toymodel.ToyGenerator(np.asarray(toy["B"], dtype=float))
        if "a" in toy:
            return toymodel.toy_generator_ladder(float(toy["a"]), n)
    raise InvalidInputError("need --a or a problem file with a 'toy' section")


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_curve(args) -> int:
    d = _vector(args.d)
    y = _vector(args.y)
    curve = thermomaj.thermo_curve(d, y)
    grid = np.linspace(0.0, curve.total_weight, args.samples)
    cs = np.unique(np.concatenate([grid, curve.abscissas]))
    rows = [(c, curve(c)) for c in cs]
    _emit_csv(["c", "th"], rows, args.out)
    if args.svg:
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        ax.plot(cs, curve(cs), color="#2d5d9f")
        ax.scatter(curve.abscissas, curve.ordinates, s=14, c="#c23b22", zorder=5)
        ax.set_xlabel("c")
        ax.set_ylabel("th(c)")
        fig.savefig(args.svg, metadata={"Date": None} if args.svg.endswith(".svg") else None)
    return 0


def cmd_polytope(args) -> int:
    d = _vector(args.d)
    y = _vector(args.y)
    poly = thermomaj.polytope(d, y)
    _emit_json(poly.to_json(), args.json)
    return 0


def cmd_extremes(args) -> int:
    d = _vector(args.d)
    y = _vector(args.y)
    if args.sigma:
        sigma = [int(t) for t in args.sigma.split(",")]
        data = {"sigma": sigma,
                "vertex": thermomaj.extreme_point(d, y, sigma).tolist()}
    else:
        data = {"max_corner": thermomaj.max_corner(d, y).tolist(),
                "vertices": [v.tolist() for v in thermomaj.all_extreme_points(d, y)]}
    _emit_json(data, args.json)
    return 0


def cmd_transition(args) -> int:
    d = _vector(args.d)
    y = _vector(args.y)
    x = _vector(args.x)
    res = thermomaj.find_transition_matrix(d, y, x)
    if not res.feasible:
        _emit_json({"feasible": False, "violated": res.violated_index}, args.json)
        return 1
    _emit_json({"feasible": True, "matrix": res.matrix.tolist()}, args.json)
    return 0


def cmd_generator_check(args) -> int:
    doc = load_problem(args.problem)
    if "thermal" not in doc:
        raise InvalidInputError("problem file needs a 'thermal' section")
    setup = gksl.ThermalSetup(np.asarray(doc["thermal"]["H0_diag"], dtype=float),
                              float(doc["thermal"]["T"]))
    h_tot = core.complex_matrix_from_json(doc["H_tot"])
    h_b = core.complex_matrix_from_json(doc["H_B"])
    h = core.complex_matrix_from_json(doc.get("H", np.zeros((setup.n, setup.n))))
    res = gksl.markov_to_generator(h_tot, h_b, h, setup)
    report = gksl.is_ento_generator(res.generator.superoperator, setup)
    out = {"report": report.to_json(),
           "generator": res.generator.superoperator.to_json()}
    _emit_json(out, args.json)
    return 0


def _parse_params(text: str) -> qubit.QubitThermalParams:
    vals = [float(t) for t in text.split(",")]
    if len(vals) == 3:
        mu, eps, cre = vals
        cim = 0.0
    elif len(vals) == 4:
        mu, eps, cre, cim = vals
    else:
        raise InvalidInputError("expected mu,eps,c_re[,c_im]")
    return qubit.QubitThermalParams(mu, eps, complex(cre, cim))


def cmd_qubit(args) -> int:
    if args.qubit_cmd == "classify":
        p = _parse_params(args.params)
        res = qubit.classify(p)
        _emit_json({
            "classification": res.label.value,
            "boundary": res.boundary,
            "thermal_margin": res.thermal_margin,
            "markov_margin": res.markov_margin,
        }, args.json)
        return 0
    if args.qubit_cmd == "compose":
        p1 = _parse_params(args.p1)
        p2 = _parse_params(args.p2)
        p3 = qubit.compose(p1, p2)
        _emit_json({
            "mu": p3.mu, "eps": p3.eps,
            "c": {"re": p3.c.real, "im": p3.c.imag},
            "eps_degenerate": p3.eps_degenerate,
            "markovian": p3.is_markovian(),
        }, args.json)
        return 0
    if args.qubit_cmd == "region":
        samples = qubit.mto_region_sample(args.eps, args.resolution)
        mus = np.linspace(0.0, 1.0, args.resolution)
        rows = [(m, qubit.markov_radius(min(m, 1 / (1 + args.eps)), args.eps), qubit.thermal_radius(m, args.eps))
                for m in mus]
        csv_path = args.csv
        if csv_path is None and args.svg:
            csv_path = os.path.splitext(args.svg)[0] + ".csv"
        _emit_csv(["mu", "r_markov", "r_thermal"], rows, csv_path)
        if args.svg:
            from .figures import render_qubit_region
            render_qubit_region(args.eps, args.svg, resolution=args.resolution)
        del samples
        return 0
    raise InvalidInputError(f"unknown qubit subcommand {args.qubit_cmd!r}")


def cmd_toy(args) -> int:
    doc = load_problem(args.problem) if args.problem else None
    gen = _toy_generator_from(args, doc)
    n = gen.n
    if args.x0 == "d":
        x0 = gen.fixed_point
    elif args.x0 == "uniform":
        x0 = core.ProbVector.uniform(n)
    else:
        x0 = core.ProbVector(_vector(args.x0))

    if args.toy_cmd == "simulate":
        schedule = None
        if args.schedule:
            with open(args.schedule) as fh:
                schedule = toymodel.Schedule.from_json(json.load(fh))
        elif doc and "schedule" in doc:
            schedule = toymodel.Schedule.from_json(doc["schedule"])
        elif args.random_schedule:
            rng = np.random.default_rng(args.seed)
            schedule = toymodel.random_schedule(rng, n)
        traj = toymodel.simulate(x0, gen, schedule, t_final=args.t_final, step=args.step)
        rows = [(t, *state) for t, state in zip(traj.times, traj.states)]
        csv_path = args.csv
        if csv_path is None and args.svg:
            csv_path = os.path.splitext(args.svg)[0] + ".csv"
        _emit_csv(["t"] + [f"x{i + 1}" for i in range(n)], rows, csv_path)
        if args.svg:
            if n != 3:
                raise InvalidInputError("trajectory figures need n = 3")
            from .figures import render_trajectory_figure
            render_trajectory_figure(traj.times, traj.states, gen, args.svg)
        return 0

    if args.toy_cmd == "bound":
        bound = toymodel.reach_bound(x0, gen)
        _emit_json(bound.to_json(), args.json)
        if args.svg:
            if n != 3:
                raise InvalidInputError("bound figures need n = 3")
            cloud = toymodel.trajectory_cloud(x0, gen, count=args.cloud, seed=args.seed)
            from .figures import render_bound_figure
            render_bound_figure(x0.as_array(), bound.z.as_array(), cloud, args.svg)
        return 0
    raise InvalidInputError(f"unknown toy subcommand {args.toy_cmd!r}")


def cmd_qutrit(args) -> int:
    tol = _geo_tol()
    if args.qutrit_cmd == "stab":
        gen = qutrit.qutrit_generator(args.a)
        rows = []
        try:
            arcs = qutrit.stab_boundary(args.a)
            for k, arc in enumerate(arcs):
                lams = np.linspace(arc.lam_range[0], arc.lam_range[1], args.samples)
                pts = arc.sample(args.samples)
                emb = qutrit.EMBED.embed(pts)
                for lam, e, p in zip(lams, emb, pts):
                    rows.append((k, lam, e[0], e[1], *p))
        except InvalidInputError:
            pass
        csv_path = args.csv
        if csv_path is None and args.svg:
            csv_path = os.path.splitext(args.svg)[0] + ".csv"
        _emit_csv(["arc", "lambda", "ex", "ey", "x1", "x2", "x3"], rows, csv_path)
        if args.svg:
            from .figures import render_stab_figure
            render_stab_figure(args.a, args.svg, grid=args.grid, gen=gen)
        return 0

    if args.qutrit_cmd == "reach":
        gen = qutrit.qutrit_generator(args.a)
        x0 = gen.fixed_point.as_array() if args.x0 == "d" else _vector3(args.x0)
        region = qutrit.reachable_set(x0, gen)
        bary = qutrit.EMBED.unembed(region.polygon)
        rows = [(i, e[0], e[1], *b) for i, (e, b) in enumerate(zip(region.polygon, bary))]
        csv_path = args.csv
        if csv_path is None and args.svg:
            csv_path = os.path.splitext(args.svg)[0] + ".csv"
        _emit_csv(["i", "ex", "ey", "x1", "x2", "x3"], rows, csv_path)
        if args.svg:
            from .figures import render_reach_figure
            render_reach_figure(args.a, x0, args.svg, gen=gen, glyphs=args.glyphs)
        return 0

    if args.qutrit_cmd == "order":
        gen = qutrit.qutrit_generator(args.a)
        x = _vector3(args.x)
        y = _vector3(args.y)
        verdict = qutrit.reach_order(x, y, gen, tol=tol)
        _emit_json({"order": verdict}, args.json)
        return 0
    raise InvalidInputError(f"unknown qutrit subcommand {args.qutrit_cmd!r}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thermoctrl",
        description="thermal operations, majorisation geometry, and simplex control")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized outputs")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("curve", help="sample a thermomajorisation curve to CSV")
    p.add_argument("--d", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("polytope", help="halfspaces and vertices of the majorisation polytope")
    p.add_argument("--d", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--json")
    p.set_defaults(fn=cmd_polytope)

    p = sub.add_parser("extremes", help="extreme points of the polytope")
    p.add_argument("--d", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--sigma", help="permutation as comma list; omit for all")
    p.add_argument("--json")
    p.set_defaults(fn=cmd_extremes)

    p = sub.add_parser("transition", help="synthesize a d-stochastic matrix mapping y to x")
    p.add_argument("--d", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--json")
    p.set_defaults(fn=cmd_transition)

    p = sub.add_parser("generator-check", help="build a dilation generator and test wedge membership")
    p.add_argument("--problem", required=True)
    p.add_argument("--json")
    p.set_defaults(fn=cmd_generator_check)

    p = sub.add_parser("qubit", help="single-qubit thermal map algebra")
    qs = p.add_subparsers(dest="qubit_cmd", required=True)
    q = qs.add_parser("classify")
    q.add_argument("--params", required=True, help="mu,eps,c_re[,c_im]")
    q.add_argument("--json")
    q = qs.add_parser("compose")
    q.add_argument("--p1", required=True)
    q.add_argument("--p2", required=True)
    q.add_argument("--json")
    q = qs.add_parser("region")
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--resolution", type=int, default=80)
    q.add_argument("--svg")
    q.add_argument("--csv")
    p.set_defaults(fn=cmd_qubit)

    p = sub.add_parser("toy", help="hybrid simplex control system")
    ts = p.add_subparsers(dest="toy_cmd", required=True)
    t = ts.add_parser("simulate")
    t.add_argument("--a", type=float)
    t.add_argument("--n", type=int, default=3)
    t.add_argument("--problem")
    t.add_argument("--x0", default="d")
    t.add_argument("--schedule")
    t.add_argument("--random-schedule", action="store_true")
    t.add_argument("--t-final", type=float, default=None)
    t.add_argument("--step", type=float, default=0.01)
    t.add_argument("--csv")
    t.add_argument("--svg")
    t = ts.add_parser("bound")
    t.add_argument("--a", type=float)
    t.add_argument("--n", type=int, default=3)
    t.add_argument("--problem")
    t.add_argument("--x0", default="d")
    t.add_argument("--cloud", type=int, default=2000)
    t.add_argument("--json")
    t.add_argument("--svg")
    p.set_defaults(fn=cmd_toy)

    p = sub.add_parser("qutrit", help="three-level stabilisable and reachable sets")
    us = p.add_subparsers(dest="qutrit_cmd", required=True)
    u = us.add_parser("stab")
    u.add_argument("--a", type=float, required=True)
    u.add_argument("--grid", type=int, default=200)
    u.add_argument("--samples", type=int, default=200)
    u.add_argument("--svg")
    u.add_argument("--csv")
    u = us.add_parser("reach")
    u.add_argument("--a", type=float, required=True)
    u.add_argument("--x0", default="d")
    u.add_argument("--glyphs", action="store_true",
                   help="overlay the drift vector field")
    u.add_argument("--svg")
    u.add_argument("--csv")
    u = us.add_parser("order")
    u.add_argument("--a", type=float, required=True)
    u.add_argument("--x", required=True)
    u.add_argument("--y", required=True)
    u.add_argument("--json")
    p.set_defaults(fn=cmd_qutrit)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (InvalidInputError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, IntegrationError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
