"""Command-line interface: JSON/CSV in, JSON/CSV out.

Exit codes: 0 success, 1 usage or input error, 2 a mathematical gate failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from fractions import Fraction

import jsonschema
import numpy as np

from . import dist as dist_mod
from . import fullinfo, lowerbound, mech, multistate, optlp
from .env import MatchingEnvironment, PayoffMatrix, canonicalize, ir_curve
from .experiment import Experiment, experiment_of
from .numeric import PiecewiseLinear, rat_str

SCHEMA_TAG = "infomech/1"
SIG_DIGITS = 12


class UsageError(Exception):
    pass


class GateFailure(Exception):
    def __init__(self, payload):
        super().__init__("gate failed")
        self.payload = payload


# ---------------------------------------------------------------- input schemas

_NUM = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"}]}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_PWL = {"type": "object", "required": ["x", "y"],
        "properties": {"x": {**_VEC, "minItems": 2}, "y": {**_VEC, "minItems": 2}}}

ENV_SCHEMA = {"oneOf": [
    {"type": "object", "required": ["u"],
     "properties": {"n": {"type": "integer"}, "m": {"type": "integer"},
                    "u": {"type": "array", "minItems": 2, "items": {**_VEC, "minItems": 2}}}},
    {"type": "object", "required": ["matching"], "properties": {"matching": {"type": "integer", "minimum": 2}}},
]}

_POINT = {"oneOf": [_NUM, _VEC]}
DIST_SCHEMA = {"oneOf": [
    {"type": "object", "required": ["family"], "properties": {
        "family": {"enum": ["uniform", "exp", "normal", "er"]},
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "sigma2": {"type": "number", "exclusiveMinimum": 0},
        "h": _PWL, "a": _NUM, "b": _NUM}},
    {"type": "object", "required": ["grid"], "properties": {
        "grid": {"type": "object", "required": ["theta", "mass"],
                 "properties": {"theta": {"type": "array", "items": _POINT, "minItems": 1}, "mass": _VEC}}}},
]}

_EXPERIMENT = {"oneOf": [
    {"type": "object", "required": ["pi"], "properties": {"pi": {"type": "array", "items": _VEC, "minItems": 1}}},
    {"type": "object", "required": ["q"], "properties": {"q": _NUM}},
]}
_OPTION = {"type": "object", "required": ["experiment", "price"], "properties": {"experiment": _EXPERIMENT, "price": _NUM}}
MENU_SCHEMA = {"type": "object", "required": ["options"],
               "properties": {"options": {"type": "array", "items": _OPTION, "minItems": 1}}}
MECH_SCHEMA = {"type": "object", "required": ["grid", "options", "assignment"], "properties": {
    "grid": DIST_SCHEMA["oneOf"][1]["properties"]["grid"],
    "options": {"type": "array", "items": _OPTION, "minItems": 1},
    "assignment": {"type": "array", "items": {"type": "integer", "minimum": 0}}}}


# ---------------------------------------------------------------- output schemas

def _obj(required, props=None):
    props = dict(props or {})
    props["schema"] = {"const": SCHEMA_TAG}
    return {"type": "object", "required": ["schema", *required], "properties": props}


_RAT = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}
_NUMOUT = {"oneOf": [{"type": "number"}, _RAT]}
_BOOL = {"type": "boolean"}

OUTPUT_SCHEMAS = {
    "canon": _obj(["env", "transform", "identity"], {"identity": _BOOL}),
    "ircurve": _obj(["pieces", "slopes", "segments"], {"pieces": {"type": "integer"}}),
    "frev": _obj(["price", "revenue", "grid"], {"price": _NUMOUT, "revenue": _NUMOUT}),
    "opt": _obj(["revenue", "options", "option_size"], {
        "revenue": {"type": "number"}, "option_size": {"type": "integer"},
        "options": {"type": "array", "items": {"type": "object", "required": ["q", "price", "type_interval"],
                                               "properties": {"type_interval": {"type": "array", "minItems": 2, "maxItems": 2}}}}}),
    "fullinfo-check": _obj(["premise", "certificate", "ok"], {"premise": _BOOL, "ok": _BOOL}),
    "lowerbound": _obj(["m", "eps", "delta", "delta_bound", "delta_bound_ok", "ir_ok", "frev", "revenue"], {
        "m": {"type": "integer"}, "eps": _RAT, "delta": _RAT, "delta_bound": _RAT,
        "delta_bound_ok": _BOOL, "ir_ok": _BOOL, "frev": _RAT, "revenue": _RAT}),
    "multistate": _obj(["ratio_lb", "frev", "rev", "ic_ok", "points"], {
        "ic_ok": _BOOL, "points": {"type": "array"}}),
    "multistate-uniform": _obj(["grid", "price", "revenue", "argmax"], {"grid": {"type": "integer"}}),
    "verify": _obj(["ir_violation", "ic_violation", "ic_identity_violation", "ok"], {"ok": _BOOL}),
    "extract": _obj(["price", "revenue", "mechanism_revenue", "option_size"], {"option_size": {"type": "integer"}}),
}


# ---------------------------------------------------------------- formatting

def fmt_float(x: float):
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")


def to_plain(obj):
    """Recursively convert to JSON-ready values: Fractions as "p/q", floats
    rounded to 12 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        return rat_str(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_plain(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def emit(command, payload, out=None):
    doc = {"schema": SCHEMA_TAG, **to_plain(payload)}
    jsonschema.validate(doc, OUTPUT_SCHEMAS[command])
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return doc


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([rat_str(v) if isinstance(v, Fraction) else f"{float(v):.{SIG_DIGITS}g}" if isinstance(v, (float, np.floating)) else v for v in r])
    if path:
        with open(path, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


# ---------------------------------------------------------------- input parsing

def _load(arg, schema, what):
    """Load JSON from a path or an inline JSON string and validate it."""
    if arg is None:
        raise UsageError(f"missing --{what}")
    text = arg
    if not arg.lstrip().startswith(("{", "[")):
        if not os.path.exists(arg):
            raise UsageError(f"{what}: no such file {arg}")
        with open(arg) as fh:
            text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{what}: malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(obj))
    if err is not None:
        raise UsageError(f"{what}: schema violation at {err.json_path}: {err.message}")
    return obj


def _num(v):
    if isinstance(v, str):
        return Fraction(v.replace(" ", ""))
    if isinstance(v, int):
        return Fraction(v)
    return float(v)


def _nums(vals):
    out = [_num(v) for v in vals]
    if any(isinstance(v, float) for v in out):
        return [float(v) for v in out]
    return out


def parse_env(obj):
    if "matching" in obj:
        return MatchingEnvironment(int(obj["matching"]))
    flat = _nums([v for r in obj["u"] for v in r])
    m = len(obj["u"][0])
    if any(len(r) != m for r in obj["u"]):
        raise UsageError("env: rows of u must have equal length")
    rows = [tuple(flat[i * m:(i + 1) * m]) for i in range(len(obj["u"]))]
    if obj.get("n", len(rows)) != len(rows) or obj.get("m", m) != m:
        raise UsageError("env: n/m disagree with u")
    return PayoffMatrix(tuple(rows))


def parse_dist(obj):
    if "grid" in obj:
        g = obj["grid"]
        theta = [(_nums(t) if isinstance(t, list) else _num(t)) for t in g["theta"]]
        mass = _nums(g["mass"])
        if any(isinstance(t, float) or (isinstance(t, list) and isinstance(t[0], float)) for t in theta) or \
                any(isinstance(v, float) for v in mass):
            theta = [([float(x) for x in t] if isinstance(t, list) else float(t)) for t in theta]
            mass = [float(v) for v in mass]
            return dist_mod.TypeGrid(theta, np.asarray(mass))
        return dist_mod.TypeGrid([tuple(t) if isinstance(t, list) else t for t in theta], tuple(mass))
    fam = obj["family"]
    if fam == "uniform":
        return dist_mod.uniform()
    if fam == "exp":
        return dist_mod.exponential(float(obj.get("lambda", 1.0)))
    if fam == "normal":
        return dist_mod.normal(float(obj.get("sigma2", 1.0)))
    h = PiecewiseLinear.from_json(obj["h"])
    return dist_mod.er_dist(h, float(_num(obj["a"])) if "a" in obj else None,
                            float(_num(obj["b"])) if "b" in obj else None)


def _dist_arg(arg):
    if arg in ("uniform",):
        return {"family": arg}
    return _load(arg, DIST_SCHEMA, "dist")


def parse_option(obj, env):
    E = obj["experiment"]
    if "q" in E:
        exp = experiment_of(_num(E["q"]), env)
    else:
        flat = _nums([v for r in E["pi"] for v in r])
        k = len(E["pi"][0])
        exp = Experiment(tuple(tuple(flat[i * k:(i + 1) * k]) for i in range(len(E["pi"]))))
    return exp, _num(obj["price"])


def parse_mechanism(obj, env):
    grid = parse_dist({"grid": obj["grid"]})
    options = [parse_option(o, env) for o in obj["options"]]
    return mech.Mechanism(grid, tuple(options), tuple(obj["assignment"]))


def _grid_of(d, N):
    return d if isinstance(d, dist_mod.TypeGrid) else dist_mod.discretize(d, N)


def _exact_or_float(v):
    return v if isinstance(v, Fraction) else float(v)


# ---------------------------------------------------------------- commands

def cmd_canon(a):
    env = parse_env(_load(a.env, ENV_SCHEMA, "env"))
    if isinstance(env, MatchingEnvironment):
        return emit("canon", {"env": env.to_json(), "transform": None, "identity": True}, a.out)
    canon, log = canonicalize(env)
    return emit("canon", {"env": canon.to_json(), "transform": log.to_json(), "identity": log.is_identity()}, a.out)


def cmd_ircurve(a):
    env = parse_env(_load(a.env, ENV_SCHEMA, "env"))
    canon, _ = canonicalize(env)
    curve = ir_curve(canon).curve
    segs = []
    for (x0, x1), (y0, y1), s in zip(zip(curve.xs, curve.xs[1:]), zip(curve.ys, curve.ys[1:]), curve.slopes()):
        segs.append((x0, y0, x1, y1, s))
    payload = {"pieces": len(segs), "slopes": [_exact_or_float(s) for s in curve.slopes()],
               "segments": [[_exact_or_float(v) for v in s] for s in segs]}
    if a.out:
        # --out names the CSV here; the JSON summary always goes to stdout
        _write_csv(a.out, ["x0", "y0", "x1", "y1", "slope"], segs)
    return emit("ircurve", payload)


def cmd_frev(a):
    env = parse_env(_load(a.env, ENV_SCHEMA, "env"))
    grid = _grid_of(parse_dist(_dist_arg(a.dist)), a.grid)
    price, rev = mech.frev(env, grid)
    if a.curve:
        prices = np.linspace(0.0, float(np.max(np.asarray(mech.gains(env, grid), float))), a.points)
        _write_csv(a.curve, ["price", "revenue"], zip(prices, mech.frev_curve(env, grid, prices)))
    return emit("frev", {"price": price, "revenue": rev, "grid": len(grid)}, a.out)


def cmd_opt(a):
    env = parse_env(_load(a.env, ENV_SCHEMA, "env"))
    canon, log = canonicalize(env)
    d = parse_dist(_dist_arg(a.dist))
    sol, m = optlp.solve_optmech(canon, d, a.grid, method=a.method)
    pts = [float(p) for p in m.grid.points]
    options = []
    for k, (E, price) in enumerate(m.options):
        members = [i for i, j in enumerate(m.assignment) if j == k]
        q = sol.q[members[0]]
        options.append({"q": q, "price": float(price), "type_interval": [pts[members[0]], pts[members[-1]]]})
    return emit("opt", {"revenue": sol.revenue, "options": options, "option_size": m.option_size,
                        "objective": sol.objective, "grid": len(m.grid),
                        "revenue_raw_units": sol.revenue * float(log.scale)}, a.out)


def cmd_fullinfo_check(a):
    env = parse_env(_load(a.env, ENV_SCHEMA, "env"))
    canon, _ = canonicalize(env)
    d = parse_dist(_dist_arg(a.dist))
    if a.p is None:
        premise = fullinfo.check_premise(canon, d)
        cert = fullinfo.certify_full_information(canon, d) if premise else None
    else:
        premise = fullinfo.check_premise(canon, d)
        if a.eta is None:
            raise UsageError("--p needs --eta")
        cert = fullinfo.check_fullinfo_optimal(canon, d, float(_num(a.p)), float(_num(a.eta)),
                                               float(_num(a.lam)) if a.lam is not None else 0.0)
    ok = bool(cert is not None and cert.ok)
    doc = {"premise": premise, "certificate": cert.to_json() if cert else None, "ok": ok}
    if not ok:
        raise GateFailure(("fullinfo-check", doc))
    return emit("fullinfo-check", doc, a.out)


def cmd_lowerbound(a):
    eps = Fraction(a.eps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = lowerbound.build(a.m, eps)
        M = lowerbound.mechanism_M(c)
        delta, ir_ok = lowerbound.verify_lb(c, M, raise_on_fail=False)
        bound = lowerbound.delta_bound(c)
        s = lowerbound.revenue_and_ratio(c, M, check=False)
        menu = lowerbound.lb_menu(c, M, Fraction(a.eta))
        mrev = lowerbound.menu_revenue(c, menu)
    doc = {"m": a.m, "eps": eps, "delta": delta, "delta_bound": bound, "delta_bound_ok": delta <= bound,
           "ir_ok": ir_ok, "frev": s.frev, "revenue": s.revenue, "menu_revenue": mrev,
           "summary": {"surplus_ratio": s.surplus_ratio, "revenue_ratio": s.revenue_ratio,
                       "menu_ratio": float(mrev / s.frev),
                       "menu_threshold": math.log(2 ** (a.m - 1) - 1) / 18 - 21 * float(eps),
                       "support": [float(c.a), float(c.b)]}}
    if a.emit_menu:
        with open(a.emit_menu, "w") as fh:
            fh.write(json.dumps(to_plain(menu.to_json()), indent=2) + "\n")
    if not (doc["delta_bound_ok"] and ir_ok):
        raise GateFailure(("lowerbound", doc))
    return emit("lowerbound", doc, a.out)


def cmd_multistate(a):
    eps = Fraction(a.eps)
    ys, gaps = multistate.shell_points(a.n)
    inst = multistate.build_ratio_instance(ys, eps, gaps)
    M = multistate.mechanism_from_instance(inst)
    try:
        rep = multistate.certify(inst, M)
    except multistate.CertificationError as e:
        raise GateFailure(("multistate", {"ratio_lb": inst.ratio_lb, "frev": None, "rev": None,
                                          "ic_ok": False, "points": [], "error": str(e)})) from None
    points = [{"y": [float(v) for v in y], "gap": float(g), "x": [float(v) for v in x[:2]],
               "mass": float(w), "option": k}
              for y, g, x, w, k in zip(inst.ys, inst.gaps, inst.xs, inst.masses, M.assignment)]
    doc = {"ratio_lb": float(rep.ratio_lb), "frev": float(rep.frev), "rev": float(rep.revenue),
           "ratio": float(rep.ratio), "ratio_integral": float(rep.ratio_integral),
           "sum_gap": float(sum(inst.gaps)), "ic_ok": rep.ic_ok, "points": points}
    if rep.ratio < rep.ratio_lb:
        raise GateFailure(("multistate", doc))
    return emit("multistate", doc, a.out)


def cmd_multistate_uniform(a):
    prices = np.linspace(0.0, 2 / 3, a.points)
    p, rev = multistate.uniform_simplex_curve(a.grid, prices)
    analytic = np.where(p <= 1 / 3, multistate.uniform_simplex_analytic(p), np.nan)
    price, best = multistate.uniform_simplex_frev(a.grid)
    k = int(np.argmax(rev))
    doc = {"grid": a.grid, "price": price, "revenue": best, "argmax": [float(p[k]), float(rev[k])]}
    if a.curve:
        _write_csv(a.curve, ["price", "revenue", "analytic"], zip(p, rev, analytic))
    else:
        doc["curve"] = [[float(x), float(y)] for x, y in zip(p, rev)]
    return emit("multistate-uniform", doc, a.out)


def cmd_verify(a):
    env = parse_env(_load(a.env, ENV_SCHEMA, "env"))
    m = parse_mechanism(_load(a.mech, MECH_SCHEMA, "mech"), env)
    rep = mech.verify(m, env, enumerate_sigma=a.enumerate)
    tol = 0 if m.grid.exact else a.tol
    doc = {**rep.to_json(), "ok": rep.ok(tol)}
    if not doc["ok"]:
        raise GateFailure(("verify", doc))
    return emit("verify", doc, a.out)


def cmd_extract(a):
    env = parse_env(_load(a.env, ENV_SCHEMA, "env"))
    m = parse_mechanism(_load(a.mech, MECH_SCHEMA, "mech"), env)
    rev = mech.revenue(m, env)
    if a.mode == "bucket":
        menu = mech.Menu(m.options)
        price, r, k = mech.price_bucket_extraction(menu, env, m.grid)
        extra = {"buckets": k}
    else:
        price, r = mech.full_info_extraction(m, env)
        extra = {}
    return emit("extract", {"price": price, "revenue": r, "mechanism_revenue": rev,
                            "option_size": m.option_size, **extra}, a.out)


# ---------------------------------------------------------------- entry point

def build_parser():
    ap = argparse.ArgumentParser(prog="infomech", description="Price and certify mechanisms for selling information.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("--out", help="output path (default stdout)")
        return p

    p = add("canon", cmd_canon, "canonicalize a payoff matrix")
    p.add_argument("--env", required=True)
    p = add("ircurve", cmd_ircurve, "IR curve segments")
    p.add_argument("--env", required=True)
    p = add("frev", cmd_frev, "best price for complete information")
    p.add_argument("--env", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--grid", type=int, default=400)
    p.add_argument("--curve", help="write p -> revenue CSV here")
    p.add_argument("--points", type=int, default=201)
    p = add("opt", cmd_opt, "optimal obedient-IC mechanism via LP")
    p.add_argument("--env", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--grid", type=int, default=400)
    p.add_argument("--method", choices=["highs", "simplex"], default="highs")
    p = add("fullinfo-check", cmd_fullinfo_check, "certificate that complete information is optimal")
    p.add_argument("--env", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--p")
    p.add_argument("--eta")
    p.add_argument("--lambda", dest="lam")
    p = add("lowerbound", cmd_lowerbound, "exact lower-bound construction")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--eta", default="1/2")
    p.add_argument("--emit-menu", dest="emit_menu")
    p = add("multistate", cmd_multistate, "three-state ratio construction")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", default="1/3")
    p = add("multistate-uniform", cmd_multistate_uniform, "complete-information revenue curve, uniform prior on the simplex")
    p.add_argument("--grid", type=int, default=300)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--curve", help="write CSV here (default stdout)")
    p = add("verify", cmd_verify, "IC/IR check of a mechanism")
    p.add_argument("--env", required=True)
    p.add_argument("--mech", required=True)
    p.add_argument("--enumerate", action="store_true", help="enumerate every signal-to-action map")
    p.add_argument("--tol", type=float, default=1e-8)
    p = add("extract", cmd_extract, "sell complete information at one of a mechanism's prices")
    p.add_argument("--env", required=True)
    p.add_argument("--mech", required=True)
    p.add_argument("--mode", choices=["slice", "bucket"], default="slice")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code else 0
    try:
        args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except GateFailure as g:
        command, doc = g.payload
        emit(command, doc, None if command == "ircurve" else getattr(args, "out", None))
        print(f"error: {command} gate failed", file=sys.stderr)
        return 2
    except (ValueError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
