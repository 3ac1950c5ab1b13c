"""Command-line front end.

Every command writes a JSON document with "schema_version": 1 to standard
output (or --output) and exits 0 for Verified/true, 1 for Falsified/false,
2 for Inconclusive/partial and 64 for usage errors.

Option precedence: command-line flag, then the --config JSON file, then the
built-in default.
"""
import argparse
from dataclasses import dataclass, field
from fractions import Fraction
import json
import math
import os
from pathlib import Path
import sys

import numpy as np

from . import certify as cz
from . import convexity, isotopy, topo
from .curvature import WarpedMetric
from .profiles import make_profile

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FALSE, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2, 64
FIXTURES = Path(__file__).resolve().parent / "fixtures"

DEFAULTS = {"grid": None, "output": None, "threads": None,
            "variant": None, "budget": None}
VERDICT_EXIT = {cz.VERIFIED: EXIT_OK, cz.FALSIFIED: EXIT_FALSE, cz.INCONCLUSIVE: EXIT_PARTIAL,
                cz.GRID_POSITIVE: EXIT_PARTIAL}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    grid: int = None
    mode: str = None
    output: str = None
    options: dict = field(default_factory=dict)

    def validate(self):
        for p in self.inputs:
            if not Path(p).is_file():
                raise UsageError(f"no such file: {p}")
        if self.grid is not None and self.grid < 8:
            raise UsageError("grid counts must be at least 8 per axis")
        if self.mode not in (None, "heuristic", "certified"):
            raise UsageError(f"unknown mode {self.mode!r}")

    def echo(self):
        """The resolved configuration, without settings that cannot change the result."""
        opts = {k: v for k, v in sorted(self.options.items()) if k not in ("threads", "output", "config")}
        return {"command": self.command, "grid": self.grid, "mode": self.mode, "options": opts}


# ---- JSON ----

def jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {_key(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _key(k):
    if isinstance(k, tuple):
        return ",".join(str(jsonable(v)) for v in k)
    if isinstance(k, Fraction):
        return jsonable(k)
    return str(k)


def dumps(doc):
    return json.dumps(jsonable(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"


def emit(cfg, result, code):
    doc = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(), "exit_code": code, "result": result}
    text = dumps(doc)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}")


def fixture_path(name):
    """A path as given, or the name of a shipped fixture."""
    p = Path(name)
    if p.is_file():
        return str(p)
    q = FIXTURES / name
    return str(q) if q.is_file() else str(p)


# ---- commands ----

def cmd_verify_drup(cfg, a):
    g = WarpedMetric.from_json(_load_json(cfg.inputs[0]))
    cert = isotopy.certify_metric(g, cfg.grid or isotopy.GRID, cfg.mode, a.threads)
    return cert.to_json(), VERDICT_EXIT[cert.verdict]


def cmd_verify_path(cfg, a):
    g = WarpedMetric.from_json(_load_json(cfg.inputs[0]))
    grid = (cfg.grid or isotopy.GRID, isotopy.LAM_GRID)
    out = {"stages": []}
    verdicts = []
    if g.kind == "singly-warped":
        path = isotopy.connect_boundary_path(g.p, g.q, cfg.options.get("variant") or "corrected")
        cert = isotopy.certify_path(path, grid, cfg.mode, a.threads)
        out["stages"].append({"path": path.to_json(), "certificate": cert.to_json()})
        verdicts.append(cert.verdict)
        ends = path.closure_reports([path.lam[1]])
    else:
        p1 = isotopy.stage_one_path(g)
        c1 = isotopy.certify_path(p1, grid, cfg.mode, a.threads)
        p2 = isotopy.stage_two_path(p1.metric_at(1.0), cfg.options.get("variant") or "closure")
        c2 = isotopy.certify_path(p2, grid, cfg.mode, a.threads)
        for p, c in ((p1, c1), (p2, c2)):
            out["stages"].append({"path": p.to_json(), "certificate": c.to_json()})
            verdicts.append(c.verdict)
        ends = p2.closure_reports([2.0])
    lam, reps = ends[0]
    closed = all(r.passed for r in reps)
    out["closure"] = {"lambda": lam, "passed": closed, "reports": [r.to_json() for r in reps]}
    verdict = _merge(verdicts + [cz.VERIFIED if closed else cz.FALSIFIED])
    out["verdict"] = verdict
    return out, VERDICT_EXIT[verdict]


def _merge(vs):
    if cz.FALSIFIED in vs:
        return cz.FALSIFIED
    if all(v == cz.VERIFIED for v in vs):
        return cz.VERIFIED
    return cz.INCONCLUSIVE


def cmd_verify_disk(cfg, a):
    g = WarpedMetric.from_json(_load_json(cfg.inputs[0])) if cfg.inputs else None
    cert = convexity.disk_lemma_pipeline(a.n, a.m, a.rho, a.c, g=g, grid=cfg.grid or isotopy.GRID,
                                         mode=cfg.mode, threads=a.threads)
    return cert.to_json(), VERDICT_EXIT[cert.verdict]


def _blocks(path):
    d = _load_json(path)
    return {k: np.asarray(v, dtype=float) for k, v in d.items()}


def cmd_glue_check(cfg, a):
    v = convexity.glue_check(_blocks(cfg.inputs[0]), _blocks(cfg.inputs[1]))
    return v.to_json(), VERDICT_EXIT[v.verdict]


def cmd_classify_boundary(cfg, a):
    d = _load_json(cfg.inputs[0])
    fam = convexity.BoundaryFamily([
        convexity.BoundaryMember(float(mem.get("nu", 0.0)), make_profile(mem["boundary"]),
                                 {k: np.asarray(v, dtype=float) for k, v in mem["blocks"].items()})
        for mem in d["members"]])
    res = convexity.classify_boundary(fam, tol=a.tol)
    return res, EXIT_FALSE if res["class"] == "Neither" else EXIT_OK


def cmd_bp_order(cfg, a):
    rep = topo.bp_order_report(a.k)
    return rep, EXIT_OK


def cmd_genus(cfg, a):
    data = topo.PontryaginData.from_json(_load_json(cfg.inputs[0]))
    series = {"ahat": "ahat", "l": "L"}[a.series]
    val = topo.genus(data, series)
    polys = topo.mult_seq_polynomials(series, data.k)
    return {"series": a.series, "k": data.k, "numbers": data.to_json()["numbers"], "value": val,
            "polynomial": topo.poly_text(polys[-1]), "integral": val.denominator == 1}, EXIT_OK


def cmd_lens_check(cfg, a):
    rep = topo.lens_report(topo.LensSpace(a.M, tuple(a.q)))
    return rep, EXIT_OK if rep["admissible"] else EXIT_FALSE


def cmd_lens_search(cfg, a):
    budget = cfg.options.get("budget")
    try:
        res = topo.lens_search(a.M, a.K, budget)
    except topo.BudgetExceeded as e:
        return {"m": a.M, "k": a.K, "tuples": e.partial, "examined": e.examined, "exhaustive": False}, EXIT_PARTIAL
    return {"m": a.M, "k": a.K, "tuples": res.tuples, "examined": res.examined,
            "exhaustive": res.exhaustive}, EXIT_OK if res.tuples else EXIT_FALSE


def _qrange(text):
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise UsageError(f"--q-range expects A..B, got {text!r}")
    if lo > hi:
        raise UsageError("--q-range must have A <= B")
    return tuple(range(lo, hi + 1))


def cmd_components(cfg, a):
    led = topo.ComponentLedger(a.k, _qrange(a.q_range), Fraction(a.c), Fraction(a.s0))
    return topo.component_ledger_eval(led, a.m), EXIT_OK


def cmd_check_cert(cfg, a):
    """Re-run the recorded configuration and compare the result field by field."""
    doc = _load_json(cfg.inputs[0])
    if doc.get("schema_version") != SCHEMA_VERSION:
        return {"consistent": False, "problems": ["unsupported schema_version"]}, EXIT_FALSE
    rec = doc["config"]
    argv = rerun_argv(rec)
    buf = _Capture()
    code = run(argv + ["--output", buf.path])
    fresh = json.loads(Path(buf.path).read_text())
    buf.close()
    problems = []
    if code != doc.get("exit_code"):
        problems.append(f"exit code {code} differs from recorded {doc.get('exit_code')}")
    problems += _diff(doc["result"], fresh["result"], "result")
    problems += _margins(doc["result"], "result")
    return {"consistent": not problems, "problems": problems[:50], "argv": argv}, \
        EXIT_OK if not problems else EXIT_FALSE


class _Capture:
    def __init__(self):
        import tempfile
        fd, self.path = tempfile.mkstemp(suffix=".json")
        os.close(fd)

    def close(self):
        os.unlink(self.path)


def rerun_argv(rec):
    opts = dict(rec["options"])
    cmd = rec["command"]
    argv = [cmd]
    for name in opts.pop("_positional", []):
        argv.append(str(name))
    for k, v in sorted(opts.items()):
        if v is None or k == "_positional":
            continue
        flag = "--" + k.replace("_", "-")
        if isinstance(v, list):
            argv += [flag] + [str(x) for x in v]
        else:
            argv.append(f"{flag}={v}")
    if rec.get("grid") is not None:
        argv += ["--grid", str(rec["grid"])]
    if rec.get("mode") is not None:
        argv += ["--mode", rec["mode"]]
    return argv


def _diff(a, b, where):
    if type(a) != type(b):
        return [f"{where}: type {type(a).__name__} vs {type(b).__name__}"]
    if isinstance(a, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append(f"{where}.{k}: present on one side only")
            else:
                out += _diff(a[k], b[k], f"{where}.{k}")
        return out
    if isinstance(a, list):
        if len(a) != len(b):
            return [f"{where}: length {len(a)} vs {len(b)}"]
        out = []
        for i, (x, y) in enumerate(zip(a, b)):
            out += _diff(x, y, f"{where}[{i}]")
        return out
    return [] if a == b else [f"{where}: {a!r} vs {b!r}"]


def _margins(node, where):
    """Recompute margin = grid_min - slack for every embedded certificate."""
    out = []
    if isinstance(node, dict):
        if {"grid_min", "spacing", "derivative_bound", "margin", "verdict"} <= set(node) and not node.get("boxes"):
            ab = node.get("axis_bounds")
            if ab:
                slack = sum(b * d for b, d in zip(ab, node["spacing"])) / 2
            else:
                slack = node["derivative_bound"] * math.sqrt(sum(d * d for d in node["spacing"])) / 2
            m = node["grid_min"] - slack
            if node["verdict"] == cz.VERIFIED and not (m > 0 or node["margin"] > 0):
                out.append(f"{where}: Verified with non-positive margin")
            if node["verdict"] == cz.FALSIFIED and node.get("witness_value") is not None \
                    and not node["witness_value"] <= 0:
                out.append(f"{where}: Falsified with a positive witness value")
        for k, v in node.items():
            out += _margins(v, f"{where}.{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            out += _margins(v, f"{where}[{i}]")
    return out


# ---- parser ----

def _common(p, grid=True, mode=True):
    p.add_argument("--config", help="JSON file of option defaults (flags override it)")
    p.add_argument("--output", help="write the JSON document here instead of standard output")
    p.add_argument("--threads", type=int, help="worker threads (default: RICCICERT_THREADS or all cores)")
    if grid:
        p.add_argument("--grid", type=int, help="grid points along r (default 512)")
    if mode:
        p.add_argument("--mode", choices=("heuristic", "certified"), help="certification mode (default certified)")


def build_parser():
    ap = _Parser(prog="riccicert", description=__doc__,
                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("verify-drup", help="certify Ricci positivity of a warped metric fixture")
    p.add_argument("--fixture", required=True)
    _common(p)

    p = sub.add_parser("verify-path", help="certify the deformation paths of a fixture")
    p.add_argument("--fixture", required=True)
    p.add_argument("--variant", help="closure|uncorrected (doubly warped), corrected|uncorrected (singly)")
    _common(p)

    p = sub.add_parser("verify-disk", help="run the convex-disk pipeline")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--c", type=float, default=0.2)
    p.add_argument("--fixture")
    _common(p)

    p = sub.add_parser("glue-check", help="positivity of the summed second fundamental forms")
    p.add_argument("blocks", nargs=2, metavar="BLOCKS_JSON")
    _common(p, grid=False, mode=False)

    p = sub.add_parser("classify-boundary", help="Core / Socket / Neither for a boundary family")
    p.add_argument("family", metavar="FAMILY_JSON")
    p.add_argument("--tol", type=float, default=1e-6)
    _common(p, grid=False, mode=False)

    p = sub.add_parser("bp-order", help="order of bP_4k")
    p.add_argument("k", type=int)
    _common(p, grid=False, mode=False)

    p = sub.add_parser("genus", help="A-hat or L genus of Pontryagin numbers")
    p.add_argument("--series", choices=("ahat", "l"), required=True)
    p.add_argument("--numbers", required=True)
    _common(p, grid=False, mode=False)

    p = sub.add_parser("lens-check", help="Pontryagin-class admissibility of L(M; q...)")
    p.add_argument("M", type=int)
    p.add_argument("q", type=int, nargs="+")
    _common(p, grid=False, mode=False)

    p = sub.add_parser("lens-search", help="all admissible L(M; q_1..q_2K) up to equivalence")
    p.add_argument("M", type=int)
    p.add_argument("K", type=int)
    p.add_argument("--budget", type=int)
    _common(p, grid=False, mode=False)

    p = sub.add_parser("components", help="path-component ledger")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--c", default="1")
    p.add_argument("--s0", default="0")
    p.add_argument("--q-range", required=True)
    p.add_argument("--m", type=int)
    _common(p, grid=False, mode=False)

    p = sub.add_parser("check-cert")
    p.add_argument("cert")
    _common(p, grid=False, mode=False)
    # hidden from the help listing
    sub._choices_actions = [c for c in sub._choices_actions if c.dest != "check-cert"]
    return ap


COMMANDS = {
    "verify-drup": (cmd_verify_drup, ("fixture",), ()),
    "verify-path": (cmd_verify_path, ("fixture",), ()),
    "verify-disk": (cmd_verify_disk, ("fixture",), ()),
    "glue-check": (cmd_glue_check, ("blocks",), ()),
    "classify-boundary": (cmd_classify_boundary, ("family",), ()),
    "bp-order": (cmd_bp_order, (), ("k",)),
    "genus": (cmd_genus, ("numbers",), ()),
    "lens-check": (cmd_lens_check, (), ("M", "q")),
    "lens-search": (cmd_lens_search, (), ("M", "K")),
    "components": (cmd_components, (), ()),
    "check-cert": (cmd_check_cert, ("cert",), ()),
}
FILE_OPTS = {"fixture", "numbers"}
POSITIONAL_FILES = {"blocks", "family", "cert"}


def resolve(a):
    """Apply config-file values to options the command line left unset."""
    conf = {}
    if getattr(a, "config", None):
        conf = _load_json(a.config)
        if not isinstance(conf, dict):
            raise UsageError("--config must hold a JSON object")
    for k, v in conf.items():
        k = k.replace("-", "_")
        if hasattr(a, k) and getattr(a, k) is None:
            setattr(a, k, v)
    for k, v in DEFAULTS.items():
        if hasattr(a, k) and getattr(a, k) is None:
            setattr(a, k, v)
    if a.threads is None:
        a.threads = cz.default_threads()
    return a


def run(argv=None):
    ap = build_parser()
    cfg = None
    try:
        a = ap.parse_args(argv)
        if not a.command:
            ap.print_usage(sys.stderr)
            return EXIT_USAGE
        a = resolve(a)
        if hasattr(a, "mode") and a.mode is None:
            a.mode = "certified"
        fn, files, positional = COMMANDS[a.command]
        inputs = []
        for name in files:
            v = getattr(a, name, None)
            if v is None:
                continue
            vs = v if isinstance(v, list) else [v]
            vs = [fixture_path(x) for x in vs]
            setattr(a, name, vs if isinstance(v, list) else vs[0])
            inputs += vs
        skip = {"command", "config", "output", "threads", "grid", "mode"} | set(positional)
        opts = {k: v for k, v in vars(a).items() if k not in skip}
        pos = []
        for name in positional:
            v = getattr(a, name)
            pos += v if isinstance(v, list) else [v]
        for name in POSITIONAL_FILES & set(opts):
            v = opts.pop(name)
            pos += v if isinstance(v, list) else [v]
        opts["_positional"] = pos
        cfg = RunConfig(a.command, inputs, getattr(a, "grid", None), getattr(a, "mode", None),
                        a.output, opts)
        cfg.validate()
        result, code = fn(cfg, a)
    except UsageError as e:
        print(f"riccicert: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except (ValueError, KeyError) as e:
        print(f"riccicert: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE if isinstance(e, KeyError) else _error_code(e, cfg)
    return emit(cfg, result, code)


def _error_code(e, cfg):
    """Domain errors that are verdicts (violated hypotheses) exit 1; others are usage errors."""
    if isinstance(e, (isotopy.HypothesisViolated, convexity.BoundaryNotRound)):
        if cfg is not None:
            return emit(cfg, {"verdict": cz.FALSIFIED, "error": type(e).__name__, "message": str(e),
                              "witness": getattr(e, "witness", None), "value": getattr(e, "value", None)},
                        EXIT_FALSE)
        return EXIT_FALSE
    return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
