"""Command-line front end.

Exit status: 0 on success, 1 on bad input, 2 when a Faber-Krahn verdict is
``violated`` or a check suite fails, 3 when a numerical solve fails.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, fem
from .errors import InputError, NumericError, UnsupportedError
from .mesh import generate_mesh, write_mesh
from .radial import RadialProblem, first_eigenvalue_radial
from .specs import norm_label, parse_domain, parse_norm

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["RunConfig", "run", "main"]

COMMANDS = ("radial", "solve", "faber-krahn", "sweep", "check")
DEFAULT_DOMAINS = ["square", "rect:1.4142135623730951,0.7071067811865476", "rect:2,0.5", "triangle"]
DEFAULT_NORMS = ["euclidean", "quadratic:4,0,0,1", "quadratic:2,1,1,2"]
SCHEMA_HINT = "see the Configuration section of the README"


@dataclass
class RunConfig:
    command: str
    n: int = 2
    p: float = 2.0
    R: float = 1.0
    beta: float = 1.0
    h: float = 0.02
    norm: object = "euclidean"
    domain: str = "square"
    tol: float = 0.0
    seed: int = 0
    max_iters: int = 20000
    sweep: str = ""
    domains: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    aspect_ratios: list = field(default_factory=list)
    area: float = 1.0
    suite: str = "all"
    out: str = ""
    profile: str = ""
    mesh_out: str = ""
    u_out: str = ""

    @classmethod
    def keys(cls):
        return set(cls.__dataclass_fields__)

    def validate(self):
        for name, kind in (("p", float), ("R", float), ("beta", float), ("h", float),
                           ("tol", float), ("area", float), ("n", int), ("seed", int),
                           ("max_iters", int)):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InputError(f"{name} must be a number, got {value!r}")
            setattr(self, name, kind(value))
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.command == "check" and self.suite not in ("norms", "geometry", "radial", "fem", "analysis", "all"):
            raise InputError(f"unknown suite {self.suite!r}")
        return self


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _parse_sweep(text):
    """``KEY=START:STOP:log10`` (one point per decade) or ``KEY=START:STOP:COUNT[:log]``."""
    try:
        key, rng = text.split("=", 1)
        parts = rng.split(":")
        start, stop = float(parts[0]), float(parts[1])
        if len(parts) == 3 and parts[2] == "log10":
            if start <= 0 or stop <= start:
                raise ValueError
            lo, hi = np.log10(start), np.log10(stop)
            exps = lo + np.arange(int(np.floor(hi - lo + 1e-9)) + 1)
            vals = 10.0 ** exps
        else:
            count = int(parts[2])
            log = len(parts) == 4 and parts[3] == "log"
            if len(parts) not in (3, 4) or (len(parts) == 4 and not log) or count < 1:
                raise ValueError
            if log and (start <= 0 or stop <= 0):
                raise ValueError
            vals = np.geomspace(start, stop, count) if log else np.linspace(start, stop, count)
    except (ValueError, IndexError):
        raise InputError(f"malformed sweep {text!r}; expected KEY=START:STOP:log10 "
                         "or KEY=START:STOP:COUNT[:log]") from None
    if key not in ("beta", "R", "p"):
        raise InputError(f"sweep key must be beta, R or p, got {key!r}")
    return key, vals


# ---------------------------------------------------------------------------
# commands


def _radial(cfg):
    rows = []
    base = RadialProblem(cfg.n, cfg.p, cfg.R, cfg.beta)
    points = [base]
    if cfg.sweep:
        key, vals = _parse_sweep(cfg.sweep)
        points = [base.replace(**{key: float(v)}) for v in vals]
    tol = cfg.tol or 1e-10
    sols = [first_eigenvalue_radial(pr, tol) for pr in points]
    for s in sols:
        pr = s.problem
        rows.append((pr.n, pr.p, pr.R, pr.beta, s.lam, s.bc_residual))
    files = {"radial.csv": _csv(["n", "p", "R", "beta", "lambda", "bc_residual"], rows)}
    if cfg.profile:
        s = sols[0]
        files[cfg.profile] = _csv(["r", "rho", "rho_prime", "beta_r"],
                                  zip(s.r, s.rho, s.rho_prime, s.beta_profile))
    return 0, "radial.csv", files


def _solve_kw(cfg, H):
    kw = {}
    if cfg.tol:
        kw["tol"] = cfg.tol
    if not (cfg.p == 2 and H.family in ("euclidean", "quadratic")):
        kw.update(seed=cfg.seed, max_iters=cfg.max_iters)
    return kw


def _solve(cfg):
    H = parse_norm(cfg.norm)
    d = parse_domain(cfg.domain, H)
    mesh = generate_mesh(d, cfg.h)
    res = fem.solve(mesh, H, cfg.p, cfg.beta, **_solve_kw(cfg, H))
    header = ["domain", "norm", "p", "beta", "h", "lambda", "iterations", "converged", "weak_residual"]
    row = (cfg.domain, norm_label(H), cfg.p, cfg.beta, cfg.h, res.lam, res.iterations,
           res.converged, res.weak_residual)
    files = {"solve.csv": _csv(header, [row])}
    if cfg.u_out:
        files[cfg.u_out] = _csv(["node", "x", "y", "u"],
                                ((i, x, y, v) for i, ((x, y), v) in enumerate(zip(mesh.nodes, res.u))))
    if cfg.mesh_out:
        write_mesh(mesh, cfg.mesh_out)
    return 0, "solve.csv", files


FK_HEADER = ["domain", "norm", "p", "beta", "h", "lambda", "lambda_wulff", "ratio", "verdict"]


def _fk_row(cfg, domain, norm):
    H = parse_norm(norm)
    d = parse_domain(domain, H)
    rep = analysis.faber_krahn(d, H, cfg.p, cfg.beta, cfg.h, **_solve_kw(cfg, H))
    row = (domain, norm_label(H), cfg.p, cfg.beta, cfg.h, rep.lam_domain, rep.lam_wulff,
           rep.ratio, rep.verdict)
    return row, rep.verdict == "violated"


def _faber_krahn(cfg):
    row, bad = _fk_row(cfg, cfg.domain, cfg.norm)
    return (2 if bad else 0), "faber_krahn.csv", {"faber_krahn.csv": _csv(FK_HEADER, [row])}


def _sweep(cfg):
    if cfg.aspect_ratios:
        H = parse_norm(cfg.norm)
        rows = analysis.unboundedness_sweep([float(a) for a in cfg.aspect_ratios], cfg.area, H,
                                            cfg.p, cfg.beta, cfg.h)
        header = ["aspect_ratio", "width", "height", "lambda", "inradius_bound"]
        return 0, "aspect.csv", {"aspect.csv": _csv(header, rows)}
    rows = []
    bad = False
    for dom in cfg.domains or DEFAULT_DOMAINS:
        for norm in cfg.norms or DEFAULT_NORMS:
            row, v = _fk_row(cfg, dom, norm)
            rows.append(row)
            bad |= v
    return (2 if bad else 0), "sweep.csv", {"sweep.csv": _csv(FK_HEADER, rows)}


def _check(cfg):
    from .suites import run_suite

    rows = run_suite(cfg.suite)
    failed = any(not ok for _, _, ok, _ in rows)
    text = _csv(["suite", "check", "passed", "detail"], rows)
    return (2 if failed else 0), "check.csv", {"check.csv": text}


HANDLERS = {"radial": _radial, "solve": _solve, "faber-krahn": _faber_krahn,
            "sweep": _sweep, "check": _check}


def run(cfg, stdout=None):
    """Execute ``cfg``; returns the exit status."""
    stdout = stdout or sys.stdout
    cfg.validate()
    status, main_name, files = HANDLERS[cfg.command](cfg)
    stdout.write(files[main_name])
    # side files (profile, eigenfunction) go exactly where the user asked
    for name, text in files.items():
        if name != main_name:
            Path(name).write_text(text)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / main_name).write_text(files[main_name])
        (out / "effective_config.json").write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n")
    return status


# ---------------------------------------------------------------------------
# argument handling


def _parser():
    ap = argparse.ArgumentParser(prog="aniso-robin", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML file; flags given on the command line win")
        sp.add_argument("--out", help="directory for CSV artifacts and the effective config")
        sp.add_argument("--tol", type=float)
        return sp

    def problem(sp):
        sp.add_argument("--p", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--h", type=float)
        sp.add_argument("--norm")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--max-iters", dest="max_iters", type=int)

    sp = common(sub.add_parser("radial", help="eigenvalue of a Wulff shape by shooting"))
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--R", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--sweep", help="KEY=START:STOP:log10 or KEY=START:STOP:COUNT[:log]; KEY is beta, R or p")
    sp.add_argument("--profile", help="CSV file for r, rho, beta_r of the first point")

    sp = common(sub.add_parser("solve", help="FEM eigenpair of a polygon"))
    problem(sp)
    sp.add_argument("--domain")
    sp.add_argument("--mesh-out", dest="mesh_out")
    sp.add_argument("--u-out", dest="u_out", help="CSV file node,x,y,u")

    sp = common(sub.add_parser("faber-krahn", help="compare a polygon with its Wulff shape"))
    problem(sp)
    sp.add_argument("--domain")

    sp = common(sub.add_parser("sweep", help="Faber-Krahn matrix or aspect-ratio sweep"))
    problem(sp)
    sp.add_argument("--domain", dest="domains", action="append")
    sp.add_argument("--norm-case", dest="norms", action="append", help="repeatable norm for the matrix")
    sp.add_argument("--aspect-ratios", dest="aspect_ratios",
                    type=lambda s: [float(x) for x in s.split(",")])
    sp.add_argument("--area", type=float)

    sp = common(sub.add_parser("check", help="run invariant suites"))
    sp.add_argument("--suite", choices=["norms", "geometry", "radial", "fem", "analysis", "all"])
    return ap


def load_config(path):
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = set(data) - RunConfig.keys()
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return data


def build_config(argv):
    args = _parser().parse_args(argv)
    values = {}
    if args.config:
        values.update(load_config(args.config))
        if values.get("command", args.command) != args.command:
            raise InputError(f"config is for {values['command']!r}, not {args.command!r}")
    for k, v in vars(args).items():
        if k == "config" or v is None:
            continue
        values[k] = v
    values["command"] = args.command
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise InputError(str(exc)) from None
    return cfg.validate()


def main(argv=None):
    try:
        cfg = build_config(argv)
        return run(cfg)
    except (InputError, UnsupportedError) as exc:
        print(f"error: {exc} ({SCHEMA_HINT})", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
