"""Command-line front end.

    isothermic generate --config job.cfg
    isothermic verify   --config job.cfg | --mesh net.obj
    isothermic resonance --M 40 --rho 1 --k 2 [--alpha 1]
    isothermic report   [--config job.cfg] [--json]

Exit codes: 0 all checks pass, 1 a check failed or the construction broke
down, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gallery as G
from . import quat as Q
from . import surface as S
from .circle import CircleSpec, resonance_value, resonant_state
from .config import JobConfig, read_config
from .errors import IsothermicError, ParseError
from .meshio import export_obj, export_ply, net_from_mesh, read_obj
from .polarised import RiccatiState

FLATNESS_LAMBDA = 0.37


@dataclass
class JobResult:
    config: JobConfig
    base: S.IsothermicNet | None = None
    hat: S.IsothermicNet | None = None
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    error: dict | None = None
    files: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "family": self.config.family,
            "name": self.config.name,
            "passed": self.passed,
            "values": self.values,
            "checks": [c.to_dict() for c in self.checks],
            "error": self.error,
            "files": [str(p) for p in self.files],
        }


def _error_dict(exc: Exception) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("vertex", "quad", "line"):
        if getattr(exc, attr, None) is not None:
            out["location"] = list(np.atleast_1d(getattr(exc, attr)).tolist())
    return out


def _revolution_base(cfg: JobConfig) -> S.IsothermicNet:
    return G.surface_of_revolution(cfg.p_profile, cfg.q_profile, cfg.M, cfg.rho or 1, cfg.n_origin)


def _build(cfg: JobConfig, res: JobResult) -> None:
    """Construct the base and transformed nets and collect every check."""
    tol = cfg.tol
    fam = cfg.family
    closed = None
    if fam in ("bubbleton", "cmc-bubbleton"):
        spec = G.CylinderSpec(cfg.M, cfg.N, cfg.rho, cfg.k, cfg.n_min, cfg.n_max)
        if fam == "cmc-bubbleton":
            c2 = G.cmc_initial_c2(cfg.M, cfg.rho, cfg.k)[0 if cfg.branch == 1 else 1]
        else:
            c2 = cfg.c2
        nu = spec.nu
        res.values.update(nu=nu, c2=[complex(c2).real, complex(c2).imag])
        base = spec.net()
        init = G.bubbleton_init(spec, c2)
        period_m, period_n = spec.period, None
        if nu < 0:
            closed = G.bubbleton_net(spec, c2)
    elif fam == "torus":
        spec = G.TorusSpec(cfg.M, cfg.N, cfg.k1, cfg.rho1, cfg.k2, cfg.rho2)
        r2 = G.s3_initial_solver(spec, cfg.c_real, cfg.root_index)
        cp, cm = G.s3_constants(cfg.c_real, r2)
        nu = spec.nu
        res.values.update(nu=nu, p=spec.p, q=spec.q, r2=r2, c_real=cfg.c_real)
        base = G.homogeneous_torus(spec)
        init = G.torus_init(spec, cp, cm)
        period_m, period_n = spec.period_m, spec.period_n
        closed = G.torus_net(spec, cp, cm)
    elif fam == "revolution":
        base = _revolution_base(cfg)
        circle = CircleSpec(float(cfg.p_profile[base.index(0, 0)[1]]), cfg.M, cfg.rho, 1.0)
        nu = resonance_value(cfg.M, cfg.rho, cfg.k, 1.0)
        res.values.update(nu=nu)
        init = resonant_state(circle, cfg.k, cfg.cplus, cfg.cminus, 0)
        period_m, period_n = cfg.rho * cfg.M, None
    else:
        base = _revolution_base(cfg)
        nu = cfg.nu
        res.values.update(nu=nu)
        f00 = base.points[base.index(0, 0)]
        init = RiccatiState.from_arrays(np.asarray(cfg.init_point) - f00, [1.0, 0.0, 0.0, 0.0])
        period_m = period_n = None
    res.base = base

    res.checks.append(S.verify_isothermic(base))
    res.checks.append(S.one_form_closure(base))
    res.checks.append(S.verify_flatness(base, FLATNESS_LAMBDA))
    hat = S.darboux_surface(base, nu, init)
    res.checks.extend(S.verify_darboux_pair(base, hat, nu))
    res.checks.append(S.verify_isothermic(hat))
    if closed is not None:
        dev = Q.qabs(closed.points - hat.points)
        res.checks.append(S.Check.from_residuals("closed form vs sweep", dev, tol, base.origin))
        hat = closed
    closes = True
    for direction, period in (("m", period_m), ("n", period_n)):
        if period is None:
            continue
        checks = S.verify_periodicity(hat, direction, period, tol)
        res.checks.extend(checks)
        closes = closes and all(c.passed for c in checks)
    if fam == "cmc-bubbleton":
        res.checks.extend(G.cmc_verify(base, hat, 0.5, nu, G.cylinder_parallel(spec), tol))
    if fam == "torus":
        res.checks.extend(S.s3_check(base, tol))
        res.checks.extend(S.s3_check(hat, tol))
    res.hat = hat.with_periods(period_m, period_n) if closes else hat


def run_job(cfg: JobConfig) -> JobResult:
    res = JobResult(cfg)
    try:
        _build(cfg, res)
    except IsothermicError as exc:
        res.error = _error_dict(exc)
    return res


def run_generate(cfg: JobConfig) -> JobResult:
    """Build the nets, write both meshes and the JSON report into ``cfg.out_dir``."""
    res = run_job(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    projection = cfg.projection or ("stereographic" if cfg.family == "torus" else "none")
    try:
        for tag, net in (("base", res.base), ("hat", res.hat)):
            if net is None:
                continue
            res.files.append(export_obj(net, out / f"{cfg.name}_{tag}.obj", projection))
            if cfg.ply:
                res.files.append(export_ply(net, out / f"{cfg.name}_{tag}.ply", projection))
    except IsothermicError as exc:
        res.error = _error_dict(exc)
    report = out / f"{cfg.name}_report.json"
    res.files.append(report)
    report.write_text(json.dumps(res.to_dict(), indent=2) + "\n", encoding="utf-8")
    return res


def mesh_checks(path) -> list[S.Check]:
    mesh = read_obj(path)
    net = net_from_mesh(mesh)
    checks = [
        S.verify_isothermic(net),
        S.one_form_closure(net),
        S.verify_flatness(net, FLATNESS_LAMBDA),
    ]
    if mesh.projection == "stereographic":
        checks.extend(S.s3_check(net))
    return checks


def run_verify(config=None, mesh=None) -> tuple[list[dict], bool]:
    """Checks as JSON-ready dicts and the overall verdict."""
    if (config is None) == (mesh is None):
        raise ValueError("give exactly one of config or mesh")
    if mesh is not None:
        checks = mesh_checks(mesh)
        return [c.to_dict() for c in checks], all(c.passed for c in checks)
    cfg = config if isinstance(config, JobConfig) else read_config(config)
    res = run_job(cfg)
    rows = [c.to_dict() for c in res.checks]
    if res.error is not None:
        rows.append({"name": "error", "residual": float("inf"), "tol": cfg.tol, "passed": False, **res.error})
    return rows, res.passed


def _print_table(rows: list[dict]) -> None:
    for row in rows:
        mark = "PASS" if row["passed"] else "FAIL"
        worst = "" if row.get("worst") is None else f" at {tuple(row['worst'])}"
        print(f"{mark}  {row['name']:<32} {row['residual']:.3e} < {row['tol']:.1e}{worst}")
        if "message" in row:
            print(f"      {row['type']}: {row['message']}")


def _limits_report(args) -> dict:
    return {
        "circle": {"k": args.k, "rho": args.rho, "rows": G.convergence_table(args.k, args.rho)},
        "torus": {
            "k1": args.k1,
            "rho1": args.rho1,
            "k2": args.k2,
            "rho2": args.rho2,
            "rows": G.torus_convergence_table(args.k1, args.rho1, args.k2, args.rho2),
        },
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isothermic", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="build nets, write meshes and a JSON report")
    gen.add_argument("--config", required=True)

    ver = sub.add_parser("verify", help="run every check and print a JSON array")
    src = ver.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--mesh")

    res = sub.add_parser("resonance", help="resonance value of a circle and its continuum limit")
    res.add_argument("--M", type=int, required=True)
    res.add_argument("--rho", type=int, required=True)
    res.add_argument("--k", type=int, required=True)
    res.add_argument("--alpha", type=float, default=1.0)

    rep = sub.add_parser("report", help="job report, or continuum convergence tables without --config")
    rep.add_argument("--config")
    rep.add_argument("--json", action="store_true")
    for name, default in (("k", 2), ("rho", 1), ("k1", 4), ("rho1", 3), ("k2", 2), ("rho2", 3)):
        rep.add_argument(f"--{name}", type=int, default=default)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if args.command == "generate":
            res = run_generate(read_config(args.config))
            _print_table([c.to_dict() for c in res.checks])
            if res.error:
                print(f"error: {res.error['type']}: {res.error['message']}", file=sys.stderr)
            for p in res.files:
                print(f"wrote {p}")
            return 0 if res.passed else 1
        if args.command == "verify":
            rows, ok = run_verify(config=args.config, mesh=args.mesh)
            print(json.dumps(rows, indent=2))
            return 0 if ok else 1
        if args.command == "resonance":
            nu = resonance_value(args.M, args.rho, args.k, args.alpha)
            limit = G.continuum_limit(args.k, args.rho) / args.alpha
            print(json.dumps({"nu": nu, "continuum_limit": limit}))
            return 0
        if args.command == "report":
            if args.config is None:
                out = _limits_report(args)
                if args.json:
                    print(json.dumps(out, indent=2))
                else:
                    for row in out["circle"]["rows"]:
                        print(f"M={row['M']:<4} nu={row['nu']:+.12f} error={row['error']:.3e}")
                    for row in out["torus"]["rows"]:
                        print(
                            f"M=N={row['M']:<4} nu={row['nu']:+.12f} nu_error={row['nu_error']:.3e} "
                            f"radii_errors={row['radius_m_error']:.3e},{row['radius_n_error']:.3e}"
                        )
                return 0
            res = run_job(read_config(args.config))
            if args.json:
                print(json.dumps(res.to_dict(), indent=2))
            else:
                _print_table([c.to_dict() for c in res.checks])
                if res.error:
                    print(f"error: {res.error['type']}: {res.error['message']}")
            return 0 if res.passed else 1
    except (ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
