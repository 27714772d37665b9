"""Command-line front end.

Subcommands: moments, mop, equilibrium, verify, kernel, asymptotics.
Global flags: --precision <bits>, --out <dir>, --format csv|json,
--seed <int>, --threads <k>, --config <file>, --stdout.

Exit codes: 0 ok, 1 validation error, 2 IO error, 3 convergence failure,
4 verification failure.  Identical configs produce byte-identical delimited
outputs; figures embed no timestamps.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import mpmath as mp

from . import asymptotics as asym
from . import mop as mop_mod
from . import report
from . import weights as wt
from .equilibrium import ConvergenceError, solve_equilibrium
from .numerics import PrecCtx
from .verify import run_suite

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3, 4


@dataclasses.dataclass
class RunConfig:
    precision_bits: int = 256
    n_list: tuple = (4, 8, 16)
    m1: int = 308
    m2: int = 182
    tolerances: dict = dataclasses.field(default_factory=dict)
    out_dir: str = "out"
    fmt: str = "csv"
    seed: int = 1234
    threads: int = 1
    to_stdout: bool = False

    def __post_init__(self):
        if self.precision_bits < 64:
            raise ValueError("precision must be >= 64 bits")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ValueError("n list must be nonempty with entries >= 1")

    @property
    def ctx(self):
        return PrecCtx(self.precision_bits)


def _info(msg):
    print(msg, file=sys.stderr, flush=True)


def _emit(cfg: RunConfig, name: str, header, rows):
    if cfg.to_stdout:
        print(",".join(str(h) for h in header))
        for r in rows:
            print(",".join(report.fmt_num(v) for v in r))
        return None
    path = os.path.join(cfg.out_dir, name + ".csv")
    report.write_csv(path, header, rows)
    _info(f"wrote {path}")
    return path


def _emit_json(cfg: RunConfig, name: str, obj):
    if cfg.to_stdout:
        import json

        print(json.dumps(report.jsonable(obj), sort_keys=True))
        return None
    path = os.path.join(cfg.out_dir, name + ".json")
    report.write_json(path, obj, cfg.ctx)
    _info(f"wrote {path}")
    return path


def _parse_int_list(s):
    return tuple(int(t) for t in s.replace(" ", "").split(",") if t)


def _load_config_file(path):
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="nikmop", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--precision", type=int, default=None, help="working precision in bits")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--seed", type=int, default=None, help="seed for randomized check points")
    p.add_argument("--threads", type=int, default=None,
                   help="max worker threads (accepted for config compatibility; "
                        "sweeps run serialized because the precision context is "
                        "process-global)")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--stdout", action="store_true", help="print data to stdout instead of files")

    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("moments", help="exact moment tables")
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k-max", type=int, default=20)

    sp = sub.add_parser("mop", help="type-II polynomial tables")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--emit-zeros", action="store_true")
    sp.add_argument("--check-dety", action="store_true")

    sp = sub.add_parser("equilibrium", help="solve the vector equilibrium problem")
    sp.add_argument("--m1", type=int, default=None)
    sp.add_argument("--m2", type=int, default=None)
    sp.add_argument("--plot", action="store_true")

    sp = sub.add_parser("verify", help="run named invariant suites")
    sp.add_argument("--suite", required=True,
                    choices=["weights", "curve", "equilibrium", "mop", "parametrix",
                             "outer", "kernel", "all"])
    sp.add_argument("--n", dest="n_list", default=None, help="comma list of n values")
    sp.add_argument("--m1", type=int, default=None)
    sp.add_argument("--m2", type=int, default=None)

    sp = sub.add_parser("kernel", help="kernel diagonal and bulk-scaling overlay")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--x-star", default="2")
    sp.add_argument("--window", type=float, default=3.0)
    sp.add_argument("--m1", type=int, default=None)
    sp.add_argument("--m2", type=int, default=None)
    sp.add_argument("--plot", action="store_true")

    sp = sub.add_parser("asymptotics", help="convergence sweeps of the limit laws")
    sp.add_argument("--targets", default="outer,band,density,sine")
    sp.add_argument("--n", dest="n_list", default=None, help="comma list of n values")
    sp.add_argument("--m1", type=int, default=None)
    sp.add_argument("--m2", type=int, default=None)
    sp.add_argument("--plot", action="store_true")
    return p


def make_config(args) -> RunConfig:
    file_cfg = _load_config_file(args.config) if args.config else {}

    def pick(flag_val, key, default, conv=lambda x: x):
        if flag_val is not None:
            return flag_val
        if key in file_cfg:
            return conv(file_cfg[key])
        return default

    n_list = getattr(args, "n_list", None)
    if isinstance(n_list, str):
        n_list = _parse_int_list(n_list)
    cfg = RunConfig(
        precision_bits=pick(args.precision, "precision", 256, int),
        n_list=n_list or pick(None, "n_list", (4, 8, 16), _parse_int_list),
        m1=pick(getattr(args, "m1", None), "m1", 308, int),
        m2=pick(getattr(args, "m2", None), "m2", 182, int),
        out_dir=pick(args.out, "out", "out", str),
        fmt=pick(args.format, "format", "csv", str),
        seed=pick(args.seed, "seed", 1234, int),
        threads=pick(args.threads, "threads", 1, int),
        to_stdout=bool(args.stdout),
    )
    if cfg.threads < 1:
        raise ValueError("threads must be >= 1")
    return cfg


def cmd_moments(args, cfg: RunConfig) -> int:
    if args.j not in (1, 2):
        _info("error: --j must be 1 or 2")
        return EXIT_VALIDATION
    if args.n < 1 or args.k_max < 0:
        _info("error: --n must be >= 1 and --k-max >= 0")
        return EXIT_VALIDATION
    table = wt.moments(args.j, args.n, args.k_max, validate=True, ctx=cfg.ctx)
    name = f"moments_j{args.j}_n{args.n}"
    if cfg.fmt == "json":
        _emit_json(cfg, name, {"j": table.j, "n": table.n,
                               "moments": [report.fmt_num(v) for v in table.values]})
    else:
        _emit(cfg, name, ["k", "moment"], [(k, v) for k, v in enumerate(table.values)])
    return EXIT_OK


def cmd_mop(args, cfg: RunConfig) -> int:
    if args.n < 1:
        _info("error: --n must be >= 1")
        return EXIT_VALIDATION
    ctx = cfg.ctx
    sol = mop_mod.compute_Q(args.n, ctx)
    if cfg.fmt == "json":
        _emit_json(cfg, f"mop_n{args.n}", sol.to_json_dict())
    else:
        _emit(cfg, f"mop_Q_n{args.n}", ["k", "coefficient"],
              list(enumerate(sol.Q.coeffs)))
        _emit(cfg, f"mop_h_n{args.n}", ["j", "h"], [(1, sol.h_exact[0]), (2, sol.h_exact[1])])
    if args.emit_zeros:
        _emit(cfg, f"mop_zeros_n{args.n}", ["n", "k", "zero"],
              [(args.n, k, z) for k, z in enumerate(sorted(sol.zeros))])
    if args.check_dety:
        import random

        rng = random.Random(cfg.seed)
        Y = mop_mod.assemble_Y(args.n, ctx)
        with ctx.workprec():
            rows = []
            for _ in range(10):
                z = mp.mpc(rng.uniform(-8, 8), rng.uniform(0.3, 8) * rng.choice([-1, 1]))
                rows.append((report.fmt_num(z, 16), abs(Y.det(z) - 1)))
        _emit(cfg, f"mop_detY_n{args.n}", ["z", "abs(det-1)"], rows)
    return EXIT_OK


def cmd_equilibrium(args, cfg: RunConfig) -> int:
    ctx = cfg.ctx
    try:
        sol = solve_equilibrium(cfg.m1, cfg.m2, ctx)
    except ConvergenceError as e:
        _info(f"convergence failure: {e}")
        for k, v in e.profile.items():
            _info(f"  {k}: {v}")
        return EXIT_CONVERGENCE
    with ctx.workprec():
        xs, _, dens = sol.grid1()
        _emit(cfg, "equilibrium_lambda1", ["x", "lambda1_prime"],
              list(zip(xs, dens)))
        neg = [-(mp.mpf(10) ** (mp.mpf(-2) + mp.mpf(5) * k / 119)) for k in range(120)]
        _emit(cfg, "equilibrium_lambda2", ["x", "lambda2_prime"],
              [(t, sol.lambda2_prime(t)) for t in neg])
        summary = {
            "omega": sol.omega,
            "masses": [sol.mass1(), sol.mass2()],
            "residual_sup": max(sol.residual_report["band_sup_mid"],
                                sol.residual_report["tail_sup_mid"]),
            "p_plus": sol.p_plus,
            "p_minus": sol.p_minus,
            "gamma2": sol.residual_report["gamma2_flag"],
        }
        _emit_json(cfg, "equilibrium_summary", summary)
    if args.plot and not cfg.to_stdout:
        path = os.path.join(cfg.out_dir, "equilibrium_density.svg")
        report.density_figure(sol, path)
        _info(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    ctx = cfg.ctx
    cfg_d = {"m1": cfg.m1, "m2": cfg.m2, "n_list": list(cfg.n_list)}
    try:
        checks, ok = run_suite(args.suite, cfg_d, ctx, seed=cfg.seed)
    except ConvergenceError as e:
        _info(f"convergence failure: {e}")
        return EXIT_CONVERGENCE
    verdict = {
        "suite": args.suite,
        "passed": ok,
        "checks": [
            {"name": c["name"], "passed": c["passed"],
             "value": report.fmt_num(c["value"], 20), "tol": report.fmt_num(c["tol"], 8),
             **({"note": c["note"]} if c.get("note") else {}),
             **({"advisory": True} if c.get("advisory") else {})}
            for c in checks
        ],
    }
    _emit_json(cfg, f"verify_{args.suite}", verdict)
    for c in verdict["checks"]:
        flag = "PASS" if c["passed"] else ("ADVISORY-FAIL" if c.get("advisory") else "FAIL")
        _info(f"[{flag}] {c['name']}: {c['value']} (tol {c['tol']})")
    if not ok:
        _info("verification FAILED")
        return EXIT_VERIFY
    _info("verification passed")
    return EXIT_OK


def cmd_kernel(args, cfg: RunConfig) -> int:
    ctx = cfg.ctx
    if args.n < 1:
        _info("error: --n must be >= 1")
        return EXIT_VALIDATION
    with ctx.workprec():
        x_star = mp.mpf(args.x_star)
    try:
        sol = solve_equilibrium(cfg.m1, cfg.m2, ctx)
    except ConvergenceError as e:
        _info(f"convergence failure: {e}")
        return EXIT_CONVERGENCE
    with ctx.workprec():
        if not 0 < x_star < sol.p_plus:
            _info(f"error: x* must lie in (0, p+) = (0, {mp.nstr(sol.p_plus, 8)})")
            return EXIT_VALIDATION
        ev = mop_mod.kernel_evaluator(args.n, ctx)
        xs = [sol.p_plus * (k + mp.mpf(1) / 2) / 60 for k in range(60)]
        _emit(cfg, f"kernel_diag_n{args.n}", ["x", "K_n(x,x)/n"],
              [(x, ev.diag(x) / args.n) for x in xs])
        tr = mop_mod.kernel_trace(args.n, ctx)
        rows = []
        m = 13
        for k in range(m):
            dv = mp.mpf(args.window) * k / (m - 1)
            try:
                val, sinc, _ = asym.sine_kernel_limit(args.n, x_star, dv, mp.mpf(0), sol, ctx)
            except ValueError:
                continue
            rows.append((dv, val, sinc))
        _emit(cfg, f"kernel_overlay_n{args.n}", ["u_minus_v", "scaled_kernel", "abs_sinc"], rows)
        _emit_json(cfg, f"kernel_summary_n{args.n}",
                   {"n": args.n, "trace_over_n": tr / args.n, "x_star": x_star})
    if args.plot and not cfg.to_stdout:
        path = os.path.join(cfg.out_dir, f"kernel_overlay_n{args.n}.svg")
        report.kernel_overlay_figure(rows, path, n=args.n, x_star=args.x_star)
        _info(f"wrote {path}")
    return EXIT_OK


def cmd_asymptotics(args, cfg: RunConfig) -> int:
    ctx = cfg.ctx
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    bad = set(targets) - {"outer", "band", "density", "sine"}
    if bad:
        _info(f"error: unknown targets {sorted(bad)}")
        return EXIT_VALIDATION
    try:
        sol = solve_equilibrium(cfg.m1, cfg.m2, ctx)
    except ConvergenceError as e:
        _info(f"convergence failure: {e}")
        return EXIT_CONVERGENCE
    reports = []
    with ctx.workprec():
        qs = {n: mop_mod.compute_Q(n, ctx) for n in cfg.n_list}
        if "outer" in targets:
            rep = asym.ConvergenceReport("outer")
            for n in cfg.n_list:
                for z in (mp.mpf(15), mp.mpc(5, 5)):
                    _, _, rel = asym.outer_asymptotics(n, z, qs[n], sol)
                    rep.add(n, report.fmt_num(z, 6), rel)
            rep.fit_rate()
            reports.append(rep)
        if "band" in targets:
            rep = asym.ConvergenceReport("band_two_term")
            for n in cfg.n_list:
                _, _, err = asym.band_asymptotics(n, mp.mpf(5), qs[n], sol)
                rep.add(n, "5", err)
            rep.fit_rate()
            reports.append(rep)
        if "density" in targets:
            rep = asym.ConvergenceReport("density")
            for n in cfg.n_list:
                _, _, rel = asym.density_limit(n, mp.mpf(2), sol, ctx)
                rep.add(n, "2", rel)
            rep.fit_rate()
            reports.append(rep)
        if "sine" in targets:
            rep = asym.ConvergenceReport("sine_kernel")
            for n in cfg.n_list:
                for dv in (mp.mpf(1) / 2, mp.mpf(1)):
                    try:
                        _, _, err = asym.sine_kernel_limit(n, mp.mpf(2), dv, mp.mpf(0), sol, ctx)
                    except ValueError:
                        continue
                    rep.add(n, f"u-v={dv}", err)
            rep.fit_rate()
            reports.append(rep)
        rows = []
        for rep in reports:
            rows.extend(rep.to_rows())
        _emit(cfg, "asymptotics_errors", ["target", "n", "location", "error"], rows)
        _emit_json(cfg, "asymptotics_rates",
                   {r.target: (r.fitted_rate if r.fitted_rate is not None else "n/a")
                    for r in reports})
    if args.plot and not cfg.to_stdout:
        path = os.path.join(cfg.out_dir, "asymptotics_errors.svg")
        report.loglog_error_figure(reports, path)
        _info(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
    except (ValueError, OSError) as e:
        _info(f"error: {e}")
        return EXIT_VALIDATION
    if not cfg.to_stdout:
        try:
            os.makedirs(cfg.out_dir, exist_ok=True)
        except OSError as e:
            _info(f"io error: {e}")
            return EXIT_IO
    handlers = {
        "moments": cmd_moments,
        "mop": cmd_mop,
        "equilibrium": cmd_equilibrium,
        "verify": cmd_verify,
        "kernel": cmd_kernel,
        "asymptotics": cmd_asymptotics,
    }
    try:
        return handlers[args.command](args, cfg)
    except OSError as e:
        _info(f"io error: {e}")
        return EXIT_IO
    except ValueError as e:
        _info(f"error: {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
