"""Command-line entry point.

Subcommands: fit, quantiles, compare-qr, synth, check, bench.
Exit codes: 0 success, 1 I/O error, 2 non-convergence, 3 config error,
4 oracle-check failure.
"""

import argparse
import json
import sys

import numpy as np

from . import classical_qr, oracles, quantiles, solver, synth
from .errors import (
    ConfigError,
    DataError,
    InvalidGridError,
    NonConvergenceError,
    RvqrError,
)
from .measures import center_covariates, load_csv, make_rank_grid

EXIT_OK = 0
EXIT_IO = 1
EXIT_NONCONV = 2
EXIT_CONFIG = 3
EXIT_CHECK = 4


def _parse_probes(spec_str):
    """Probe list: 'q10,q30' (covariate quantile levels) or raw values."""
    probes = []
    for tok in spec_str.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.startswith("q"):
            probes.append(("level", float(tok[1:]) / 100.0))
        else:
            probes.append(("value", float(tok)))
    return probes


def _resolve_probes(probes, data):
    """Map probe specs to centered covariate vectors (componentwise levels)."""
    out = []
    for kind, val in probes:
        if kind == "level":
            x = np.array([
                classical_qr.empirical_quantile(data.X[:, k] + data.x_mean[k], val)
                for k in range(data.n_cov)
            ])
        else:
            x = np.full(data.n_cov, val)
        out.append(x - data.x_mean)
    return np.array(out).reshape(len(out), data.n_cov)


def _load_centered(args):
    data = load_csv(args.data, args.x_cols, args.y_cols)
    return center_covariates(data)


def cmd_fit(args):
    data = _load_centered(args)
    grid = make_rank_grid(data.n_dim, args.grid)
    cfg = solver.SolverConfig(
        epsilon=args.epsilon, tol=args.tol, max_iter=args.max_iter,
        step_mode=args.step_mode, restart=args.restart, phi_mode=args.phi_mode,
    )
    exit_code = EXIT_OK
    try:
        dv, coupling, report = solver.solve(data, grid, cfg)
    except NonConvergenceError as exc:
        dv, coupling = exc.best
        report = exc.report
        exit_code = EXIT_NONCONV
        print(f"warning: {exc}", file=sys.stderr)
    solver.save_model(args.out, dv, data, grid, cfg, report)
    print(f"model written to {args.out}")
    print(f"iterations        {report.iterations}")
    print(f"dual objective    {report.objective:.10g}")
    print(f"gradient inf-norm {report.grad_inf:.3e}")
    print(f"duality gap       {report.duality_gap:.3e}")
    print(f"col residual      {np.abs(coupling.col_residual).max():.3e}")
    if coupling.mi_residual.size:
        print(f"mi residual       {np.abs(coupling.mi_residual).max():.3e}")
    print(f"wall time         {report.wall_time:.2f}s")
    return exit_code


def _model_from_files(args):
    doc, dv, grid = solver.load_model(args.model)
    data = load_csv(args.data, doc["x_names"], doc["y_names"])
    data = center_covariates(data)
    if np.abs(data.x_mean - np.array(doc["x_mean"])).max() > 1e-8:
        print("warning: data covariate mean differs from the fitted model's",
              file=sys.stderr)
    coupling = solver.extract_coupling(dv, data, grid, doc["epsilon"])
    model = quantiles.QuantileModel.from_fit(coupling, data, grid, doc["epsilon"])
    return doc, data, model


def cmd_quantiles(args):
    doc, data, model = _model_from_files(args)
    probes = _resolve_probes(_parse_probes(args.probes), data)
    eta = args.eta if args.eta is not None else quantiles.default_eta(model)
    rows = quantiles.quantile_table(
        model, probes, eta=eta, hard=(args.phi_mode == "hard"))
    # report probes in raw covariate coordinates
    rows = [(tuple(np.array(x) + data.x_mean), u, q) for x, u, q in rows]
    quantiles.table_to_csv(args.out, rows, x_names=doc["x_names"])
    print(f"quantile table ({len(rows)} rows) written to {args.out}")
    return EXIT_OK


def cmd_compare_qr(args):
    data = _load_centered(args)
    if data.n_dim != 1:
        raise ConfigError("compare-qr supports univariate responses only")
    eps_list = [float(e) for e in args.epsilons.split(",")]
    probes = _resolve_probes(_parse_probes(args.probes), data)
    grid = make_rank_grid(1, args.grid)
    interior = range(1, grid.n_nodes - 1)
    t_levels = grid.U[list(interior), 0]

    qr_curve = classical_qr.fit_qr_curve(data, t_levels)
    qr_q = np.array([[f.alpha + f.beta @ x for f in qr_curve.fits] for x in probes])

    header = ["probe"] + [f"eps_{e:g}" for e in eps_list]
    lines = [",".join(header)]
    table = []
    for eps in eps_list:
        cfg = solver.SolverConfig(epsilon=eps, tol=args.tol, max_iter=args.max_iter)
        dv, coupling, _ = solver.solve(data, grid, cfg)
        model = quantiles.QuantileModel.from_fit(coupling, data, grid, eps)
        col = []
        for p, x in enumerate(probes):
            if args.eta is not None:
                eta = args.eta
            else:
                # per-probe radius: 5% quantile of covariate distances, so the
                # ball always holds a stable share of the sample
                dist = np.linalg.norm(data.X - x[None, :], axis=1)
                eta = float(np.quantile(dist, 0.05))
            if args.mode == "qr":
                ref = qr_q[p]
                est = np.array([
                    quantiles.ball_conditional_quantile(model, x, eta, i)[0]
                    for i in interior])
            else:
                ref = np.array([
                    quantiles.ball_conditional_quantile(model, x, eta, i)[0]
                    for i in interior])
                est = np.array([
                    quantiles.ball_conditional_quantile(model, x, eta, i, hard=True)[0]
                    for i in interior])
            col.append(float(np.linalg.norm(ref - est) / np.linalg.norm(ref)))
        table.append(col)
    for p in range(len(probes)):
        cells = [f"p{p + 1}"] + [f"{table[e][p]:.6g}" for e in range(len(eps_list))]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return EXIT_OK


def cmd_synth(args):
    spec = synth.SynthSpec(
        n_samples=args.n_samples, seed=args.seed, d=args.dim, n_cov=args.n_cov,
        x_law=args.x_law, a0=args.a0, a1=args.a1, b0=args.b0, b1=args.b1,
    )
    data, _ = synth.generate(spec)
    synth.write_csv(args.out, data)
    synth.write_truth(args.out + ".truth.json", spec)
    print(f"{spec.n_samples} samples written to {args.out} "
          f"(truth in {args.out}.truth.json)")
    return EXIT_OK


def cmd_check(args):
    results = oracles.run_all_checks(seed=args.seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=1)
    ok = True
    for name, r in results.items():
        status = "pass" if r["passed"] else "FAIL"
        print(f"{status}  {name}: measured {r['measured']:.3e} "
              f"(tolerance {r['tolerance']:.3e})")
        ok = ok and r["passed"]
    return EXIT_OK if ok else EXIT_CHECK


def build_parser():
    p = argparse.ArgumentParser(prog="rvqr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_solver_flags(sp):
        sp.add_argument("--epsilon", type=float, default=0.1)
        sp.add_argument("--tol", type=float, default=1e-7)
        sp.add_argument("--max-iter", type=int, default=50000)
        sp.add_argument("--workers", type=int, default=1)

    f = sub.add_parser("fit", help="fit the regularized transport dual")
    f.add_argument("--data", required=True)
    f.add_argument("--x-cols", required=True)
    f.add_argument("--y-cols", required=True)
    f.add_argument("--grid", type=int, default=20)
    add_solver_flags(f)
    f.add_argument("--step-mode", choices=["fixed", "backtracking"],
                   default="backtracking")
    f.add_argument("--restart", choices=["none", "function-value"],
                   default="function-value")
    f.add_argument("--phi-mode", choices=["soft", "hard"], default="soft")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    q = sub.add_parser("quantiles", help="conditional quantile table from a fit")
    q.add_argument("--model", required=True)
    q.add_argument("--data", required=True)
    q.add_argument("--probes", default="q10,q30,q60,q90")
    q.add_argument("--eta", type=float, default=None)
    q.add_argument("--phi-mode", choices=["soft", "hard"], default="soft")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_quantiles)

    c = sub.add_parser("compare-qr", help="relative error vs the pinball baseline")
    c.add_argument("--data", required=True)
    c.add_argument("--x-cols", required=True)
    c.add_argument("--y-cols", required=True)
    c.add_argument("--grid", type=int, default=20)
    c.add_argument("--epsilons", default="0.05,0.1,0.5,1")
    c.add_argument("--probes", default="q10,q30,q60,q90")
    c.add_argument("--eta", type=float, default=None)
    c.add_argument("--mode", choices=["qr", "softhard"], default="qr")
    add_solver_flags(c)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compare_qr)

    s = sub.add_parser("synth", help="generate a synthetic dataset with known truth")
    s.add_argument("--out", required=True)
    s.add_argument("--n-samples", type=int, default=2000)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--dim", type=int, default=1)
    s.add_argument("--n-cov", type=int, default=1)
    s.add_argument("--x-law", choices=["uniform", "normal"], default="uniform")
    s.add_argument("--a0", type=float, default=0.0)
    s.add_argument("--a1", type=float, default=1.0)
    s.add_argument("--b0", type=float, default=1.0)
    s.add_argument("--b1", type=float, default=1.0)
    s.set_defaults(func=cmd_synth)

    k = sub.add_parser("check", help="run the independent oracle suite")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_check)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; remap to the config-error code
        raise SystemExit(EXIT_CONFIG if exc.code else EXIT_OK) from None
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, InvalidGridError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except RvqrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
