"""``rgdbek`` command-line interface.

Exit codes: 0 converged, 2 iteration cap, 3 stalled, 64 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import reporting as rep
from .ingestion import RhsSpec, build_rhs, gen_sparse_random, read_matrix_market
from .lsqr import LsqrOptions
from .parallel import parallel_rgdbek
from .solvers import CONVERGED, ITERATION_CAP, SOLVERS, STALLED, SolveConfig

EXIT_OK, EXIT_CAP, EXIT_STALLED, EXIT_USAGE = 0, 2, 3, 64
_EXIT = {CONVERGED: EXIT_OK, ITERATION_CAP: EXIT_CAP, STALLED: EXIT_STALLED}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _worst(statuses):
    # stalled beats cap beats converged
    for s in (STALLED, ITERATION_CAP):
        if s in statuses:
            return s
    return CONVERGED


def _default_seed():
    raw = os.environ.get("RGDBEK_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"RGDBEK_SEED must be an integer, got {raw!r}") from None


def _cfg(a) -> SolveConfig:
    try:
        return SolveConfig(eta=a.eta, tolerance=a.tol, max_iters=a.max_iters, seed=a.seed,
                           lsqr_opts=LsqrOptions(rel_tolerance=a.lsqr_tol), trace_every=a.trace_every)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cfg_dict(cfg: SolveConfig) -> dict:
    return {"eta": cfg.eta, "tolerance": cfg.tolerance, "max_iters": cfg.max_iters, "seed": cfg.seed,
            "lsqr_rel_tolerance": cfg.lsqr_opts.rel_tolerance,
            "lsqr_max_inner_iters": cfg.lsqr_opts.max_inner_iters, "trace_every": cfg.trace_every}


def _parse_gen(text):
    try:
        m, n, d = text.split(",")
        return int(m), int(n), float(d)
    except ValueError:
        raise UsageError(f"--gen expects m,n,density, got {text!r}") from None


def _load_system(a):
    if (a.mtx is None) == (a.gen is None):
        raise UsageError("give exactly one of --mtx PATH or --gen m,n,density")
    if a.mtx is not None:
        A = read_matrix_market(a.mtx)
        source = {"mtx": str(a.mtx)}
    else:
        m, n, d = _parse_gen(a.gen)
        A = gen_sparse_random(m, n, d, seed=a.seed)
        source = {"gen": [m, n, d], "matrix_seed": a.seed}
    x_true = np.random.default_rng([a.seed, 1]).standard_normal(A.n_cols)
    b, _ = build_rhs(A, x_true, RhsSpec(mode=a.rhs, noise_seed=a.seed))
    return A, b, source


def _out(a) -> Path:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(a, out, command, cfg, artifacts, summary, status):
    timing = not a.no_timing
    summary = dict(summary, status=status, machine=rep.machine_info(), config=_cfg_dict(cfg))
    rep.write_json(out / "summary.json", summary)
    artifacts = dict(artifacts, summary="summary.json", manifest="manifest.json")
    args = {k: v for k, v in vars(a).items() if k not in ("func", "out")}
    rep.RunManifest(command, args, a.seed, _cfg_dict(cfg) | {"timing": timing}, artifacts).write(out / "manifest.json")
    return _EXIT[status]


# -- commands -----------------------------------------------------------------

def cmd_solve(a) -> int:
    cfg = _cfg(a)
    A, b, source = _load_system(a)
    res = SOLVERS[a.solver](A, b, cfg)
    out = _out(a)
    rep.write_trace(out / "trace.csv", res.trace, timing=not a.no_timing)
    summary = rep.trace_summary(res.trace, not a.no_timing)
    summary.update(solver=a.solver, shape=list(A.shape), nnz=A.nnz, source=source, rhs=a.rhs)
    print(f"{a.solver}: {res.status} after {res.trace.iterations} iterations, rse={res.trace.final_rse:.3e}")
    return _finish(a, out, "solve", cfg, {"trace": "trace.csv"}, summary, res.status)


def _parse_shapes(text):
    shapes = []
    for part in text.split(";"):
        try:
            m, n = part.lower().split("x")
            shapes.append((int(m), int(n)))
        except ValueError:
            raise UsageError(f"--shapes expects e.g. 1000x200;200x1000, got {text!r}") from None
    return shapes


def cmd_bench(a) -> int:
    cfg = _cfg(a)
    solvers = a.solvers.split(",")
    unknown = [s for s in solvers if s not in SOLVERS]
    if unknown:
        raise UsageError(f"unknown solver(s) {unknown}; choose from {sorted(SOLVERS)}")
    baseline = a.baseline or solvers[0]
    if baseline not in solvers:
        raise UsageError(f"baseline {baseline!r} is not among --solvers")
    shapes = _parse_shapes(a.shapes)
    seeds = [a.seed + i for i in range(a.runs)]
    rows, statuses = [], []
    for m, n in shapes:
        stats = {}
        for s in solvers:
            its, secs = [], []
            for seed in seeds:
                A = gen_sparse_random(m, n, a.density, seed=seed)
                b, _ = build_rhs(A, np.random.default_rng([seed, 1]).standard_normal(n))
                c = SolveConfig(eta=cfg.eta, tolerance=cfg.tolerance, max_iters=cfg.max_iters, seed=seed,
                                lsqr_opts=cfg.lsqr_opts, trace_every=cfg.trace_every)
                t0 = time.perf_counter()
                r = SOLVERS[s](A, b, c)
                secs.append(time.perf_counter() - t0)
                its.append(r.trace.iterations)
                statuses.append(r.status)
            stats[s] = (float(np.mean(its)), float(np.mean(secs)))
        for s in solvers:
            mi, ms = stats[s]
            speed = stats[baseline][1] / ms if ms > 0 else float("inf")
            rows.append((f"{m}x{n}", s, mi, 0.0 if a.no_timing else ms, 1.0 if a.no_timing else speed))
    out = _out(a)
    header = ("shape", "solver", "mean_iters", "mean_seconds", f"speedup_vs_{baseline}")
    rep.write_csv(out / "bench.csv", header, rows)
    text = _aligned(header, rows)
    (out / "bench.txt").write_text(text)
    print(text, end="")
    summary = {"solvers": solvers, "baseline": baseline, "shapes": [list(s) for s in shapes],
               "density": a.density, "runs": a.runs,
               "table": [dict(zip(header, r)) for r in rows]}
    return _finish(a, out, "bench", cfg, {"table_csv": "bench.csv", "table_txt": "bench.txt"},
                   summary, _worst(statuses))


def _aligned(header, rows):
    cells = [list(header)] + [[c if isinstance(c, str) else f"{c:.6g}" for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n" for r in cells)


def cmd_parallel(a) -> int:
    cfg = _cfg(a)
    A, b, source = _load_system(a)
    try:
        res = parallel_rgdbek(A, b, cfg, P=a.P)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out(a)
    rep.write_trace(out / "trace.csv", res.trace, timing=not a.no_timing)
    res.events.write(out / "events.csv")
    iters = res.trace.iterations
    reductions = sum(1 for _, _, e in res.events.events if e.startswith("reduce"))
    summary = rep.trace_summary(res.trace, not a.no_timing)
    summary.update(P=a.P, shape=list(A.shape), source=source, rhs=a.rhs,
                   row_ranges=[list(r) for r in res.partition.row_ranges],
                   rank_nnz=res.partition.rank_nnz(A).tolist(),
                   reductions_per_iteration_per_rank=reductions / (iters * a.P) if iters else 0.0)
    print(f"parallel P={a.P}: {res.status} after {iters} iterations, rse={res.trace.final_rse:.3e}")
    return _finish(a, out, "parallel", cfg, {"trace": "trace.csv", "events": "events.csv"},
                   summary, res.status)


def cmd_deblur(a) -> int:
    from .apps.imaging import PsfSpec, blur_image, deblur_image, psnr, read_pnm, ssim, synthetic_image, write_pnm
    cfg = _cfg(a)
    img = read_pnm(a.image) if a.image else synthetic_image(a.size, a.channels)
    H, W = img.shape[:2]
    try:
        spec = PsfSpec(a.sigma, a.band, H * W)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    restored, traces = deblur_image(img, spec, cfg)
    out = _out(a)
    write_pnm(out / "original.pnm", img)
    write_pnm(out / "blurred.pnm", blur_image(img, spec))
    write_pnm(out / "restored.pnm", restored)
    arts = {"original": "original.pnm", "blurred": "blurred.pnm", "restored": "restored.pnm"}
    for c, tr in enumerate(traces):
        rep.write_trace(out / f"trace_ch{c}.csv", tr, timing=not a.no_timing)
        arts[f"trace_ch{c}"] = f"trace_ch{c}.csv"
    p, s = psnr(img, restored), ssim(img, restored)
    summary = {"psnr_db": p, "ssim": s, "shape": list(img.shape), "sigma": a.sigma, "band": a.band,
               "channels": [rep.trace_summary(t, not a.no_timing) for t in traces],
               "avg_channel_rse": float(np.mean([t.final_rse for t in traces]))}
    print(f"deblur: PSNR={p:.2f} dB SSIM={s:.6f}")
    return _finish(a, out, "deblur", cfg, arts, summary, _worst([t.status for t in traces]))


def cmd_fem(a) -> int:
    from .apps import fem
    cfg = _cfg(a)
    ny = a.ny or a.nx
    try:
        mesh = fem.build_uniform_tri_mesh(a.nx, ny, a.diagonal)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if a.pde == "poisson":
        exact, f = fem.poisson_problem()
        A, b, dofs = fem.assemble_poisson(mesh, f, a.load_rule, a.dirichlet)
    else:
        exact, f = fem.helmholtz_problem(a.k)
        A, b, dofs = fem.assemble_helmholtz(mesh, a.k, f, a.load_rule, a.dirichlet)
    u, err, res = fem.fem_solve_and_error(A, b, exact, mesh, dofs, cfg)
    out = _out(a)
    ue = exact(mesh.nodes[:, 0], mesh.nodes[:, 1])
    rep.write_csv(out / "solution.csv", ("x", "y", "u_h", "u_exact"),
                  zip(mesh.nodes[:, 0], mesh.nodes[:, 1], u, ue))
    rep.write_trace(out / "trace.csv", res.trace, timing=not a.no_timing)
    inner = mesh.interior_nodes
    summary = rep.trace_summary(res.trace, not a.no_timing)
    summary.update(pde=a.pde, nx=a.nx, ny=ny, elements=mesh.n_triangles, unknowns=A.n_rows,
                   sparsity=fem.sparsity(A), frobenius_norm=float(np.sqrt(np.sum(A.values ** 2))),
                   relative_l2_error=err, error_std=float(np.std(np.abs(u[inner] - ue[inner]))))
    if a.pde == "helmholtz":
        summary["wavenumber"] = a.k
    print(f"fem {a.pde}: {res.status}, relative L2 error {err:.6e}")
    return _finish(a, out, "fem", cfg, {"solution": "solution.csv", "trace": "trace.csv"}, summary, res.status)


def cmd_popmodel(a) -> int:
    from .apps.popmodel import PpsParams, recover_and_predict, simulate_pps
    cfg = _cfg(a)
    t, X = simulate_pps(PpsParams(), t_end=a.t_end, dt=a.dt)
    try:
        rec = recover_and_predict(X, a.n, delay=a.delay, sigma=a.noise, seed=a.seed, cfg=cfg, holdout=a.holdout)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out(a)
    rep.write_csv(out / "series.csv", ("t", "x", "y", "z"), zip(t, *X.T))
    start = a.n + a.delay
    tw = t[start:start + a.n + 1]
    rep.write_csv(out / "prediction.csv", ("t", "x", "y", "z", "x_pred", "y_pred", "z_pred"),
                  zip(tw, *rec.truth.T, *rec.predicted.T))
    rep.write_csv(out / "filters.csv", ("lag", "c_x", "c_y", "c_z"), zip(range(a.n + 1), *rec.filters))
    arts = {"series": "series.csv", "prediction": "prediction.csv", "filters": "filters.csv"}
    for name, tr in zip("xyz", rec.traces):
        rep.write_trace(out / f"trace_{name}.csv", tr, timing=not a.no_timing)
        arts[f"trace_{name}"] = f"trace_{name}.csv"
    summary = {"frobenius_error": rec.frobenius_error, "holdout_error": rec.holdout_error,
               "n": a.n, "delay": a.delay, "noise_sigma": a.noise,
               "species": {k: rep.trace_summary(tr, not a.no_timing) for k, tr in zip("xyz", rec.traces)}}
    print(f"popmodel: Frobenius error {rec.frobenius_error:.6e}")
    return _finish(a, out, "popmodel", cfg, arts, summary, _worst([tr.status for tr in rec.traces]))


def cmd_replay(a) -> int:
    man = rep.RunManifest.read(a.manifest)
    if man.command not in _COMMANDS:
        raise UsageError(f"manifest names unknown command {man.command!r}")
    ns = argparse.Namespace(**man.args)
    ns.out = a.out
    return _COMMANDS[man.command](ns)


_COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "parallel": cmd_parallel, "deblur": cmd_deblur,
             "fem": cmd_fem, "popmodel": cmd_popmodel}


# -- parser -------------------------------------------------------------------

def _common(p, eta=0.5, tol=1e-6, max_iters=400_000):
    p.add_argument("--eta", type=float, default=eta)
    p.add_argument("--tol", type=float, default=tol, help="RSE termination threshold")
    p.add_argument("--max-iters", type=int, default=max_iters)
    p.add_argument("--seed", type=int, default=None, help="default: $RGDBEK_SEED or 0")
    p.add_argument("--lsqr-tol", type=float, default=1e-8)
    p.add_argument("--trace-every", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--no-timing", action="store_true",
                   help="write zero elapsed times so reruns produce identical files")


def _system_args(p):
    p.add_argument("--mtx", type=Path)
    p.add_argument("--gen", metavar="M,N,DENSITY")
    p.add_argument("--rhs", choices=("consistent", "inconsistent"), default="consistent")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rgdbek", description="Randomized greedy double block extended Kaczmarz")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("solve", help="solve one system and write its trace")
    _system_args(p)
    p.add_argument("--solver", choices=sorted(SOLVERS), required=True)
    _common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="mean iterations/seconds over shapes and seeds")
    p.add_argument("--solvers", default="rgdbek,gdbek,rek")
    p.add_argument("--baseline", default=None, help="speedup reference (default: first solver)")
    p.add_argument("--shapes", default="1000x200")
    p.add_argument("--density", type=float, default=0.01)
    p.add_argument("--runs", type=int, default=10)
    _common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("parallel", help="row-partitioned parallel RGDBEK")
    _system_args(p)
    p.add_argument("-P", "--ranks", dest="P", type=int, default=1)
    _common(p, eta=0.1, tol=1e-4)
    p.set_defaults(func=cmd_parallel)

    p = sub.add_parser("deblur", help="Gaussian-Toeplitz deblurring")
    p.add_argument("--image", type=Path, help="P2/P3 input (default: synthetic)")
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--sigma", type=float, default=20.0)
    p.add_argument("--band", type=int, default=20)
    _common(p, tol=1e-12, max_iters=2000)
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("fem", help="P1 finite elements for Poisson/Helmholtz")
    p.add_argument("--pde", choices=("poisson", "helmholtz"), required=True)
    p.add_argument("--nx", type=int, default=25)
    p.add_argument("--ny", type=int, default=None)
    p.add_argument("--k", type=float, default=25.0, help="Helmholtz wavenumber")
    p.add_argument("--diagonal", choices=("alternating", "main", "anti"), default="alternating")
    p.add_argument("--load-rule", choices=("consistent", "lumped", "centroid", "dunavant5"), default="consistent")
    p.add_argument("--dirichlet", choices=("eliminate", "identity"), default="eliminate")
    _common(p, max_iters=10_000)
    p.set_defaults(func=cmd_fem)

    p = sub.add_parser("popmodel", help="predator-prey-scavenger signal recovery")
    p.add_argument("--n", type=int, default=10, help="filter length (system is (n+1)x(n+1))")
    p.add_argument("--delay", type=int, default=1)
    p.add_argument("--noise", type=float, default=3.0, help="noise standard deviation")
    p.add_argument("--holdout", type=int, default=0)
    p.add_argument("--t-end", type=float, default=200.0)
    p.add_argument("--dt", type=float, default=0.1)
    _common(p, tol=1e-10, max_iters=10_000)
    p.set_defaults(func=cmd_popmodel)

    p = sub.add_parser("replay", help="re-run a command from its manifest.json")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"rgdbek: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"rgdbek: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
