"""Command-line front end.

Subcommands: denoise, sweep-beta, compare-q, approx, verify.  Every option
can also come from a config file of "key = value" lines ('#' comments);
explicit flags win over file values, unknown keys are rejected.

Exit codes: 0 success, 1 work failed (non-convergence or verify failure),
2 usage, 3 unknown config key, 4 out-of-range value, 5 missing input.
"""

import argparse
import os
import sys

import numpy as np

from . import analysis, diffops, experiments, models, pgmio, solve

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_BADKEY = 3
EXIT_RANGE = 4
EXIT_MISSING = 5


class RangeError(ValueError):
    pass


def _float_list(text):
    vals = [float(t) for t in str(text).split(",") if t.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


# name, caster, default, help
_MODEL_OPTS = [
    ("model", str, "tgv2", "tv | tgv2 | nstgv2 | tgv2q | ictv"),
    ("alpha", float, 0.1, "first-order weight"),
    ("beta", float, 0.2, "second-order weight"),
    ("q", float, None, "exponent for tgv2q (> 1)"),
    ("fidelity", str, "l2", "l1 | l2"),
    ("weight", float, 1.0, "fidelity weight"),
    ("tol", float, 1e-5, "solver residual tolerance"),
    ("max-iters", int, 5000, "solver iteration cap"),
    ("spacing", float, 1.0, "grid spacing h"),
]

_PHANTOM_OPTS = [
    ("size", int, 65, "pixels per side"),
    ("half-width", int, 16, "phantom square half-width"),
    ("contrast", float, 1.0, "square minus background level"),
    ("background", float, 0.0, "background level"),
]

_NOISE_OPTS = [
    ("noise", str, "none", "none | gaussian | salt_pepper"),
    ("sigma", float, 0.1, "noise level (sigma or flip fraction)"),
    ("seed", int, 0, "noise RNG seed"),
]

_OPTS = {
    "denoise": _MODEL_OPTS + [
        ("input", str, None, "input PGM path"),
        ("output", str, None, "output PGM path"),
    ],
    "sweep-beta": _MODEL_OPTS + _PHANTOM_OPTS + _NOISE_OPTS + [
        ("betas", _float_list, [60, 30, 10, 5, 1, 0.5, 0.1, 0.05], "comma-separated beta values"),
        ("outdir", str, "sweep-out", "output directory"),
    ],
    "compare-q": [
        ("size", int, 96, "synthetic image side"),
        ("alpha", float, 0.15, "first-order weight"),
        ("beta-base", float, 1.5, "second-order weight at q = 1"),
        ("qs", _float_list, [1.0, 1.5, 2.0], "comma-separated q values"),
        ("weight", float, 0.5, "fidelity weight (t^2/2 by default)"),
        ("tol", float, 1e-5, "solver residual tolerance"),
        ("max-iters", int, 5000, "solver iteration cap"),
        ("outdir", str, "compareq-out", "output directory"),
    ] + _NOISE_OPTS[1:],
    "approx": _PHANTOM_OPTS + [
        ("alpha", float, 10.0, "first-order weight"),
        ("beta", float, 5.0, "second-order weight"),
        ("scales", _float_list, [6.0, 3.0, 1.5], "mollifier scales, decreasing"),
        ("tol", float, 1e-5, "solver residual tolerance"),
        ("max-iters", int, 5000, "solver iteration cap"),
        ("outdir", str, "approx-out", "output directory"),
    ],
    "verify": [],
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tgvdenoise",
        description="Variational denoising with TV / second-order TGV variants / ICTV")
    subs = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in _OPTS.items():
        sp = subs.add_parser(cmd)
        sp.add_argument("--config", default=None, help="key = value option file")
        for name, _, default, help_text in opts:
            sp.add_argument(f"--{name}", default=None,
                            help=f"{help_text} (default {default})")
    return parser


def _load_config(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _merge_options(ns, opts):
    """CLI flag > config value > built-in default, cast uniformly."""
    config = {}
    if ns.config is not None:
        config = _load_config(ns.config)
        known = {name.replace("-", "_") for name, _, _, _ in opts}
        for key in config:
            if key not in known:
                raise KeyError(key)
    merged = {}
    for name, cast, default, _ in opts:
        dest = name.replace("-", "_")
        raw = getattr(ns, dest)
        if raw is None and dest in config:
            raw = config[dest]
        if raw is None:
            merged[dest] = default
        else:
            try:
                merged[dest] = cast(raw)
            except ValueError as exc:
                raise RangeError(f"invalid value for --{name}: {raw!r}") from exc
    return merged


def _model_from(cfg):
    kind = cfg["model"].lower()
    if cfg.get("q") is not None and cfg["q"] <= 1.0:
        raise RangeError(f"q must exceed 1, got {cfg['q']}")
    try:
        model = models.ModelSpec(kind, cfg["alpha"],
                                 None if kind == "tv" else cfg["beta"],
                                 cfg.get("q") if kind == "tgv2q" else None)
        if cfg["fidelity"] not in ("l1", "l2"):
            raise ValueError(f"fidelity must be l1 or l2, got {cfg['fidelity']!r}")
        fid = models.FidelitySpec(1.0 if cfg["fidelity"] == "l1" else 2.0, cfg["weight"])
        opts = solve.SolverOpts(max_iters=cfg["max_iters"], tol=cfg["tol"])
    except ValueError as exc:
        raise RangeError(str(exc)) from exc
    return model, fid, opts


def _cmd_denoise(cfg):
    if cfg["input"] is None or not os.path.exists(cfg["input"] or ""):
        print(f"tgvdenoise: missing input file {cfg['input']!r}", file=sys.stderr)
        return EXIT_MISSING
    if cfg["output"] is None:
        print("tgvdenoise: --output is required", file=sys.stderr)
        return EXIT_MISSING
    model, fid, opts = _model_from(cfg)
    img, maxval = pgmio.read_pgm(cfg["input"])
    report = solve.solve(img, model, fid, opts, cfg["spacing"])
    pgmio.write_pgm(np.clip(report.u, 0.0, 1.0), cfg["output"], maxval=maxval)
    print(f"{cfg['input']} -> {cfg['output']}: model={model.kind} "
          f"energy={report.energy:.6g} iterations={report.iterations} "
          f"converged={report.converged}")
    return EXIT_OK if report.converged else EXIT_FAIL


def _phantom_from(cfg):
    try:
        spec = experiments.PhantomSpec(cfg["size"], cfg["half_width"],
                                       cfg["contrast"], cfg["background"])
    except ValueError as exc:
        raise RangeError(str(exc)) from exc
    return spec


def _cmd_sweep_beta(cfg):
    spec = _phantom_from(cfg)
    model, fid, opts = _model_from(cfg)
    clean = experiments.make_phantom(spec)
    noise = experiments.NoiseSpec(cfg["noise"], cfg["sigma"], cfg["seed"]) \
        if cfg["noise"] != "none" else experiments.NoiseSpec("none", 0.0, cfg["seed"])
    noisy = experiments.add_noise(clean, noise)
    peak = abs(spec.contrast) or 1.0
    report = experiments.beta_sweep(
        noisy, cfg["alpha"], cfg["betas"], model.kind, fid, opts,
        reference=clean, regions=experiments.phantom_masks(spec), peak=peak,
        h=cfg["spacing"], q=model.q,
        meta_extra={"noise": noise.kind, "noise_level": noise.level, "seed": noise.seed,
                    "size": spec.size, "half_width": spec.half_width})
    paths = experiments.emit_report(report, cfg["outdir"])
    print(f"wrote {len(paths)} files to {cfg['outdir']}")
    return EXIT_OK


def _cmd_compare_q(cfg):
    try:
        opts = solve.SolverOpts(max_iters=cfg["max_iters"], tol=cfg["tol"])
        if cfg["weight"] <= 0:
            raise ValueError(f"weight must be positive, got {cfg['weight']}")
    except ValueError as exc:
        raise RangeError(str(exc)) from exc
    clean = experiments.make_synthetic(cfg["size"])
    noise = experiments.NoiseSpec("gaussian", cfg["sigma"], cfg["seed"])
    noisy = experiments.add_noise(clean, noise)
    fid = models.FidelitySpec(2.0, cfg["weight"])
    report = experiments.q_comparison(
        noisy, clean, cfg["alpha"], cfg["beta_base"], cfg["qs"], fid, opts,
        meta_extra={"noise": "gaussian", "noise_level": noise.level,
                    "seed": noise.seed, "size": cfg["size"]})
    paths = experiments.emit_report(report, cfg["outdir"])
    print(f"wrote {len(paths)} files to {cfg['outdir']}")
    return EXIT_OK


def _cmd_approx(cfg):
    spec = _phantom_from(cfg)
    try:
        opts = solve.SolverOpts(max_iters=cfg["max_iters"], tol=cfg["tol"])
        model = models.ModelSpec("tgv2", cfg["alpha"], cfg["beta"])
    except ValueError as exc:
        raise RangeError(str(exc)) from exc
    f = experiments.make_phantom(spec)
    rep = solve.solve(f, model, models.FidelitySpec(), opts)
    try:
        trace = analysis.mollify_trace(f, rep.w, cfg["scales"])
    except ValueError as exc:
        raise RangeError(str(exc)) from exc
    os.makedirs(cfg["outdir"], exist_ok=True)
    lines = ["scale,du_l1,dw_l1,grad_gap,sym_mass"]
    for row in trace.rows:
        lines.append(",".join(repr(float(v)) for v in row))
    experiments._atomic_write_text(os.path.join(cfg["outdir"], "trace.csv"),
                                   "\n".join(lines) + "\n")
    manifest = {
        "alpha": cfg["alpha"], "beta": cfg["beta"], "size": spec.size,
        "half_width": spec.half_width,
        "scales": ",".join(f"{s:g}" for s in cfg["scales"]),
        "ref_grad_gap": trace.ref_grad_gap, "ref_sym_mass": trace.ref_sym_mass,
        "ref_u_l1": trace.ref_u_l1, "ref_w_l1": trace.ref_w_l1,
    }
    experiments._atomic_write_text(
        os.path.join(cfg["outdir"], "manifest.txt"),
        "".join(f"{k} = {v}\n" for k, v in sorted(manifest.items())))
    print(f"wrote trace for {len(trace.rows)} scales to {cfg['outdir']}")
    return EXIT_OK


def _verify_checks():
    rng = np.random.default_rng(7)
    h = 0.7

    def adjoint(op, adj, planes_in, planes_out):
        worst = 0.0
        for _ in range(20):
            a = rng.standard_normal((planes_in, 24, 24)) if planes_in > 1 \
                else rng.standard_normal((24, 24))
            b = rng.standard_normal((planes_out, 24, 24))
            lhs = diffops.inner(op(a, h), b, h)
            rhs = -diffops.inner(a if planes_in > 1 else a, adj(b, h), h)
            scale = max(1e-30, abs(lhs) + abs(rhs))
            worst = max(worst, abs(lhs - rhs) / scale)
        return worst <= 1e-10, f"max relative defect {worst:.2e}"

    def kernel_of_e():
        worst = 0.0
        idx = np.arange(24, dtype=float)
        yy, xx = np.meshgrid(idx * h, idx * h, indexing="ij")
        for _ in range(5):
            a, c0, c1 = rng.uniform(-1, 1, 3)
            w = np.stack((-a * yy + c0, a * xx + c1))
            ew = diffops.sym_grad(w, h)
            worst = max(worst, float(np.abs(ew[:, :-1, :-1]).max()))
        return worst <= 1e-13, f"max interior |Ew| = {worst:.2e}"

    def prox_oracles():
        u, f_val = 0.83, 0.21
        step, weight = 0.37, 1.4
        got = float(solve.prox_l2_fidelity(np.full((2, 2), u), np.full((2, 2), f_val),
                                           step, weight)[0, 0])
        lo, hi = -5.0, 5.0
        for _ in range(200):
            m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
            g = lambda z: weight * (z - f_val) ** 2 + (z - u) ** 2 / (2 * step)
            if g(m1) < g(m2):
                hi = m2
            else:
                lo = m1
        ok2 = abs(got - 0.5 * (lo + hi)) <= 1e-8
        shrunk = solve.prox_l1_fidelity(np.array([[2.0, 0.3]]), np.array([[0.0, 0.0]]),
                                        0.5, 1.0)
        ok1 = abs(shrunk[0, 0] - 1.5) < 1e-14 and abs(shrunk[0, 1]) < 1e-14
        return ok1 and ok2, "l1/l2 prox against scalar minimisation"

    def ordering_chain():
        u = rng.random((16, 16))
        opts = solve.SolverOpts(max_iters=20000, tol=1e-6)
        alpha = 1.0
        tv = alpha * models.tv_energy(u)
        eps = 2 * opts.tol * tv
        _, e_tgv = solve.inner_min_w(u, models.ModelSpec("tgv2", alpha, 1.0), opts)
        _, e_ns = solve.inner_min_w(u, models.ModelSpec("nstgv2", alpha, 1.0), opts)
        _, e_ictv = solve.inner_min_w(u, models.ModelSpec("ictv", alpha, 1.0), opts)
        ok = e_tgv <= e_ns + eps <= e_ictv + 2 * eps <= tv + 3 * eps
        return ok, (f"tgv2 {e_tgv:.6g} <= nstgv2 {e_ns:.6g} <= "
                    f"ictv {e_ictv:.6g} <= alpha*tv {tv:.6g}")

    return [
        ("adjointness grad/div", lambda: adjoint(diffops.grad, diffops.div, 1, 2)),
        ("adjointness sym_grad/sym_div", lambda: adjoint(diffops.sym_grad, diffops.sym_div, 2, 3)),
        ("adjointness full_grad/full_div", lambda: adjoint(diffops.full_grad, diffops.full_div, 2, 4)),
        ("kernel of symmetrised gradient", kernel_of_e),
        ("fidelity prox closed forms", prox_oracles),
        ("ordering chain tgv2 <= nstgv2 <= ictv <= alpha*tv", ordering_chain),
    ]


def _cmd_verify(cfg):
    failures = 0
    for name, fn in _verify_checks():
        ok, detail = fn()
        print(f"{'ok  ' if ok else 'FAIL'} {name} ({detail})")
        failures += 0 if ok else 1
    return EXIT_OK if failures == 0 else EXIT_FAIL


_RUNNERS = {
    "denoise": _cmd_denoise,
    "sweep-beta": _cmd_sweep_beta,
    "compare-q": _cmd_compare_q,
    "approx": _cmd_approx,
    "verify": _cmd_verify,
}


def main(argv=None):
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _merge_options(ns, _OPTS[ns.command])
    except KeyError as exc:
        print(f"tgvdenoise: unknown config key {exc.args[0]!r}", file=sys.stderr)
        return EXIT_BADKEY
    except FileNotFoundError as exc:
        print(f"tgvdenoise: missing config file {exc}", file=sys.stderr)
        return EXIT_MISSING
    except RangeError as exc:
        print(f"tgvdenoise: {exc}", file=sys.stderr)
        return EXIT_RANGE
    try:
        return _RUNNERS[ns.command](cfg)
    except RangeError as exc:
        print(f"tgvdenoise: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except pgmio.PgmError as exc:
        print(f"tgvdenoise: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
