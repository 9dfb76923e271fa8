"""Experiment runners: square-phantom beta sweeps, the q-comparison study,
and machine-readable report emission (CSV + PGM + manifest)."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import pgmio
from .analysis import jump_mask, psnr, region_contrast, singular_surrogate
from .models import FidelitySpec, ModelSpec, beta_scaling
from .solve import SolverOpts, solve
from .validation import check_image

BETA_SWEEP_COLUMNS = ("beta", "energy", "psnr", "singular_surrogate",
                      "jump_pixels", "contrast", "iterations")
Q_COMPARISON_COLUMNS = ("method", "q", "beta", "energy", "psnr", "iterations")


@dataclass(frozen=True)
class PhantomSpec:
    """Centered indicator square on a uniform background."""

    size: int = 129
    half_width: int = 32
    contrast: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        c = self.size // 2
        if self.half_width < 1:
            raise ValueError("half_width must be >= 1")
        if c - self.half_width + 1 <= 0 or c + self.half_width - 1 >= self.size - 1:
            raise ValueError("square must fit strictly inside the domain")


@dataclass(frozen=True)
class NoiseSpec:
    """Seeded noise model; `level` is sigma or the flip fraction."""

    kind: str = "gaussian"
    level: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "salt_pepper", "none"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.level < 0 or (self.kind == "salt_pepper" and self.level > 1):
            raise ValueError(f"invalid noise level {self.level}")


@dataclass
class SweepReport:
    """One row per parameter point, with all inputs echoed in ``meta``."""

    columns: tuple
    rows: list
    meta: dict
    images: dict = field(default_factory=dict, repr=False)


def make_phantom(spec=PhantomSpec()):
    """Indicator-square test image; values are exactly the two levels."""
    c = spec.size // 2
    idx = np.arange(spec.size) - c
    inside = (np.abs(idx)[:, None] < spec.half_width) & (np.abs(idx)[None, :] < spec.half_width)
    f = np.full((spec.size, spec.size), float(spec.background))
    f[inside] = spec.background + spec.contrast
    return f


def phantom_masks(spec=PhantomSpec()):
    """(inside, outside) boolean masks matching make_phantom exactly."""
    f = make_phantom(PhantomSpec(spec.size, spec.half_width, 1.0, 0.0))
    inside = f == 1.0
    return inside, ~inside


def make_synthetic(size=128):
    """Piecewise-smooth test image prone to staircasing under TV.

    An affine ramp plus a smooth bump (where first-order regularisation
    staircases) and one sharp square (a genuine jump to preserve).
    """
    i = np.arange(size, dtype=float)
    y, x = np.meshgrid(i, i, indexing="ij")
    s = float(size - 1)
    img = 0.15 + 0.45 * (x + y) / (2.0 * s)
    img += 0.35 * np.exp(-((x - 0.32 * s) ** 2 + (y - 0.36 * s) ** 2)
                         / (2.0 * (0.16 * s) ** 2))
    lo, hi = int(0.62 * s), int(0.86 * s)
    img[lo:hi, lo:hi] += 0.25
    return np.clip(img, 0.0, 1.0)


def add_noise(f, noise):
    """Apply the seeded noise model; reproducible bit for bit."""
    f = check_image(f, "f")
    if noise.kind == "none":
        return f.copy()
    rng = np.random.default_rng(noise.seed)
    if noise.kind == "gaussian":
        return f + rng.normal(0.0, noise.level, f.shape)
    lo, hi = float(f.min()), float(f.max())
    out = f.copy()
    flip = rng.random(f.shape) < noise.level
    out[flip] = np.where(rng.random(f.shape) < 0.5, lo, hi)[flip]
    return out


def _n_jobs():
    try:
        return max(1, int(os.environ.get("TGVDENOISE_THREADS", "1")))
    except ValueError:
        return 1


def beta_sweep(f, alpha, betas, model_kind="tgv2", fid=FidelitySpec(),
               opts=None, reference=None, regions=None, peak=1.0, h=1.0,
               q=None, jump_threshold=None, meta_extra=None):
    """Solve once per beta (descending) and record every instrument.

    ``reference`` defaults to f itself (the noiseless-phantom setting);
    ``regions`` are optional (inside, outside) masks for the contrast
    column, reported as NaN when absent.
    """
    f = check_image(f, "f")
    reference = f if reference is None else check_image(reference, "reference")
    opts = opts or SolverOpts()
    betas = sorted((float(b) for b in betas), reverse=True)
    if jump_threshold is None:
        jump_threshold = 0.5 * float(reference.max() - reference.min())

    def one(beta):
        model = ModelSpec(model_kind, alpha, beta, q)
        rep = solve(f, model, fid, opts, h)
        contrast = (region_contrast(rep.u, *regions) if regions is not None
                    else float("nan"))
        row = (beta, rep.energy, psnr(rep.u, reference, peak),
               singular_surrogate(rep.u, rep.w, h) if rep.w is not None
               else singular_surrogate(rep.u, np.zeros((2,) + rep.u.shape), h),
               jump_mask(rep.u, jump_threshold, h).count(),
               contrast, rep.iterations)
        return row, rep

    jobs = _n_jobs()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, betas))
    else:
        results = [one(b) for b in betas]

    rows = [r for r, _ in results]
    images = {f"beta={beta:g}": rep.u for beta, (_, rep) in zip(betas, results)}
    meta = {
        "experiment": "beta_sweep", "model": model_kind, "alpha": alpha,
        "betas": ",".join(f"{b:g}" for b in betas), "q": "" if q is None else q,
        "fidelity_p": fid.p, "fidelity_weight": fid.weight, "peak": peak,
        "spacing": h, "jump_threshold": jump_threshold,
        "tol": opts.tol, "max_iters": opts.max_iters,
    }
    meta.update(meta_extra or {})
    return SweepReport(BETA_SWEEP_COLUMNS, rows, meta, images)


def q_comparison(f_noisy, reference, alpha, beta_base, qs=(1.0, 1.5, 2.0),
                 fid=FidelitySpec(p=2.0, weight=0.5), opts=None, peak=1.0,
                 h=1.0, meta_extra=None):
    """Run TV plus the L^q second-order variants with scaled beta.

    The q = 1 entry is the plain cascade model; for q > 1 the second-order
    weight is scaled by n_pixels^((q-1)/q) to stay comparable.
    """
    f_noisy = check_image(f_noisy, "f_noisy")
    reference = check_image(reference, "reference")
    opts = opts or SolverOpts()
    n_pixels = f_noisy.size

    rows = []
    images = {}
    rep = solve(f_noisy, ModelSpec("tv", alpha), fid, opts, h)
    rows.append(("tv", "", float(beta_base), rep.energy,
                 psnr(rep.u, reference, peak), rep.iterations))
    images["tv"] = rep.u

    def one(qv):
        beta = beta_scaling(beta_base, qv, n_pixels)
        if qv == 1.0:
            model = ModelSpec("tgv2", alpha, beta)
        else:
            model = ModelSpec("tgv2q", alpha, beta, qv)
        rep = solve(f_noisy, model, fid, opts, h)
        return (f"tgv2q", qv, beta, rep.energy,
                psnr(rep.u, reference, peak), rep.iterations), rep

    jobs = _n_jobs()
    qvals = [float(qv) for qv in qs]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, qvals))
    else:
        results = [one(qv) for qv in qvals]
    for qv, (row, rep) in zip(qvals, results):
        rows.append(row)
        images[f"q={qv:g}"] = rep.u

    meta = {
        "experiment": "q_comparison", "alpha": alpha, "beta_base": beta_base,
        "qs": ",".join(f"{qv:g}" for qv in qvals), "fidelity_p": fid.p,
        "fidelity_weight": fid.weight, "peak": peak, "spacing": h,
        "tol": opts.tol, "max_iters": opts.max_iters,
    }
    meta.update(meta_extra or {})
    return SweepReport(Q_COMPARISON_COLUMNS, rows, meta, images)


def _atomic_write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def emit_report(report, outdir):
    """Write report.csv, manifest.txt and one PGM per stored image.

    Files are written to a temporary name and renamed on success, so a
    failure never leaves a partial file behind.  Returns the paths
    written.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = []

    lines = [",".join(report.columns)]
    for row in report.rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    csv_path = os.path.join(outdir, "report.csv")
    _atomic_write_text(csv_path, "\n".join(lines) + "\n")
    paths.append(csv_path)

    manifest = "".join(f"{k} = {v}\n" for k, v in sorted(report.meta.items()))
    man_path = os.path.join(outdir, "manifest.txt")
    _atomic_write_text(man_path, manifest)
    paths.append(man_path)

    for key, img in report.images.items():
        img_path = os.path.join(outdir, f"{key.replace('=', '_')}.pgm")
        pgmio.write_pgm(np.clip(img, 0.0, 1.0), img_path, maxval=255)
        paths.append(img_path)
    return paths


def _csv_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def parse_report_csv(path):
    """Read back an emitted CSV as (columns, rows-of-strings)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    cols = tuple(lines[0].split(","))
    return cols, [tuple(ln.split(",")) for ln in lines[1:]]
