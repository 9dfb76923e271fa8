"""First-order primal-dual (Chambolle-Pock) solver for all model kinds.

Each model is cast as the saddle-point problem

    min_x max_y  <K x + b, y> + G(x) - F*(y)

with x the primal variables (u, and w or v), y the dual variables (p, q),
F* the indicator of the dual norm balls and G the fidelity term (plus the
zero-band constraint for tgv2q and the zero-mean constraint on the ictv
potential).  One engine serves every model; only the operator K, the
proximal map of G and the dual projections differ.

Steps default to sigma = tau = 1/L with L the power-iteration estimate of
|K| padded by a 2% safety margin, which satisfies tau*sigma*L^2 <= 1
without per-model tuning.
"""

from dataclasses import dataclass, field

import numpy as np

from . import models
from .diffops import (div, full_div, full_grad, grad, operator_norm,
                      pointwise_norm, sym_div, sym_grad)
from .models import FidelitySpec, ModelSpec, boundary_band_mask
from .validation import check_image, check_spacing

_SAFETY = 1.02


@dataclass
class SolverOpts:
    """Iteration controls; tau/sigma default to the 1/L rule."""

    max_iters: int = 5000
    tol: float = 1e-5
    tau: float | None = None
    sigma: float | None = None
    theta: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")


@dataclass
class SolveReport:
    """Converged iterates plus bookkeeping from one solve."""

    u: np.ndarray
    w: np.ndarray | None
    v: np.ndarray | None
    energy: float
    residual_history: list[float] = field(repr=False, default_factory=list)
    iterations: int = 0
    converged: bool = False


def prox_l2_fidelity(u, f, step, weight=1.0):
    """Exact prox of step * weight * (. - f)^2: pointwise averaging."""
    a = 2.0 * step * weight
    return (u + a * f) / (1.0 + a)


def prox_l1_fidelity(u, f, step, weight=1.0):
    """Exact prox of step * weight * |. - f|: soft shrinkage toward f."""
    k = step * weight
    d = u - f
    return f + np.sign(d) * np.maximum(np.abs(d) - k, 0.0)


def project_pointwise_ball(p, radius):
    """Scale each pixel's vector/tensor onto the ball of given radius."""
    mags = pointwise_norm(p)
    scale = radius / np.maximum(mags, radius)
    return p * scale


def project_global_lq_ball(p, radius, q_dual, h=1.0):
    """Euclidean projection onto the global mixed-L^{q'} ball.

    The constraint is (h^2 sum |p_i|^{q'})^{1/q'} <= radius with pointwise
    Frobenius norms.  For q' = 2 this is a global rescaling; otherwise the
    Lagrange multiplier is found by bisection (at most 200 steps) with the
    per-pixel stationarity equation solved in closed form (q' = 3) or by a
    guarded vectorised Newton iteration.
    """
    if not 1.0 < q_dual < np.inf:
        raise ValueError(f"dual exponent must lie in (1, inf), got {q_dual}")
    s = pointwise_norm(p)
    rho = radius / h ** (2.0 / q_dual)

    def norm_q(t):
        return float((t ** q_dual).sum()) ** (1.0 / q_dual)

    if norm_q(s) <= rho:
        return p.copy()

    if q_dual == 2.0:
        t = s * (rho / norm_q(s))
        return _rescale_pointwise(p, s, t)

    def t_of(lam):
        c = lam * q_dual
        if q_dual == 3.0:
            # t + 3 lam t^2 = s  solved by the quadratic formula
            return (np.sqrt(1.0 + 4.0 * c * s) - 1.0) / (2.0 * c)
        t = s.copy()
        for _ in range(60):
            g = t + c * t ** (q_dual - 1.0) - s
            dg = 1.0 + c * (q_dual - 1.0) * t ** (q_dual - 2.0)
            step = g / dg
            t = np.maximum(t - step, 0.0)
            if float(np.abs(step).max()) < 1e-15 * max(1.0, float(s.max())):
                break
        return t

    lo, hi = 0.0, 1.0
    while norm_q(t_of(hi)) > rho:
        hi *= 2.0
        if hi > 1e60:
            raise RuntimeError("multiplier bracket blew up; inputs look degenerate")
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        t = t_of(lam)
        n = norm_q(t)
        if abs(n - rho) <= 1e-12 * rho:
            break
        if n > rho:
            lo = lam
        else:
            hi = lam
    else:
        raise RuntimeError("L^q projection did not converge in 200 bisection steps")
    # exact feasibility regardless of multiplier rounding
    t *= min(1.0, rho / norm_q(t))
    return _rescale_pointwise(p, s, t)


def _rescale_pointwise(p, old_mags, new_mags):
    scale = np.where(old_mags > 0.0, new_mags / np.maximum(old_mags, 1e-300), 0.0)
    return p * scale


def _relative_change(new, old):
    num = sum(float(((a - b) ** 2).sum()) for a, b in zip(new, old))
    den = sum(float((a ** 2).sum()) for a in new)
    return np.sqrt(num) / max(np.sqrt(den), 1e-30)


def _pdhg(x, y, apply_K, apply_Kt, prox_primal, project_dual, tau, sigma,
          theta, offset, energy_of, opts):
    """Generic PDHG loop over tuples of arrays; returns the best iterate."""
    xbar = [a.copy() for a in x]
    history = []
    best_energy = energy_of(x)
    best_x = [a.copy() for a in x]
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        kx = apply_K(xbar)
        if offset is not None:
            kx = [a + b for a, b in zip(kx, offset)]
        y_new = project_dual([yi + sigma * ki for yi, ki in zip(y, kx)])
        kty = apply_Kt(y_new)
        x_new = prox_primal([xi - tau * ki for xi, ki in zip(x, kty)])
        res = _relative_change(x_new, x) + _relative_change(y_new, y)
        if not np.isfinite(res):
            raise RuntimeError("solver diverged: non-finite iterate")
        xbar = [xn + theta * (xn - xo) for xn, xo in zip(x_new, x)]
        x, y = x_new, y_new
        e = energy_of(x)
        if e < best_energy:
            best_energy = e
            best_x = [a.copy() for a in x]
        history.append(res)
        if res < opts.tol:
            converged = True
            break
    return best_x, y, best_energy, history, it, converged


def _steps(opts, norm_estimate):
    L = norm_estimate * _SAFETY
    tau = opts.tau if opts.tau is not None else 1.0 / L
    sigma = opts.sigma if opts.sigma is not None else 1.0 / L
    if tau * sigma * norm_estimate ** 2 > 1.0 + 1e-12:
        raise ValueError(
            f"step sizes infeasible: tau*sigma*L^2 = {tau * sigma * norm_estimate ** 2:.6g} > 1")
    return tau, sigma


def _fidelity_prox(fid):
    if fid.p == 2.0:
        return lambda u, f, step: prox_l2_fidelity(u, f, step, fid.weight)
    if fid.p == 1.0:
        return lambda u, f, step: prox_l1_fidelity(u, f, step, fid.weight)
    raise ValueError(f"solver supports fidelity exponents 1 and 2, got {fid.p}")


def _second_order_ops(model, h):
    if model.kind in ("tgv2", "tgv2q"):
        return (lambda w: sym_grad(w, h)), (lambda q: sym_div(q, h)), 3
    return (lambda w: full_grad(w, h)), (lambda q: full_div(q, h)), 4


def _dual_projector(model, h):
    alpha = model.alpha
    if model.kind == "tv":
        return lambda y: [project_pointwise_ball(y[0], alpha)]
    beta = model.beta
    if model.kind == "tgv2q":
        q_dual = model.q / (model.q - 1.0)
        return lambda y: [project_pointwise_ball(y[0], alpha),
                          project_global_lq_ball(y[1], beta, q_dual, h)]
    return lambda y: [project_pointwise_ball(y[0], alpha),
                      project_pointwise_ball(y[1], beta)]


def solve(f, model, fid=FidelitySpec(), opts=None, h=1.0):
    """Minimise fidelity + regulariser for the given model.

    Returns a :class:`SolveReport`; the reported energy is the energy
    module's evaluation of the returned iterates, and the returned primal
    is the best-energy iterate seen.
    """
    f = check_image(f, "f")
    h = check_spacing(h)
    opts = opts or SolverOpts()
    fprox = _fidelity_prox(fid)
    shape = f.shape

    if model.kind == "tv":
        apply_K = lambda x: [grad(x[0], h)]
        apply_Kt = lambda y: [-div(y[0], h)]
        L = operator_norm(lambda x: apply_K(x), apply_Kt, [shape])
        tau, sigma = _steps(opts, L)
        prox = lambda x: [fprox(x[0], f, tau)]
        energy_of = lambda x: (models.fidelity_energy(x[0], f, fid, h)
                               + models.regularizer_energy(x[0], None, model, h))
        x0 = [f.copy()]
        y0 = [np.zeros((2,) + shape)]
        x, y, energy, hist, its, ok = _pdhg(
            x0, y0, apply_K, apply_Kt, prox, _dual_projector(model, h),
            tau, sigma, opts.theta, None, energy_of, opts)
        return SolveReport(x[0], None, None, energy, hist, its, ok)

    if model.kind == "ictv":
        def apply_K(x):
            gv = grad(x[1], h)
            return [grad(x[0], h) - gv, full_grad(gv, h)]

        def apply_Kt(y):
            return [-div(y[0], h), div(y[0], h) + div(full_div(y[1], h), h)]

        def prox(x):
            v = x[1]
            return [fprox(x[0], f, tau), v - v.mean()]

        energy_of = lambda x: (models.fidelity_energy(x[0], f, fid, h)
                               + models.regularizer_energy(x[0], x[1], model, h))
        L = operator_norm(apply_K, apply_Kt, [shape, shape])
        tau, sigma = _steps(opts, L)
        x0 = [f.copy(), np.zeros(shape)]
        y0 = [np.zeros((2,) + shape), np.zeros((4,) + shape)]
        x, y, energy, hist, its, ok = _pdhg(
            x0, y0, apply_K, apply_Kt, prox, _dual_projector(model, h),
            tau, sigma, opts.theta, None, energy_of, opts)
        v = x[1]
        return SolveReport(x[0], grad(v, h), v, energy, hist, its, ok)

    # tgv2 / nstgv2 / tgv2q share the (u, w) structure
    B, Bt, nq = _second_order_ops(model, h)
    apply_K = lambda x: [grad(x[0], h) - x[1], B(x[1])]
    apply_Kt = lambda y: [-div(y[0], h), -y[0] - Bt(y[1])]
    if model.kind == "tgv2q":
        band = boundary_band_mask(shape, model.band)

        def wprox(w):
            w = w.copy()
            w[:, band] = 0.0
            return w
    else:
        wprox = lambda w: w
    prox = lambda x: [fprox(x[0], f, tau), wprox(x[1])]
    energy_of = lambda x: (models.fidelity_energy(x[0], f, fid, h)
                           + models.regularizer_energy(x[0], x[1], model, h))
    L = operator_norm(apply_K, apply_Kt, [shape, (2,) + shape])
    tau, sigma = _steps(opts, L)
    x0 = [f.copy(), np.zeros((2,) + shape)]
    y0 = [np.zeros((2,) + shape), np.zeros((nq,) + shape)]
    x, y, energy, hist, its, ok = _pdhg(
        x0, y0, apply_K, apply_Kt, prox, _dual_projector(model, h),
        tau, sigma, opts.theta, None, energy_of, opts)
    return SolveReport(x[0], x[1], None, energy, hist, its, ok)


def inner_min_w(u, model, opts=None, h=1.0):
    """Minimise the cascade over the auxiliary variable with u frozen.

    Returns ``(aux, energy)`` where aux is the vector field w (or the
    scalar potential v for ictv).  This is the inner minimisation that
    defines the TGV-type energies as functions of u alone.
    """
    u = check_image(u, "u")
    h = check_spacing(h)
    if model.kind == "tv":
        raise ValueError("tv has no auxiliary variable to minimise over")
    opts = opts or SolverOpts()
    shape = u.shape
    d = grad(u, h)

    if model.kind == "ictv":
        def apply_K(x):
            gv = grad(x[0], h)
            return [-gv, full_grad(gv, h)]

        def apply_Kt(y):
            return [div(y[0], h) + div(full_div(y[1], h), h)]

        prox = lambda x: [x[0] - x[0].mean()]
        energy_of = lambda x: models.regularizer_energy(u, x[0], model, h)
        L = operator_norm(apply_K, apply_Kt, [shape])
        tau, sigma = _steps(opts, L)
        x0 = [np.zeros(shape)]
        y0 = [np.zeros((2,) + shape), np.zeros((4,) + shape)]
        x, _, energy, hist, its, ok = _pdhg(
            x0, y0, apply_K, apply_Kt, prox, _dual_projector(model, h),
            tau, sigma, opts.theta, [d, np.zeros((4,) + shape)], energy_of, opts)
        return x[0], energy

    B, Bt, nq = _second_order_ops(model, h)
    apply_K = lambda x: [-x[0], B(x[0])]
    apply_Kt = lambda y: [-y[0] - Bt(y[1])]
    if model.kind == "tgv2q":
        band = boundary_band_mask(shape, model.band)

        def prox(x):
            w = x[0].copy()
            w[:, band] = 0.0
            return [w]
    else:
        prox = lambda x: x
    energy_of = lambda x: models.regularizer_energy(u, x[0], model, h)
    L = operator_norm(apply_K, apply_Kt, [(2,) + shape])
    tau, sigma = _steps(opts, L)
    x0 = [np.zeros((2,) + shape)]
    y0 = [np.zeros((2,) + shape), np.zeros((nq,) + shape)]
    x, _, energy, hist, its, ok = _pdhg(
        x0, y0, apply_K, apply_Kt, prox, _dual_projector(model, h),
        tau, sigma, opts.theta, [d, np.zeros((nq,) + shape)], energy_of, opts)
    return x[0], energy
