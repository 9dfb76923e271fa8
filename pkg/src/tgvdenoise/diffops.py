"""Finite-difference calculus on a collocated pixel grid.

Fields are plain float64 arrays with the grid spacing ``h`` passed
alongside:

* scalar images          -- shape ``(H, W)``, row-major (row = y, col = x)
* vector fields          -- shape ``(2, H, W)``, planes ``(x, y)``
* symmetric tensor fields-- shape ``(3, H, W)``, planes ``(xx, yy, xy)``;
  the off-diagonal is stored once and counted twice in inner products
* full tensor fields     -- shape ``(4, H, W)``, planes ``(xx, xy, yx, yy)``

All derivative operators are forward differences with the difference set
to zero at the last row/column, so constants are annihilated exactly.
``div``, ``sym_div`` and ``full_div`` are the exact negative adjoints of
``grad``, ``sym_grad`` and ``full_grad`` under the h^2-weighted inner
products; the saddle-point solver depends on this being exact rather
than approximate.
"""

import numpy as np


def _dx(a, h):
    """Forward difference along x (columns), zero in the last column."""
    d = np.zeros_like(a)
    d[:, :-1] = (a[:, 1:] - a[:, :-1]) / h
    return d


def _dy(a, h):
    """Forward difference along y (rows), zero in the last row."""
    d = np.zeros_like(a)
    d[:-1, :] = (a[1:, :] - a[:-1, :]) / h
    return d


def _dxt(a, h):
    """Negative adjoint of _dx (backward difference with boundary rows)."""
    d = np.empty_like(a)
    d[:, 0] = a[:, 0]
    d[:, 1:-1] = a[:, 1:-1] - a[:, :-2]
    d[:, -1] = -a[:, -2]
    return d / h


def _dyt(a, h):
    """Negative adjoint of _dy."""
    d = np.empty_like(a)
    d[0, :] = a[0, :]
    d[1:-1, :] = a[1:-1, :] - a[:-2, :]
    d[-1, :] = -a[-2, :]
    return d / h


def grad(u, h=1.0):
    """Forward-difference gradient of a scalar image, shape (2, H, W)."""
    u = np.asarray(u, dtype=float)
    return np.stack((_dx(u, h), _dy(u, h)))


def div(p, h=1.0):
    """Divergence of a vector field; exact negative adjoint of grad."""
    return _dxt(p[0], h) + _dyt(p[1], h)


def sym_grad(w, h=1.0):
    """Symmetrised gradient of a vector field, planes (xx, yy, xy)."""
    xx = _dx(w[0], h)
    yy = _dy(w[1], h)
    xy = 0.5 * (_dy(w[0], h) + _dx(w[1], h))
    return np.stack((xx, yy, xy))


def sym_div(q, h=1.0):
    """Exact negative adjoint of sym_grad (xy plane counted twice)."""
    w0 = _dxt(q[0], h) + _dyt(q[2], h)
    w1 = _dxt(q[2], h) + _dyt(q[1], h)
    return np.stack((w0, w1))


def full_grad(w, h=1.0):
    """Full Jacobian of a vector field, planes (xx, xy, yx, yy)."""
    return np.stack((_dx(w[0], h), _dy(w[0], h), _dx(w[1], h), _dy(w[1], h)))


def full_div(t, h=1.0):
    """Exact negative adjoint of full_grad."""
    w0 = _dxt(t[0], h) + _dyt(t[1], h)
    w1 = _dxt(t[2], h) + _dyt(t[3], h)
    return np.stack((w0, w1))


def symmetrize(t):
    """Symmetric part of a full tensor field, as a (3, H, W) field."""
    return np.stack((t[0], t[3], 0.5 * (t[1] + t[2])))


def pointwise_norm(field):
    """Per-pixel 2-norm / Frobenius norm of a stacked field.

    Dispatches on the number of planes: 2 = vector, 3 = symmetric tensor
    (xy twice), 4 = full tensor.
    """
    k = field.shape[0]
    if k == 2:
        s = field[0] ** 2 + field[1] ** 2
    elif k == 3:
        s = field[0] ** 2 + field[1] ** 2 + 2.0 * field[2] ** 2
    elif k == 4:
        s = field[0] ** 2 + field[1] ** 2 + field[2] ** 2 + field[3] ** 2
    else:
        raise ValueError(f"expected 2, 3 or 4 planes, got {k}")
    return np.sqrt(s)


def radon_norm(field, h=1.0):
    """Discrete Radon norm: h^2 times the sum of pointwise norms."""
    return h * h * float(pointwise_norm(field).sum())


def inner(a, b, h=1.0):
    """h^2-weighted inner product matching radon_norm's conventions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        s = float((a * b).sum())
    elif a.shape[0] == 3:
        s = float((a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2]).sum())
    else:
        s = float((a * b).sum())
    return h * h * s


def operator_norm(apply_op, apply_adjoint, domain_shapes, tol=1e-6,
                  max_iters=500, seed=0):
    """Power-iteration estimate of the operator 2-norm.

    ``apply_op`` maps a tuple of arrays (shapes ``domain_shapes``) to a
    tuple of arrays; ``apply_adjoint`` maps back.  Stops when the relative
    change of the estimate drops below ``tol`` or after ``max_iters``.
    """
    rng = np.random.default_rng(seed)
    x = [rng.standard_normal(s) for s in domain_shapes]

    def _dot(xs, ys):
        return sum(float((a * b).sum()) for a, b in zip(xs, ys))

    sigma = 0.0
    for _ in range(max_iters):
        nx = np.sqrt(_dot(x, x))
        if nx == 0.0:
            return 0.0
        x = [a / nx for a in x]
        y = apply_op(x)
        x = apply_adjoint(y)
        sigma_new = np.sqrt(_dot(y, y))
        if sigma > 0.0 and abs(sigma_new - sigma) < tol * sigma:
            sigma = sigma_new
            break
        sigma = sigma_new
    return float(sigma)
