"""Quantitative instruments: PSNR, singular-mass surrogate, jump masks,
mollified strict-approximation traces, Korn-ratio probe, contrast."""

import math
from dataclasses import dataclass

import numpy as np

from .diffops import full_grad, grad, pointwise_norm, sym_grad
from .validation import check_field, check_image, check_spacing


def psnr(u, reference, peak=1.0):
    """10*log10(peak^2 / MSE) in dB; +inf when the images coincide."""
    u = check_image(u, "u")
    reference = check_image(reference, "reference")
    if u.shape != reference.shape:
        raise ValueError("psnr: shape mismatch")
    mse = float(((u - reference) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def singular_surrogate(u, w, h=1.0):
    """|Du - w|(Omega), a computable upper bound for the singular mass of Du."""
    u = check_image(u, "u")
    w = check_field(w, 2, "w", like=u)
    h = check_spacing(h)
    return float(h * h * pointwise_norm(grad(u, h) - w).sum())


@dataclass(frozen=True)
class JumpMask:
    """Boolean plane marking pixels where |Du|*h exceeds the threshold."""

    mask: np.ndarray
    threshold: float

    def count(self):
        return int(self.mask.sum())


def jump_mask(u, threshold=None, h=1.0):
    """Detect jump pixels: raw difference magnitude above threshold.

    Jumps across one pixel have |Du| ~ contrast/h while smooth variation
    stays O(1), so |Du|*h separates the two at any desk resolution.  The
    default threshold is half the dynamic range of u.
    """
    u = check_image(u, "u")
    h = check_spacing(h)
    if threshold is None:
        threshold = 0.5 * float(u.max() - u.min())
    mags = pointwise_norm(grad(u, h)) * h
    return JumpMask(mags > threshold, float(threshold))


@dataclass(frozen=True)
class ApproxTrace:
    """Per-scale record of the four strict-approximation quantities.

    rows hold (scale, |u_s - u|_1, |w_s - w|_1, |Du_s - w_s|, |E w_s|),
    all restricted to the interior window untouched by any kernel; the
    ref_* fields are the unsmoothed values on the same window.
    """

    rows: tuple
    ref_grad_gap: float
    ref_sym_mass: float
    ref_u_l1: float
    ref_w_l1: float


def _triangle_kernel(scale):
    """Normalised discrete triangular kernel of the given scale."""
    n = int(np.ceil(scale)) - 1
    offsets = np.arange(-n, n + 1)
    k = np.maximum(0.0, 1.0 - np.abs(offsets) / scale)
    k /= k.sum()
    k[n] += 1.0 - k.sum()  # force mass exactly one
    return k


def _convolve_separable(a, k):
    """Zero-padded separable convolution, same shape as input."""
    n = len(k) // 2
    out_r = np.zeros_like(a)
    for o, c in zip(range(-n, n + 1), k):
        src = np.roll(a, o, axis=0)
        if o > 0:
            src[:o, :] = 0.0
        elif o < 0:
            src[o:, :] = 0.0
        out_r += c * src
    out = np.zeros_like(out_r)
    for o, c in zip(range(-n, n + 1), k):
        src = np.roll(out_r, o, axis=1)
        if o > 0:
            src[:, :o] = 0.0
        elif o < 0:
            src[:, o:] = 0.0
        out += c * src
    return out


def mollify_trace(u, w, scales, h=1.0):
    """Smooth (u, w) at each scale and trace the four quantities above.

    Scales must be positive and strictly decreasing.  All quantities are
    evaluated on the interior window that no kernel support reaches, so
    the zero padding never enters.
    """
    u = check_image(u, "u")
    w = check_field(w, 2, "w", like=u)
    h = check_spacing(h)
    scales = [float(s) for s in scales]
    if not scales or any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly decreasing")

    reach = int(np.ceil(scales[0])) - 1
    m = reach + 1
    H, W = u.shape
    if 2 * m >= min(H, W):
        raise ValueError("kernel support exceeds half the grid")
    win = (slice(m, H - m), slice(m, W - m))

    def l1(a):
        return h * h * float(np.abs(a[win]).sum())

    def vec_l1(a):
        return h * h * float(pointwise_norm(a)[win].sum())

    ref_gap = vec_l1(grad(u, h) - w)
    ref_sym = h * h * float(pointwise_norm(sym_grad(w, h))[win].sum())

    rows = []
    for s in scales:
        k = _triangle_kernel(s)
        us = _convolve_separable(u, k)
        ws = np.stack([_convolve_separable(w[0], k), _convolve_separable(w[1], k)])
        rows.append((
            s,
            l1(us - u),
            vec_l1(ws - w),
            vec_l1(grad(us, h) - ws),
            h * h * float(pointwise_norm(sym_grad(ws, h))[win].sum()),
        ))
    return ApproxTrace(tuple(rows), ref_gap, ref_sym, l1(u), vec_l1(w))


def korn_ratio(w, q=2.0, h=1.0, band=1):
    """(sum |Dw|_F^q / sum |Ew|_F^q)^(1/q) for a zero-boundary field.

    Always >= 1 since the symmetric part never exceeds the full Jacobian
    pointwise.  Raises if the symmetrised gradient vanishes identically
    (degenerate probe) or if w is nonzero on the boundary band.
    """
    w = check_field(w, 2, "w")
    h = check_spacing(h)
    mask = np.zeros(w.shape[1:], dtype=bool)
    mask[:band, :] = mask[-band:, :] = mask[:, :band] = mask[:, -band:] = True
    if np.any(w[:, mask] != 0.0):
        raise ValueError("korn_ratio requires w to vanish on the boundary band")
    full = pointwise_norm(full_grad(w, h))
    sym = pointwise_norm(sym_grad(w, h))
    denom = float((sym ** q).sum())
    if denom == 0.0:
        raise ValueError("Ew vanishes identically; Korn ratio undefined")
    return (float((full ** q).sum()) / denom) ** (1.0 / q)


def region_contrast(u, inside, outside):
    """Mean over the inside region minus mean over the outside region."""
    u = check_image(u, "u")
    inside = np.asarray(inside, dtype=bool)
    outside = np.asarray(outside, dtype=bool)
    if inside.shape != u.shape or outside.shape != u.shape:
        raise ValueError("region masks must match the image shape")
    if not inside.any() or not outside.any():
        raise ValueError("region masks must be nonempty")
    return float(u[inside].mean() - u[outside].mean())
