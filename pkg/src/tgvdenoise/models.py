"""Regularisation model catalog and energy evaluation.

Every model is written in the differentiation-cascade form

    alpha * |Du - w|(Omega)  +  beta * Psi(w)

with the second-order penalty Psi distinguishing the variants:

* ``tv``      -- no second-order variable, alpha * |Du|(Omega)
* ``tgv2``    -- Psi(w) = |Ew|(Omega), E the symmetrised gradient
* ``nstgv2``  -- Psi(w) = |Dw|(Omega), full Jacobian
* ``tgv2q``   -- Psi(w) = (h^2 sum |Ew|_F^q)^(1/q), q > 1, with w forced
                 to vanish on a one-pixel boundary band (discrete
                 zero-trace surrogate, where Korn's inequality holds)
* ``ictv``    -- w constrained to a gradient field, w = grad(v)

Energies are evaluated for *given* auxiliary variables; the actual inner
minimisation lives in :mod:`tgvdenoise.solve`.
"""

from dataclasses import dataclass

import numpy as np

from .diffops import full_grad, grad, pointwise_norm, radon_norm, sym_grad
from .validation import check_image

MODEL_KINDS = ("tv", "tgv2", "nstgv2", "tgv2q", "ictv")


@dataclass(frozen=True)
class ModelSpec:
    """Which regulariser to use, with its weights.

    ``alpha`` weighs the first-order term |Du - w|, ``beta`` the
    second-order term (unused for ``tv``); ``q`` is the integrability
    exponent of the ``tgv2q`` variant and must exceed 1.
    """

    kind: str
    alpha: float
    beta: float | None = None
    q: float | None = None
    band: int = 1

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}, expected one of {MODEL_KINDS}")
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if kind != "tv":
            if self.beta is None or not np.isfinite(self.beta) or self.beta <= 0:
                raise ValueError(f"beta must be positive for {kind}, got {self.beta}")
        if kind == "tgv2q":
            if self.q is None or not np.isfinite(self.q) or self.q <= 1:
                raise ValueError(f"q must be a finite real > 1 for tgv2q, got {self.q}")
            if self.band < 1:
                raise ValueError(f"boundary band width must be >= 1, got {self.band}")


@dataclass(frozen=True)
class FidelitySpec:
    """Data term weight * h^2 * sum |u - f|^p with p >= 1."""

    p: float = 2.0
    weight: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 1:
            raise ValueError(f"fidelity exponent p must be >= 1, got {self.p}")
        if not np.isfinite(self.weight) or self.weight <= 0:
            raise ValueError(f"fidelity weight must be positive, got {self.weight}")


def fidelity_energy(u, f, fid, h=1.0):
    """weight * h^2 * sum |u - f|^p."""
    u = check_image(u, "u")
    f = check_image(f, "f")
    if u.shape != f.shape:
        raise ValueError(f"dimension mismatch: u {u.shape} vs f {f.shape}")
    return fid.weight * h * h * float((np.abs(u - f) ** fid.p).sum())


def tv_energy(u, h=1.0):
    """Discrete total variation |Du|(Omega), without the alpha weight."""
    return radon_norm(grad(u, h), h)


def tgv2_energy(u, w, alpha, beta, h=1.0):
    """Cascade energy alpha*|Du - w| + beta*|Ew| for a given w."""
    return alpha * radon_norm(grad(u, h) - w, h) + beta * radon_norm(sym_grad(w, h), h)


def nstgv2_energy(u, w, alpha, beta, h=1.0):
    """Non-symmetric variant: the full Jacobian replaces Ew."""
    return alpha * radon_norm(grad(u, h) - w, h) + beta * radon_norm(full_grad(w, h), h)


def lq_norm(field, q, h=1.0):
    """Global mixed norm (h^2 sum |field_i|^q)^(1/q) of pointwise norms."""
    mags = pointwise_norm(field)
    return float((h * h * (mags ** q).sum()) ** (1.0 / q))


def boundary_band_mask(shape, width=1):
    """Boolean (H, W) mask of the outermost ``width`` pixels."""
    mask = np.zeros(shape, dtype=bool)
    mask[:width, :] = True
    mask[-width:, :] = True
    mask[:, :width] = True
    mask[:, -width:] = True
    return mask


def zero_boundary_band(w, width=1):
    """Return a copy of w with the boundary band set to zero."""
    out = np.array(w, dtype=float, copy=True)
    mask = boundary_band_mask(out.shape[1:], width)
    out[:, mask] = 0.0
    return out


def tgv2q_energy(u, w, alpha, beta, q, h=1.0, band=1):
    """L^q variant: alpha*|Du - w| + beta*(h^2 sum |Ew|_F^q)^(1/q).

    Requires w to vanish on the ``band``-pixel boundary band; raises
    ValueError otherwise.
    """
    w = np.asarray(w, dtype=float)
    mask = boundary_band_mask(w.shape[1:], band)
    if np.any(w[:, mask] != 0.0):
        raise ValueError("w must vanish on the boundary band for the tgv2q model")
    return alpha * radon_norm(grad(u, h) - w, h) + beta * lq_norm(sym_grad(w, h), q, h)


def ictv_energy(u, v, alpha, beta, h=1.0):
    """Infimal-convolution form with w = grad(v), v a scalar potential."""
    gv = grad(v, h)
    return alpha * radon_norm(grad(u, h) - gv, h) + beta * radon_norm(full_grad(gv, h), h)


def regularizer_energy(u, aux, model, h=1.0):
    """Evaluate the model's regularisation term for given iterates.

    ``aux`` is the auxiliary variable: None for tv, the vector field w for
    the tgv2 family, the scalar potential v for ictv.
    """
    if model.kind == "tv":
        return model.alpha * tv_energy(u, h)
    if model.kind == "tgv2":
        return tgv2_energy(u, aux, model.alpha, model.beta, h)
    if model.kind == "nstgv2":
        return nstgv2_energy(u, aux, model.alpha, model.beta, h)
    if model.kind == "tgv2q":
        return tgv2q_energy(u, aux, model.alpha, model.beta, model.q, h, model.band)
    if model.kind == "ictv":
        return ictv_energy(u, aux, model.alpha, model.beta, h)
    raise ValueError(f"unknown model kind {model.kind!r}")


def beta_scaling(beta_base, q, n_pixels):
    """Scale the second-order weight from q=1 to general q.

    Cauchy-Schwarz gives n^((q-1)/q) as the factor by which the q-norm of
    n pixel values can fall below their 1-norm, so this keeps the variants
    comparable on the same image.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return float(beta_base) * float(n_pixels) ** ((q - 1.0) / q)
