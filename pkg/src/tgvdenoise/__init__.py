"""Variational image denoising with TV, second-order TGV variants and ICTV."""

from .analysis import (ApproxTrace, JumpMask, jump_mask, korn_ratio,
                       mollify_trace, psnr, region_contrast,
                       singular_surrogate)
from .diffops import (div, full_div, full_grad, grad, inner, operator_norm,
                      pointwise_norm, radon_norm, sym_div, sym_grad,
                      symmetrize)
from .estimator import TGVDenoiser
from .experiments import (NoiseSpec, PhantomSpec, SweepReport, add_noise,
                          beta_sweep, emit_report, make_phantom,
                          make_synthetic, phantom_masks, q_comparison)
from .models import (FidelitySpec, ModelSpec, beta_scaling, fidelity_energy,
                     ictv_energy, lq_norm, nstgv2_energy, regularizer_energy,
                     tgv2_energy, tgv2q_energy, tv_energy)
from .pgmio import PgmError, read_pgm, write_pgm
from .solve import (SolveReport, SolverOpts, inner_min_w,
                    project_global_lq_ball, project_pointwise_ball,
                    prox_l1_fidelity, prox_l2_fidelity, solve)

__version__ = "0.1.0"

__all__ = [
    "ApproxTrace", "FidelitySpec", "JumpMask", "ModelSpec", "NoiseSpec",
    "PgmError", "PhantomSpec", "SolveReport", "SolverOpts", "SweepReport",
    "TGVDenoiser", "add_noise", "beta_scaling", "beta_sweep", "div",
    "emit_report", "fidelity_energy", "full_div", "full_grad", "grad",
    "ictv_energy", "inner", "inner_min_w", "jump_mask", "korn_ratio",
    "lq_norm", "make_phantom", "make_synthetic", "mollify_trace",
    "nstgv2_energy", "operator_norm", "phantom_masks", "pointwise_norm",
    "project_global_lq_ball", "project_pointwise_ball", "prox_l1_fidelity",
    "prox_l2_fidelity", "psnr", "q_comparison", "radon_norm", "read_pgm",
    "region_contrast", "regularizer_energy", "singular_surrogate", "solve",
    "sym_div", "sym_grad", "symmetrize", "tgv2_energy", "tgv2q_energy",
    "tv_energy", "write_pgm",
]
