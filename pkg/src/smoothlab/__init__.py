"""Exact smoothing, bias and LPN-reduction experiments over F_2."""
from smoothlab.gf2 import GF2Matrix, GF2Vector, LinearCode, random_linear_code
from smoothlab.kernels import BACKEND
from smoothlab.lpn import estimate_alpha, gen_lpn, solve_ml
from smoothlab.reduction import run_experiment
from smoothlab.smoothing import achievability_dist, smooths_check, theorem_bound
from smoothlab.spectral import Pmf, fwht_forward, fwht_inverse, krawtchouk, tv_distance

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GF2Matrix",
    "GF2Vector",
    "LinearCode",
    "Pmf",
    "achievability_dist",
    "estimate_alpha",
    "fwht_forward",
    "fwht_inverse",
    "gen_lpn",
    "krawtchouk",
    "random_linear_code",
    "run_experiment",
    "smooths_check",
    "solve_ml",
    "theorem_bound",
    "tv_distance",
]
