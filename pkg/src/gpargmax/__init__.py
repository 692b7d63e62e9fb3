"""Numerical laboratory for argmax distributions of Gaussian processes.

Simulates the Gaussian limit processes of cube-root-type extremum
estimators, estimates and diagnoses continuity of the argmax distribution
function, verifies the kernel and RKHS conditions behind those results,
and reproduces the constructive discontinuity example.
"""

from .kernels import (
    Bilinear,
    Linear,
    MixtureAtom,
    MixtureBM,
    PiecewisePowerMean,
    PowerMean,
    Quadratic,
    ScaledBM1d,
    SeparableBM,
    SeparableQuadratic,
    ThreshRegAbs,
    check_mean_tail,
    check_self_similarity,
    check_shift_equivariance,
    eval_cbm,
    eval_cov,
    eval_mean,
    gram,
)
from .rng import RngPolicy
from .simulate import (
    EmpiricalLaw,
    Lattice,
    argmax_on_lattice,
    build_lattice,
    ecdf_eval,
    gaussian_argmax_law,
    ks_distance,
    mc_argmax,
    pinned_factor,
    sample_bm_exact_1d,
    sample_path,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
