"""Self-deconvolution density estimation from Z = alpha*X + beta*Y.

X and Y are i.i.d. with unknown density p; only Z is observed. The package
recovers p through a telescoping product of empirical characteristic
function ratios followed by truncated Fourier inversion, and ships Monte
Carlo tooling to measure MISE and check the supporting inequalities.
"""

from .distributions import (
    Cauchy,
    Gaussian,
    MixtureSpec,
    MomentSpec,
    RefDistribution,
    SymmetricStable,
    TwoPoint,
    abs_moment,
    exact_cf,
    exact_g,
    make_rng,
    mix_z,
    sample_x,
)
from .ecf import EmpiricalCF, Sample, ecf_eval, ecf_grid, sup_deviation
from .errors import (
    DeconvolutionError,
    DegenerateCutoffError,
    DegenerateEstimateError,
    NonFiniteResultError,
)
from .estimator import (
    CutoffResult,
    DensityEstimate,
    EstimatorConfig,
    correct_density,
    density_estimate,
    ise,
    product_cf,
    select_cutoff,
)

__version__ = "0.1.0"
