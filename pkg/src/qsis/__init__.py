"""Averaged random samples, sampling bounds and exact recovery for spaces spanned by shifted generators."""
from .domain import (
    Axis, GridFunction, MixedExponents, ProductDomain, Region, build_axis, make_product_domain,
    make_region, minkowski_diff, mixed_norm, seq_mixed_norm,
)
from .averaging import AveragingKernel, box_kernel, convolve, gaussian_kernel
from .space import (
    QsisSpace, analyze_space, build_space, make_bspline_generators, make_shift_system,
    random_unit_element, synthesize,
)
from .sampling import SamplingDensity, draw_sample_set, make_density, y_statistic
from .bounds import BoundInputs, covering_bound, lemma31_bound, p_min, thm32_constants, thm33_constants
from .reconstruction import assemble_matrix, beta_estimate, reconstruct, solve_dual
from .harness import ExperimentConfig, build_context, load_config, run_experiment

__version__ = "0.1.0"
