"""Perceptually inspired variational color enhancement.

Enhancement is posed as the minimization of an energy balancing two
opposing mechanisms: a kernel-weighted inverse-contrast term whose
minimization stretches local contrast, and an entropic dispersion term
anchoring intensities to middle gray and to the original image.  The
minimum is reached by a semi-implicit gradient descent whose per-pixel
force admits both an exact O(N^2) evaluation and an O(N log N) FFT path
through polynomial separation of the pairwise summand.
"""

from .contrast import (
    ContrastVariant,
    DEFAULT_REG,
    Regularizer,
    a_eps,
    contrast_energy,
    energy_integrand,
    max_eps,
    min_eps,
    r_limit_pointwise,
    r_pointwise,
    s_eps,
    s_eps_max_slope,
    variation_contrast,
    variation_contrast_field,
)
from .dispersion import DispersionParams, dispersion_derivative, dispersion_energy
from .errors import (
    DegenerateDomainError,
    DimensionError,
    DomainError,
    FitError,
    ImageFormatError,
    NormalizationError,
    NumericalFailureError,
    ParameterError,
    PercolorError,
    UnsupportedDepthError,
)
from .fastconv import (
    ComplexityReport,
    PolySeparation,
    cached_separation,
    circular_convolve,
    complexity_probe,
    fit_separation,
    r_field_fast,
)
from .image import (
    RHO,
    ChannelPlane,
    ChannelStats,
    ColorImage,
    channel_stats,
    denormalize_to_8bit,
    gray_image,
    mirror_extend,
    normalize_from_8bit,
    plane_of,
)
from .imgio import read_image, write_image
from .kernel import KernelGrid, KernelSpec, build_kernel, kernel_for_plane, torus_distance
from .noisectl import GrainParams, detail_addback, extrema_kill
from .solver import (
    EnhanceParams,
    RField,
    SolveTrace,
    StabilityReport,
    ace_r_field,
    aele_residual,
    enhance_channel,
    enhance_image,
    gd_step,
    r_field_exact,
    stability_report,
)
from .synth import (
    synth_color_cast,
    synth_mach_bands,
    synth_simultaneous_contrast,
    synth_texture,
)

__version__ = "0.1.0"
