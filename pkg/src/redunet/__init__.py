"""White-box networks built by maximizing coding rate reduction.

The package covers the full pipeline: coding rate objectives and their exact
gradients (:mod:`.rate`), forward-constructed dense networks (:mod:`.dense`),
shift- and translation-invariant networks built per frequency in the spectral
domain (:mod:`.spectral`), a nearest-subspace classifier (:mod:`.classify`),
synthetic data generators (:mod:`.datagen`), binary tensor and model
containers (:mod:`.tensorio`), and a command-line front end (:mod:`.cli`).
"""

__version__ = "1.0.0"

from .classify import (
    SubspaceClassifier,
    accuracy,
    class_cosine_stats,
    cosine_similarity_matrix,
    fit_nsc,
    predict_nsc,
)
from .datagen import (
    GaussianMixtureSpec,
    SubspaceSpec,
    augment_shifts,
    gen_gaussian_sphere,
    gen_orthogonal_subspaces,
    polar_resample,
    translate2d,
)
from .dense import (
    DenseLayer,
    ReduNetModel,
    construct,
    estimate_membership,
    forward,
    layer_increment,
    load_model,
    save_model,
    sphere_project,
)
from .errors import (
    BadMagicError,
    DataError,
    EmptyClassError,
    FormatError,
    NumericError,
    RedunetError,
    ShapeError,
    TruncatedFileError,
    UnknownDtypeError,
    VersionError,
)
from .rate import (
    Membership,
    RateParams,
    coding_rate,
    coding_rate_partitioned,
    compression_operator,
    expansion_operator,
    logdet_spd,
    rate_gradient,
    rate_reduction,
)
from .spectral import (
    InvariantModel,
    SpectralLayer,
    circulant,
    circular_convolve_1d,
    circular_convolve_2d,
    construct_inv1d,
    construct_inv2d,
    dft_1d,
    dft_2d,
    forward_inv1d,
    forward_inv2d,
    idft_1d,
    idft_2d,
    lift_random_filters_1d,
    lift_random_filters_2d,
    load_invariant_model,
    normalize_samples_time,
    save_invariant_model,
    soft_threshold,
    spectral_rate_reduction,
)
from .tensorio import Tensor, read_idx, read_tensor, write_tensor

__all__ = [name for name in dir() if not name.startswith("_")]
