"""Hypernetwork-assembled implicit neural representations.

A trained atlas of multiresolution hash encoders is laid out over a scene
parameter space; querying a parameter point interpolates the nearest
encoder tables into a self-contained INR sharing one synthesis MLP. The
atlas is trained by distilling a sinusoidal teacher network, and the result
renders through a CPU ray marcher or an HTTP exploration service.
"""

from .hash_encoding import (
    HASH_PRIMES,
    HashEncoder,
    HashEncoderConfig,
    encode_backward,
    encode_forward,
    level_resolution,
    table_entries,
    vertex_index,
)
from .hypernet import (
    EncoderAtlas,
    HyperINRModel,
    INRInstance,
    ParamSpace,
    assemble_inr,
    eval_inr,
    fast_path_1d,
    idw_weights,
    interpolate_encoders,
    knn_query,
)
from .knn import KDTree, SortedLine, brute_force_knn, build_knn_index
from .metrics import psnr, ssim
from .networks import (
    CoordNet,
    CoordNetConfig,
    MLPConfig,
    SynthesisMLP,
    init_hash_encoder,
    init_mlp,
    init_siren,
    mlp_forward,
    mlp_forward_with_weights,
)
from .numerics import AdamState, DivergenceError, Rng, adam_step, finite_diff_grad
from .sampling import compose_plan, even_1d, gaussian_samples, poisson_disk

__version__ = "0.1.0"
