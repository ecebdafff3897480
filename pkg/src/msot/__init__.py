"""Sliced optimal transport on Euclidean space and Riemannian manifolds."""

from .busemann import (
    BWGaussian,
    GaussianRay,
    QuantileRay,
    busemann_bw,
    busemann_gaussian1d,
    busemann_w1d,
    gaussian_pca_1d,
    is_geodesic_ray_1d,
    project_on_ray,
    ray_domain_gaussian1d,
)
from .flows import (
    EntropyFunctional,
    FlowTrace,
    GridState,
    InteractionFunctional,
    PotentialFunctional,
    SumFunctional,
    SwToTargetFunctional,
    eval_functional,
    euler_particles,
    simplex_project,
    swjko_grid,
    swjko_particles,
)
from .gw import gw1d_inner, hw_solve, hw_tensor, mi_gaussian, mk_gaussian, nw_corner
from .hyperbolic import (
    busemann_coordinate,
    geodesic_coordinate,
    ghsw,
    hhsw,
    lorentz_to_poincare,
    poincare_to_lorentz,
    riemannian_step_lorentz,
    sample_wrapped_normal,
)
from .measures import (
    CircleProfile,
    SortedProfile,
    build_circle_profile,
    build_profile,
    circle_w1_level_median,
    circle_w2_vs_uniform,
    circle_wp_binary_search,
    quantile,
    wasserstein_1d,
    wasserstein_1d_batched,
)
from .sliced import DirectionSet, sample_directions, sw2_subgradient, sw_p
from .spd import (
    busemann_ai,
    coordinate_le,
    dist_ai,
    dist_le,
    gaussian_kernel,
    hspdsw,
    kernel_features,
    logsw,
    sample_unit_symmetric,
    spd_exp,
    spd_log,
    spdsw,
    sym_eig,
)
from .sphere import project_circle, sample_stiefel, ssw, ssw2_vs_uniform
from .unbalanced import (
    DualPotentials,
    EuclideanSlicer,
    HyperbolicSlicer,
    SpdSlicer,
    UnbalancedParams,
    fw_translation,
    norm_reweight,
    phi_conj,
    sliced_dual,
    suot,
    usw,
)

__version__ = "0.1.0"
