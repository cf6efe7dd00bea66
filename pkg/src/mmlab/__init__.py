"""Numerical laboratory for heat semigroups, optimal transport, and Brownian
path laws on metric measure spaces."""

__version__ = "0.1.0"

from .spaces import (
    Circle,
    CollapseMap,
    ConvexDomain,
    ConvexDomainLogConcave,
    EuclideanLogConcave,
    FiniteMms,
    Interval,
    PmmSpace,
    Potential,
    QuadratureDensity,
    Torus,
    bishop_gromov_check,
    box_domain,
    collapse_map_torus,
    mesh_cone,
    quadratic_potential,
    theta_comparison,
    volume_growth_check,
    weighted_measure,
)
from .transport import (
    DiscreteMeasure,
    TransportPlan,
    displacement_interpolation_1d,
    entropy_convexity_check,
    kr_dual_bound,
    wasserstein_1d,
    wasserstein_circle,
    wasserstein_exact,
)
from .heat import (
    SpectralKernel,
    entropy_identity_check,
    feller_check,
    gaussian_bound_check,
    get_kernel,
    graph_generator,
    heat_kernel,
    kernel_ball_sup,
    mixing_bound_check,
    on_diagonal,
    relative_entropy,
    semigroup_apply,
    set_generator,
    spectral_gap,
)
from .paths import (
    PathEnsemble,
    PathSample,
    euler_maruyama,
    extract_fdd,
    kolmogorov_moment,
    modulus_statistic,
    reflected_em,
    sample_kernel_chain,
)
from .convergence import (
    LipschitzTestFunction,
    SpaceFamily,
    entropy_tightness,
    fdd_convergence_report,
    fdd_operator,
    initial_law_w1,
    mcshane_extend,
    pathlaw_w1,
    pmg_test,
)
