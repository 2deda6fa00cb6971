"""Sliced optimal transport on the hypersphere.

Circle Wasserstein solvers (bisection on the cut, level median, closed form
against the uniform law), Monte Carlo sliced discrepancies over random great
circles, reference samplers, Riemannian particle flows and geodesic Langevin
sampling, plus a benchmark harness and CLI.
"""

from .circle import (
    CircleEmpirical,
    CirclePoint,
    ShiftResult,
    circle_distance,
    optimal_shift_uniform,
    w1_level_median,
    w2_uniform_closed_form,
    w2_uniform_rectangle,
    w_circle_binary_search,
    w_circle_brute_force,
    wrap_unit,
)
from .cloudfile import CloudFileError, load_cloud, save_cloud
from .distributions import (
    PowerSphericalParams,
    VmfMixture,
    VmfParams,
    sample_power_spherical,
    sample_uniform_sphere,
    sample_vmf,
    sample_vmf_mixture,
    six_mode_mixture,
    vmf_log_density,
)
from .flows import (
    FlowConfig,
    FlowResult,
    GlaConfig,
    gla_chain,
    gla_evolve,
    gla_step,
    projected_step,
    riemannian_step,
    ssw_gradient_flow,
    sswvi_particles,
    vmf_potential,
)
from .radon import (
    TEST_PAIRS_V1,
    DualityCheckResult,
    TestFunctionPair,
    dual_transform,
    duality_check,
    pushforward_check,
    test_function_pairs,
)
from .sphere import (
    DegenerateProjectionError,
    SphereCloud,
    StiefelFrame,
    circle_coordinate,
    circle_coordinates,
    exp_map,
    geodesic_project,
    project_to_circle,
    sample_frames,
    sample_stiefel,
    sphere_distance,
    tangent_project,
)
from .ssw import (
    McDiagnostics,
    SolverCompatibilityError,
    SswConfig,
    SswEstimate,
    mc_diagnostics,
    ssw,
    ssw2_uniform,
    ssw2_uniform_grad,
    sw_euclidean,
)

__version__ = "0.1.0"
