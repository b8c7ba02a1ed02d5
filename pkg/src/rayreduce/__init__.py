"""Conformal Hamiltonian dynamics, momentum-ray reduction, and Einstein checks."""

from .algebra import (
    HypothesisReport,
    LieAlgebra,
    Subalgebra,
    abelian,
    check_reduction_hypotheses,
    coadjoint,
    cone_orbit_tangent_dim,
    isotropy_algebra,
    kernel_algebra,
    load_algebra,
    omega_minus_eval,
    ray_isotropy_algebra,
    sl2,
    so3,
)
from .einstein import (
    ConstraintSampleSet,
    EinsteinVerdict,
    einstein_verdict,
    holomorphic_norm_sq,
    multivector_norm,
    sample_ray_level,
)
from .equilibria import (
    RelativeEquilibrium,
    re_residual,
    solve_re,
    verify_re_flow,
)
from .errors import (
    GaugeError,
    InfeasibleLevelSetError,
    IntegrationError,
    ProjectionError,
    RayReduceError,
    RaySignError,
    SamplingError,
    SolverError,
)
from .integrate import (
    IntegratorSpec,
    Trajectory,
    decay_residual,
    dissipation_check,
    integrate,
    write_trajectory_csv,
)
from .phase import (
    ConformalSystem,
    LinearConfigAction,
    PhasePoint,
    ScalarField,
    conformal_field,
    infinitesimal_generator,
    momentum_decay_rate,
    momentum_map,
)
from .reduction import (
    RayConstraint,
    RayScenario,
    ReducedState,
    gauge_fix,
    pi_relatedness_error,
    project_to_ray,
    rayleigh4_scenario,
    reduced_form_pullback_error,
    reduction_report,
    transversality_check,
)
from .spheres import (
    ConePoint,
    ContactSphere,
    cone_compatibility_error,
    cone_form_eval,
    contact_momentum,
    d_eta,
    eta,
    hopf_project,
    reeb_field,
    reeb_invariance_error,
)
from .systems import harmonic, make_system, rayleigh4

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
