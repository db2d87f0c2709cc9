"""Equilibria of fully nonlinear elliptic equations on the sphere and
reflectional-symmetry audits of their extremal meridians."""

from .errors import (
    ContractError,
    ConvergenceError,
    DegenerateFieldError,
    DivergenceError,
    EvaluationError,
    FieldFormatError,
    LinearSolveError,
    ParameterError,
    ResolutionError,
    SphereqError,
)
from .grid import (
    GridSpec,
    ScalarField,
    SectorMask,
    d_phi,
    eval_on_grid,
    gauss_legendre,
    integrate,
    interp_phi,
    make_grid,
    oversample_phi,
    quadrature_mean,
    reflect_phi,
    rotate_phi,
    sector_mask,
)
from .harmonics import (
    OperatorHandle,
    SpectralCoeffs,
    apply_laplacian,
    harmonic_mode,
    make_operator,
    max_degree,
    sht_forward,
    sht_inverse,
    trivial_branch_eigenvalues,
)
from .problems import (
    EllipticityAudit,
    HadamardCoeffs,
    NonlinearProblem,
    PROBLEM_REGISTRY,
    chafee_infante,
    ellipticity_audit,
    hadamard_coeffs,
    jacobian_apply,
    problem_from_name,
    residual,
    verify_partial_derivatives,
)
from .solver import (
    Branch,
    CircleProfile,
    Equilibrium,
    branch_switch,
    circle_extrema,
    circle_normal_form_amplitude,
    circle_solve,
    continue_branch,
    detect_bifurcations,
    gradient_flow_relax,
    jacobian_matrix,
    newton_solve,
    quadrature_weight_vector,
)
from .symmetry import (
    AuditThresholds,
    AxialExtremumSet,
    LeveledCheck,
    MidpointCheck,
    MovingArcReport,
    SymmetryReport,
    biradial_angles,
    biradial_field,
    check_leveled,
    check_midpoint,
    check_reflection,
    detect_axial_extrema,
    linearized_annihilation,
    moving_arc_sweep,
    theorem_audit,
)
from .fieldio import (
    emit_plot_data,
    read_field,
    report_to_dict,
    write_branch_csv,
    write_coeffs_csv,
    write_field,
    write_report_json,
)

__version__ = "0.1.0"
