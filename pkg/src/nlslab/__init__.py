"""Numerical laboratory for a radial nonlinear Schrodinger model with
combined subcritical and critical focusing powers: ground states, the
linearized spectrum, symplectic mode coordinates, radial time evolution,
and trajectory classification."""

__version__ = "0.1.0"

from .classify import (
    Classification,
    ClassifyConfig,
    OnePassReport,
    SignSeries,
    ThresholdTable,
    build_threshold_table,
    classify_run,
    epsilon_omega,
    measure_ejection_constants,
    one_pass_monitor,
    scenario_index,
    sign_function,
)
from .errors import (
    DegenerateGauge,
    DomainError,
    FormatError,
    GridTooCoarse,
    IllConditioned,
    Inconsistent,
    NegativeQuadraticForm,
    NlslabError,
    NonConvergence,
    NonFiniteData,
    OutOfRange,
    ParseError,
    PositiveInfimum,
    VersionError,
)
from .functionals import ModelParams
from .grid import RadialField, RadialGrid
from .groundstate import (
    OMEGA_RANGE,
    GroundState,
    MCurve,
    build_mcurve,
    certify_profile,
    closed_form_W,
    solve_U,
    solve_phi,
    solve_phi_prime,
)
from .evolve import EvolveConfig, TrajectoryRecord, linear_step, run, step
from .modes import (
    DistanceConfig,
    ModeCoordinates,
    calibrate_delta_E,
    chi_cutoff,
    decompose,
    dist_H1_orbit,
    distance_d,
    distance_dtilde,
    gauge_theta,
    project_mass_sphere,
    symplectic_form,
)
from .spectrum import (
    LinearizedOperators,
    SpectralData,
    assemble_operators,
    operator_certificates,
    ratio_lemma_check,
    rayleigh_quotient,
    solve_mu,
)
from .store import (
    Config,
    RunManifest,
    decay_r_max,
    load_config,
    manifest_path,
    parse_config,
    read_json_record,
    read_manifest,
    read_mcurve,
    read_snapshot,
    read_table,
    read_trajectory,
    write_json_record,
    write_manifest,
    write_mcurve,
    write_snapshot,
    write_table,
    write_trajectory,
)

__all__ = [
    "RadialGrid",
    "RadialField",
    "ModelParams",
    "GroundState",
    "MCurve",
    "OMEGA_RANGE",
    "solve_phi",
    "solve_U",
    "solve_phi_prime",
    "closed_form_W",
    "build_mcurve",
    "certify_profile",
    "LinearizedOperators",
    "SpectralData",
    "assemble_operators",
    "solve_mu",
    "operator_certificates",
    "rayleigh_quotient",
    "ratio_lemma_check",
    "ModeCoordinates",
    "DistanceConfig",
    "symplectic_form",
    "chi_cutoff",
    "gauge_theta",
    "decompose",
    "distance_d",
    "distance_dtilde",
    "dist_H1_orbit",
    "project_mass_sphere",
    "calibrate_delta_E",
    "EvolveConfig",
    "TrajectoryRecord",
    "step",
    "linear_step",
    "run",
    "ThresholdTable",
    "ClassifyConfig",
    "Classification",
    "SignSeries",
    "OnePassReport",
    "build_threshold_table",
    "epsilon_omega",
    "sign_function",
    "one_pass_monitor",
    "scenario_index",
    "classify_run",
    "measure_ejection_constants",
    "Config",
    "RunManifest",
    "decay_r_max",
    "parse_config",
    "load_config",
    "manifest_path",
    "read_manifest",
    "write_manifest",
    "read_snapshot",
    "write_snapshot",
    "read_table",
    "write_table",
    "read_trajectory",
    "write_trajectory",
    "read_mcurve",
    "write_mcurve",
    "read_json_record",
    "write_json_record",
    "NlslabError",
    "DomainError",
    "NonConvergence",
    "GridTooCoarse",
    "PositiveInfimum",
    "IllConditioned",
    "DegenerateGauge",
    "NegativeQuadraticForm",
    "OutOfRange",
    "Inconsistent",
    "ParseError",
    "FormatError",
    "VersionError",
    "NonFiniteData",
    "__version__",
]
