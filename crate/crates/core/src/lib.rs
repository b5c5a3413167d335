//! Quasi-static modelling of tendon-driven underactuated hands.
//!
//! The crate covers the parametric hand description ([`model`]), the
//! equilibrium solver and its brute-force cross-check ([`statics`],
//! [`oracle`]), closing sweeps ([`closing`]), motor-shaft spring cancellation
//! ([`cancellation`]) and fitting of design parameters to target grasps
//! ([`synergy`]). Design, problem and catalog files are handled by
//! [`design_file`]; tabular exports by [`table`].

pub mod cancellation;
pub mod closing;
pub mod design_file;
pub mod error;
pub mod model;
pub mod oracle;
pub mod search;
pub mod statics;
pub mod synergy;
pub mod table;

pub use cancellation::{
    backdrive_margin, check_qualified_zone, net_motor_torque, select_adduction_springs, torque_profile, MotorTorque,
    SpringCatalogEntry, SpringSelection, TorqueProfile, ZoneCheck,
};
pub use closing::{motor_grid, simulate_closing, ClosingEvent, ClosingTrace, EventKind, ScheduledContact};
pub use error::{Error, Result};
pub use model::{
    classify_paradigm, default_iss_hand, validate_design, Agonist, Classification, Coupling, HandDesign, Joint,
    JointConfiguration, JointKind, MotorShaft, ParadigmCell, Stop, TendonRoute, Violation,
};
pub use oracle::grid_search_pose;
pub use statics::{
    potential_energy, solve_pose, stationarity_residuals, tendon_slack, ContactConstraint, EquilibriumResult,
    TendonStatus,
};
pub use synergy::{
    grasp_residual, optimize_design, trajectory_postures, GraspResidual, ParameterBound, ParameterPath, RestartReport,
    SynergyProblem, SynergyResult,
};
