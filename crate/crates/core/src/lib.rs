//! Grid interdiction analysis: DC-OPF load shedding under attack, ranked
//! critical attack scenarios (CAS), and protection planning against them.

pub mod cas;
pub mod dcopf;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod protect;
pub mod report;
pub mod synthetic;

pub use cas::{
    enumerate_cas, merge_cas_lists, snap_mw, worst_case_attack, AttackSpace, CasList, CasRecord, StopRule,
};
pub use dcopf::{check_dispatch, solve_dcopf, total_lost_load, AttackVector, DcOpfModel, DispatchResult, Residuals};
pub use error::{Error, Result};
pub use grid::{
    apply_configuration, parse_configuration, parse_grid, serialize_grid, validate, Branch, Bus, Component,
    ConfigurationOverride, Diagnostic, DiagnosticKind, Generator, GridCase,
};
pub use oracle::{brute_force_protection_ip, brute_force_trilevel, TrilevelResult};
pub use protect::{
    budget_sweep, budget_sweep_with, enumerate_optimal_protections, enumerate_optimal_protections_with,
    evaluate_protection, optimal_protection, optimal_protection_with, ProtectionAssessment, ProtectionPlan,
    RemainingWorstCase, TieBreak,
};
pub use report::{compute_metrics, SweepReport, SweepRow};
