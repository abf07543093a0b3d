//! Time integration of the pair and of the separated system.

pub mod ode;
pub mod pair;
pub mod separated;

pub use pair::{
    integrate_full, integrate_window, monitors, rhs_full, MonitorRecord, RunSpec, Sample, Termination, Trajectory,
};
pub use separated::{cross_check, integrate_separated, CrossCheckReport, SeparatedRun, SeparatedSample};
