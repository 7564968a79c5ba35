//! Solvers for the regular radial problem: the transformed autonomous
//! system with an adaptive Runge-Kutta pair, and a Picard oracle working
//! directly on the integral equation.

pub mod asymptotic;
mod dopri;
pub mod hermite;
pub mod picard;
pub mod system;
pub mod trajectory;
pub mod transform;

pub use asymptotic::{asymptotic_init, default_s0, AsymptoticSeries};
pub use dopri::IntegratorOptions;
pub use picard::{picard_solve, picard_solve_t, Apriori, RadialSample, RadialSolution};
pub use system::{lyapunov_value, EmdenFowler, PlanarField};
pub use trajectory::{Coordinate, Event, EventKind, EventSet, Features, Termination, Trajectory, TrajectorySample, AMPLITUDE_FLOOR};
pub use transform::{flux_identity_defect, transform_r_to_t, transform_t_to_r};

use crate::error::{Error, Result};
use crate::model::ProblemConfig;

/// Integrates the autonomous system backward from `init = (s0, w, w')` to
/// `s_min`, stopping early at a `w = -1` event when that event is enabled.
pub fn integrate_autonomous(config: &ProblemConfig, init: (f64, f64, f64), s_min: f64, tol: f64, events: &EventSet) -> Result<Trajectory> {
    if !(s_min < init.0) {
        return Err(Error::domain("integration_window", format!("s_min = {s_min} must lie below s0 = {}", init.0)));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance", format!("tol = {tol} must be positive")));
    }
    integrate_between(config, init, s_min, &IntegratorOptions::with_tolerance(tol), events, Coordinate::Shifted)
}

/// General driver: integrates in either direction with explicit options.
pub fn integrate_between(config: &ProblemConfig, init: (f64, f64, f64), s_end: f64, opts: &IntegratorOptions, events: &EventSet, coordinate: Coordinate) -> Result<Trajectory> {
    let (s0, w0, dw0) = init;
    let field = EmdenFowler::new(config);
    let raw = dopri::integrate(&field, s0, [w0, dw0], s_end, opts, events)?;
    Ok(Trajectory::assemble(config, coordinate, raw.segments, raw.events, raw.termination, (s0, [w0, dw0])))
}
