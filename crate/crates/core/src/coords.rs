//! The log-log coordinate `t = log(-log(r/e))` shared by every module.
//!
//! `t -> +inf` is the centre of the ball, `t -> -inf` is the sphere `r = e`,
//! and `t = 0` is the unit sphere `r = 1`. Points with `|t| > T_REPRESENTABLE`
//! are carried in `t` only: beyond that range `r` either underflows or rounds
//! to `e`.

use crate::error::{Error, Result};
use std::f64::consts::E;

/// Largest `|t|` for which `r` is materialized.
pub const T_REPRESENTABLE: f64 = 30.0;

/// `-log(r/e) = 1 - log r`, positive on `(0, e)`.
pub fn log_depth(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < E) {
        return Err(Error::domain(
            "radius_domain",
            format!("r must satisfy 0 < r < e (got r = {r})"),
        ));
    }
    // ln(r/e) = ln_1p(r/e - 1) keeps digits near r = e
    let depth = if r > 1.0 { -(r / E - 1.0).ln_1p() } else { 1.0 - r.ln() };
    if depth > 0.0 {
        Ok(depth)
    } else {
        Err(Error::domain(
            "radius_domain",
            format!("r = {r} is indistinguishable from e in double precision"),
        ))
    }
}

pub fn t_of_r(r: f64) -> Result<f64> {
    log_depth(r).map(f64::ln)
}

/// `r = e * exp(-e^t)`, or `None` when `|t|` exceeds the representable
/// range or `r` underflows.
pub fn r_of_t(t: f64) -> Option<f64> {
    let r = E * (-t.exp()).exp();
    (t.abs() <= T_REPRESENTABLE && r > 0.0).then_some(r)
}
