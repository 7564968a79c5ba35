//! Ordering and intersections of the family `v(·, β)` on `B_e`, and the
//! Sturm comparison identity behind them.
//!
//! Members of the family are translates of the canonical orbit, so
//! `v(·, γ) - v(·, β)` has the sign of `w(t, γ) - w(t, β)` in both cases
//! (`W > 0` multiplies the difference in the power case).

use crate::bifurcation::{beta_star, CanonicalOrbit};
use crate::coords::r_of_t;
use crate::error::{Error, Result};
use crate::integrator::transform::shift_of_beta;
use crate::integrator::AMPLITUDE_FLOOR;
use crate::roots::brent;
use serde::Serialize;

/// Sampling step for sign scans, in `t`.
const SCAN_STEP: f64 = 5e-3;

/// `(w, w_t)` of the member with centre value `beta` at `t`.
pub fn family_value(orbit: &CanonicalOrbit, beta: f64, t: f64) -> Result<[f64; 2]> {
    let shift = shift_of_beta(orbit.config(), beta)?;
    orbit.eval(t - shift)
}

fn check_pair(orbit: &CanonicalOrbit, beta: f64, gamma: f64, window: (f64, f64)) -> Result<()> {
    if !(beta < gamma) {
        return Err(Error::domain("ordered_pair", format!("requires beta < gamma (got {beta}, {gamma})")));
    }
    if !(window.0 < window.1) || !window.0.is_finite() || !window.1.is_finite() {
        return Err(Error::domain("t_window", format!("window [{}, {}] must be a finite interval", window.0, window.1)));
    }
    if !orbit.config().is_exponential() {
        if let Ok(star) = beta_star(orbit) {
            if let Some(limit) = star.finite() {
                if gamma >= limit {
                    return Err(Error::domain("beta_star", format!("gamma = {gamma} must lie below beta* = {limit}")));
                }
            }
        }
    }
    for b in [beta, gamma] {
        let s = window.0 - shift_of_beta(orbit.config(), b)?;
        if s < orbit.s_lo() {
            return Err(Error::OutOfRange {
                s,
                lo: orbit.s_lo(),
                hi: f64::INFINITY,
            });
        }
    }
    Ok(())
}

fn scan_grid(window: (f64, f64)) -> Vec<f64> {
    let n = ((window.1 - window.0) / SCAN_STEP).ceil().max(1.0) as usize;
    (0..=n).map(|i| window.0 + (window.1 - window.0) * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    /// `None` when `r` rounds to `e` or underflows.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub count: usize,
    /// Crossings in increasing `t`.
    pub locations: Vec<Crossing>,
    /// Distances between every other crossing (one full oscillation).
    pub periods: Vec<f64>,
    /// The period nearest `r = e`, the end where the crossings accumulate.
    pub asymptotic_period: Option<f64>,
    /// Each pair of consecutive crossings encloses exactly one extremum of
    /// the difference.
    pub interleaved: bool,
}

/// Sign changes of `w(·, γ) - w(·, β)` on `window`.
pub fn intersection_count(orbit: &CanonicalOrbit, beta: f64, gamma: f64, window: (f64, f64)) -> Result<IntersectionReport> {
    check_pair(orbit, beta, gamma, window)?;
    let diff = |t: f64| -> Result<[f64; 2]> {
        let a = family_value(orbit, gamma, t)?;
        let b = family_value(orbit, beta, t)?;
        Ok([a[0] - b[0], a[1] - b[1]])
    };
    let grid = scan_grid(window);
    let values: Vec<[f64; 2]> = grid.iter().map(|&t| diff(t)).collect::<Result<_>>()?;
    let mut locations = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if v[0].abs() < AMPLITUDE_FLOOR {
            continue;
        }
        if let Some((j, sign)) = last {
            if v[0].signum() != sign {
                let t = brent(|t| diff(t).map(|d| d[0]).unwrap_or(f64::NAN), grid[j], grid[i], 1e-12).ok_or(Error::EventRefinement { s: grid[j] })?;
                locations.push(Crossing { t, r: r_of_t(t) });
            }
        }
        last = Some((i, v[0].signum()));
    }
    let periods: Vec<f64> = locations.windows(3).map(|w| w[2].t - w[0].t).collect();
    // extrema of the difference: sign changes of its derivative
    let interleaved = locations.windows(2).all(|w| {
        let slopes = grid
            .iter()
            .zip(&values)
            .filter(|(t, _)| **t > w[0].t && **t < w[1].t)
            .map(|(_, v)| v[1]);
        crate::bifurcation::sign_changes(slopes, 0.0) == 1
    });
    Ok(IntersectionReport {
        count: locations.len(),
        asymptotic_period: periods.first().copied(),
        locations,
        periods,
        interleaved,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationReport {
    pub separated: bool,
    /// `min (w(·, γ) - w(·, β))` over the window.
    pub family_margin: f64,
    /// `min (-w(·, γ))`, the sign of `W - v(·, γ)`.
    pub singular_margin: f64,
    /// Outermost point (smallest `t`) where the ordering fails, if any.
    pub first_violation: Option<f64>,
}

/// Checks `v(·, β) < v(·, γ) < W` on the window.
pub fn separation_check(orbit: &CanonicalOrbit, beta: f64, gamma: f64, window: (f64, f64)) -> Result<SeparationReport> {
    check_pair(orbit, beta, gamma, window)?;
    let mut family_margin = f64::INFINITY;
    let mut singular_margin = f64::INFINITY;
    let mut first_violation = None;
    for t in scan_grid(window) {
        let a = family_value(orbit, gamma, t)?[0];
        let b = family_value(orbit, beta, t)?[0];
        family_margin = family_margin.min(a - b);
        singular_margin = singular_margin.min(-a);
        if first_violation.is_none() && (a - b <= 0.0 || a >= 0.0) {
            first_violation = Some(t);
        }
    }
    Ok(SeparationReport {
        separated: family_margin > 0.0 && singular_margin > 0.0,
        family_margin,
        singular_margin,
        first_violation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroReport {
    pub vanishes: bool,
    pub t: Option<f64>,
    pub r: Option<f64>,
}

/// Whether `v(·, β)` vanishes at some `r < e` (power case).
pub fn zero_before_e(orbit: &CanonicalOrbit, beta: f64) -> Result<ZeroReport> {
    let config = orbit.config();
    if config.is_exponential() {
        return Err(Error::domain("power_model", "zero_before_e applies to the power nonlinearity only"));
    }
    let shift = shift_of_beta(config, beta)?;
    // decides the infinite case or reports an inconclusive window
    beta_star(orbit)?;
    Ok(match orbit.event_s() {
        Some(s) => {
            let t = s + shift;
            ZeroReport {
                vanishes: true,
                t: Some(t),
                r: r_of_t(t),
            }
        }
        None => ZeroReport {
            vanishes: false,
            t: None,
            r: None,
        },
    })
}

/// Two solutions of `y'' + q y' + a(t) y = 0` and `z'' + q z' + b(t) z = 0`
/// sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmPair {
    pub q: f64,
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `(y, y')` per node.
    pub y: Vec<(f64, f64)>,
    /// `(z, z')` per node.
    pub z: Vec<(f64, f64)>,
}

/// Residual level above which a pair is rejected as not solving its ODEs.
pub const STURM_RESIDUAL_TOL: f64 = 1e-6;

/// Five-point first derivative at interior node `i`.
fn stencil(x: &[f64], i: usize, h: f64) -> f64 {
    (x[i - 2] - 8.0 * x[i - 1] + 8.0 * x[i + 1] - x[i + 2]) / (12.0 * h)
}

impl SturmPair {
    fn validate(&self) -> Result<f64> {
        let n = self.t.len();
        if n < 5 || [self.a.len(), self.b.len(), self.y.len(), self.z.len()].iter().any(|&m| m != n) {
            return Err(Error::domain("sturm_pair", "all samples need the same length (at least 5)"));
        }
        let h = self.t[1] - self.t[0];
        if !(h > 0.0) || self.t.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
            return Err(Error::domain("sturm_pair", "samples must lie on a uniform increasing grid"));
        }
        Ok(h)
    }

    /// Largest relative ODE residual of `y` and `z`, with second
    /// derivatives from the sampled first derivatives.
    pub fn residual(&self) -> Result<f64> {
        let h = self.validate()?;
        let mut worst: f64 = 0.0;
        for (sol, coef) in [(&self.y, &self.a), (&self.z, &self.b)] {
            let d: Vec<f64> = sol.iter().map(|x| x.1).collect();
            for i in 2..self.t.len() - 2 {
                let dd = stencil(&d, i, h);
                let terms = [dd, self.q * sol[i].1, coef[i] * sol[i].0];
                let scale = terms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if scale > 0.0 {
                    worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
                }
            }
        }
        Ok(worst)
    }
}

/// `(t, numerical derivative of the bracket, right side)`.
pub type WronskianRow = (f64, f64, f64);

/// Defect of `[e^(q t)(z'y - y'z)]' = e^(q t) y z (a - b)` over the window,
/// relative to the larger of the bracket and its derivative, together with
/// the per-node values `(t, numerical derivative, right side)`.
pub fn sturm_wronskian_profile(pair: &SturmPair, window: (f64, f64)) -> Result<(f64, Vec<WronskianRow>)> {
    let h = pair.validate()?;
    let residual = pair.residual()?;
    if residual > STURM_RESIDUAL_TOL {
        return Err(Error::domain(
            "sturm_pair_residual",
            format!("inputs do not solve their equations (residual {residual:e})"),
        ));
    }
    let bracket: Vec<f64> = (0..pair.t.len())
        .map(|i| (pair.q * pair.t[i]).exp() * (pair.z[i].1 * pair.y[i].0 - pair.y[i].1 * pair.z[i].0))
        .collect();
    let mut rows = Vec::new();
    for i in 2..pair.t.len() - 2 {
        let t = pair.t[i];
        if t < window.0 || t > window.1 {
            continue;
        }
        let lhs = stencil(&bracket, i, h);
        let rhs = (pair.q * t).exp() * pair.y[i].0 * pair.z[i].0 * (pair.a[i] - pair.b[i]);
        rows.push((t, lhs, rhs));
    }
    if rows.is_empty() {
        return Err(Error::domain("t_window", "window contains no interior samples"));
    }
    let scale = bracket
        .iter()
        .map(|x| x.abs())
        .chain(rows.iter().map(|r| r.2.abs()))
        .fold(f64::MIN_POSITIVE, f64::max);
    let defect = rows.iter().map(|r| (r.1 - r.2).abs()).fold(0.0, f64::max) / scale;
    Ok((defect, rows))
}

pub fn sturm_wronskian_defect(pair: &SturmPair, window: (f64, f64)) -> Result<f64> {
    sturm_wronskian_profile(pair, window).map(|x| x.0)
}
