//! Coordinate changes between radial solutions `v(t)` and orbits `w`,
//! and the flux identity `-r v'(r) = ∫_0^r s V_k f(v) ds`.

use super::picard::{RadialSample, RadialSolution, SolverMethod};
use super::trajectory::{Coordinate, EventSet, Trajectory};
use crate::error::{Error, Result};
use crate::model::{singular_solution, ProblemConfig};
use crate::quadrature::integrate;

/// `t - s` for the member of the family with centre value `beta`:
/// `β/k - log(k)/k`, or `log(β)/θ`.
pub fn shift_of_beta(config: &ProblemConfig, beta: f64) -> Result<f64> {
    let k = config.k();
    match config.theta() {
        None => Ok(beta / k - k.ln() / k),
        Some(theta) => {
            if beta > 0.0 {
                Ok(beta.ln() / theta)
            } else {
                Err(Error::domain("positive_center", format!("power case requires beta > 0 (got {beta})")))
            }
        }
    }
}

/// `(w, w_t)` of a radial sample: `w = v - W` or `w = v/W - 1`.
pub fn w_of_v(config: &ProblemConfig, t: f64, v: f64, dv: f64) -> (f64, f64) {
    let jet = singular_solution(config).w_jet(t);
    match config.theta() {
        None => (v - jet.value, dv - jet.d1),
        Some(theta) => ((v / jet.value) - 1.0, (dv - theta * v) / jet.value),
    }
}

/// Inverse of [`w_of_v`].
pub fn v_of_w(config: &ProblemConfig, t: f64, w: f64, dw: f64) -> (f64, f64) {
    let jet = singular_solution(config).w_jet(t);
    match config.theta() {
        None => (w + jet.value, dw + jet.d1),
        Some(_) => ((w + 1.0) * jet.value, dw * jet.value + (w + 1.0) * jet.d1),
    }
}

/// Pointwise transform of a radial solution into a physical-`t` orbit.
pub fn transform_r_to_t(config: &ProblemConfig, solution: &RadialSolution) -> Result<Trajectory> {
    let states: Vec<(f64, f64, f64)> = solution
        .samples
        .iter()
        .map(|x| {
            let (w, dw) = w_of_v(config, x.t, x.v, x.dv_dt);
            (x.t, w, dw)
        })
        .collect();
    if states.iter().any(|&(_, w, dw)| !(w.is_finite() && dw.is_finite())) {
        return Err(Error::domain("representable_t", "transformed samples overflow"));
    }
    Trajectory::from_states(config, Coordinate::Physical, &states, &EventSet::all())
}

/// Inverse transform. A shifted trajectory is first mapped to physical `t`
/// for the family member with centre value `beta`.
pub fn transform_t_to_r(config: &ProblemConfig, trajectory: &Trajectory, beta: f64) -> Result<RadialSolution> {
    let shift = match trajectory.coordinate {
        Coordinate::Physical => 0.0,
        Coordinate::Shifted => shift_of_beta(config, beta)?,
    };
    let samples = trajectory
        .samples
        .iter()
        .map(|x| {
            let t = x.s + shift;
            let (v, dv_dt) = v_of_w(config, t, x.w, x.dw);
            RadialSample { t, v, dv_dt }
        })
        .collect();
    RadialSolution::from_samples(config, beta, samples, SolverMethod::Transformed, 0.0)
}

/// Per-sample flux identity in scaled form: `(t, F̂(t), ∫_t^∞ e^((1+k)(t-τ)) f(v) dτ)`
/// where `F̂ = e^(k t) v_t = e^((1+k) t)(-r v_r)`.
pub fn flux_identity_profile(config: &ProblemConfig, solution: &RadialSolution) -> Vec<(f64, f64, f64)> {
    let k = config.k();
    let beta = solution.beta;
    let s = &solution.samples;
    let n = s.len();
    let mut out = vec![(0.0, 0.0, 0.0); n];
    // tail above the last sample from the first-order centre expansion
    let t_top = s[n - 1].t;
    let a = config.source(beta) / (k * (1.0 + k));
    let mut acc = config.source(beta) / (1.0 + k) - config.source_derivative(beta) * a * (-k * t_top).exp() / (1.0 + 2.0 * k);
    if (s[n - 1].v - beta).abs() > 1e-6 * (1.0 + beta.abs()) {
        // the top sample is not near the centre: integrate its tail numerically
        let top = s[n - 1];
        let g = |u: f64| (-(1.0 + k) * u).exp() * config.source(top.v + top.dv_dt * u);
        acc = integrate(g, 0.0, 60.0 / (1.0 + k), 1e-14, 1e-12).value;
    }
    out[n - 1] = (t_top, (k * t_top).exp() * s[n - 1].dv_dt, acc);
    for i in (0..n - 1).rev() {
        let (a_, b_) = (s[i], s[i + 1]);
        let h = b_.t - a_.t;
        let piece = integrate(
            |tau| {
                let x = (tau - a_.t) / h;
                let v = cubic(&a_, &b_, x, h);
                (-(1.0 + k) * (tau - a_.t)).exp() * config.source(v)
            },
            a_.t,
            b_.t,
            1e-16,
            1e-12,
        );
        acc = (-(1.0 + k) * h).exp() * acc + piece.value;
        out[i] = (a_.t, (k * a_.t).exp() * a_.dv_dt, acc);
    }
    out
}

fn cubic(a: &RadialSample, b: &RadialSample, x: f64, h: f64) -> f64 {
    let (x2, x3) = (x * x, x * x * x);
    (2.0 * x3 - 3.0 * x2 + 1.0) * a.v + (x3 - 2.0 * x2 + x) * h * a.dv_dt + (-2.0 * x3 + 3.0 * x2) * b.v + (x3 - x2) * h * b.dv_dt
}

/// Largest relative flux-identity defect over the samples.
pub fn flux_identity_defect(config: &ProblemConfig, solution: &RadialSolution) -> f64 {
    flux_identity_profile(config, solution)
        .into_iter()
        .map(|(_, lhs, rhs)| {
            let scale = lhs.abs().max(rhs.abs());
            if scale == 0.0 {
                0.0
            } else {
                (lhs - rhs).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Relative flux-identity defect of the singular solution `W` at the given
/// `t` values, with the right side computed by adaptive quadrature.
pub fn singular_flux_defect(config: &ProblemConfig, ts: &[f64]) -> f64 {
    let k = config.k();
    let w = singular_solution(config);
    ts.iter()
        .map(|&t| {
            let jet = w.w_jet(t);
            // e^((1+k)t)·(-r W_r) = e^(k t) W_t
            let lhs = (k * t).exp() * jet.d1;
            let g = |u: f64| (-(1.0 + k) * u).exp() * config.source(w.w_of_t(t + u));
            let decay = match config.theta() {
                None => 1.0,
                Some(theta) => 1.0 - theta,
            };
            let rhs = integrate(g, 0.0, 40.0 / decay, 1e-300, 1e-13).value;
            let rhs = rhs + integrate(g, 40.0 / decay, 80.0 / decay, 1e-300, 1e-13).value;
            (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::picard::picard_solve;

    #[test]
    fn unit_sphere_is_t_zero() {
        assert_eq!(crate::coords::t_of_r(1.0).unwrap(), 0.0);
    }

    #[test]
    fn singular_solution_maps_to_zero() {
        for cfg in [ProblemConfig::exponential(1.0).unwrap(), ProblemConfig::power(1.0, 4.0).unwrap()] {
            let w = singular_solution(&cfg);
            for t in [-3.0, 0.0, 2.5] {
                let jet = w.w_jet(t);
                let (a, b) = w_of_v(&cfg, t, jet.value, jet.d1);
                assert!(a.abs() < 1e-15 && b.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn round_trip_on_picard_solution() {
        let cfg = ProblemConfig::exponential(1.0).unwrap();
        let sol = picard_solve(&cfg, 2.0, 1.0, 1e-8).unwrap();
        let traj = transform_r_to_t(&cfg, &sol).unwrap();
        let back = transform_t_to_r(&cfg, &traj, 2.0).unwrap();
        for (a, b) in sol.samples.iter().zip(&back.samples) {
            assert_eq!(a.t, b.t);
            assert!((a.v - b.v).abs() <= 1e-12 * a.v.abs().max(1.0));
            assert!((a.dv_dt - b.dv_dt).abs() <= 1e-12 * a.dv_dt.abs().max(1.0));
        }
    }

    #[test]
    fn flux_identity_on_singular_solution() {
        let ts: Vec<f64> = (-10..=10).map(|i| i as f64).collect();
        assert!(singular_flux_defect(&ProblemConfig::exponential(1.0).unwrap(), &ts) < 1e-9);
        assert!(singular_flux_defect(&ProblemConfig::exponential(0.2).unwrap(), &ts) < 1e-9);
        assert!(singular_flux_defect(&ProblemConfig::power(1.0, 4.0).unwrap(), &ts) < 1e-9);
    }

    #[test]
    fn flux_identity_on_picard_solutions() {
        for (cfg, beta) in [(ProblemConfig::exponential(1.0).unwrap(), 2.0), (ProblemConfig::power(1.0, 4.0).unwrap(), 1.0)] {
            let sol = picard_solve(&cfg, beta, 1.0, 1e-10).unwrap();
            let d = flux_identity_defect(&cfg, &sol);
            assert!(d < 1e-8, "{}: {d}", cfg.label());
        }
    }

    #[test]
    fn detector_sees_missing_flux() {
        let cfg = ProblemConfig::exponential(1.0).unwrap();
        let samples = (0..=200)
            .map(|i| RadialSample {
                t: i as f64 * 0.1,
                v: 1.0,
                dv_dt: 0.0,
            })
            .collect();
        let sol = RadialSolution::from_samples(&cfg, 1.0, samples, SolverMethod::Transformed, 0.0).unwrap();
        for (t, lhs, rhs) in flux_identity_profile(&cfg, &sol) {
            assert_eq!(lhs, 0.0);
            // ∫_t^∞ e^((1+k)(t-τ)) e dτ = e/(1+k), up to the first-order tail term
            assert!((rhs - 1f64.exp() / 2.0).abs() < 1e-6, "t = {t}: {rhs}");
        }
        assert_eq!(flux_identity_defect(&cfg, &sol), 1.0);
    }
}
