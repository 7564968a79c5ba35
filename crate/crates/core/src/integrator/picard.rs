//! Picard oracle for the regular solution `v(r, β)`.
//!
//! Works in `t = log(-log(r/e))`, where the problem reads
//! `v_tt - v_t + e^(-k t) f(v) = 0`, `v -> β` as `t -> ∞`, and is equivalent to
//!
//! ```text
//! v(t) = β - ∫_t^∞ e^(-k τ) F̂(τ) dτ,    F̂(t) = ∫_t^∞ e^((1+k)(t-τ)) f(v(τ)) dτ,
//! ```
//!
//! with the scaled flux `F̂ = e^(k t) v_t = e^((1+k) t)(-r v_r)`. The fixed
//! point is iterated near the centre, where the map contracts, and the
//! solution is continued outward by classical RK4 on the same uniform grid.

use crate::coords::{r_of_t, t_of_r};
use crate::error::{Error, Result};
use crate::model::{Nonlinearity, ProblemConfig};
use crate::roots::brent;
use serde::Serialize;

const MAX_SWEEPS: usize = 200;
/// Contraction factor targeted when choosing the Picard region.
const TARGET_CONTRACTION: f64 = 0.25;
/// Size of the neglected first-order tail beyond the top of the grid.
const TAIL_BUDGET: f64 = 1e-9;

/// A priori upper bound for regular solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Apriori {
    /// `log(k(k+1))` (exponential) or `(k(1+k)/(p-1))^(1/(p-1))` (power).
    pub c1: f64,
    #[serde(skip)]
    config: ProblemConfig,
}

impl Apriori {
    pub fn new(config: &ProblemConfig) -> Self {
        let k = config.k();
        let c1 = match config.nonlinearity() {
            Nonlinearity::Exponential => (k * (k + 1.0)).ln(),
            Nonlinearity::Power { p } => (k * (1.0 + k) / (p - 1.0)).powf(1.0 / (p - 1.0)),
        };
        Self { c1, config: *config }
    }

    /// Bound on `v` at `t`: `k t + C1`, or `C1 e^(θ t)`.
    pub fn bound(&self, t: f64) -> f64 {
        match self.config.theta() {
            None => self.config.k() * t + self.c1,
            Some(theta) => self.c1 * (theta * t).exp(),
        }
    }

    /// Largest `v - bound` over the samples where the bound applies
    /// (all samples, or the positive ones in the power case).
    pub fn max_excess(&self, samples: &[RadialSample]) -> f64 {
        samples
            .iter()
            .filter(|x| self.config.is_exponential() || x.v > 0.0)
            .map(|x| x.v - self.bound(x.t))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One point of a radial solution, stored in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialSample {
    pub t: f64,
    pub v: f64,
    /// `dv/dt`; non-negative because `v` is non-increasing in `r`.
    pub dv_dt: f64,
}

impl RadialSample {
    pub fn r(&self) -> Option<f64> {
        r_of_t(self.t)
    }

    /// `dv/dr = -e^(-t) v_t / r`, when `r` is representable.
    pub fn dv_dr(&self) -> Option<f64> {
        self.r().map(|r| -(-self.t).exp() * self.dv_dt / r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverMethod {
    /// Picard iteration near the centre, RK4 continuation outward.
    PicardRk4,
    /// Back-transform of an orbit of the autonomous system.
    Transformed,
}

/// Diagnostics of the Picard stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardStats {
    pub sweeps: usize,
    pub last_update: f64,
    pub contraction: f64,
    /// Lower end of the fixed-point region.
    pub t_picard: f64,
    pub step: f64,
}

/// A sampled regular solution `v(·, β)`; samples ascend in `t` (descend in `r`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution {
    #[serde(skip)]
    config: ProblemConfig,
    pub beta: f64,
    pub samples: Vec<RadialSample>,
    pub method: SolverMethod,
    pub tolerance: f64,
    pub apriori: Apriori,
    pub picard: Option<PicardStats>,
    /// `t` where `v` changes sign (power case), if inside the sampled range.
    pub zero_crossing: Option<f64>,
}

impl RadialSolution {
    /// Wraps externally produced samples; they are sorted by `t`.
    pub fn from_samples(config: &ProblemConfig, beta: f64, mut samples: Vec<RadialSample>, method: SolverMethod, tolerance: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("empty_solution", "at least one sample is required"));
        }
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        let zero_crossing = find_zero(&samples);
        Ok(Self {
            config: *config,
            beta,
            samples,
            method,
            tolerance,
            apriori: Apriori::new(config),
            picard: None,
            zero_crossing,
        })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    /// `(v, v_t)` at `t` by cubic Hermite interpolation. Above the sampled
    /// range the first-order centre expansion `v ≈ β - f(β) e^(-k t)/(k(1+k))`
    /// is used.
    pub fn value_at_t(&self, t: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.t_range();
        if t > hi {
            let k = self.config.k();
            let a = self.config.source(self.beta) / (k * (1.0 + k));
            let e = (-k * t).exp();
            return Ok((self.beta - a * e, k * a * e));
        }
        if !(t >= lo) {
            return Err(Error::OutOfRange { s: t, lo, hi });
        }
        let i = self.samples.partition_point(|x| x.t <= t).clamp(1, self.samples.len().max(2) - 1);
        if self.samples.len() == 1 {
            let x = self.samples[0];
            return Ok((x.v, x.dv_dt));
        }
        Ok(hermite3(&self.samples[i - 1], &self.samples[i], t))
    }

    /// `v(r)`; `r = 0` returns `β`.
    pub fn value_at_r(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(self.beta);
        }
        self.value_at_t(t_of_r(r)?).map(|x| x.0)
    }

    /// Largest decrease of `v` along increasing `t`, i.e. the worst violation
    /// of monotonicity in `r` (zero for a monotone solution).
    pub fn monotonicity_defect(&self) -> f64 {
        self.samples.iter().map(|x| (-x.dv_dt).max(0.0)).fold(0.0, f64::max)
    }

    /// Largest `v - bound` over the samples; non-positive when the a priori
    /// estimate holds.
    pub fn apriori_excess(&self) -> f64 {
        self.apriori.max_excess(&self.samples)
    }
}

fn hermite3(a: &RadialSample, b: &RadialSample, t: f64) -> (f64, f64) {
    let h = b.t - a.t;
    let x = (t - a.t) / h;
    let (x2, x3) = (x * x, x * x * x);
    let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
    let h10 = x3 - 2.0 * x2 + x;
    let h01 = -2.0 * x3 + 3.0 * x2;
    let h11 = x3 - x2;
    let v = h00 * a.v + h10 * h * a.dv_dt + h01 * b.v + h11 * h * b.dv_dt;
    let d00 = (6.0 * x2 - 6.0 * x) / h;
    let d10 = 3.0 * x2 - 4.0 * x + 1.0;
    let d01 = (-6.0 * x2 + 6.0 * x) / h;
    let d11 = 3.0 * x2 - 2.0 * x;
    let dv = d00 * a.v + d10 * a.dv_dt + d01 * b.v + d11 * b.dv_dt;
    (v, dv)
}

/// Outermost sign change of `v`, refined on the interpolant.
fn find_zero(samples: &[RadialSample]) -> Option<f64> {
    samples.windows(2).rev().find(|w| w[0].v <= 0.0 && w[1].v > 0.0).and_then(|w| {
        if w[0].v == 0.0 {
            return Some(w[0].t);
        }
        brent(|t| hermite3(&w[0], &w[1], t).0, w[0].t, w[1].t, 1e-14)
    })
}

/// Grid step `2^-m` with `h^4` near `tol`, clamped to `[1/512, 1/16]`.
fn grid_step(tol: f64) -> f64 {
    let m = (-tol.log2() / 4.0).ceil().clamp(4.0, 9.0);
    (-m).exp2()
}

/// One-sided and centred 4-point rules for `∫_{x_j}^{x_{j+1}} q` on a
/// uniform grid. `q(m)` gives the integrand at node `m`.
fn panel<Q: Fn(usize) -> f64>(q: Q, j: usize, len: usize, h: f64) -> f64 {
    if len < 4 {
        return 0.5 * h * (q(j) + q(j + 1));
    }
    if j == 0 {
        h / 24.0 * (9.0 * q(0) + 19.0 * q(1) - 5.0 * q(2) + q(3))
    } else if j + 2 == len {
        h / 24.0 * (9.0 * q(j + 1) + 19.0 * q(j) - 5.0 * q(j - 1) + q(j - 2))
    } else {
        h / 24.0 * (-q(j - 1) + 13.0 * q(j) + 13.0 * q(j + 1) - q(j + 2))
    }
}

/// Solves the regular problem with centre value `beta` down to `r_stop`.
pub fn picard_solve(config: &ProblemConfig, beta: f64, r_stop: f64, tol: f64) -> Result<RadialSolution> {
    picard_solve_t(config, beta, t_of_r(r_stop)?, tol)
}

/// As [`picard_solve`], with the stopping point given as `t_stop`.
pub fn picard_solve_t(config: &ProblemConfig, beta: f64, t_stop: f64, tol: f64) -> Result<RadialSolution> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance", format!("tol = {tol} must be positive")));
    }
    if !beta.is_finite() || !t_stop.is_finite() {
        return Err(Error::domain("finite_input", "beta and t_stop must be finite"));
    }
    if !config.is_exponential() && beta <= 0.0 {
        return Err(Error::domain("positive_center", format!("power case requires beta > 0 (got {beta})")));
    }
    let k = config.k();
    let f_beta = config.source(beta);
    let df_beta = config.source_derivative(beta).abs().max(f64::MIN_POSITIVE);
    let kk = k * (1.0 + k);

    // contraction of the map on [t0, ∞) is about f'(β) e^(-k t0) / (k(1+k))
    let t_contract = ((df_beta / (kk * TARGET_CONTRACTION)).ln() / k).max(t_stop);
    let t_tail = ((f_beta.max(df_beta) / (kk * TAIL_BUDGET)).ln() / k).max(t_contract + 4.0);
    let h = grid_step(tol);
    let n_top = ((t_tail - t_stop) / h).ceil() as usize;
    let i0 = (((t_contract - t_stop) / h).ceil() as usize).min(n_top.saturating_sub(8));
    let grid: Vec<f64> = (0..=n_top).map(|i| t_stop + i as f64 * h).collect();
    let t_top = grid[n_top];

    // Picard sweeps on nodes i0..=n_top
    let len = n_top - i0 + 1;
    let ts = &grid[i0..];
    let mut v = vec![beta; len];
    let mut fhat = vec![0.0; len];
    let decay = (-(1.0 + k) * h).exp();
    // weights[m + 2 - j] = e^((1+k)(t_j - t_m)) for nodes m = j-2 ..= j+3
    let weights: Vec<f64> = (-2..=3).map(|d| (-(1.0 + k) * h * d as f64).exp()).collect();
    // first-order tail: v ≈ β - a e^(-kτ) above t_top
    let a = f_beta / kk;
    let fhat_top = f_beta / (1.0 + k) - df_beta * a * (-k * t_top).exp() / (1.0 + 2.0 * k);
    let v_tail = a * (-k * t_top).exp();
    let mut sweeps = 0;
    let mut last_update = f64::INFINITY;
    let mut prev_update = f64::NAN;
    let mut contraction = 0.0;
    let goal = 0.1 * tol * (1.0 + beta.abs());
    while last_update > goal {
        if sweeps == MAX_SWEEPS {
            return Err(Error::PicardNonConvergence {
                iterations: sweeps,
                last_update,
                contraction,
            });
        }
        sweeps += 1;
        let g: Vec<f64> = v.iter().map(|&x| config.source(x)).collect();
        fhat[len - 1] = fhat_top;
        for j in (0..len - 1).rev() {
            // ∫_{t_j}^{t_{j+1}} e^((1+k)(t_j - τ)) g(τ) dτ
            let piece = panel(|m| weights[m + 2 - j] * g[m], j, len, h);
            fhat[j] = decay * fhat[j + 1] + piece;
        }
        let q: Vec<f64> = ts.iter().zip(&fhat).map(|(&t, &fh)| (-k * t).exp() * fh).collect();
        let mut acc = v_tail;
        let mut update = (beta - acc - v[len - 1]).abs();
        v[len - 1] = beta - acc;
        for j in (0..len - 1).rev() {
            acc += panel(|m| q[m], j, len, h);
            let next = beta - acc;
            update = update.max((next - v[j]).abs());
            v[j] = next;
        }
        if prev_update.is_finite() && prev_update > 0.0 {
            contraction = update / prev_update;
        }
        prev_update = update;
        last_update = update;
        if !last_update.is_finite() {
            return Err(Error::PicardNonConvergence {
                iterations: sweeps,
                last_update,
                contraction,
            });
        }
    }

    let mut samples = vec![
        RadialSample {
            t: 0.0,
            v: 0.0,
            dv_dt: 0.0
        };
        n_top + 1
    ];
    for j in 0..len {
        let t = ts[j];
        samples[i0 + j] = RadialSample {
            t,
            v: v[j],
            dv_dt: (-k * t).exp() * fhat[j],
        };
    }
    // RK4 outward (decreasing t) from the bottom of the Picard region
    let field = |t: f64, y: [f64; 2]| [y[1], y[1] - (-k * t).exp() * config.source(y[0])];
    let mut y = [v[0], samples[i0].dv_dt];
    let mut first = 0;
    for i in (0..i0).rev() {
        let t = grid[i + 1];
        let step = -h;
        let k1 = field(t, y);
        let k2 = field(t + 0.5 * step, [y[0] + 0.5 * step * k1[0], y[1] + 0.5 * step * k1[1]]);
        let k3 = field(t + 0.5 * step, [y[0] + 0.5 * step * k2[0], y[1] + 0.5 * step * k2[1]]);
        let k4 = field(t + step, [y[0] + step * k3[0], y[1] + step * k3[1]]);
        for c in 0..2 {
            y[c] += step / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::PicardNonConvergence {
                iterations: sweeps,
                last_update: f64::INFINITY,
                contraction,
            });
        }
        samples[i] = RadialSample {
            t: grid[i],
            v: y[0],
            dv_dt: y[1],
        };
        if y[0] < 0.0 && !config.is_exponential() {
            // `v` vanished: the original unknown reached -1 and the problem ends here
            first = i;
            break;
        }
    }
    samples.drain(..first);

    let mut solution = RadialSolution::from_samples(config, beta, samples, SolverMethod::PicardRk4, tol)?;
    solution.picard = Some(PicardStats {
        sweeps,
        last_update,
        contraction,
        t_picard: ts[0],
        step: h,
    });
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> ProblemConfig {
        ProblemConfig::exponential(1.0).unwrap()
    }

    #[test]
    fn centre_value_and_monotone() {
        let sol = picard_solve(&exp1(), 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(sol.value_at_r(0.0).unwrap(), 0.0);
        let top = sol.samples.last().unwrap();
        assert!(top.v.abs() < 1e-8);
        assert_eq!(sol.monotonicity_defect(), 0.0);
        for w in sol.samples.windows(2) {
            assert!(w[1].v >= w[0].v);
        }
    }

    #[test]
    fn apriori_bound_with_log2() {
        let sol = picard_solve(&exp1(), 2.0, 1.0, 1e-10).unwrap();
        assert!((sol.apriori.c1 - 2f64.ln()).abs() < 1e-15);
        assert!(sol.apriori_excess() <= 0.0);
    }

    #[test]
    fn matches_closed_form_linearization_at_small_beta() {
        // for β -> -∞, v ≈ β - e^β e^(-kt)/(k(1+k)) uniformly on t >= 0
        let k = 1.0;
        let beta = -20.0;
        let sol = picard_solve(&exp1(), beta, 1.0, 1e-10).unwrap();
        let (v1, _) = sol.value_at_t(0.0).unwrap();
        let expected = beta - beta.exp() / (k * (1.0 + k));
        assert!((v1 - expected).abs() < 1e-15 * beta.abs() + 1e-16);
    }

    #[test]
    fn samples_satisfy_ode() {
        let cfg = ProblemConfig::power(1.0, 4.0).unwrap();
        let sol = picard_solve(&cfg, 2.0, 0.5, 1e-10).unwrap();
        // second derivative by central differences of v_t
        let s = &sol.samples;
        for i in (1..s.len() - 1).step_by(97) {
            let h = s[i + 1].t - s[i].t;
            let vtt = (s[i + 1].dv_dt - s[i - 1].dv_dt) / (2.0 * h);
            let rhs = s[i].dv_dt - (-s[i].t).exp() * cfg.source(s[i].v);
            assert!((vtt - rhs).abs() < 1e-5 * (1.0 + rhs.abs()), "t = {}", s[i].t);
        }
    }

    #[test]
    fn power_zero_crossing_is_an_event() {
        let cfg = ProblemConfig::power(1.0, 2.5).unwrap();
        let sol = picard_solve_t(&cfg, 20.0, -5.0, 1e-8).unwrap();
        let t0 = sol.zero_crossing.expect("zero crossing");
        let (v, _) = sol.value_at_t(t0).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn guards() {
        let cfg = ProblemConfig::power(1.0, 4.0).unwrap();
        assert!(picard_solve(&cfg, -1.0, 1.0, 1e-10).unwrap_err().is_input_guard());
        assert!(picard_solve(&exp1(), 0.0, 1.0, 0.0).is_err());
        assert!(picard_solve(&exp1(), 0.0, 3.0, 1e-10).is_err());
    }
}
