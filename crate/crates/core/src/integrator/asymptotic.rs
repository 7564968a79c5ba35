//! Large-`s` expansion of the canonical orbit.
//!
//! Exponential: `ŵ(s) = -k s + S(ε)` with `ε = k e^(-k s)`.
//! Power: `ŵ(s) = e^(-θ s) (1 + S(ε)) / A - 1` with `ε = e^(-k s)`.
//! In both cases `S = Σ c_n ε^n` and the coefficients follow from
//! `c_n (n²k² + n k) = -[ε^(n-1)] G(S)` where `G = exp` or `G = (1 + ·)^p`.

use crate::error::{Error, Result};
use crate::model::{singular_solution, Nonlinearity, ProblemConfig};

/// Number of series coefficients kept.
pub const SERIES_ORDER: usize = 8;

/// Truncation budget used to place the default start.
const DEFAULT_BUDGET: f64 = 1e-15;

/// Largest truncation estimate accepted by [`asymptotic_init`].
pub const START_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSeries {
    config: ProblemConfig,
    /// `c_1 ..= c_(N+1)`; the last one only feeds the error estimate.
    coeffs: Vec<f64>,
}

fn series_coefficients(config: &ProblemConfig, count: usize) -> Vec<f64> {
    let k = config.k();
    let mut c = vec![0.0; count + 1]; // c[0] unused (S has no constant term)
    let mut g = vec![0.0; count + 1]; // coefficients of G(S)
    g[0] = 1.0;
    for n in 1..=count {
        let nf = n as f64;
        c[n] = -g[n - 1] / (nf * nf * k * k + nf * k);
        // extend G by one coefficient now that c_n is known
        g[n] = match config.nonlinearity() {
            Nonlinearity::Exponential => (1..=n).map(|j| j as f64 * c[j] * g[n - j]).sum::<f64>() / nf,
            Nonlinearity::Power { p } => (1..=n).map(|j| ((p + 1.0) * j as f64 - nf) * c[j] * g[n - j]).sum::<f64>() / nf,
        };
    }
    c.remove(0);
    c
}

impl AsymptoticSeries {
    pub fn new(config: &ProblemConfig) -> Self {
        Self {
            config: *config,
            coeffs: series_coefficients(config, SERIES_ORDER + 1),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs[..SERIES_ORDER]
    }

    fn epsilon(&self, s: f64) -> f64 {
        let k = self.config.k();
        match self.config.nonlinearity() {
            Nonlinearity::Exponential => k * (-k * s).exp(),
            Nonlinearity::Power { .. } => (-k * s).exp(),
        }
    }

    /// `(S, ε dS/dε)` at `ε`.
    fn sums(&self, eps: f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut dsum = 0.0;
        let mut pow = 1.0;
        for (i, c) in self.coefficients().iter().enumerate() {
            pow *= eps;
            sum += c * pow;
            dsum += (i + 1) as f64 * c * pow;
        }
        (sum, dsum)
    }

    /// Estimated absolute error of `(ŵ, ŵ')` from the first dropped term.
    pub fn truncation_estimate(&self, s: f64) -> f64 {
        let eps = self.epsilon(s);
        let n = SERIES_ORDER + 1;
        let term = self.coeffs[SERIES_ORDER].abs() * eps.powi(n as i32);
        let k = self.config.k();
        let scale = match self.config.theta() {
            None => 1.0,
            Some(theta) => (-theta * s).exp() / singular_solution(&self.config).amplitude,
        };
        term * scale * (1.0 + n as f64 * k)
    }

    /// `(ŵ(s), ŵ'(s))` from the truncated series.
    pub fn eval(&self, s: f64) -> [f64; 2] {
        let k = self.config.k();
        let eps = self.epsilon(s);
        let (sum, dsum) = self.sums(eps);
        match self.config.theta() {
            None => [-k * s + sum, -k - k * dsum],
            Some(theta) => {
                let g = (-theta * s).exp() / singular_solution(&self.config).amplitude;
                [g * (1.0 + sum) - 1.0, g * (-theta * (1.0 + sum) - k * dsum)]
            }
        }
    }

    /// `e^(θ s)(ŵ + 1)` (power case), avoiding the cancellation in `ŵ + 1`.
    pub fn scaled_offset(&self, s: f64) -> Option<f64> {
        self.config.theta()?;
        let (sum, _) = self.sums(self.epsilon(s));
        Some((1.0 + sum) / singular_solution(&self.config).amplitude)
    }

    /// Smallest start whose truncation estimate is below `budget`.
    pub fn start_for(&self, budget: f64) -> f64 {
        let k = self.config.k();
        let n = (SERIES_ORDER + 1) as f64;
        let c = self.coeffs[SERIES_ORDER].abs().max(f64::MIN_POSITIVE);
        // ε^n · c · (1 + n k) <= budget, ignoring the (decaying) power prefactor
        let eps = (budget / (c * (1.0 + n * k))).powf(1.0 / n);
        let s = match self.config.nonlinearity() {
            Nonlinearity::Exponential => -(eps / k).ln() / k,
            Nonlinearity::Power { .. } => -eps.ln() / k,
        };
        // keep ε small enough that the first terms dominate
        let s = s.max(8.0 / k);
        (s * 2.0).ceil() / 2.0
    }
}

/// Default starting point of the canonical orbit.
pub fn default_s0(config: &ProblemConfig) -> f64 {
    AsymptoticSeries::new(config).start_for(DEFAULT_BUDGET)
}

/// Initial state `(ŵ(s0), ŵ'(s0))` of the β-free canonical orbit.
pub fn asymptotic_init(config: &ProblemConfig, s0: f64) -> Result<(f64, f64)> {
    let series = AsymptoticSeries::new(config);
    let estimate = series.truncation_estimate(s0);
    if !s0.is_finite() || !(estimate <= START_TOLERANCE) {
        return Err(Error::StartTooEarly {
            s0,
            estimate,
            tolerance: START_TOLERANCE,
        });
    }
    let [w, dw] = series.eval(s0);
    Ok((w, dw))
}
