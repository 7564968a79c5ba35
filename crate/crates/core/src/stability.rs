//! The stability quadratic form of the singular solution on radial test
//! functions, written in `τ = log(log(R/r))`.
//!
//! With `dx = 2π r dr`, both `∫|∇φ|²` and the critical Hardy term
//! `∫ φ²/(|x|² log²(R/|x|))` carry the same weight `e^(-τ) dτ`, so
//!
//! ```text
//! Q(c, φ) = 2π ∫ (φ_τ² - c φ²) e^(-τ) dτ.
//! ```
//!
//! Test functions report `(φ e^(-τ/2), φ_τ e^(-τ/2))` so that bands far out
//! in `τ` never overflow.

use crate::error::{Error, Result};
use crate::model::ProblemConfig;
use crate::quadrature::integrate_pieces;
use serde::Serialize;
use std::f64::consts::{E, PI};

/// A radial test function with compact support in `τ`.
pub trait RadialTestFunction {
    /// `[a, b]` outside of which `φ ≡ 0`; `None` for the zero function.
    fn support(&self) -> Option<(f64, f64)>;

    /// `(φ e^(-τ/2), φ_τ e^(-τ/2))` at `τ`.
    fn scaled(&self, tau: f64) -> (f64, f64);

    /// Breakpoints of the integrand inside the support (at least the ends).
    fn knots(&self) -> Vec<f64>;
}

/// `φ(τ) = e^(τ/2) sin(ε τ/2)` on `[2πn/ε, 2π(n+1)/ε]`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunctionBand {
    pub epsilon: f64,
    pub n: u32,
    /// Outer radius in `log(R/|x|)`; the band itself does not depend on it.
    pub big_r: f64,
}

impl TestFunctionBand {
    pub fn tau_interval(&self) -> (f64, f64) {
        let width = 2.0 * PI / self.epsilon;
        (width * self.n as f64, width * (self.n + 1) as f64)
    }

    /// `r_n = R e^(-e^(2πn/ε))`, when representable.
    pub fn r_endpoints(&self) -> (Option<f64>, Option<f64>) {
        let (a, b) = self.tau_interval();
        let r = |tau: f64| {
            let x = self.big_r * (-tau.exp()).exp();
            (x > 0.0).then_some(x)
        };
        (r(b), r(a))
    }

    /// `Q` in closed form: `2π² ((1 + ε²)/(4ε) - c/ε)`.
    pub fn closed_form(&self, c: f64) -> f64 {
        let e = self.epsilon;
        2.0 * PI * PI * ((1.0 + e * e) / (4.0 * e) - c / e)
    }
}

impl RadialTestFunction for TestFunctionBand {
    fn support(&self) -> Option<(f64, f64)> {
        Some(self.tau_interval())
    }

    fn scaled(&self, tau: f64) -> (f64, f64) {
        let (a, b) = self.tau_interval();
        if tau < a || tau > b {
            return (0.0, 0.0);
        }
        let half = 0.5 * self.epsilon;
        let (sin, cos) = (half * tau).sin_cos();
        // φ_τ e^(-τ/2) = ψ/2 + ψ_τ with ψ = sin(ετ/2)
        (sin, 0.5 * sin + half * cos)
    }

    fn knots(&self) -> Vec<f64> {
        let (a, b) = self.tau_interval();
        (0..=8).map(|i| a + (b - a) * i as f64 / 8.0).collect()
    }
}

/// Piecewise-linear `φ` through `(τ_i, φ_i)`, zero outside the knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    pub nodes: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(mut nodes: Vec<(f64, f64)>) -> Result<Self> {
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        if nodes.windows(2).any(|w| w[0].0 == w[1].0) || nodes.iter().any(|n| !(n.0.is_finite() && n.1.is_finite())) {
            return Err(Error::domain("test_function", "knots must be finite and distinct"));
        }
        Ok(Self { nodes })
    }

    /// `φ` scaled by `a`.
    pub fn scale(&self, a: f64) -> Self {
        Self {
            nodes: self.nodes.iter().map(|&(t, v)| (t, a * v)).collect(),
        }
    }
}

impl RadialTestFunction for PiecewiseLinear {
    fn support(&self) -> Option<(f64, f64)> {
        match (self.nodes.first(), self.nodes.last()) {
            (Some(a), Some(b)) if b.0 > a.0 => Some((a.0, b.0)),
            _ => None,
        }
    }

    fn scaled(&self, tau: f64) -> (f64, f64) {
        let Some((a, b)) = self.support() else { return (0.0, 0.0) };
        if tau < a || tau > b {
            return (0.0, 0.0);
        }
        let i = self.nodes.partition_point(|n| n.0 <= tau).clamp(1, self.nodes.len() - 1);
        let (t0, v0) = self.nodes[i - 1];
        let (t1, v1) = self.nodes[i];
        let slope = (v1 - v0) / (t1 - t0);
        let value = v0 + slope * (tau - t0);
        let g = (-0.5 * tau).exp();
        (value * g, slope * g)
    }

    fn knots(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.0).collect()
    }
}

/// `τ` of the unit sphere: `log(log R)`.
pub fn boundary_tau(big_r: f64) -> Result<f64> {
    if !(big_r >= 1.0 && big_r.is_finite()) {
        return Err(Error::domain("outer_radius", format!("R must satisfy R >= 1 (got {big_r})")));
    }
    Ok(big_r.ln().ln())
}

/// `Q(c, φ)` by adaptive quadrature.
pub fn hardy_quadratic_form(c: f64, phi: &dyn RadialTestFunction, big_r: f64) -> Result<f64> {
    let tau_b = boundary_tau(big_r)?;
    let Some((a, b)) = phi.support() else { return Ok(0.0) };
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("compact_support", "test function support must be bounded"));
    }
    if a < tau_b {
        return Err(Error::domain(
            "test_function_boundary",
            format!("support starts at tau = {a}, outside the unit ball (tau >= {tau_b})"),
        ));
    }
    for end in [a, b] {
        let (value, _) = phi.scaled(end);
        if value.abs() > 1e-10 {
            return Err(Error::domain(
                "test_function_boundary",
                format!("phi must vanish at the ends of its support (phi e^(-tau/2) = {value} at tau = {end})"),
            ));
        }
    }
    let integrand = |tau: f64| {
        let (u, du) = phi.scaled(tau);
        du * du - c * u * u
    };
    let integral = integrate_pieces(integrand, &phi.knots(), 1e-13, 1e-11);
    Ok(2.0 * PI * integral.value)
}

/// The `n`-th band of the destabilizing sequence.
pub fn destabilizing_band(epsilon: f64, n: u32) -> Result<TestFunctionBand> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain("band_epsilon", format!("epsilon must satisfy 0 < epsilon < 1 (got {epsilon})")));
    }
    Ok(TestFunctionBand { epsilon, n, big_r: E })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Morse {
    Zero,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandValue {
    pub n: u32,
    pub epsilon: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    /// `τ`-support of the band.
    pub support: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub c: f64,
    pub morse: Morse,
    pub bands: Vec<BandValue>,
    /// `c - 1/4`.
    pub margin: f64,
}

/// Bands used as the witness of an infinite index.
pub const WITNESS_BANDS: u32 = 3;

/// Morse index of the singular solution from its Hardy coefficient, with
/// negative band values as a witness when the index is infinite. The
/// witness shows index `>= WITNESS_BANDS` only; "infinite" itself rests on
/// the closed-form criterion `c > 1/4`.
pub fn morse_classification(config: &ProblemConfig) -> Result<StabilityReport> {
    let c = config.hardy_coefficient();
    let margin = c - 0.25;
    if margin <= 0.0 {
        return Ok(StabilityReport {
            c,
            morse: Morse::Zero,
            bands: Vec::new(),
            margin,
        });
    }
    // (1 + ε)/4 <= c
    let epsilon = (4.0 * c - 1.0).min(0.5);
    let bands = (0..WITNESS_BANDS)
        .map(|n| {
            let band = destabilizing_band(epsilon, n)?;
            Ok(BandValue {
                n,
                epsilon,
                q: hardy_quadratic_form(c, &band, E)?,
                support: band.tau_interval(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        c,
        morse: Morse::Infinite,
        bands,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_function() {
        let zero = PiecewiseLinear::new(vec![]).unwrap();
        assert_eq!(hardy_quadratic_form(0.3, &zero, E).unwrap(), 0.0);
    }

    #[test]
    fn band_supports() {
        let b0 = destabilizing_band(0.5, 0).unwrap();
        assert_eq!(b0.tau_interval(), (0.0, 4.0 * PI));
        let b1 = destabilizing_band(0.5, 1).unwrap();
        assert_eq!(b1.tau_interval(), (4.0 * PI, 8.0 * PI));
        assert_eq!(b1.r_endpoints(), (None, None));
        assert!(destabilizing_band(1.0, 0).is_err());
        assert!(destabilizing_band(0.0, 0).is_err());
    }

    #[test]
    fn band_values_match_closed_form() {
        let quarter = PI * PI / 4.0;
        for n in 0..3 {
            let band = destabilizing_band(0.5, n).unwrap();
            let q = hardy_quadratic_form(0.25, &band, E).unwrap();
            assert!((q - quarter).abs() < 1e-6 * quarter);
            let q = hardy_quadratic_form(0.375, &band, E).unwrap();
            assert!((q + quarter).abs() < 1e-6 * quarter);
        }
        let band = destabilizing_band(0.9, 0).unwrap();
        let q = hardy_quadratic_form(0.475, &band, E).unwrap();
        assert!((q + 0.05 * PI * PI).abs() < 1e-9);
        assert!((band.closed_form(0.475) + 0.05 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_functions_not_vanishing_at_the_ends() {
        let phi = PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(hardy_quadratic_form(0.25, &phi, E).is_err());
        assert!(boundary_tau(0.5).is_err());
    }

    #[test]
    fn morse_verdicts() {
        let r = morse_classification(&ProblemConfig::exponential(0.25).unwrap()).unwrap();
        assert_eq!(r.morse, Morse::Zero);
        let r = morse_classification(&ProblemConfig::exponential(1.0).unwrap()).unwrap();
        assert_eq!(r.morse, Morse::Infinite);
        assert_eq!(r.bands.len(), 3);
        assert!(r.bands.iter().all(|b| b.q < 0.0));
        for w in r.bands.windows(2) {
            assert_eq!(w[0].support.1, w[1].support.0);
        }
        let r = morse_classification(&ProblemConfig::power(1.0, 4.0).unwrap()).unwrap();
        assert_eq!(r.morse, Morse::Infinite);
        assert!((r.c - 8.0 / 9.0).abs() < 1e-14);
    }
}
