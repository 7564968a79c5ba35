use crate::model::{Nonlinearity, ProblemConfig};

/// A planar autonomous vector field with an analytic Jacobian.
pub trait PlanarField {
    fn rhs(&self, y: [f64; 2]) -> [f64; 2];
    fn jacobian(&self, y: [f64; 2]) -> [[f64; 2]; 2];

    /// `d^2 y / ds^2 = J(y) f(y)` along solutions.
    fn acceleration(&self, y: [f64; 2]) -> [f64; 2] {
        let f = self.rhs(y);
        let j = self.jacobian(y);
        [j[0][0] * f[0] + j[0][1] * f[1], j[1][0] * f[0] + j[1][1] * f[1]]
    }
}

/// The autonomous system satisfied by the transformed unknown `w`:
///
/// * exponential: `w'' - w' + k (e^w - 1) = 0`
/// * power: `w'' + (2θ - 1) w' + θ(1-θ)(|w+1|^p - (w+1)) = 0`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdenFowler {
    config: ProblemConfig,
}

impl EmdenFowler {
    pub fn new(config: &ProblemConfig) -> Self {
        Self { config: *config }
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    /// Lyapunov function along orbits.
    ///
    /// Exponential: `½ w'^2 + k (e^w - w)`, non-decreasing in `s`.
    /// Power: `½ w'^2 + θ(1-θ)(|y|^p y/(p+1) - y^2/2)` with `y = w + 1`;
    /// `dL/ds = (1 - 2θ) w'^2`.
    pub fn lyapunov(&self, w: f64, dw: f64) -> f64 {
        let k = self.config.k();
        match self.config.nonlinearity() {
            Nonlinearity::Exponential => 0.5 * dw * dw + k * (w.exp() - w),
            Nonlinearity::Power { p } => {
                let theta = k / (p - 1.0);
                let y = w + 1.0;
                0.5 * dw * dw + theta * (1.0 - theta) * (y.abs().powf(p) * y / (p + 1.0) - 0.5 * y * y)
            }
        }
    }

    /// Magnitude of the individual Lyapunov terms, used to normalize
    /// conservation checks when `L` itself vanishes.
    pub fn lyapunov_scale(&self, w: f64, dw: f64) -> f64 {
        let k = self.config.k();
        match self.config.nonlinearity() {
            Nonlinearity::Exponential => 0.5 * dw * dw + k * (w.exp() + w.abs()),
            Nonlinearity::Power { p } => {
                let theta = k / (p - 1.0);
                let y = w + 1.0;
                0.5 * dw * dw + theta * (1.0 - theta) * (y.abs().powf(p + 1.0) / (p + 1.0) + 0.5 * y * y)
            }
        }
    }

    /// `w''` implied by the equation.
    pub fn second_derivative(&self, w: f64, dw: f64) -> f64 {
        self.rhs([w, dw])[1]
    }
}

impl PlanarField for EmdenFowler {
    fn rhs(&self, y: [f64; 2]) -> [f64; 2] {
        let [w, dw] = y;
        let k = self.config.k();
        let acc = match self.config.nonlinearity() {
            Nonlinearity::Exponential => dw - k * w.exp_m1(),
            Nonlinearity::Power { p } => {
                let theta = k / (p - 1.0);
                let u = w + 1.0;
                -(2.0 * theta - 1.0) * dw - theta * (1.0 - theta) * (u.abs().powf(p) - u)
            }
        };
        [dw, acc]
    }

    fn jacobian(&self, y: [f64; 2]) -> [[f64; 2]; 2] {
        let w = y[0];
        let k = self.config.k();
        match self.config.nonlinearity() {
            Nonlinearity::Exponential => [[0.0, 1.0], [-k * w.exp(), 1.0]],
            Nonlinearity::Power { p } => {
                let theta = k / (p - 1.0);
                let u = w + 1.0;
                let dsrc = p * u.abs().powf(p - 1.0) * u.signum();
                [[0.0, 1.0], [-theta * (1.0 - theta) * (dsrc - 1.0), 1.0 - 2.0 * theta]]
            }
        }
    }
}

/// Public form of the Lyapunov function.
pub fn lyapunov_value(config: &ProblemConfig, w: f64, dw: f64) -> f64 {
    EmdenFowler::new(config).lyapunov(w, dw)
}
