//! Problem definition: the singular weight `V_k`, the critical exponents,
//! the linearization at the singular solution and its closed forms.
//!
//! Every formula in the crate reads `k`, `p` and `theta = k/(p-1)` from a
//! validated [`ProblemConfig`].

use crate::coords::{log_depth, r_of_t};
use crate::error::{Error, Result};
use crate::quadrature;
use num_complex::Complex64;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

/// The nonlinearity `f` in `-Δu = λ V_k f(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    /// `f(u) = e^u`
    Exponential,
    /// `f(u) = (1 + u)^p`
    Power { p: f64 },
}

/// A validated pair `(k, f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConfig {
    k: f64,
    nonlinearity: Nonlinearity,
}

fn check_k(k: f64) -> Result<()> {
    if !k.is_finite() {
        return Err(Error::domain("finite_k", format!("k must be finite (got {k})")));
    }
    if k <= 0.0 {
        return Err(Error::NonExistence { k });
    }
    Ok(())
}

impl ProblemConfig {
    pub fn exponential(k: f64) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            k,
            nonlinearity: Nonlinearity::Exponential,
        })
    }

    /// Requires `p > p_s = k + 1`, i.e. `0 < theta < 1`.
    pub fn power(k: f64, p: f64) -> Result<Self> {
        check_k(k)?;
        if !p.is_finite() {
            return Err(Error::domain("finite_p", format!("p must be finite (got {p})")));
        }
        if p <= k + 1.0 {
            return Err(Error::SubcriticalExponent { p, p_s: k + 1.0 });
        }
        Ok(Self {
            k,
            nonlinearity: Nonlinearity::Power { p },
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.nonlinearity, Nonlinearity::Exponential)
    }

    pub fn p(&self) -> Option<f64> {
        match self.nonlinearity {
            Nonlinearity::Exponential => None,
            Nonlinearity::Power { p } => Some(p),
        }
    }

    /// `theta = k/(p-1)` for the power case.
    pub fn theta(&self) -> Option<f64> {
        self.p().map(|p| self.k / (p - 1.0))
    }

    /// `f(v)` for the shifted `v`-equation: `e^v` or `|v|^p`.
    pub fn source(&self, v: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Exponential => v.exp(),
            Nonlinearity::Power { p } => v.abs().powf(p),
        }
    }

    /// `f'(v)` for the shifted `v`-equation.
    pub fn source_derivative(&self, v: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Exponential => v.exp(),
            Nonlinearity::Power { p } => p * v.abs().powf(p - 1.0) * v.signum(),
        }
    }

    pub fn exponents(&self) -> CriticalExponents {
        critical_exponents(self.k).expect("k validated at construction")
    }

    pub fn exponent_table(&self) -> ExponentTable {
        ExponentTable {
            exponents: self.exponents(),
            eigenvalues: linearization_eigenvalues(self),
            hardy_coefficient: self.hardy_coefficient(),
            oscillates: oscillation_predicate(self),
        }
    }

    /// Coefficient `c` of the critical Hardy potential in the linearization
    /// at the singular solution.
    pub fn hardy_coefficient(&self) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Exponential => self.k,
            Nonlinearity::Power { p } => power_hardy_coefficient(self.k, p),
        }
    }

    pub fn lambda_star(&self) -> f64 {
        match self.theta() {
            None => self.k,
            Some(theta) => theta * (1.0 - theta),
        }
    }

    pub fn label(&self) -> String {
        match self.nonlinearity {
            Nonlinearity::Exponential => format!("exp(k={})", self.k),
            Nonlinearity::Power { p } => format!("pow(k={}, p={})", self.k, p),
        }
    }
}

/// `(kp/(p-1)) (1 - k/(p-1))`.
pub fn power_hardy_coefficient(k: f64, p: f64) -> f64 {
    let theta = k / (p - 1.0);
    p * theta * (1.0 - theta)
}

/// An exponent that may be `+inf`; `Infinite` orders above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(x) => Some(x),
            Exponent::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `x < self` with the infinite value above every real.
    pub fn exceeds(self, x: f64) -> bool {
        match self {
            Exponent::Finite(v) => x < v,
            Exponent::Infinite => true,
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(x) => s.serialize_f64(*x),
            Exponent::Infinite => s.serialize_str("Infinity"),
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(x) => write!(f, "{x}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

/// The power-nonlinearity exponents, functions of `k` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalExponents {
    pub k: f64,
    pub p_s: f64,
    pub p_jl_minus: f64,
    pub p_c: f64,
    pub p_jl_plus: Exponent,
}

impl CriticalExponents {
    /// `1 < p_s < p_jl_minus < p_c < p_jl_plus`.
    pub fn is_ordered(&self) -> bool {
        1.0 < self.p_s && self.p_s < self.p_jl_minus && self.p_jl_minus < self.p_c && self.p_jl_plus.exceeds(self.p_c)
    }
}

/// Exponents plus the linearization data of a concrete configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTable {
    pub exponents: CriticalExponents,
    pub eigenvalues: [Complex64; 2],
    pub hardy_coefficient: f64,
    pub oscillates: bool,
}

/// `V_k(r) = 1/(r^2 (-log(r/e))^(2+k))` on `0 < r < e`.
pub fn weight_eval(k: f64, r: f64) -> Result<f64> {
    check_k(k)?;
    let depth = log_depth(r)?;
    Ok(1.0 / (r * r * depth.powf(2.0 + k)))
}

/// `p_s = k+1`, `p_c = 2k+1` and the two roots of
/// `(kp/(p-1))(1 - k/(p-1)) = 1/4`, `p = 1 + 2k/(1 - k ± sqrt(k(k+2)))`.
/// The upper root is infinite for `k >= 1/4`.
pub fn critical_exponents(k: f64) -> Result<CriticalExponents> {
    check_k(k)?;
    let root = (k * (k + 2.0)).sqrt();
    let p_jl_minus = 1.0 + 2.0 * k / (1.0 - k + root);
    let p_jl_plus = if k >= 0.25 {
        Exponent::Infinite
    } else {
        Exponent::Finite(1.0 + 2.0 * k / (1.0 - k - root))
    };
    Ok(CriticalExponents {
        k,
        p_s: k + 1.0,
        p_jl_minus,
        p_c: 2.0 * k + 1.0,
        p_jl_plus,
    })
}

/// Discriminant of the characteristic polynomial of the linearized
/// autonomous equation (negative exactly when solutions oscillate).
pub fn linearization_discriminant(config: &ProblemConfig) -> f64 {
    let k = config.k();
    match config.theta() {
        None => 1.0 - 4.0 * k,
        Some(theta) => 4.0 * theta * theta + 4.0 * (k - 1.0) * theta + 1.0 - 4.0 * k,
    }
}

/// Roots `[mu_+, mu_-]` of `mu^2 - mu + k` (exponential) or
/// `mu^2 + (2 theta - 1) mu + k (1 - theta)` (power).
pub fn linearization_eigenvalues(config: &ProblemConfig) -> [Complex64; 2] {
    let trace = match config.theta() {
        None => 1.0,
        Some(theta) => 1.0 - 2.0 * theta,
    };
    let disc = Complex64::new(linearization_discriminant(config), 0.0).sqrt();
    let half = Complex64::new(0.5 * trace, 0.0);
    [half + 0.5 * disc, half - 0.5 * disc]
}

/// True iff the linearized equation has non-real eigenvalues, equivalently
/// `c > 1/4`.
pub fn oscillation_predicate(config: &ProblemConfig) -> bool {
    linearization_discriminant(config) < 0.0
}

/// Closed-form singular solution `W` of the `v`-equation and its
/// back-transform `U_*` solving the original problem with `λ = λ_*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularSolution {
    config: ProblemConfig,
    pub lambda_star: f64,
    /// `(θ(1-θ))^(θ/k)` for the power case, `k` for the exponential case.
    pub amplitude: f64,
    pub h1_member: bool,
}

/// Value, first and second `t`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl SingularSolution {
    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    /// `W` as a function of `t`: `k t + log k`, or `A e^(θ t)`.
    pub fn w_jet(&self, t: f64) -> Jet {
        let k = self.config.k();
        match self.config.theta() {
            None => Jet {
                value: k * t + k.ln(),
                d1: k,
                d2: 0.0,
            },
            Some(theta) => {
                let value = self.amplitude * (theta * t).exp();
                Jet {
                    value,
                    d1: theta * value,
                    d2: theta * theta * value,
                }
            }
        }
    }

    pub fn w_of_t(&self, t: f64) -> f64 {
        self.w_jet(t).value
    }

    /// `W(r)` for `0 < r < e`.
    pub fn w_of_r(&self, r: f64) -> Result<f64> {
        let depth = log_depth(r)?;
        let k = self.config.k();
        Ok(match self.config.theta() {
            None => k * depth.ln() + k.ln(),
            Some(theta) => self.amplitude * depth.powf(theta),
        })
    }

    /// `U_*` as a function of `t`: `k t`, or `e^(θ t) - 1`.
    pub fn u_star_jet(&self, t: f64) -> Jet {
        let k = self.config.k();
        match self.config.theta() {
            None => Jet {
                value: k * t,
                d1: k,
                d2: 0.0,
            },
            Some(theta) => {
                let g = (theta * t).exp();
                Jet {
                    value: (theta * t).exp_m1(),
                    d1: theta * g,
                    d2: theta * theta * g,
                }
            }
        }
    }

    pub fn u_star_of_r(&self, r: f64) -> Result<f64> {
        let depth = log_depth(r)?;
        let k = self.config.k();
        Ok(match self.config.theta() {
            None => k * depth.ln(),
            Some(theta) => depth.powf(theta) - 1.0,
        })
    }
}

pub fn singular_solution(config: &ProblemConfig) -> SingularSolution {
    let k = config.k();
    match config.theta() {
        None => SingularSolution {
            config: *config,
            lambda_star: k,
            amplitude: k,
            h1_member: true,
        },
        Some(theta) => {
            let lambda_star = theta * (1.0 - theta);
            let p_c = 2.0 * k + 1.0;
            SingularSolution {
                config: *config,
                lambda_star,
                amplitude: lambda_star.powf(theta / k),
                h1_member: config.p().expect("power") > p_c,
            }
        }
    }
}

fn relative_defect(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        0.0
    } else {
        sum.abs() / scale
    }
}

/// Relative defect of `W'' + W'/r + V_k f(W)` at `r`, normalized by the
/// largest of the three terms.
pub fn singular_residual(config: &ProblemConfig, r: f64) -> Result<f64> {
    let depth = log_depth(r)?;
    let k = config.k();
    let w = singular_solution(config);
    let weight = 1.0 / (r * r * depth.powf(2.0 + k));
    let (d1, d2) = match config.theta() {
        None => (-k / (r * depth), k * (depth - 1.0) / (r * r * depth * depth)),
        Some(theta) => {
            let a = w.amplitude;
            (
                -a * theta * depth.powf(theta - 1.0) / r,
                a * theta * ((theta - 1.0) * depth.powf(theta - 2.0) + depth.powf(theta - 1.0)) / (r * r),
            )
        }
    };
    let value = w.w_of_r(r)?;
    Ok(relative_defect(&[d2, d1 / r, weight * config.source(value)]))
}

/// The same defect in the log-log coordinate, where the `v`-equation reads
/// `v_tt - v_t + e^(-k t) f(v) = 0`. Valid for every real `t`.
pub fn singular_residual_t(config: &ProblemConfig, t: f64) -> f64 {
    let jet = singular_solution(config).w_jet(t);
    let k = config.k();
    // e^{-kt} f(W) assembled in log space to survive |t| ~ 1e2
    let forcing = match config.nonlinearity() {
        Nonlinearity::Exponential => (jet.value - k * t).exp(),
        Nonlinearity::Power { p } => (p * jet.value.ln() - k * t).exp(),
    };
    relative_defect(&[jet.d2, -jet.d1, forcing])
}

/// Convergence verdict for the Dirichlet energy of `U_*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyVerdict {
    Convergent,
    Divergent,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H1Report {
    /// Closed-form membership of `U_*` in `H^1_0(B_1)`.
    pub member: bool,
    pub verdict: EnergyVerdict,
    /// `(T, ∫_0^T 2π U_t^2 e^(-t) dt)` for doubling cut-offs `T`.
    pub partials: Vec<(f64, f64)>,
}

impl H1Report {
    pub fn consistent(&self) -> bool {
        match self.verdict {
            EnergyVerdict::Convergent => self.member,
            EnergyVerdict::Divergent => !self.member,
            EnergyVerdict::Undecided => false,
        }
    }
}

/// `∫_{B_1} |∇U_*|^2 dx = 2π ∫_0^∞ (dU_*/dt)^2 e^(-t) dt`, probed through
/// partial integrals over doubling windows `[0, T]`.
pub fn singular_h1_membership(config: &ProblemConfig) -> H1Report {
    let sol = singular_solution(config);
    let integrand = |t: f64| {
        let d = sol.u_star_jet(t).d1;
        2.0 * PI * d * d * (-t).exp()
    };
    let mut partials = Vec::new();
    let mut total = 0.0;
    let mut increments: Vec<f64> = Vec::new();
    let mut lo = 0.0;
    let mut hi = 5.0;
    let mut verdict = EnergyVerdict::Undecided;
    while hi <= 5120.0 {
        let inc = quadrature::integrate(integrand, lo, hi, 1e-14, 1e-12).value;
        total += inc;
        partials.push((hi, total));
        increments.push(inc);
        if inc <= 1e-10 * (1.0 + total.abs()) {
            verdict = EnergyVerdict::Convergent;
            break;
        }
        let n = increments.len();
        // the window doubles each round: a convergent tail shrinks increments,
        // a divergent one keeps them at least as large as the previous one
        if n >= 4 && increments[n - 3..].windows(2).all(|w| w[1] >= w[0]) {
            verdict = EnergyVerdict::Divergent;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    H1Report {
        member: sol.h1_member,
        verdict,
        partials,
    }
}

/// Samples of the singular solution on a uniform `t`-grid:
/// `(t, r if representable, U_*, relative residual)`.
pub fn singular_table(config: &ProblemConfig, t_min: f64, t_max: f64, samples: usize) -> Vec<(f64, Option<f64>, f64, f64)> {
    let sol = singular_solution(config);
    let n = samples.max(2);
    (0..n)
        .map(|i| {
            let t = t_min + (t_max - t_min) * i as f64 / (n - 1) as f64;
            (t, r_of_t(t), sol.u_star_jet(t).value, singular_residual_t(config, t))
        })
        .collect()
}
