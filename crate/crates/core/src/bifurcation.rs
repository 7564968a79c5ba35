//! The bifurcation curve `β -> (λ(β), α(β))` read off a single β-free orbit.
//!
//! Every regular solution is a translate of one canonical orbit `ŵ(s)`:
//! exponential `w(t, β) = ŵ(t - β/k + log(k)/k)`, power
//! `w(t, β) = ŵ(t - log(β)/θ)`. Evaluating `ŵ` at `t = 0` (`r = 1`) gives
//! `λ(β)`, and its critical points are the turning points of the curve.

use crate::error::{Error, Result};
use crate::integrator::{
    asymptotic::AsymptoticSeries, asymptotic_init, default_s0, integrate_autonomous, EventSet, Termination, Trajectory,
};
use crate::model::{oscillation_predicate, Exponent, Nonlinearity, ProblemConfig};
use serde::Serialize;
use std::fmt;

/// Default lower end of the canonical orbit.
pub const DEFAULT_S_MIN: f64 = -80.0;
/// Default integrator tolerance for canonical orbits.
pub const DEFAULT_TOL: f64 = 1e-10;
/// `|λ_end - λ*|` below which a monotone curve counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-3;
/// Minimum number of sign changes of `λ - λ*` for an oscillating diagram.
pub const MIN_OSCILLATIONS: usize = 3;
/// Offset `w + 1` at a critical point below which a power orbit is cut.
const SADDLE_CUT: f64 = 1e-3;

/// The β-free orbit, with the asymptotic series covering `s > s0`.
#[derive(Debug, Clone)]
pub struct CanonicalOrbit {
    pub trajectory: Trajectory,
    pub s0: f64,
    series: AsymptoticSeries,
}

/// Integrates the canonical orbit from its asymptotic start down to `s_min`
/// (or to the `w = -1` event).
pub fn canonical_trajectory(config: &ProblemConfig, s_min: f64) -> Result<CanonicalOrbit> {
    canonical_trajectory_with(config, s_min, DEFAULT_TOL)
}

pub fn canonical_trajectory_with(config: &ProblemConfig, s_min: f64, tol: f64) -> Result<CanonicalOrbit> {
    let s0 = default_s0(config);
    let (w, dw) = asymptotic_init(config, s0)?;
    let events = EventSet {
        w_minus_one: !config.is_exponential(),
        ..EventSet::all()
    };
    let mut trajectory = integrate_autonomous(config, (s0, w, dw), s_min.min(s0 - 1.0), tol, &events)?;
    if !config.is_exponential() {
        cut_at_saddle(&mut trajectory);
    }
    Ok(CanonicalOrbit {
        trajectory,
        s0,
        series: AsymptoticSeries::new(config),
    })
}

/// Cuts a power orbit at its first return close to the saddle `w = -1`.
/// Such an orbit follows a separatrix, and which side of it the numerical
/// orbit leaves on is decided by round-off alone.
fn cut_at_saddle(traj: &mut Trajectory) {
    let Some(turn) = traj
        .features
        .dw_zeros
        .iter()
        .rev()
        .find(|e| e.w + 1.0 > 0.0 && e.w + 1.0 < SADDLE_CUT)
        .copied()
    else {
        return;
    };
    let s_cut = turn.s + 1e-12 * (1.0 + turn.s.abs());
    traj.truncate_below(
        s_cut,
        Termination::SaddleApproach {
            s: turn.s,
            distance: turn.w + 1.0,
        },
    );
}

impl CanonicalOrbit {
    pub fn config(&self) -> &ProblemConfig {
        self.trajectory.config()
    }

    /// Lower end of the covered range (the upper end is `+∞`).
    pub fn s_lo(&self) -> f64 {
        self.trajectory.range().0
    }

    /// `(ŵ, ŵ')` at `s`.
    pub fn eval(&self, s: f64) -> Result<[f64; 2]> {
        if s > self.s0 {
            Ok(self.series.eval(s))
        } else {
            self.trajectory.eval(s)
        }
    }

    /// Exponential: `ŵ(s) + k s` without cancellation above `s0`.
    fn exp_offset(&self, s: f64) -> Result<f64> {
        let k = self.config().k();
        if s > self.s0 {
            Ok(self.series.eval(s)[0] + k * s)
        } else {
            Ok(self.trajectory.eval(s)?[0] + k * s)
        }
    }

    /// Power: `ŵ(s) + 1` without cancellation above `s0`.
    fn power_offset(&self, s: f64) -> Result<f64> {
        if s > self.s0 {
            let theta = self.config().theta().expect("power");
            Ok((-theta * s).exp() * self.series.scaled_offset(s).expect("power"))
        } else {
            Ok(self.trajectory.eval(s)?[0] + 1.0)
        }
    }

    /// The `w = -1` event, if it fired.
    pub fn event_s(&self) -> Option<f64> {
        self.trajectory.features.w_minus_one.map(|e| e.s)
    }

    /// `s` at which the member with centre value `beta` is evaluated at `r = 1`.
    pub fn s_of_beta(&self, beta: f64) -> Result<f64> {
        s_of_beta(self.config(), beta)
    }

    pub fn beta_of_s(&self, s: f64) -> f64 {
        beta_of_s(self.config(), s)
    }
}

/// `s_β = log(k)/k - β/k` (exponential) or `-log(β)/θ` (power).
pub fn s_of_beta(config: &ProblemConfig, beta: f64) -> Result<f64> {
    crate::integrator::transform::shift_of_beta(config, beta).map(|shift| -shift)
}

pub fn beta_of_s(config: &ProblemConfig, s: f64) -> f64 {
    let k = config.k();
    match config.theta() {
        None => k.ln() - k * s,
        Some(theta) => (-theta * s).exp(),
    }
}

/// `(λ(β), α(β))`.
pub fn lambda_alpha_of_beta(orbit: &CanonicalOrbit, beta: f64) -> Result<(f64, f64)> {
    let config = orbit.config();
    let k = config.k();
    let s = orbit.s_of_beta(beta)?;
    match config.nonlinearity() {
        Nonlinearity::Exponential => {
            // β - log λ = -k s - ŵ(s)
            let offset = orbit.exp_offset(s)?;
            let lambda = k * (offset - k * s).exp();
            Ok((lambda, -offset))
        }
        Nonlinearity::Power { p } => {
            if let Some(t0) = orbit.event_s() {
                if s <= t0 {
                    return Err(Error::domain(
                        "beta_star",
                        format!("beta = {beta} must lie below beta* = {}", beta_of_s(config, t0)),
                    ));
                }
            }
            let theta = k / (p - 1.0);
            let y = orbit.power_offset(s)?;
            let amplitude = crate::model::singular_solution(config).amplitude;
            let lambda = theta * (1.0 - theta) * y.powf(p - 1.0);
            Ok((lambda, beta / (amplitude * y) - 1.0))
        }
    }
}

/// `β*` together with the evidence behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaStar {
    /// The orbit reaches `w = -1` at `s = s_event`; `β* = e^(-θ s_event)`.
    Finite { value: f64, s_event: f64 },
    /// No `w = -1` event; `min_offset = min(w + 1)` over `[s_lo, s0]`.
    Infinite { min_offset: f64, s_lo: f64, reason: InfiniteReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfiniteReason {
    /// The orbit settled at the equilibrium `w = 0`.
    SettledAtEquilibrium,
    /// The orbit converges to the saddle `w = -1` without reaching it.
    SaddleApproach,
}

impl BetaStar {
    pub fn as_exponent(&self) -> Exponent {
        match *self {
            BetaStar::Finite { value, .. } => Exponent::Finite(value),
            BetaStar::Infinite { .. } => Exponent::Infinite,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            BetaStar::Finite { value, .. } => Some(value),
            BetaStar::Infinite { .. } => None,
        }
    }
}

/// Tail of the orbit over which settling is judged.
const SETTLE_WINDOW: f64 = 10.0;
const SETTLE_TOL: f64 = 1e-4;

fn settled(traj: &Trajectory) -> bool {
    let lo = traj.range().0;
    traj.samples
        .iter()
        .take_while(|x| x.s <= lo + SETTLE_WINDOW)
        .all(|x| x.w.abs() < SETTLE_TOL && x.dw.abs() < SETTLE_TOL)
}

/// Supremum of centre values whose solution stays positive on the unit ball.
pub fn beta_star(orbit: &CanonicalOrbit) -> Result<BetaStar> {
    let config = orbit.config();
    let theta = config
        .theta()
        .ok_or_else(|| Error::domain("power_model", "beta* is defined for the power nonlinearity only"))?;
    if let Some(s_event) = orbit.event_s() {
        return Ok(BetaStar::Finite {
            value: (-theta * s_event).exp(),
            s_event,
        });
    }
    let traj = &orbit.trajectory;
    let min_offset = traj.samples.iter().map(|x| x.w + 1.0).fold(f64::INFINITY, f64::min);
    let s_lo = traj.range().0;
    let reason = match traj.termination {
        Termination::SaddleApproach { .. } => InfiniteReason::SaddleApproach,
        _ if settled(traj) => InfiniteReason::SettledAtEquilibrium,
        _ => {
            return Err(Error::Inconclusive(format!(
                "orbit neither reached w = -1 nor settled on [{s_lo}, {}]; recommended s_min = {}",
                orbit.s0,
                2.0 * s_lo
            )))
        }
    };
    Ok(BetaStar::Infinite { min_offset, s_lo, reason })
}

/// Shape of the bifurcation diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagramType {
    /// A single fold, returning to `λ = 0` at `β*`.
    Type0,
    /// Infinitely many folds spiralling to `λ*`.
    TypeI,
    /// Monotone approach to `λ*`.
    TypeII,
}

impl fmt::Display for DiagramType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagramType::Type0 => "Type0",
            DiagramType::TypeI => "TypeI",
            DiagramType::TypeII => "TypeII",
        })
    }
}

/// Closed-form prediction from the exponent table.
pub fn predicted_type(config: &ProblemConfig) -> DiagramType {
    match config.nonlinearity() {
        Nonlinearity::Exponential => {
            if oscillation_predicate(config) {
                DiagramType::TypeI
            } else {
                DiagramType::TypeII
            }
        }
        Nonlinearity::Power { p } => {
            let ex = config.exponents();
            if p <= ex.p_c {
                DiagramType::Type0
            } else if ex.p_jl_plus.exceeds(p) {
                DiagramType::TypeI
            } else {
                DiagramType::TypeII
            }
        }
    }
}

/// Parameters on a type boundary, where convergence is critically slow.
pub fn is_boundary_case(config: &ProblemConfig) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    let k = config.k();
    match config.nonlinearity() {
        Nonlinearity::Exponential => close(k, 0.25),
        Nonlinearity::Power { p } => {
            let ex = config.exponents();
            close(p, ex.p_c) || ex.p_jl_plus.finite().is_some_and(|q| close(p, q))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub beta: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoint {
    pub beta: f64,
    pub lambda: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    /// Sign changes of `λ - λ*` along the sampled curve.
    pub sign_changes: usize,
    pub turning_points: usize,
    /// `|λ - λ*|` at the turning points, in increasing `β`.
    pub turning_amplitudes: Vec<f64>,
    pub amplitudes_decreasing: bool,
    pub lambda_end_gap: f64,
    /// `λ` at the largest sampled `β`, relative to the sampled maximum.
    pub lambda_end_ratio: f64,
    pub beta_star_finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub empirical: Option<DiagramType>,
    pub predicted: DiagramType,
    /// The label reported: the prediction, confirmed by the empirical
    /// reading except on type boundaries.
    pub label: DiagramType,
    pub advisory: bool,
    pub evidence: Evidence,
}

/// A traced bifurcation curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationCurve {
    pub config_label: String,
    /// Points in increasing `β`.
    pub points: Vec<CurvePoint>,
    pub turning_points: Vec<TurningPoint>,
    pub beta_star: Option<BetaStar>,
    /// `β` at the unique maximum of `λ` (single-fold diagrams).
    pub beta_peak: Option<f64>,
    pub lambda_star: f64,
    /// Largest sampled `λ`; an empirical value, not a certified bound.
    pub lambda_sup: f64,
    pub classification: Option<Classification>,
    /// Why no classification is attached, when the window was insufficient.
    pub classification_note: Option<String>,
}

/// `β` values induced from a uniform grid in `s` over `[s_lo, s_hi]`,
/// returned in increasing `β`.
pub fn beta_grid_from_s(config: &ProblemConfig, s_lo: f64, s_hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut grid: Vec<f64> = (0..n)
        .map(|i| {
            let s = s_hi + (s_lo - s_hi) * i as f64 / (n - 1) as f64;
            beta_of_s(config, s)
        })
        .collect();
    grid.sort_by(f64::total_cmp);
    grid
}

/// The acceptance window: `s ∈ [max(-40, s_event), s0 + 5]` sampled every 0.02.
pub fn default_beta_grid(orbit: &CanonicalOrbit) -> Vec<f64> {
    let config = orbit.config();
    let lo = match orbit.event_s() {
        Some(t0) => t0 + 1e-9 * (1.0 + t0.abs()),
        None => (-40.0f64).max(orbit.s_lo()),
    };
    let hi = orbit.s0 + 5.0;
    let n = ((hi - lo) / 0.02).ceil() as usize + 1;
    beta_grid_from_s(config, lo, hi, n)
}

/// Traces the curve on `beta_grid` using a canonical orbit long enough to
/// cover it.
pub fn trace_curve(config: &ProblemConfig, beta_grid: &[f64]) -> Result<BifurcationCurve> {
    let mut s_min = DEFAULT_S_MIN;
    for &b in beta_grid {
        if let Ok(s) = s_of_beta(config, b) {
            s_min = s_min.min(s - 1.0);
        }
    }
    let orbit = canonical_trajectory(config, s_min)?;
    trace_curve_on(&orbit, beta_grid)
}

/// Traces the curve on `beta_grid` from an existing orbit.
pub fn trace_curve_on(orbit: &CanonicalOrbit, beta_grid: &[f64]) -> Result<BifurcationCurve> {
    let config = orbit.config();
    if beta_grid.is_empty() {
        return Err(Error::domain("beta_grid", "the grid must contain at least one value"));
    }
    let mut grid: Vec<f64> = beta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut points = Vec::with_capacity(grid.len());
    for &beta in &grid {
        let (lambda, alpha) = lambda_alpha_of_beta(orbit, beta)?;
        points.push(CurvePoint {
            beta,
            lambda,
            alpha,
            s: orbit.s_of_beta(beta)?,
        });
    }
    let (s_a, s_b) = (points[points.len() - 1].s, points[0].s);
    let (s_lo, s_hi) = (s_a.min(s_b), s_a.max(s_b));
    let mut turning_points: Vec<TurningPoint> = orbit
        .trajectory
        .features
        .dw_zeros
        .iter()
        .filter(|e| e.s >= s_lo && e.s <= s_hi)
        .map(|e| {
            let beta = orbit.beta_of_s(e.s);
            let (lambda, _) = lambda_alpha_of_beta(orbit, beta)?;
            Ok(TurningPoint { beta, lambda, s: e.s })
        })
        .collect::<Result<_>>()?;
    turning_points.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    let beta_star = if config.is_exponential() { None } else { beta_star(orbit).ok() };
    let lambda_sup = points.iter().map(|x| x.lambda).fold(f64::NEG_INFINITY, f64::max);
    let mut curve = BifurcationCurve {
        config_label: config.label(),
        points,
        turning_points,
        beta_star,
        beta_peak: None,
        lambda_star: config.lambda_star(),
        lambda_sup,
        classification: None,
        classification_note: None,
    };
    match classify_type(config, &curve) {
        Ok(c) => {
            if c.label == DiagramType::Type0 && curve.turning_points.len() == 1 {
                curve.beta_peak = Some(curve.turning_points[0].beta);
            }
            curve.classification = Some(c);
        }
        Err(Error::Inconclusive(note)) => curve.classification_note = Some(note),
        Err(e) => return Err(e),
    }
    Ok(curve)
}

/// Sign changes of `x` ignoring entries with `|x| < floor`.
pub fn sign_changes(values: impl IntoIterator<Item = f64>, floor: f64) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for x in values {
        if x.abs() < floor {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            count += 1;
        }
        last = x;
    }
    count
}

fn evidence(curve: &BifurcationCurve) -> Evidence {
    let lambda_star = curve.lambda_star;
    let floor = crate::integrator::AMPLITUDE_FLOOR * lambda_star;
    let sign_changes = sign_changes(curve.points.iter().map(|x| x.lambda - lambda_star), floor);
    let turning_amplitudes: Vec<f64> = curve.turning_points.iter().map(|t| (t.lambda - lambda_star).abs()).collect();
    let amplitudes_decreasing = turning_amplitudes.windows(2).all(|w| w[1] < w[0]);
    let last = curve.points[curve.points.len() - 1];
    Evidence {
        sign_changes,
        turning_points: curve.turning_points.len(),
        turning_amplitudes,
        amplitudes_decreasing,
        lambda_end_gap: (last.lambda - lambda_star).abs(),
        lambda_end_ratio: last.lambda / curve.lambda_sup,
        beta_star_finite: matches!(curve.beta_star, Some(BetaStar::Finite { .. })),
    }
}

/// Reads the diagram type off the traced curve and compares it with the
/// closed-form prediction.
pub fn classify_type(config: &ProblemConfig, curve: &BifurcationCurve) -> Result<Classification> {
    let ev = evidence(curve);
    let predicted = predicted_type(config);
    let advisory = is_boundary_case(config);
    let empirical = if ev.beta_star_finite && ev.turning_points == 1 && ev.lambda_end_ratio < 1e-2 {
        Some(DiagramType::Type0)
    } else if ev.sign_changes >= MIN_OSCILLATIONS && ev.amplitudes_decreasing {
        Some(DiagramType::TypeI)
    } else if ev.turning_points == 0 && ev.lambda_end_gap < CONVERGENCE_TOL {
        Some(DiagramType::TypeII)
    } else {
        None
    };
    match empirical {
        Some(e) if e == predicted => {}
        _ if advisory => {}
        Some(e) => {
            return Err(Error::Discrepancy {
                empirical: e.to_string(),
                predicted: predicted.to_string(),
            })
        }
        None => {
            return Err(Error::Inconclusive(format!(
                "{} sign changes of lambda - lambda*, {} turning points and |lambda_end - lambda*| = {:e} fit no type; extend the beta window",
                ev.sign_changes, ev.turning_points, ev.lambda_end_gap
            )))
        }
    }
    Ok(Classification {
        empirical,
        predicted,
        label: predicted,
        advisory,
        evidence: ev,
    })
}

impl BifurcationCurve {
    /// CSV with columns `beta,lambda,alpha,is_turning`; turning points are
    /// merged in as their own rows.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(f64, f64, Option<f64>, bool)> = self.points.iter().map(|x| (x.beta, x.lambda, Some(x.alpha), false)).collect();
        rows.extend(self.turning_points.iter().map(|t| (t.beta, t.lambda, None, true)));
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = String::from("beta,lambda,alpha,is_turning\n");
        for (beta, lambda, alpha, turning) in rows {
            let alpha = alpha.map(|a| a.to_string()).unwrap_or_default();
            out.push_str(&format!("{beta},{lambda},{alpha},{}\n", u8::from(turning)));
        }
        out
    }
}
