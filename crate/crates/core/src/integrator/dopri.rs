//! Dormand-Prince 5(4) stepping with quintic Hermite dense output.

use super::hermite::HermiteSegment;
use super::system::PlanarField;
use super::trajectory::{scan_segment, Event, EventSet, Termination};
use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step; bounds the dense-output error between steps.
    pub h_max: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: 0.05,
            h_init: 1e-3,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

pub(crate) struct RawOrbit {
    pub segments: Vec<HermiteSegment>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

/// Integrates `y' = f(y)` from `s0` to `s_end` (either direction).
pub(crate) fn integrate<F: PlanarField>(field: &F, s0: f64, y0: [f64; 2], s_end: f64, opts: &IntegratorOptions, events: &EventSet) -> Result<RawOrbit> {
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::domain("tolerance", "tolerances must be positive"));
    }
    let dir = if s_end >= s0 { 1.0 } else { -1.0 };
    let mut s = s0;
    let mut y = y0;
    let mut f = field.rhs(y);
    let mut acc = field.acceleration(y);
    let mut h = dir * opts.h_init.min(opts.h_max);
    let mut segments = Vec::new();
    let mut found = Vec::new();
    let mut steps = 0usize;

    while (s_end - s) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { s, h });
        }
        if h.abs() > opts.h_max {
            h = dir * opts.h_max;
        }
        let last = (s + h - s_end) * dir >= 0.0;
        if last {
            h = s_end - s;
        }

        let mut k = [[0.0; 2]; 7];
        k[0] = f;
        for i in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                yi[0] += h * A[i][j] * kj[0];
                yi[1] += h * A[i][j] * kj[1];
            }
            k[i] = field.rhs(yi);
        }
        let mut y_new = y;
        let mut err = [0.0; 2];
        for i in 0..7 {
            for c in 0..2 {
                if i < 6 {
                    y_new[c] += h * A[6][i] * k[i][c];
                }
                err[c] += h * E[i] * k[i][c];
            }
        }
        let norm = (0..2)
            .map(|c| {
                let sc = opts.atol + opts.rtol * y[c].abs().max(y_new[c].abs());
                (err[c] / sc).powi(2)
            })
            .sum::<f64>();
        let err_norm = (norm / 2.0).sqrt();

        if err_norm <= 1.0 && y_new.iter().all(|x| x.is_finite()) {
            let s_new = if last { s_end } else { s + h };
            let f_new = k[6];
            let acc_new = field.acceleration(y_new);
            let seg = HermiteSegment::new(s, y, f, acc, s_new, y_new, f_new, acc_new);
            let terminal = scan_segment(&seg, y, y_new, events, &mut found)?;
            segments.push(seg);
            if let Some(ev) = terminal {
                return Ok(RawOrbit {
                    segments,
                    events: found,
                    termination: Termination::TerminalEvent { s: ev.s },
                });
            }
            s = s_new;
            y = y_new;
            f = f_new;
            acc = acc_new;
            let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).min(5.0) };
            h *= factor;
        } else {
            let factor = if err_norm.is_finite() { (0.9 * err_norm.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= factor;
        }
        if h.abs() < 1e-13 * s.abs().max(1.0) {
            return Err(Error::StepUnderflow { s, h });
        }
    }
    Ok(RawOrbit {
        segments,
        events: found,
        termination: Termination::ReachedEnd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation;
    impl PlanarField for Rotation {
        fn rhs(&self, y: [f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
        fn jacobian(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
            [[0.0, 1.0], [-1.0, 0.0]]
        }
    }

    #[test]
    fn harmonic_oscillator_backward_and_zeros() {
        let opts = IntegratorOptions::default();
        let orbit = integrate(&Rotation, 0.0, [0.0, 1.0], -20.0, &opts, &EventSet::all()).unwrap();
        let last = orbit.segments.last().unwrap();
        assert_eq!(last.s1, -20.0);
        assert!((last.end()[0] - (-20f64).sin()).abs() < 1e-8);
        // zeros of sin on [-20, 0): -π, ..., -6π
        let zeros: Vec<_> = orbit.events.iter().filter(|e| e.kind == super::super::trajectory::EventKind::WZero).collect();
        assert_eq!(zeros.len(), 6);
        for (i, z) in zeros.iter().enumerate() {
            assert!((z.s + (i as f64 + 1.0) * std::f64::consts::PI).abs() < 1e-9);
        }
    }
}
