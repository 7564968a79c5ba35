use super::hermite::{DenseState, HermiteSegment};
use super::system::{EmdenFowler, PlanarField};
use crate::error::{Error, Result};
use crate::model::ProblemConfig;
use crate::roots::brent;
use serde::Serialize;

/// Oscillation features with amplitude below this level are double-precision
/// noise and are not recorded.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

/// Which independent variable a trajectory is parameterized by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coordinate {
    /// `t = log(-log(r/e))` of a specific solution.
    Physical,
    /// The β-free shifted variable `s` of the canonical orbit.
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub s: f64,
    pub w: f64,
    pub dw: f64,
    pub lyapunov: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    /// `w = -1`, i.e. the underlying `v` vanishes (power case, terminal).
    WMinusOne,
    WZero,
    DwZero,
}

impl EventKind {
    fn value(self, y: [f64; 2]) -> f64 {
        match self {
            EventKind::WMinusOne => y[0] + 1.0,
            EventKind::WZero => y[0],
            EventKind::DwZero => y[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
    pub w: f64,
    pub dw: f64,
}

/// Events to watch during an integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventSet {
    pub w_minus_one: bool,
    pub w_zero: bool,
    pub dw_zero: bool,
}

impl EventSet {
    pub fn all() -> Self {
        Self {
            w_minus_one: true,
            w_zero: true,
            dw_zero: true,
        }
    }

    pub fn none() -> Self {
        Self {
            w_minus_one: false,
            w_zero: false,
            dw_zero: false,
        }
    }

    fn kinds(&self) -> impl Iterator<Item = EventKind> + '_ {
        [
            (self.w_minus_one, EventKind::WMinusOne),
            (self.w_zero, EventKind::WZero),
            (self.dw_zero, EventKind::DwZero),
        ]
        .into_iter()
        .filter_map(|(on, kind)| on.then_some(kind))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Features {
    pub w_zeros: Vec<Event>,
    pub dw_zeros: Vec<Event>,
    pub w_minus_one: Option<Event>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    ReachedEnd,
    TerminalEvent { s: f64 },
    /// The orbit came within `distance` of the saddle `(w, w') = (-1, 0)`
    /// and was cut there: beyond this point round-off alone decides on which
    /// side of the separatrix the numerical orbit leaves.
    SaddleApproach { s: f64, distance: f64 },
}

/// A sampled orbit of the autonomous system with piecewise quintic dense
/// output. Samples, segments and features are stored in ascending `s`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    config: ProblemConfig,
    pub coordinate: Coordinate,
    pub samples: Vec<TrajectorySample>,
    segments: Vec<HermiteSegment>,
    pub features: Features,
    pub termination: Termination,
    lo: f64,
    hi: f64,
}

/// Looks for enabled events on one step and refines them on the dense
/// output. Returns the terminal event if one fired.
pub(crate) fn scan_segment(seg: &HermiteSegment, from: [f64; 2], to: [f64; 2], events: &EventSet, found: &mut Vec<Event>) -> Result<Option<Event>> {
    let mut terminal = None;
    for kind in events.kinds() {
        let ga = kind.value(from);
        let gb = kind.value(to);
        if ga == 0.0 || !(ga * gb < 0.0 || gb == 0.0) {
            continue;
        }
        let root = brent(|s| kind.value(seg.eval(s).y), seg.s0, seg.s1, 1e-13).ok_or(Error::EventRefinement { s: seg.s0 })?;
        let y = seg.eval(root).y;
        let event = Event {
            kind,
            s: root,
            w: y[0],
            dw: y[1],
        };
        let keep = match kind {
            EventKind::WMinusOne => true,
            EventKind::WZero => event.dw.abs() >= AMPLITUDE_FLOOR,
            EventKind::DwZero => event.w.abs() >= AMPLITUDE_FLOOR,
        };
        if !keep {
            continue;
        }
        if kind == EventKind::WMinusOne {
            terminal = Some(event);
        }
        found.push(event);
    }
    // an event past the terminal one never happened
    if let Some(t) = terminal {
        let forward = seg.s1 > seg.s0;
        found.retain(|e| e.kind == EventKind::WMinusOne || if forward { e.s <= t.s } else { e.s >= t.s });
    }
    Ok(terminal)
}

impl Trajectory {
    /// Assembles a trajectory from integration output given in integration
    /// order.
    pub(crate) fn assemble(config: &ProblemConfig, coordinate: Coordinate, mut segments: Vec<HermiteSegment>, mut events: Vec<Event>, termination: Termination, start: (f64, [f64; 2])) -> Self {
        let sys = EmdenFowler::new(config);
        let sample = |s: f64, y: [f64; 2]| TrajectorySample {
            s,
            w: y[0],
            dw: y[1],
            lyapunov: sys.lyapunov(y[0], y[1]),
        };
        let mut samples = vec![sample(start.0, start.1)];
        for seg in &segments {
            samples.push(sample(seg.s1, seg.end()));
        }
        if let Termination::TerminalEvent { s } = termination {
            let y = segments.last().map(|seg| seg.eval(s).y).unwrap_or(start.1);
            samples.pop();
            samples.push(sample(s, y));
        }
        samples.sort_by(|a, b| a.s.total_cmp(&b.s));
        samples.dedup_by(|a, b| a.s == b.s);
        segments = segments.into_iter().map(HermiteSegment::ascending).collect();
        segments.sort_by(|a, b| a.s0.total_cmp(&b.s0));
        events.sort_by(|a, b| a.s.total_cmp(&b.s));
        let mut features = Features::default();
        for e in events {
            match e.kind {
                EventKind::WMinusOne => features.w_minus_one = Some(e),
                EventKind::WZero => features.w_zeros.push(e),
                EventKind::DwZero => features.dw_zeros.push(e),
            }
        }
        let lo = samples.first().map(|x| x.s).unwrap_or(start.0);
        let hi = samples.last().map(|x| x.s).unwrap_or(start.0);
        Self {
            config: *config,
            coordinate,
            samples,
            segments,
            features,
            termination,
            lo,
            hi,
        }
    }

    /// Builds a trajectory through given states, with dense output derived
    /// from the vector field. Samples may be in any order.
    pub fn from_states(config: &ProblemConfig, coordinate: Coordinate, states: &[(f64, f64, f64)], events: &EventSet) -> Result<Self> {
        let sys = EmdenFowler::new(config);
        let mut pts: Vec<(f64, [f64; 2])> = states.iter().map(|&(s, w, dw)| (s, [w, dw])).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.is_empty() {
            return Err(Error::domain("empty_trajectory", "at least one state is required"));
        }
        let mut segments = Vec::with_capacity(pts.len());
        let mut found = Vec::new();
        for pair in pts.windows(2) {
            let (sa, ya) = pair[0];
            let (sb, yb) = pair[1];
            let seg = HermiteSegment::new(sa, ya, sys.rhs(ya), sys.acceleration(ya), sb, yb, sys.rhs(yb), sys.acceleration(yb));
            let no_terminal = EventSet {
                w_minus_one: false,
                ..*events
            };
            scan_segment(&seg, ya, yb, &no_terminal, &mut found)?;
            if events.w_minus_one {
                let g = (ya[0] + 1.0, yb[0] + 1.0);
                if g.0 * g.1 < 0.0 {
                    if let Some(s) = brent(|s| seg.eval(s).y[0] + 1.0, sa, sb, 1e-13) {
                        let y = seg.eval(s).y;
                        found.push(Event {
                            kind: EventKind::WMinusOne,
                            s,
                            w: y[0],
                            dw: y[1],
                        });
                    }
                }
            }
            segments.push(seg);
        }
        Ok(Self::assemble(config, coordinate, segments, found, Termination::ReachedEnd, pts[0]))
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    /// `[lo, hi]` covered by the dense output.
    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn segments(&self) -> &[HermiteSegment] {
        &self.segments
    }

    fn segment_at(&self, s: f64) -> Result<&HermiteSegment> {
        let slack = 1e-12 * (1.0 + s.abs());
        if !(s >= self.lo - slack && s <= self.hi + slack) || self.segments.is_empty() {
            return Err(Error::OutOfRange {
                s,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let idx = self.segments.partition_point(|seg| seg.s1 < s);
        Ok(&self.segments[idx.min(self.segments.len() - 1)])
    }

    pub fn dense(&self, s: f64) -> Result<DenseState> {
        if self.segments.is_empty() {
            let x = self.samples[0];
            if (s - x.s).abs() <= 1e-12 * (1.0 + s.abs()) {
                let sys = EmdenFowler::new(&self.config);
                let y = [x.w, x.dw];
                return Ok(DenseState {
                    y,
                    dy: sys.rhs(y),
                    ddy: sys.acceleration(y),
                });
            }
            return Err(Error::OutOfRange { s, lo: self.lo, hi: self.hi });
        }
        Ok(self.segment_at(s)?.eval(s))
    }

    /// `(w, w')` at `s` by dense interpolation.
    pub fn eval(&self, s: f64) -> Result<[f64; 2]> {
        self.dense(s).map(|d| d.y)
    }

    /// Re-substitution defect of the interpolant at `s`: consistency of
    /// `d/ds w` with the `w'` component and of `d/ds w'` with the equation,
    /// relative to `1 + |w''|`.
    pub fn residual_at(&self, s: f64) -> Result<f64> {
        let d = self.dense(s)?;
        let f = EmdenFowler::new(&self.config).rhs(d.y);
        let r1 = (d.dy[0] - f[0]).abs() / (1.0 + f[0].abs());
        let r2 = (d.dy[1] - f[1]).abs() / (1.0 + f[1].abs());
        Ok(r1.max(r2))
    }

    /// Discards everything below `s_cut`.
    pub(crate) fn truncate_below(&mut self, s_cut: f64, termination: Termination) {
        self.samples.retain(|x| x.s >= s_cut);
        self.segments.retain(|seg| seg.s1 > s_cut);
        self.features.w_zeros.retain(|e| e.s >= s_cut);
        self.features.dw_zeros.retain(|e| e.s >= s_cut);
        if self.features.w_minus_one.is_some_and(|e| e.s < s_cut) {
            self.features.w_minus_one = None;
        }
        self.lo = s_cut.max(self.lo);
        self.termination = termination;
    }

    /// Lyapunov values in ascending `s`.
    pub fn lyapunov_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|x| (x.s, x.lyapunov)).collect()
    }
}
