/// Quintic Hermite interpolant of a planar state on one step, built from the
/// state, its first and its second derivative at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteSegment {
    pub s0: f64,
    pub s1: f64,
    y0: [f64; 2],
    d0: [f64; 2],
    a0: [f64; 2],
    y1: [f64; 2],
    d1: [f64; 2],
    a1: [f64; 2],
}

/// Value, first and second derivative of the interpolant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseState {
    pub y: [f64; 2],
    pub dy: [f64; 2],
    pub ddy: [f64; 2],
}

impl HermiteSegment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(s0: f64, y0: [f64; 2], d0: [f64; 2], a0: [f64; 2], s1: f64, y1: [f64; 2], d1: [f64; 2], a1: [f64; 2]) -> Self {
        Self { s0, s1, y0, d0, a0, y1, d1, a1 }
    }

    /// Same polynomial with the endpoints swapped so that `s0 < s1`.
    pub fn ascending(self) -> Self {
        if self.s0 <= self.s1 {
            self
        } else {
            Self {
                s0: self.s1,
                s1: self.s0,
                y0: self.y1,
                d0: self.d1,
                a0: self.a1,
                y1: self.y0,
                d1: self.d0,
                a1: self.a0,
            }
        }
    }

    pub fn lo(&self) -> f64 {
        self.s0.min(self.s1)
    }

    pub fn hi(&self) -> f64 {
        self.s0.max(self.s1)
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo() && s <= self.hi()
    }

    pub fn start(&self) -> [f64; 2] {
        self.y0
    }

    pub fn end(&self) -> [f64; 2] {
        self.y1
    }

    pub fn eval(&self, s: f64) -> DenseState {
        let h = self.s1 - self.s0;
        let x = (s - self.s0) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let x4 = x3 * x;
        let x5 = x4 * x;
        // basis, first and second x-derivatives
        let b = [
            1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5,
            x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5,
            0.5 * x2 - 1.5 * x3 + 1.5 * x4 - 0.5 * x5,
            0.5 * x3 - x4 + 0.5 * x5,
            -4.0 * x3 + 7.0 * x4 - 3.0 * x5,
            10.0 * x3 - 15.0 * x4 + 6.0 * x5,
        ];
        let db = [
            -30.0 * x2 + 60.0 * x3 - 30.0 * x4,
            1.0 - 18.0 * x2 + 32.0 * x3 - 15.0 * x4,
            x - 4.5 * x2 + 6.0 * x3 - 2.5 * x4,
            1.5 * x2 - 4.0 * x3 + 2.5 * x4,
            -12.0 * x2 + 28.0 * x3 - 15.0 * x4,
            30.0 * x2 - 60.0 * x3 + 30.0 * x4,
        ];
        let ddb = [
            -60.0 * x + 180.0 * x2 - 120.0 * x3,
            -36.0 * x + 96.0 * x2 - 60.0 * x3,
            1.0 - 9.0 * x + 18.0 * x2 - 10.0 * x3,
            3.0 * x - 12.0 * x2 + 10.0 * x3,
            -24.0 * x + 84.0 * x2 - 60.0 * x3,
            60.0 * x - 180.0 * x2 + 120.0 * x3,
        ];
        let mut out = DenseState {
            y: [0.0; 2],
            dy: [0.0; 2],
            ddy: [0.0; 2],
        };
        for i in 0..2 {
            let c = [
                self.y0[i],
                h * self.d0[i],
                h * h * self.a0[i],
                h * h * self.a1[i],
                h * self.d1[i],
                self.y1[i],
            ];
            let dot = |w: &[f64; 6]| w.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<f64>();
            out.y[i] = dot(&b);
            out.dy[i] = dot(&db) / h;
            out.ddy[i] = dot(&ddb) / (h * h);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quintic_exactly() {
        let q = |s: f64| [s.powi(5) - 2.0 * s * s, 3.0 * s.powi(4) + s];
        let dq = |s: f64| [5.0 * s.powi(4) - 4.0 * s, 12.0 * s.powi(3) + 1.0];
        let ddq = |s: f64| [20.0 * s.powi(3) - 4.0, 36.0 * s * s];
        let (a, b) = (0.7, -0.4);
        let seg = HermiteSegment::new(a, q(a), dq(a), ddq(a), b, q(b), dq(b), ddq(b));
        for seg in [seg, seg.ascending()] {
            for &s in &[-0.4, -0.1, 0.2, 0.55, 0.7] {
                let d = seg.eval(s);
                for i in 0..2 {
                    assert!((d.y[i] - q(s)[i]).abs() < 1e-13);
                    assert!((d.dy[i] - dq(s)[i]).abs() < 1e-12);
                    assert!((d.ddy[i] - ddq(s)[i]).abs() < 1e-11);
                }
            }
        }
    }
}
