//! The graphon `W_d` with parts `A, B_1, ..., B_2d, C` of equal size
//! `s = 1/(2d+2)`. For `x` in `A` at local fraction `u`, let `phi(u)` be the
//! digit de-interleaving of `u` into `[0,1]^d`. Then `x` is adjacent to the
//! point at local fraction `t` of `B_i` iff `phi(u)_i >= t` (for `i <= d`) or
//! `1 - phi(u)_{i-d} >= t` (for `i > d`).

use super::maps::DigitInterleave;
use crate::graphs::PartitionSpec;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Norine {
    pub d: usize,
}

impl Norine {
    fn parts(&self) -> usize {
        2 * self.d + 2
    }

    fn size(&self) -> f64 {
        1.0 / self.parts() as f64
    }

    /// Part index (0 = A, 1..=2d = B_i, 2d+1 = C) and local fraction.
    fn locate(&self, x: f64) -> (usize, f64) {
        let k = self.parts();
        let scaled = x * k as f64;
        let i = (scaled.floor() as usize).min(k - 1);
        (i, (scaled - i as f64).clamp(0.0, 1.0))
    }

    fn threshold(&self, u: f64, i: usize) -> f64 {
        let phi = DigitInterleave { dims: self.d };
        if i <= self.d {
            phi.coordinate(u, i - 1)
        } else {
            1.0 - phi.coordinate(u, i - self.d - 1)
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (p, u) = self.locate(x);
        let (q, v) = self.locate(y);
        let (p, u, q, v) = if p <= q { (p, u, q, v) } else { (q, v, p, u) };
        let c = self.parts() - 1;
        match (p, q) {
            (0, i) if (1..c).contains(&i) => {
                if self.threshold(u, i) >= v {
                    1.0
                } else {
                    0.0
                }
            }
            (i, j) if i == j && (1..c).contains(&i) => {
                if u + v >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            (i, j) if j == c && (1..c).contains(&i) => i as f64 / (4 * self.d) as f64,
            _ => 0.0,
        }
    }

    pub fn degrees(&self) -> Vec<f64> {
        let s = self.size();
        let d = self.d as f64;
        let mut out = vec![d * s];
        out.extend((1..=2 * self.d).map(|i| s * (1.0 + i as f64 / (4.0 * d))));
        out.push(s * (2.0 * d + 1.0) / 4.0);
        out
    }

    /// Partition metadata, present only when the part degrees are distinct.
    pub fn partition(&self) -> Option<PartitionSpec> {
        let k = self.parts();
        let mut names = vec!["A".to_string()];
        names.extend((1..=2 * self.d).map(|i| format!("B{i}")));
        names.push("C".to_string());
        PartitionSpec::with_names(vec![self.size(); k], self.degrees(), names).ok()
    }

    fn point(&self, part: usize, frac: f64) -> f64 {
        (part as f64 + frac) * self.size()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        (0..=self.parts()).map(|i| i as f64 * self.size()).collect()
    }

    pub fn section_breakpoints(&self, x: f64) -> Vec<f64> {
        let mut out = self.breakpoints();
        let (p, u) = self.locate(x);
        let c = self.parts() - 1;
        if p == 0 {
            for i in 1..c {
                out.push(self.point(i, self.threshold(u, i)));
            }
        } else if p < c {
            out.push(self.point(p, 1.0 - u));
        }
        out
    }
}
