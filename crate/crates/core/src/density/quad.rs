//! Composite midpoint quadrature on cells cut by a uniform grid and explicit breakpoints.

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Cells of `[lo, hi]` cut at the grid points `j / grid` and at `breakpoints`
/// (sorted; entries outside `(lo, hi)` are ignored). `grid = 0` uses the
/// breakpoints alone.
pub(crate) fn cells(lo: f64, hi: f64, breakpoints: &[f64], grid: usize) -> Vec<(f64, f64)> {
    if !(hi > lo) {
        return Vec::new();
    }
    let mut grid_pts = Vec::new();
    if grid > 0 {
        let n = grid as f64;
        let first = (lo * n).floor() as i64 + 1;
        let last = (hi * n).ceil() as i64 - 1;
        grid_pts.extend((first..=last).map(|j| j as f64 / n).filter(|&p| p > lo && p < hi));
    }
    let bp = breakpoints.iter().copied().filter(|&p| p > lo && p < hi);
    let mut points = Vec::with_capacity(grid_pts.len() + breakpoints.len() + 2);
    points.push(lo);
    let mut g = grid_pts.into_iter().peekable();
    let mut b = bp.peekable();
    loop {
        let next = match (g.peek(), b.peek()) {
            (Some(&x), Some(&y)) => {
                if x <= y {
                    g.next()
                } else {
                    b.next()
                }
            }
            (Some(_), None) => g.next(),
            (None, Some(_)) => b.next(),
            (None, None) => break,
        };
        let p = next.expect("peeked");
        if p > *points.last().expect("non-empty") {
            points.push(p);
        }
    }
    if hi > *points.last().expect("non-empty") {
        points.push(hi);
    }
    points.windows(2).map(|w| (w[0], w[1])).collect()
}

/// `∫_lo^hi f` by the midpoint rule on [`cells`]; also returns the evaluation count.
pub(crate) fn integrate_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, breakpoints: &[f64], grid: usize) -> (f64, u64) {
    let cs = cells(lo, hi, breakpoints, grid);
    let mut acc = Neumaier::default();
    for &(a, b) in &cs {
        acc.add((b - a) * f(0.5 * (a + b)));
    }
    (acc.total(), cs.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_merge_grid_and_breakpoints() {
        let c = cells(0.0, 1.0, &[0.3, 0.5, 2.0], 4);
        let ends: Vec<f64> = c.iter().map(|x| x.1).collect();
        assert_eq!(ends, vec![0.25, 0.3, 0.5, 0.75, 1.0]);
        let c = cells(0.2, 0.6, &[], 0);
        assert_eq!(c, vec![(0.2, 0.6)]);
        assert!(cells(0.5, 0.5, &[], 8).is_empty());
    }

    #[test]
    fn step_functions_integrate_exactly_with_breakpoints() {
        let f = |x: f64| if x < 1.0 / 3.0 { 0.2 } else { 0.9 };
        let (v, _) = integrate_1d(f, 0.0, 1.0, &[1.0 / 3.0], 0);
        assert!((v - (0.2 / 3.0 + 0.6)).abs() < 1e-15);
        let (v, n) = integrate_1d(|x| x, 0.0, 1.0, &[], 16);
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(n, 16);
    }

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = Neumaier::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 1000.0);
    }
}
