//! The eight-part Rademacher graphon `W_R`.
//!
//! Parts are laid out left to right as `A, A', B, B', B'', C, C', D`; every
//! part has width `a = 1/9` except `C`, which has width `2a`. All case
//! conditions are evaluated in part-local fractions: a point of a part of
//! width `w` starting at `s` has local fraction `(x - s) / w` in `[0, 1)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::graphs::PartitionSpec;

/// Width of every part except `C`.
pub const BASE_WIDTH: f64 = 1.0 / 9.0;

/// Dyadic blocks of `A`, `A'` and the `C` parity pattern are reported as
/// quadrature breakpoints only up to this depth.
pub const DYADIC_BREAKPOINT_DEPTH: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    A,
    APrime,
    B,
    BPrime,
    BDoublePrime,
    C,
    CPrime,
    D,
}

impl Part {
    pub const ALL: [Part; 8] = [
        Part::A,
        Part::APrime,
        Part::B,
        Part::BPrime,
        Part::BDoublePrime,
        Part::C,
        Part::CPrime,
        Part::D,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::A => "A",
            Part::APrime => "A'",
            Part::B => "B",
            Part::BPrime => "B'",
            Part::BDoublePrime => "B''",
            Part::C => "C",
            Part::CPrime => "C'",
            Part::D => "D",
        }
    }

    /// Accepts `A'` as well as the typographic `A′`.
    pub fn from_name(name: &str) -> Option<Part> {
        let normalized = name.trim().replace('′', "'").replace('″', "''");
        Part::ALL.into_iter().find(|p| p.name() == normalized)
    }

    /// Width in units of `a`.
    fn units(self) -> f64 {
        if self == Part::C {
            2.0
        } else {
            1.0
        }
    }

    /// Degree in units of `a`.
    fn degree_units(self) -> f64 {
        match self {
            Part::A => 3.0,
            Part::APrime => 3.2,
            Part::B => 1.0,
            Part::BPrime => 1.2,
            Part::BDoublePrime => 1.4,
            Part::C => 1.5,
            Part::CPrime => 1.8,
            Part::D => 1.6,
        }
    }
}

/// Geometry of `W_R`: part intervals, local coordinates and the degree table.
#[derive(Clone, Copy, Debug, Default)]
pub struct RademacherLayout;

fn bounds() -> &'static [f64; 9] {
    static BOUNDS: OnceLock<[f64; 9]> = OnceLock::new();
    BOUNDS.get_or_init(|| {
        let spec = RademacherLayout.partition_spec();
        let mut b = [0.0; 9];
        for (i, (lo, hi)) in spec.intervals().into_iter().enumerate() {
            b[i] = lo;
            b[i + 1] = hi;
        }
        b
    })
}

impl RademacherLayout {
    pub fn a(&self) -> f64 {
        BASE_WIDTH
    }

    pub fn width(&self, part: Part) -> f64 {
        part.units() * BASE_WIDTH
    }

    pub fn interval(&self, part: Part) -> (f64, f64) {
        let b = bounds();
        (b[part.index()], b[part.index() + 1])
    }

    /// Degree of every vertex of the part.
    pub fn degree(&self, part: Part) -> f64 {
        part.degree_units() * BASE_WIDTH
    }

    /// Part containing `x` and the local fraction of `x` within it.
    pub fn locate(&self, x: f64) -> (Part, f64) {
        let b = bounds();
        let i = b[1..8].partition_point(|&hi| hi <= x);
        let part = Part::ALL[i];
        let frac = ((x - b[i]) / (b[i + 1] - b[i])).clamp(0.0, 1.0);
        (part, frac)
    }

    /// Global coordinate of local fraction `frac` of `part`.
    pub fn point(&self, part: Part, frac: f64) -> f64 {
        let (lo, hi) = self.interval(part);
        lo + frac * (hi - lo)
    }

    /// Sizes, Table degrees and names of the eight parts.
    pub fn partition_spec(&self) -> PartitionSpec {
        PartitionSpec::with_names(
            Part::ALL.iter().map(|p| p.units() * BASE_WIDTH).collect(),
            Part::ALL.iter().map(|p| p.degree_units() * BASE_WIDTH).collect(),
            Part::ALL.iter().map(|p| p.name().to_string()).collect(),
        )
        .expect("layout constants form a valid partition")
    }
}

/// `[t]`: the smallest positive `k` with `t + 2^-k < 1`.
pub fn dyadic_index(t: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::OutOfDomain {
            what: "dyadic index argument",
            value: t,
        });
    }
    Ok(block_of(t))
}

pub(crate) fn block_of(t: f64) -> u32 {
    let mut k = 1;
    let mut step = 0.5;
    while t + step >= 1.0 && k < 1100 {
        k += 1;
        step *= 0.5;
    }
    k
}

/// `floor(s * 2^k)` is even.
fn even_digit(s: f64, k: u32) -> bool {
    let f = (s * 2f64.powi(k as i32)).floor();
    f % 2.0 == 0.0
}

/// `(1 - 2^-k - u) 2^k` for `u` in dyadic block `k`.
fn ramp(u: f64, k: u32) -> f64 {
    let scale = 2f64.powi(k as i32);
    ((1.0 - 1.0 / scale - u) * scale).clamp(0.0, 1.0)
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn eval(x: f64, y: f64) -> f64 {
    let (p, u) = RademacherLayout.locate(x);
    let (q, v) = RademacherLayout.locate(y);
    if p <= q {
        ordered(p, u, q, v)
    } else {
        ordered(q, v, p, u)
    }
}

/// Value for parts `p <= q` at local fractions `u` (in `p`) and `v` (in `q`).
fn ordered(p: Part, u: f64, q: Part, v: f64) -> f64 {
    use Part::*;
    match (p, q) {
        (A, A) | (APrime, APrime) => indicator(block_of(u) != block_of(v)),
        (A, APrime) => indicator(block_of(u) == block_of(v)),
        (A, B) | (APrime, BPrime) => indicator(u + v <= 1.0),
        (A, BDoublePrime) => indicator(u + v >= 1.0),
        (A, C) => indicator(even_digit(v, block_of(u))),
        (APrime, BDoublePrime) => indicator(v <= u),
        (APrime, C) => {
            let k = block_of(u);
            if even_digit(v, k) {
                ramp(u, k)
            } else {
                0.0
            }
        }
        (APrime, CPrime) => indicator(ramp(u, block_of(u)) + v <= 1.0),
        (APrime, D) | (BPrime, D) => 0.2,
        (BDoublePrime, D) => 0.4,
        (CPrime, D) => 0.8,
        (B, B) | (BPrime, BPrime) | (CPrime, CPrime) => indicator(u + v >= 1.0),
        (C, C) => {
            if u + v >= 1.0 {
                0.75
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}

/// Measure of `{s in [0, t]: floor(s 2^k) even}`.
fn even_measure(t: f64, k: u32) -> f64 {
    let scale = 2f64.powi(k as i32);
    let st = t * scale;
    let n = st.floor();
    let r = st - n;
    let whole = (n / 2.0).ceil();
    (whole + if n % 2.0 == 0.0 { r } else { 0.0 }) / scale
}

fn overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b.min(d) - a.max(c)).max(0.0)
}

/// Calls `f(k, a, b)` for each dyadic block `k` meeting `[v0, v1]`, with
/// `[a, b]` the intersection.
fn for_blocks(v0: f64, v1: f64, mut f: impl FnMut(u32, f64, f64)) {
    let mut k = block_of(v0.min(1.0 - f64::EPSILON));
    loop {
        let start = 1.0 - 2f64.powi(1 - k as i32);
        if start >= v1 || k > 1100 {
            break;
        }
        let end = 1.0 - 2f64.powi(-(k as i32));
        let (a, b) = (v0.max(start), v1.min(end));
        if b > a {
            f(k, a, b);
        }
        k += 1;
    }
}

/// `∫ W_R(x, y) dy` over `y` in part `q` at local fractions `[v0, v1]`, as a
/// fraction-space integral (multiply by the width of `q`).
fn local_integral(p: Part, u: f64, q: Part, v0: f64, v1: f64) -> f64 {
    use Part::*;
    let len = v1 - v0;
    let below = |t: f64| overlap(v0, v1, 0.0, t);
    let above = |t: f64| overlap(v0, v1, t, 1.0);
    let even = |k: u32| even_measure(v1, k) - even_measure(v0, k);
    let block_len = |k: u32| overlap(v0, v1, 1.0 - 2f64.powi(1 - k as i32), 1.0 - 2f64.powi(-(k as i32)));
    match (p, q) {
        (A, A) | (APrime, APrime) => len - block_len(block_of(u)),
        (A, APrime) | (APrime, A) => block_len(block_of(u)),
        (A, B) | (B, A) | (APrime, BPrime) | (BPrime, APrime) => below(1.0 - u),
        (A, BDoublePrime) | (BDoublePrime, A) => above(1.0 - u),
        (A, C) => even(block_of(u)),
        (C, A) => {
            let mut acc = 0.0;
            for_blocks(v0, v1, |k, a, b| {
                if even_digit(u, k) {
                    acc += b - a;
                }
            });
            acc
        }
        (APrime, BDoublePrime) => below(u),
        (BDoublePrime, APrime) => above(u),
        (APrime, C) => {
            let k = block_of(u);
            ramp(u, k) * even(k)
        }
        (C, APrime) => {
            let mut acc = 0.0;
            for_blocks(v0, v1, |k, a, b| {
                if even_digit(u, k) {
                    let s = 2f64.powi(k as i32);
                    let end = 1.0 - 1.0 / s;
                    acc += 0.5 * s * ((end - a).powi(2) - (end - b).powi(2));
                }
            });
            acc
        }
        (APrime, CPrime) => below(1.0 - ramp(u, block_of(u))),
        (CPrime, APrime) => {
            let mut acc = 0.0;
            for_blocks(v0, v1, |k, a, b| {
                let s = 2f64.powi(-(k as i32));
                acc += overlap(a, b, 1.0 - s * (2.0 - u), 1.0 - s);
            });
            acc
        }
        (APrime, D) | (D, APrime) | (BPrime, D) | (D, BPrime) => 0.2 * len,
        (BDoublePrime, D) | (D, BDoublePrime) => 0.4 * len,
        (CPrime, D) | (D, CPrime) => 0.8 * len,
        (B, B) | (BPrime, BPrime) | (CPrime, CPrime) => above(1.0 - u),
        (C, C) => 0.75 * above(1.0 - u),
        _ => 0.0,
    }
}

/// `∫_lo^hi W_R(x, y) dy` in closed form.
pub(crate) fn row_integral(x: f64, lo: f64, hi: f64) -> f64 {
    let (p, u) = RademacherLayout.locate(x);
    let mut acc = 0.0;
    for q in Part::ALL {
        let (a, b) = RademacherLayout.interval(q);
        let (c, d) = (lo.max(a), hi.min(b));
        if d > c {
            let w = b - a;
            let v0 = ((c - a) / w).clamp(0.0, 1.0);
            let v1 = ((d - a) / w).clamp(0.0, 1.0);
            acc += w * local_integral(p, u, q, v0, v1);
        }
    }
    acc
}

fn push_local(out: &mut Vec<f64>, part: Part, frac: f64) {
    if frac > 0.0 && frac < 1.0 {
        out.push(RademacherLayout.point(part, frac));
    }
}

/// Part bounds and the dyadic block bounds of `A` and `A'`.
pub(crate) fn breakpoints() -> Vec<f64> {
    let mut out: Vec<f64> = bounds().to_vec();
    for part in [Part::A, Part::APrime] {
        let mut step = 0.5;
        for _ in 1..=DYADIC_BREAKPOINT_DEPTH {
            push_local(&mut out, part, 1.0 - step);
            step *= 0.5;
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Points where `y -> W_R(x, y)` may jump, restricted to `(lo, hi)`.
pub(crate) fn section_breakpoints(x: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = breakpoints();
    let (p, u) = RademacherLayout.locate(x);
    let (c_lo, c_hi) = RademacherLayout.interval(Part::C);
    let wants_c = c_lo < hi && lo < c_hi;
    let pattern = |out: &mut Vec<f64>, k: u32| {
        if wants_c && k <= DYADIC_BREAKPOINT_DEPTH {
            let n = 1u64 << k;
            for j in 1..n {
                push_local(out, Part::C, j as f64 / n as f64);
            }
        }
    };
    match p {
        Part::A => {
            push_local(&mut out, Part::B, 1.0 - u);
            push_local(&mut out, Part::BDoublePrime, 1.0 - u);
            pattern(&mut out, block_of(u));
        }
        Part::APrime => {
            let k = block_of(u);
            push_local(&mut out, Part::BPrime, 1.0 - u);
            push_local(&mut out, Part::BDoublePrime, u);
            push_local(&mut out, Part::CPrime, 1.0 - ramp(u, k));
            pattern(&mut out, k);
        }
        Part::B => {
            push_local(&mut out, Part::A, 1.0 - u);
            push_local(&mut out, Part::B, 1.0 - u);
        }
        Part::BPrime => {
            push_local(&mut out, Part::APrime, 1.0 - u);
            push_local(&mut out, Part::BPrime, 1.0 - u);
        }
        Part::BDoublePrime => {
            push_local(&mut out, Part::A, 1.0 - u);
            push_local(&mut out, Part::APrime, u);
        }
        Part::C => push_local(&mut out, Part::C, 1.0 - u),
        Part::CPrime => {
            push_local(&mut out, Part::CPrime, 1.0 - u);
            let mut step = 0.5;
            for _ in 1..=DYADIC_BREAKPOINT_DEPTH {
                push_local(&mut out, Part::APrime, 1.0 - step * (2.0 - u));
                step *= 0.5;
            }
        }
        Part::D => {}
    }
    out.retain(|&b| b > lo && b < hi);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: f64 = BASE_WIDTH;

    #[test]
    fn dyadic_index_examples() {
        assert_eq!(dyadic_index(0.0).unwrap(), 1);
        assert_eq!(dyadic_index(0.6).unwrap(), 2);
        assert_eq!(dyadic_index(0.875).unwrap(), 4);
        assert_eq!(dyadic_index(0.5).unwrap(), 2);
        assert!(dyadic_index(1.0).is_err());
        assert!(dyadic_index(-0.1).is_err());
        assert!(dyadic_index(1.0 - 1e-16).unwrap() > 50);
    }

    #[test]
    fn layout_tiles_unit_interval() {
        let l = RademacherLayout;
        let mut at = 0.0;
        for p in Part::ALL {
            let (lo, hi) = l.interval(p);
            assert!((lo - at).abs() < 1e-15);
            assert!((hi - lo - l.width(p)).abs() < 1e-15);
            at = hi;
        }
        assert_eq!(at, 1.0);
        assert_eq!(l.locate(0.0), (Part::A, 0.0));
        assert_eq!(l.locate(1.0).0, Part::D);
        let (p, f) = l.locate(l.point(Part::C, 0.3));
        assert_eq!(p, Part::C);
        assert!((f - 0.3).abs() < 1e-12);
    }

    #[test]
    fn table_one_degrees() {
        let spec = RademacherLayout.partition_spec();
        let expect = [
            1.0 / 3.0,
            16.0 / 45.0,
            1.0 / 9.0,
            2.0 / 15.0,
            7.0 / 45.0,
            1.0 / 6.0,
            0.2,
            8.0 / 45.0,
        ];
        for (d, e) in spec.degrees().iter().zip(expect) {
            assert!((d - e).abs() < 1e-15);
        }
    }

    #[test]
    fn case_list_examples() {
        let l = RademacherLayout;
        let x = l.point(Part::A, 0.6);
        assert_eq!(eval(x, l.point(Part::C, 0.3)), 0.0);
        assert_eq!(eval(x, l.point(Part::C, 0.6)), 1.0);
        let xp = l.point(Part::APrime, 0.6);
        assert!((eval(xp, l.point(Part::C, 0.6)) - 0.6).abs() < 1e-12);
        assert_eq!(eval(xp, l.point(Part::C, 0.3)), 0.0);
        assert_eq!(eval(l.point(Part::CPrime, 0.5), l.point(Part::D, 0.5)), 0.8);
        assert_eq!(eval(l.point(Part::D, 0.5), l.point(Part::CPrime, 0.5)), 0.8);
        assert_eq!(eval(l.point(Part::D, 0.1), l.point(Part::D, 0.9)), 0.0);
        assert_eq!(eval(l.point(Part::C, 0.7), l.point(Part::C, 0.4)), 0.75);
        assert_eq!(eval(l.point(Part::C, 0.2), l.point(Part::C, 0.4)), 0.0);
        // same dyadic block in A: non-edge; different: edge
        assert_eq!(eval(l.point(Part::A, 0.1), l.point(Part::A, 0.3)), 0.0);
        assert_eq!(eval(l.point(Part::A, 0.1), l.point(Part::A, 0.6)), 1.0);
        assert_eq!(eval(l.point(Part::A, 0.1), l.point(Part::APrime, 0.3)), 1.0);
        // B'' coordinate at most the A' coordinate
        assert_eq!(eval(l.point(Part::APrime, 0.5), l.point(Part::BDoublePrime, 0.4)), 1.0);
        assert_eq!(eval(l.point(Part::APrime, 0.5), l.point(Part::BDoublePrime, 0.6)), 0.0);
    }

    #[test]
    fn kernel_is_symmetric_and_in_range() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            let (x, y): (f64, f64) = (rng.random(), rng.random());
            let w = eval(x, y);
            assert_eq!(w, eval(y, x));
            assert!((0.0..=1.0).contains(&w));
        }
    }

    /// Closed-form degree of a vertex of `C` at local fraction `s`: summing
    /// the A blocks with even digit, half of that from A', and the C-C block.
    #[test]
    fn c_degree_closed_form() {
        for s in [0.05, 0.3, 0.61, 0.9] {
            let mut a_part = 0.0;
            for k in 1..60 {
                if even_digit(s, k) {
                    a_part += A * 0.5f64.powi(k as i32);
                }
            }
            let oracle = a_part + 0.5 * a_part + 0.75 * (2.0 * A) * s;
            // numerical 1d midpoint integral on a fine grid
            let x = RademacherLayout.point(Part::C, s);
            let n = 1 << 18;
            let num: f64 = (0..n).map(|j| eval(x, (j as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
            assert!((num - oracle).abs() < 1e-4, "s={s}: {num} vs {oracle}");
            assert!((oracle - 1.5 * A).abs() < 1e-12);
        }
    }

    #[test]
    fn section_breakpoints_are_sorted_and_bounded() {
        let x = RademacherLayout.point(Part::A, 0.8);
        let bp = section_breakpoints(x, 0.0, 1.0);
        assert!(bp.windows(2).all(|w| w[0] < w[1]));
        assert!(bp.iter().all(|&b| b > 0.0 && b < 1.0));
        // block 3 of A: C is cut into 8 pieces
        let c = RademacherLayout.interval(Part::C);
        assert_eq!(bp.iter().filter(|&&b| b > c.0 && b < c.1).count(), 7);
        let only_d = section_breakpoints(x, RademacherLayout.interval(Part::D).0, 1.0);
        assert!(only_d.is_empty());
    }

    #[test]
    fn row_integral_matches_fine_midpoint_sums() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 1 << 18;
        for _ in 0..40 {
            let mut x: f64 = rng.random();
            if let (Part::A | Part::APrime, u) = RademacherLayout.locate(x) {
                if block_of(u) > 8 {
                    x = RademacherLayout.point(RademacherLayout.locate(x).0, 0.3);
                }
            }
            let (mut lo, mut hi): (f64, f64) = (rng.random(), rng.random());
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            let h = (hi - lo) / n as f64;
            let mid: f64 = (0..n).map(|j| eval(x, lo + (j as f64 + 0.5) * h)).sum::<f64>() * h;
            let exact = row_integral(x, lo, hi);
            assert!((mid - exact).abs() < 2e-5, "x={x} [{lo},{hi}]: {mid} vs {exact}");
        }
    }

    #[test]
    fn row_integral_is_exact_deep_in_the_dyadic_tail() {
        let spec = RademacherLayout.partition_spec();
        for part in [Part::A, Part::APrime] {
            for depth in [1, 5, 21, 30, 45] {
                let x = RademacherLayout.point(part, 1.0 - 1.5 * 2f64.powi(-depth));
                let d = row_integral(x, 0.0, 1.0);
                assert!(
                    (d - spec.degrees()[part.index()]).abs() < 1e-14,
                    "{part:?} depth {depth}: {d}"
                );
            }
        }
        for part in [Part::C, Part::CPrime] {
            for s in [0.1, 1.0 / 3.0, 0.77, 1.0 - 1e-9] {
                let d = row_integral(RademacherLayout.point(part, s), 0.0, 1.0);
                assert!((d - spec.degrees()[part.index()]).abs() < 1e-14, "{part:?} at {s}: {d}");
            }
        }
    }
}
