//! `L1` and `d_W` distances between vertex sections, and the witness
//! sections showing that the typical-vertex space of `W_R` is not locally compact.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{quad, Estimate, Method};
use crate::error::{invalid, Error, Result};
use crate::graphon::{dyadic_index, Graphon, Part, RademacherLayout, SectionFunction};

/// Smallest accepted quadrature grid.
pub const MIN_GRID: usize = 1 << 8;
/// Default quadrature grid.
pub const DEFAULT_GRID: usize = 1 << 12;

fn check_grid(grid: usize) -> Result<()> {
    if grid < MIN_GRID {
        return Err(invalid(format!("grid {grid} is below the minimum {MIN_GRID}")));
    }
    Ok(())
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// `∫ |f - g|` by the midpoint rule on grid cells refined at both functions' breakpoints.
pub fn l1_distance(f: &SectionFunction, g: &SectionFunction, grid: usize) -> Result<Estimate> {
    check_grid(grid)?;
    let bp = merge_sorted(&f.breakpoints(0.0, 1.0), &g.breakpoints(0.0, 1.0));
    let (v, n) = quad::integrate_1d(|y| (f.eval(y) - g.eval(y)).abs(), 0.0, 1.0, &bp, grid);
    Ok(Estimate::exact(v, n, Method::Quadrature))
}

/// `d_W(f, g) = ∫ |∫ W(x, y) (f(y) - g(y)) dy| dx` by nested midpoint quadrature.
pub fn dw_distance(w: &Graphon, f: &SectionFunction, g: &SectionFunction, grid: usize) -> Result<Estimate> {
    check_grid(grid)?;
    let fg = merge_sorted(&f.breakpoints(0.0, 1.0), &g.breakpoints(0.0, 1.0));
    let global = w.breakpoints();
    let outer = quad::cells(0.0, 1.0, &global, grid);
    let parts: Vec<(f64, u64)> = outer
        .par_iter()
        .map(|&(a, b)| {
            let x = 0.5 * (a + b);
            let bp = merge_sorted(&merge_sorted(&fg, &w.section_breakpoints(x, 0.0, 1.0)), &global);
            let (inner, n) = quad::integrate_1d(|y| w.value(x, y) * (f.eval(y) - g.eval(y)), 0.0, 1.0, &bp, grid);
            ((b - a) * inner.abs(), n)
        })
        .collect();
    let mut acc = quad::Neumaier::default();
    let mut evals = 0;
    for (v, n) in parts {
        acc.add(v);
        evals += n;
    }
    Ok(Estimate::exact(acc.total(), evals, Method::Quadrature))
}

fn part_bounds() -> Vec<f64> {
    let mut out: Vec<f64> = Part::ALL.iter().map(|&p| RademacherLayout.interval(p).0).collect();
    out.push(1.0);
    out
}

/// `g`: 1 on `A' ∪ B'' ∪ C'`, 0.2 on `D`, 0 elsewhere.
pub fn witness_g() -> SectionFunction {
    let values = Part::ALL
        .iter()
        .map(|p| match p {
            Part::APrime | Part::BDoublePrime | Part::CPrime => 1.0,
            Part::D => 0.2,
            _ => 0.0,
        })
        .collect();
    SectionFunction::step("g", part_bounds(), values).expect("valid step section")
}

/// `g_{i,δ}` with every threshold read in part-local fractions `u`:
/// 1 on the dyadic block `i` of `A`, 1 on `A'` off its block `i`, 1 on
/// `B'` for `u <= (1+δ)2^-i`, 1 on `B''` for `u <= 1-(1+δ)2^-i`, `δ` on `C`
/// where `floor(2^i u)` is even, 1 on `C'` for `u <= 1-δ`, 0.2 on `D`.
pub fn witness_g_i_delta(i: u32, delta: f64) -> Result<SectionFunction> {
    if i == 0 || i > 40 {
        return Err(invalid(format!("witness index {i} outside 1..=40")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfDomain {
            what: "witness δ",
            value: delta,
        });
    }
    let l = RademacherLayout;
    let step = 2f64.powi(-(i as i32));
    let t = (1.0 + delta) * step;
    let f = move |y: f64| {
        let (p, u) = l.locate(y);
        let block = |u: f64| dyadic_index(u.min(1.0 - f64::EPSILON)).expect("local fraction in [0,1)");
        match p {
            Part::A if block(u) == i => 1.0,
            Part::APrime if block(u) != i => 1.0,
            Part::BPrime if u <= t => 1.0,
            Part::BDoublePrime if u <= 1.0 - t => 1.0,
            Part::C if ((u / step).floor() as u64) % 2 == 0 => delta,
            Part::CPrime if u <= 1.0 - delta => 1.0,
            Part::D => 0.2,
            _ => 0.0,
        }
    };
    let mut fixed = part_bounds();
    let block_lo = 1.0 - 2.0 * step;
    let block_hi = 1.0 - step;
    for part in [Part::A, Part::APrime] {
        fixed.push(l.point(part, block_lo));
        fixed.push(l.point(part, block_hi));
    }
    fixed.push(l.point(Part::BPrime, t));
    fixed.push(l.point(Part::BDoublePrime, 1.0 - t));
    fixed.push(l.point(Part::CPrime, 1.0 - delta));
    fixed.sort_by(f64::total_cmp);
    let (c_lo, c_hi) = l.interval(Part::C);
    let cells = 1u64 << i;
    let breakpoints = move |lo: f64, hi: f64| {
        let mut out: Vec<f64> = fixed.iter().copied().filter(|&b| b > lo && b < hi).collect();
        let (from, to) = (lo.max(c_lo), hi.min(c_hi));
        if from < to {
            let width = c_hi - c_lo;
            let first = (((from - c_lo) / width) * cells as f64).floor().max(1.0) as u64;
            let last = ((((to - c_lo) / width) * cells as f64).ceil() as u64).min(cells - 1);
            out.extend(
                (first..=last)
                    .map(|j| l.point(Part::C, j as f64 / cells as f64))
                    .filter(|&b| b > lo && b < hi),
            );
            out.sort_by(f64::total_cmp);
            out.dedup();
        }
        out
    };
    Ok(SectionFunction::explicit_lazy(
        format!("g[{i},{delta}]"),
        f,
        breakpoints,
    ))
}

/// The point of `A'` whose `W_R` section is `g_{i,δ}`: local fraction `1 - (1+δ)2^-i`,
/// i.e. the absolute coordinate `2/9 - (1+δ)2^-i/9`.
pub fn witness_point(i: u32, delta: f64) -> f64 {
    RademacherLayout.point(Part::APrime, 1.0 - (1.0 + delta) * 2f64.powi(-(i as i32)))
}

/// `‖g_{i,δ} - g‖_1 = ((4 + 2δ) 2^-i + 2δ) / 9`.
pub fn witness_distance_formula(i: u32, delta: f64) -> f64 {
    ((4.0 + 2.0 * delta) * 2f64.powi(-(i as i32)) + 2.0 * delta) / 9.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separation {
    pub distance: Estimate,
    pub bound: f64,
    pub separated: bool,
}

/// Checks `‖g_{i,δ} - g_{i',δ'}‖_1 > (δ + δ')/18`.
pub fn check_separation(i: u32, delta: f64, i2: u32, delta2: f64, grid: usize) -> Result<Separation> {
    if i == i2 {
        return Err(invalid("separation is only claimed for different indices"));
    }
    let distance = l1_distance(&witness_g_i_delta(i, delta)?, &witness_g_i_delta(i2, delta2)?, grid)?;
    let bound = (delta + delta2) / 18.0;
    Ok(Separation {
        distance,
        bound,
        separated: distance.value > bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessRow {
    pub i: u32,
    pub delta: f64,
    /// Numeric `‖g_{i,ε} - g‖_1`.
    pub distance_to_g: f64,
    pub formula: f64,
    pub within_ball: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackingReport {
    pub eps: f64,
    pub witnesses: Vec<WitnessRow>,
    /// Smallest pairwise distance (infinite for fewer than two witnesses).
    pub min_pairwise: f64,
    pub separation_bound: f64,
    pub certified: bool,
}

/// Witnesses `g_{i,ε}` for the `count` smallest `i > log2(1/ε)`; certified
/// when each lies within `ε` of `g` and all pairs are at least `ε/9` apart.
pub fn packing_diagnostic(eps: f64, count: usize, grid: usize) -> Result<PackingReport> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::OutOfDomain {
            what: "packing radius ε",
            value: eps,
        });
    }
    let first = (1.0 / eps).log2().floor() as u32 + 1;
    let indices: Vec<u32> = (first..first + count as u32).collect();
    let g = witness_g();
    let witnesses = indices
        .par_iter()
        .map(|&i| {
            let d = l1_distance(&witness_g_i_delta(i, eps)?, &g, grid)?.value;
            Ok(WitnessRow {
                i,
                delta: eps,
                distance_to_g: d,
                formula: witness_distance_formula(i, eps),
                within_ball: d <= eps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(u32, u32)> = indices
        .iter()
        .enumerate()
        .flat_map(|(k, &i)| indices[k + 1..].iter().map(move |&j| (i, j)))
        .collect();
    let min_pairwise = pairs
        .par_iter()
        .map(|&(i, j)| l1_distance(&witness_g_i_delta(i, eps)?, &witness_g_i_delta(j, eps)?, grid).map(|e| e.value))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let separation_bound = eps / 9.0;
    let certified = witnesses.iter().all(|w| w.within_ball) && min_pairwise >= separation_bound;
    Ok(PackingReport {
        eps,
        witnesses,
        min_pairwise,
        separation_bound,
        certified,
    })
}
