//! Constraint families for partitioned graphons and numeric checks of the
//! identities that pin down `W_R`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{decorated_density, quad, Budget, Estimate, Method};
use crate::error::{invalid, Error, Result};
use crate::expressions::{Constraint, ConstraintKind, DensityExpression, Verdict};
use crate::graphon::{Graphon, Part, PatchEdit, RademacherLayout};
use crate::graphs::{DecoratedGraph, Graph, PartitionSpec, RootedGraph};

/// Tolerance of the quadrature identities.
pub const QUADRATURE_TOLERANCE: f64 = 1e-4;

fn constraint(name: String, lhs: DensityExpression, rhs: f64, kind: ConstraintKind) -> Constraint {
    Constraint {
        name,
        lhs,
        rhs: DensityExpression::Constant(rhs),
        kind,
    }
}

fn rooted_edge() -> DensityExpression {
    DensityExpression::rooted(RootedGraph::rooted_edge())
}

/// `(e1 - c) / s`.
fn shifted_edge(c: f64, s: f64) -> DensityExpression {
    DensityExpression::Sum(vec![
        DensityExpression::mul(DensityExpression::Constant(1.0 / s), rooted_edge()),
        DensityExpression::Constant(-c / s),
    ])
}

/// Constraints forcing `k` parts of sizes `a_i` with degrees `d_i`:
/// `∏_i (e1 - d_i) = 0` and, for each `j`, `⟦∏_{i≠j} (e1 - d_i)⟧ = a_j ∏_{i≠j} (d_j - d_i)`.
///
/// Both are emitted divided by nonzero constants so that residuals are on the
/// scale of the degrees: every factor of the first is divided by the smallest
/// degree gap, and the second becomes `⟦∏_{i≠j} (e1 - d_i)/(d_j - d_i)⟧ = a_j`.
pub fn partition_constraints(spec: &PartitionSpec) -> Vec<Constraint> {
    let d = spec.degrees();
    let mut gap = f64::INFINITY;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            gap = gap.min((d[i] - d[j]).abs());
        }
    }
    if !gap.is_finite() {
        gap = 1.0;
    }
    let mut out = vec![constraint(
        "degrees".into(),
        DensityExpression::Product(d.iter().map(|&di| shifted_edge(di, gap)).collect()),
        0.0,
        ConstraintKind::Rooted,
    )];
    for (j, &dj) in d.iter().enumerate() {
        let factors = d
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &di)| shifted_edge(di, dj - di))
            .collect();
        out.push(constraint(
            format!("size[{}]", spec.names()[j]),
            DensityExpression::unlabel(DensityExpression::Product(factors)),
            spec.sizes()[j],
            ConstraintKind::Ordinary,
        ));
    }
    out
}

/// `H = p`, `H1 = p^2`, `H2 = p^2` with roots drawn from part `l` and the
/// free vertex from part `l2`: `H` a rooted edge, `H1` a triangle with two
/// roots, `H2` a cherry rooted at the ends of its non-edge.
pub fn pseudorandom_constraints(l: usize, l2: usize, p: f64, spec: &PartitionSpec) -> Result<Vec<Constraint>> {
    if l == l2 {
        return Err(invalid("pseudorandom constraints need two different parts"));
    }
    if l >= spec.len() || l2 >= spec.len() {
        return Err(Error::PartitionMismatch(format!(
            "parts {l}, {l2} for {} parts",
            spec.len()
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfDomain {
            what: "pseudorandom density",
            value: p,
        });
    }
    let term = |g: Graph, roots: Vec<usize>, parts: Vec<usize>| -> Result<DensityExpression> {
        Ok(DensityExpression::decorated(DecoratedGraph::new(
            RootedGraph::new(g, roots)?,
            parts,
        )?))
    };
    let tag = format!("{},{}", spec.names()[l], spec.names()[l2]);
    Ok(vec![
        constraint(
            format!("H[{tag}]"),
            term(Graph::edge(), vec![0], vec![l, l2])?,
            p,
            ConstraintKind::Rooted,
        ),
        constraint(
            format!("H1[{tag}]"),
            term(Graph::triangle(), vec![0, 1], vec![l, l, l2])?,
            p * p,
            ConstraintKind::Rooted,
        ),
        constraint(
            format!("H2[{tag}]"),
            term(Graph::cherry(), vec![0, 2], vec![l, l2, l])?,
            p * p,
            ConstraintKind::Rooted,
        ),
    ])
}

/// `d(H_i, W_l) = d_i` transplanted into part `l`: `d(H_i', W) = a_l^{|H_i|} d_i`
/// with every vertex of `H_i'` decorated by `l`.
pub fn gadget_constraints(base: &[(Graph, f64)], l: usize, spec: &PartitionSpec) -> Result<Vec<Constraint>> {
    if l >= spec.len() {
        return Err(Error::PartitionMismatch(format!("part {l} for {} parts", spec.len())));
    }
    let a = spec.sizes()[l];
    base.iter()
        .enumerate()
        .map(|(i, (g, d))| {
            let n = g.order();
            let h = DecoratedGraph::unrooted(g.clone(), vec![l; n])?;
            Ok(constraint(
                format!("gadget[{}]#{}", spec.names()[l], i + 1),
                DensityExpression::decorated(h),
                a.powi(n as i32) * d,
                ConstraintKind::Decorated,
            ))
        })
        .collect()
}

/// The part pairs of `W_R` with no edges between them (the first two inside a part).
pub const WR_ZERO_PAIRS: [(Part, Part); 16] = {
    use Part::*;
    [
        (BDoublePrime, BDoublePrime),
        (D, D),
        (A, CPrime),
        (A, D),
        (APrime, B),
        (B, BPrime),
        (B, BDoublePrime),
        (B, C),
        (B, CPrime),
        (B, D),
        (BPrime, BDoublePrime),
        (BPrime, C),
        (BPrime, CPrime),
        (BDoublePrime, C),
        (BDoublePrime, CPrime),
        (C, D),
    ]
};

fn part_index(spec: &PartitionSpec, p: Part) -> Result<usize> {
    spec.index_of(p.name())
        .ok_or_else(|| Error::PartitionMismatch(format!("no part named {}", p.name())))
}

/// Decorated edge densities that vanish in `W_R`.
pub fn zero_constraints_wr(spec: &PartitionSpec) -> Result<Vec<Constraint>> {
    WR_ZERO_PAIRS
        .iter()
        .map(|&(p, q)| {
            let h = DecoratedGraph::unrooted(Graph::edge(), vec![part_index(spec, p)?, part_index(spec, q)?])?;
            Ok(constraint(
                format!("zero[{},{}]", p.name(), q.name()),
                DensityExpression::decorated(h),
                0.0,
                ConstraintKind::Decorated,
            ))
        })
        .collect()
}

/// `W` with the block `p x q` (and its mirror) shifted by `shift`, clamped to `[0,1]`.
pub fn perturb_block(w: &Graphon, p: Part, q: Part, shift: f64) -> Result<Graphon> {
    let l = RademacherLayout;
    Graphon::patched(w, l.interval(p), l.interval(q), PatchEdit::Shift(shift))
}

/// Two parts of size `1/2` with constant densities `0.2` and `0.6` inside
/// them and a half graphon between them. The cross block has mean `1/2` but
/// is not constant; partition degrees are the part averages `0.35` and `0.55`.
pub fn half_cross_block_counterexample() -> Graphon {
    let half = Graphon::half();
    let blocks = vec![
        vec![Graphon::constant(0.2).expect("valid"), half.clone()],
        vec![half, Graphon::constant(0.6).expect("valid")],
    ];
    let spec = PartitionSpec::new(vec![0.5, 0.5], vec![0.35, 0.55]).expect("valid");
    Graphon::blockwise(&[0.5, 0.5], blocks)
        .expect("valid blocks")
        .with_partition(Some(spec))
}

/// One numeric identity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub target: f64,
    pub estimate: Estimate,
    pub tol: f64,
    pub verdict: Verdict,
}

impl IdentityCheck {
    fn new(name: String, target: f64, estimate: Estimate, tol: f64) -> Self {
        let residual = estimate.sub(Estimate::constant(target));
        IdentityCheck {
            name,
            target,
            estimate,
            tol,
            verdict: Verdict::from_residual(&residual, tol),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WrReport {
    pub checks: Vec<IdentityCheck>,
}

impl WrReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Satisfied)
    }

    pub fn violated(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Violated)
    }
}

/// `∫_lo^hi f(W(x, y)) dy` by breakpoint-aligned quadrature.
fn section_integral(
    w: &Graphon,
    x: f64,
    (lo, hi): (f64, f64),
    budget: &Budget,
    f: impl Fn(f64, f64) -> f64,
) -> Estimate {
    let bp = w.section_breakpoints(x, lo, hi);
    let (v, n) = quad::integrate_1d(|y| f(y, w.value(x, y)), lo, hi, &bp, w.quadrature_grid(budget.grid));
    Estimate::exact(v, n, Method::Quadrature)
}

fn check_layout(w: &Graphon) -> Result<()> {
    let expected = RademacherLayout.partition_spec();
    let spec = w
        .partition()
        .ok_or_else(|| Error::PartitionMismatch("graphon carries no W_R layout".into()))?;
    if spec.names() != expected.names() || spec.intervals() != expected.intervals() {
        return Err(Error::PartitionMismatch(
            "graphon partition is not the W_R layout".into(),
        ));
    }
    Ok(())
}

enum Item {
    Degree(Part, f64),
    NonEdgeQuad,
    NonEdgeMc,
    APrimeMass(u32, f64),
    ANeighbourhood(f64),
    FirstMoment(u32, f64),
    SecondMoment(u32, f64),
    ABlocks(u32, f64),
}

/// Local fraction in dyadic block `k` at relative position `r` in `[0,1)`.
fn in_block(k: u32, r: f64) -> f64 {
    let lo = 1.0 - 2f64.powi(1 - k as i32);
    lo + r * 2f64.powi(-(k as i32))
}

/// Numeric checks of the identities satisfied by `W_R`: (i) part degrees,
/// (ii) the non-edge density on `A^2`, (iii) `A'`-neighbourhood masses of `A`
/// vertices, (iv) `A`-neighbourhood masses of `C` vertices, (v)-(vi) the first
/// and second moments of `A'` sections over `C`, (vii) the non-edge blocks of `A^2`.
/// Sample positions are drawn from `budget.seed`.
pub fn verify_wr_identities(w: &Graphon, budget: &Budget) -> Result<WrReport> {
    check_layout(w)?;
    let l = RademacherLayout;
    let a = l.a();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut items = Vec::new();
    for p in Part::ALL {
        for _ in 0..3 {
            items.push(Item::Degree(p, rng.random::<f64>()));
        }
    }
    items.push(Item::NonEdgeQuad);
    items.push(Item::NonEdgeMc);
    for k in 1..=6 {
        items.push(Item::APrimeMass(k, rng.random::<f64>()));
    }
    items.push(Item::ANeighbourhood(0.0));
    for _ in 0..4 {
        items.push(Item::ANeighbourhood(rng.random::<f64>() * 2.0 * a));
    }
    items.push(Item::FirstMoment(2, 0.6));
    for k in 1..=5 {
        let t = in_block(k, rng.random::<f64>());
        items.push(Item::FirstMoment(k, t));
        items.push(Item::SecondMoment(k, t));
    }
    for k in 1..=6 {
        items.push(Item::ABlocks(k, rng.random::<f64>()));
    }
    let tol = QUADRATURE_TOLERANCE;
    let checks = items
        .par_iter()
        .map(|item| -> Result<IdentityCheck> {
            Ok(match *item {
                Item::Degree(p, u) => {
                    let est = w.degree_with(l.point(p, u), Some(Method::Quadrature), budget)?;
                    IdentityCheck::new(format!("degree[{}@{u:.4}]", p.name()), l.degree(p), est, tol)
                }
                Item::NonEdgeQuad | Item::NonEdgeMc => {
                    let (method, name, t) = match item {
                        Item::NonEdgeQuad => (Method::Quadrature, "nonedge[A,A]", tol),
                        _ => (Method::MonteCarlo, "nonedge[A,A]/mc", 0.0),
                    };
                    let ia = Part::A.index();
                    let h = DecoratedGraph::unrooted(Graph::empty(2), vec![ia, ia])?;
                    let est = decorated_density(&h, w, Some(method), budget)?;
                    IdentityCheck::new(name.into(), 1.0 / 243.0, est, t)
                }
                Item::APrimeMass(k, r) => {
                    let x = l.point(Part::A, in_block(k, r));
                    let est = section_integral(w, x, l.interval(Part::APrime), budget, |_, v| v);
                    IdentityCheck::new(format!("A'-mass[k={k}]"), 2f64.powi(-(k as i32)) / 9.0, est, tol)
                }
                Item::ANeighbourhood(s) => {
                    let x = l.interval(Part::C).0 + s;
                    let est = section_integral(w, x, l.interval(Part::A), budget, |_, v| v);
                    IdentityCheck::new(format!("A-mass[C+{s:.4}]"), 1.0 / 9.0 - s / 2.0, est, tol)
                }
                Item::FirstMoment(k, t) => {
                    let x = l.point(Part::APrime, t);
                    let est = section_integral(w, x, l.interval(Part::C), budget, |_, v| v);
                    let scale = 2f64.powi(-(k as i32));
                    IdentityCheck::new(
                        format!("first-moment[k={k},t={t:.4}]"),
                        (1.0 - scale - t) / (9.0 * scale),
                        est,
                        tol,
                    )
                }
                Item::SecondMoment(k, t) => {
                    let x = l.point(Part::APrime, t);
                    let sq = section_integral(w, x, l.interval(Part::C), budget, |_, v| v * v);
                    let est = Estimate {
                        value: sq.value.sqrt(),
                        ..sq
                    };
                    let scale = 2f64.powi(-(k as i32));
                    IdentityCheck::new(
                        format!("second-moment[k={k},t={t:.4}]"),
                        (1.0 - scale - t) / (3.0 * scale),
                        est,
                        tol,
                    )
                }
                Item::ABlocks(k, r) => {
                    // measure of the symmetric difference between N̄_A(x) and J_k
                    let x = l.point(Part::A, in_block(k, r));
                    let lo = (1.0 - 2f64.powi(1 - k as i32)) / 9.0;
                    let hi = (1.0 - 2f64.powi(-(k as i32))) / 9.0;
                    let est = section_integral(w, x, l.interval(Part::A), budget, |y, v| {
                        let in_j = if y > lo && y < hi { 1.0 } else { 0.0 };
                        (in_j - (1.0 - v)).abs()
                    });
                    IdentityCheck::new(format!("A-blocks[k={k}]"), 0.0, est, tol)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WrReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::graphon_density;
    use crate::expressions::check_constraint;

    fn quick() -> Budget {
        Budget {
            samples: 200_000,
            grid: 1024,
            seed: 3,
        }
    }

    #[test]
    fn partition_constraints_on_step_graphons() {
        let sizes = [0.2, 0.3, 0.5];
        let values = vec![vec![0.9, 0.1, 0.4], vec![0.1, 0.6, 0.3], vec![0.4, 0.3, 0.2]];
        let w = Graphon::step(&sizes, values).unwrap();
        let spec = w.partition().unwrap().clone();
        let cs = partition_constraints(&spec);
        assert_eq!(cs.len(), 4);
        for c in &cs {
            let r = check_constraint(c, &w, 1e-12, None, &quick()).unwrap();
            assert_eq!(r.verdict, Verdict::Satisfied, "{}: {:?}", c.name, r.residual);
            assert_eq!(r.residual.method, Method::ExactStep);
        }
    }

    #[test]
    fn partition_constraint_examples() {
        let half = Graphon::constant(0.5).unwrap();
        let spec = PartitionSpec::new(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap();
        let cs = partition_constraints(&spec);
        let r = check_constraint(&cs[0], &half, 1e-3, None, &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        // ((0.5 - 0.3)(0.5 - 0.7) / 0.4^2)^2
        assert!((r.residual.value - 0.0625).abs() < 1e-12);
        let one = PartitionSpec::new(vec![1.0], vec![0.42]).unwrap();
        let w = Graphon::constant(0.42).unwrap();
        for c in partition_constraints(&one) {
            assert_eq!(
                check_constraint(&c, &w, 1e-9, None, &quick()).unwrap().verdict,
                Verdict::Satisfied
            );
        }
    }

    #[test]
    fn pseudorandom_on_step_and_counterexample() {
        let w = Graphon::step(&[0.4, 0.6], vec![vec![0.7, 0.35], vec![0.35, 0.1]]).unwrap();
        let spec = w.partition().unwrap().clone();
        for c in pseudorandom_constraints(0, 1, 0.35, &spec).unwrap() {
            let r = check_constraint(&c, &w, 1e-9, None, &quick()).unwrap();
            assert_eq!(r.verdict, Verdict::Satisfied, "{}", c.name);
        }
        let ce = half_cross_block_counterexample();
        let spec = ce.partition().unwrap().clone();
        let cs = pseudorandom_constraints(0, 1, 0.5, &spec).unwrap();
        let r = check_constraint(&cs[2], &ce, 1e-3, None, &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        // 0.8 * E[(min(u, u') - 1/4)^2] / 4 over the two-root type
        assert!(
            (r.residual.value - 0.8 * 0.0625 * 0.25).abs() < 1e-4,
            "{:?}",
            r.residual
        );
        assert!(pseudorandom_constraints(1, 1, 0.5, &spec).is_err());
    }

    #[test]
    fn gadget_targets() {
        let spec = RademacherLayout.partition_spec();
        let cs = gadget_constraints(&[(Graph::edge(), 0.5)], Part::B.index(), &spec).unwrap();
        assert_eq!(cs[0].rhs, DensityExpression::Constant(1.0 / 162.0));
        assert!(gadget_constraints(&[], 0, &spec).unwrap().is_empty());
    }

    #[test]
    fn half_graphon_gadgets_hold_in_rademacher() {
        let w = Graphon::rademacher();
        let spec = w.partition().unwrap().clone();
        let half = Graphon::half();
        let base: Vec<(Graph, f64)> = [Graph::edge(), Graph::triangle(), Graph::cherry()]
            .into_iter()
            .map(|g| {
                let d = graphon_density(&g, &half, None, &Budget::default().with_samples(2_000_000)).unwrap();
                (g, d.value)
            })
            .collect();
        for part in [Part::B, Part::BPrime, Part::CPrime] {
            for c in gadget_constraints(&base[..1], part.index(), &spec).unwrap() {
                let r = check_constraint(&c, &w, 1e-6, Some(Method::Quadrature), &quick()).unwrap();
                assert_eq!(r.verdict, Verdict::Satisfied, "{}: {:?}", c.name, r.residual);
            }
            for c in gadget_constraints(&base[1..], part.index(), &spec).unwrap() {
                let r = check_constraint(&c, &w, 0.0, None, &quick()).unwrap();
                assert_ne!(r.verdict, Verdict::Violated, "{}: {:?}", c.name, r.residual);
            }
        }
    }

    #[test]
    fn zero_constraints() {
        let w = Graphon::rademacher();
        let spec = w.partition().unwrap().clone();
        let cs = zero_constraints_wr(&spec).unwrap();
        assert_eq!(cs.len(), 16);
        for c in &cs {
            let r = check_constraint(c, &w, 1e-3, Some(Method::Quadrature), &quick()).unwrap();
            assert_eq!(r.verdict, Verdict::Satisfied, "{}", c.name);
        }
        let bad = Graphon::patched(
            &w,
            RademacherLayout.interval(Part::C),
            RademacherLayout.interval(Part::D),
            PatchEdit::Set(0.1),
        )
        .unwrap();
        let verdicts: Vec<Verdict> = cs
            .iter()
            .map(|c| {
                check_constraint(c, &bad, 1e-3, Some(Method::Quadrature), &quick())
                    .unwrap()
                    .verdict
            })
            .collect();
        assert_eq!(verdicts[15], Verdict::Violated);
        assert_eq!(verdicts.iter().filter(|v| **v == Verdict::Violated).count(), 1);
    }

    #[test]
    fn identity_examples() {
        let report = verify_wr_identities(&Graphon::rademacher(), &quick()).unwrap();
        let eq2 = report
            .checks
            .iter()
            .find(|c| c.name == "first-moment[k=2,t=0.6000]")
            .unwrap();
        assert!((eq2.target - 0.15 / 2.25).abs() < 1e-15);
        assert!((eq2.estimate.value - 0.0667).abs() < 1e-4);
        let c0 = report.checks.iter().find(|c| c.name == "A-mass[C+0.0000]").unwrap();
        assert!((c0.estimate.value - 1.0 / 9.0).abs() < 1e-4);
        for c in &report.checks {
            assert_eq!(c.verdict, Verdict::Satisfied, "{c:?}");
        }
        assert!(verify_wr_identities(&Graphon::half(), &quick()).is_err());
    }

    #[test]
    fn block_perturbations_are_detected() {
        let w = Graphon::rademacher();
        let b = quick().with_samples(20_000);
        for (i, &p) in Part::ALL.iter().enumerate() {
            for &q in &Part::ALL[i..] {
                for shift in [0.05, -0.05] {
                    let pw = perturb_block(&w, p, q, shift).unwrap();
                    let x = RademacherLayout.point(p, 0.3);
                    let changed = (pw.degree(x, &b).unwrap().value - w.degree(x, &b).unwrap().value).abs() > 1e-9;
                    if !changed {
                        continue;
                    }
                    let report = verify_wr_identities(&pw, &b).unwrap();
                    assert!(report.violated().count() > 0, "{} x {} by {shift}", p.name(), q.name());
                }
            }
        }
    }
}
