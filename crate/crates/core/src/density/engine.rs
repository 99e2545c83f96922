//! One engine for every density quantity: the integral
//! `m!/|Aut H0| ∫ c_{H0}(x) · 1[x in root parts] · D(x) dx`
//! over root tuples `x`, where `D` is a polynomial in rooted densities.
//! Plain and decorated densities are the case `D = 1` with every vertex a root.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::mc::{self, Stratum};
use super::quad::{self, Neumaier};
use super::{Budget, Estimate, Method};
use crate::error::{Error, Result};
use crate::expressions::{DensityExpression, GraphTerm};
use crate::graphon::Graphon;
use crate::graphs::{automorphism_count, rooted_automorphism_count, rooted_compatible, Graph, RootedGraph};

/// Cap on cell tuples visited by exact summation.
pub(crate) const EXACT_LIMIT: f64 = 1e7;
/// Above this many kernel evaluations the automatic choice falls back to Monte Carlo.
const QUAD_LIMIT: f64 = 4e8;
const MAX_STRATA: usize = 4096;
const MAX_REJECTION_TRIES: u32 = 1_000_000;

/// A rooted density with roots at positions `0..m` and free vertices after them.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    free: usize,
    /// Pairs with at least one free endpoint, and whether they are edges.
    pairs: Vec<(usize, usize, bool)>,
    coef: f64,
    free_ranges: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Const(f64),
    Term(usize),
    Sum(Vec<Node>),
    Product(Vec<Node>),
}

#[derive(Clone, Debug)]
pub(crate) struct Problem {
    m: usize,
    root_pairs: Vec<(usize, usize, bool)>,
    prefactor: f64,
    root_ranges: Vec<(f64, f64)>,
    roots_decorated: bool,
    plans: Vec<Plan>,
    node: Node,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn part_range(w: &Graphon, label: usize) -> Result<(f64, f64)> {
    let spec = w
        .partition()
        .ok_or_else(|| Error::PartitionMismatch("decorated term on a graphon without partition metadata".into()))?;
    if label >= spec.len() {
        return Err(Error::PartitionMismatch(format!(
            "label {label} but the partition has {} parts",
            spec.len()
        )));
    }
    Ok(spec.interval(label))
}

#[inline]
fn pair_value(w: &Graphon, x: f64, y: f64, edge: bool) -> f64 {
    let v = w.value(x, y);
    if edge {
        v
    } else {
        1.0 - v
    }
}

fn sorted_merge(mut a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    a.extend_from_slice(b);
    a.sort_by(f64::total_cmp);
    a.dedup();
    a
}

/// Visits every tuple in `∏ 0..sizes[i]`.
fn for_each_tuple(sizes: &[usize], mut visit: impl FnMut(&[usize])) {
    if sizes.contains(&0) {
        return;
    }
    let mut idx = vec![0; sizes.len()];
    loop {
        visit(&idx);
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < sizes[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

fn collect_terms<'a>(e: &'a DensityExpression, out: &mut Vec<&'a GraphTerm>) -> Result<()> {
    match e {
        DensityExpression::Constant(_) => Ok(()),
        DensityExpression::Term(t) => {
            out.push(t);
            Ok(())
        }
        DensityExpression::Sum(xs) | DensityExpression::Product(xs) => {
            xs.iter().try_for_each(|x| collect_terms(x, out))
        }
        DensityExpression::Unlabel(_) => Err(Error::Unsupported(
            "unlabeling nested inside a rooted expression".into(),
        )),
    }
}

impl Problem {
    /// `D = 1` with every vertex of `h` a root: the (decorated) density of `h`.
    pub fn plain(h: &Graph, parts: Option<&[usize]>, w: &Graphon) -> Result<Problem> {
        let n = h.order();
        let prefactor = factorial(n) / automorphism_count(h)? as f64;
        let root_ranges = match parts {
            Some(p) => p.iter().map(|&l| part_range(w, l)).collect::<Result<_>>()?,
            None => vec![(0.0, 1.0); n],
        };
        Ok(Problem {
            m: n,
            root_pairs: pairs_of(h, n),
            prefactor,
            root_ranges,
            roots_decorated: parts.is_some(),
            plans: Vec::new(),
            node: Node::Const(1.0),
        })
    }

    /// The root type and terms of a rooted expression.
    pub fn rooted(d: &DensityExpression, w: &Graphon) -> Result<Problem> {
        let mut terms = Vec::new();
        collect_terms(d, &mut terms)?;
        let first = terms.first().map(|t| t.graph().clone());
        let m = first.as_ref().map_or(0, RootedGraph::root_count);
        let mut root_parts: Option<Vec<usize>> = None;
        for t in &terms {
            let g = t.graph();
            if g.root_count() != m || !rooted_compatible(g, first.as_ref().expect("terms non-empty")) {
                return Err(Error::Incompatible(format!("{:?} does not match the root type", g)));
            }
            if let Some(rp) = t.root_parts() {
                match &root_parts {
                    Some(existing) if *existing != rp => {
                        return Err(Error::Incompatible("terms decorate the roots differently".into()))
                    }
                    _ => root_parts = Some(rp),
                }
            }
        }
        let h0 = first.map(|g| g.root_graph()).unwrap_or_else(|| Graph::empty(0));
        let root_ranges = match &root_parts {
            Some(p) => p.iter().map(|&l| part_range(w, l)).collect::<Result<_>>()?,
            None => vec![(0.0, 1.0); m],
        };
        let mut keys: Vec<&GraphTerm> = Vec::new();
        let mut plans = Vec::new();
        let node = build_node(d, w, m, &mut keys, &mut plans)?;
        Ok(Problem {
            m,
            root_pairs: pairs_of(&h0, m),
            prefactor: factorial(m) / automorphism_count(&h0)? as f64,
            root_ranges,
            roots_decorated: root_parts.is_some(),
            plans,
            node,
        })
    }

    pub fn root_count(&self) -> usize {
        self.m
    }

    /// The same root type with `D = 1`.
    pub fn root_type_only(&self) -> Problem {
        Problem {
            plans: Vec::new(),
            node: Node::Const(1.0),
            ..self.clone()
        }
    }

    pub fn c0(&self, w: &Graphon, x: &[f64]) -> f64 {
        self.root_pairs
            .iter()
            .map(|&(i, j, e)| pair_value(w, x[i], x[j], e))
            .product()
    }

    fn max_free(&self) -> usize {
        self.plans.iter().map(|p| p.free).max().unwrap_or(0)
    }

    fn exact_cost(&self, w: &Graphon) -> f64 {
        let bp = w.breakpoints();
        let count = |(lo, hi): (f64, f64)| quad::cells(lo, hi, &bp, 0).len() as f64;
        let outer: f64 = self.root_ranges.iter().map(|&r| count(r)).product();
        let inner: f64 = self
            .plans
            .iter()
            .map(|p| p.free_ranges.iter().map(|&r| count(r)).product::<f64>())
            .sum();
        outer * (1.0 + inner)
    }

    fn quad_cost(&self, w: &Graphon, budget: &Budget) -> f64 {
        let grid = w.quadrature_grid(budget.grid) as f64;
        let nbp = w.breakpoints().len() as f64;
        let count = |(lo, hi): (f64, f64)| grid * (hi - lo) + nbp + 2.0;
        let outer: f64 = self.root_ranges.iter().map(|&r| count(r)).product();
        let inner: f64 = self
            .plans
            .iter()
            .map(|p| p.free_ranges.iter().map(|&r| count(r)).product::<f64>())
            .sum();
        outer * (1.0 + inner)
    }

    /// Method used when none is requested.
    pub fn auto_method(&self, w: &Graphon, budget: &Budget) -> Method {
        if w.is_piecewise_constant() && self.exact_cost(w) <= EXACT_LIMIT {
            Method::ExactStep
        } else if self.m <= 2 && self.max_free() <= 1 && self.quad_cost(w, budget) <= QUAD_LIMIT {
            Method::Quadrature
        } else {
            Method::MonteCarlo
        }
    }

    pub fn run(&self, w: &Graphon, method: Option<Method>, budget: &Budget, stream: u64) -> Result<Estimate> {
        let method = method.unwrap_or_else(|| self.auto_method(w, budget));
        let est = match method {
            Method::ExactStep => self.run_exact(w)?,
            Method::Quadrature => self.run_quad(w, budget)?,
            Method::MonteCarlo => self.run_mc(w, budget, stream),
        };
        Ok(est.scale(self.prefactor))
    }

    fn run_exact(&self, w: &Graphon) -> Result<Estimate> {
        if !w.is_piecewise_constant() {
            return Err(Error::Unsupported(
                "exact summation needs a piecewise constant kernel".into(),
            ));
        }
        let cost = self.exact_cost(w);
        if cost > EXACT_LIMIT {
            return Err(Error::BudgetExceeded(format!(
                "exact summation would visit {cost:.3e} cell tuples"
            )));
        }
        let bp = w.breakpoints();
        let cells: Vec<Vec<(f64, f64)>> = self
            .root_ranges
            .iter()
            .map(|&(lo, hi)| quad::cells(lo, hi, &bp, 0))
            .collect();
        let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
        let mut acc = Neumaier::default();
        let mut x = vec![0.0; self.m];
        let mut vals = vec![0.0; self.plans.len()];
        for_each_tuple(&sizes, |idx| {
            let mut weight = 1.0;
            for (r, &i) in idx.iter().enumerate() {
                let (a, b) = cells[r][i];
                x[r] = 0.5 * (a + b);
                weight *= b - a;
            }
            let c = self.c0(w, &x);
            if c == 0.0 {
                return;
            }
            for (v, plan) in vals.iter_mut().zip(&self.plans) {
                *v = self.term_exact(w, plan, &x, &bp);
            }
            acc.add(weight * c * eval_det(&self.node, &vals));
        });
        Ok(Estimate::exact(acc.total(), cost as u64, Method::ExactStep))
    }

    fn run_quad(&self, w: &Graphon, budget: &Budget) -> Result<Estimate> {
        if self.m > 2 || self.max_free() > 1 {
            return Err(Error::Unsupported(format!(
                "quadrature handles at most two roots and one free vertex per term (have {} and {})",
                self.m,
                self.max_free()
            )));
        }
        let grid = w.quadrature_grid(budget.grid);
        let gbp = w.breakpoints();
        let at = |x: &[f64]| -> (f64, u64) {
            let mut evals = 0;
            let vals: Vec<f64> = self
                .plans
                .iter()
                .map(|p| {
                    let (v, n) = self.term_quad(w, p, x, &gbp, grid);
                    evals += n;
                    v
                })
                .collect();
            (eval_det(&self.node, &vals), evals + 1)
        };
        let (value, evals) = match self.m {
            0 => at(&[]),
            1 => {
                let (lo, hi) = self.root_ranges[0];
                let cells = quad::cells(lo, hi, &gbp, grid);
                let parts: Vec<(f64, u64)> = cells
                    .par_iter()
                    .map(|&(a, b)| {
                        let (v, n) = at(&[0.5 * (a + b)]);
                        ((b - a) * v, n)
                    })
                    .collect();
                sum_parts(&parts)
            }
            _ => {
                let (lo, hi) = self.root_ranges[0];
                let (lo2, hi2) = self.root_ranges[1];
                let cells = quad::cells(lo, hi, &gbp, grid);
                let parts: Vec<(f64, u64)> = cells
                    .par_iter()
                    .map(|&(a, b)| {
                        let x1 = 0.5 * (a + b);
                        let bp2 = sorted_merge(w.section_breakpoints(x1, lo2, hi2), &gbp);
                        let mut acc = Neumaier::default();
                        let mut evals = 0;
                        for (c, d) in quad::cells(lo2, hi2, &bp2, grid) {
                            let x = [x1, 0.5 * (c + d)];
                            let cv = self.c0(w, &x);
                            evals += 1;
                            if cv == 0.0 {
                                continue;
                            }
                            let (v, n) = at(&x);
                            evals += n;
                            acc.add((d - c) * cv * v);
                        }
                        ((b - a) * acc.total(), evals)
                    })
                    .collect();
                sum_parts(&parts)
            }
        };
        Ok(Estimate::exact(value, evals, Method::Quadrature))
    }

    fn run_mc(&self, w: &Graphon, budget: &Budget, stream: u64) -> Estimate {
        let strata = self.strata(w);
        let det_inner = w.is_piecewise_constant() && self.max_free() <= 2;
        let bp = w.breakpoints();
        mc::integrate(&strata, budget, stream, |x, rng| {
            let c = self.c0(w, x);
            if c == 0.0 {
                return 0.0;
            }
            let d = if det_inner {
                let vals: Vec<f64> = self.plans.iter().map(|p| self.term_exact(w, p, x, &bp)).collect();
                eval_det(&self.node, &vals)
            } else {
                self.eval_sampled(w, &self.node, x, rng)
            };
            c * d
        })
    }

    fn strata(&self, w: &Graphon) -> Vec<Stratum> {
        if self.roots_decorated {
            return vec![Stratum {
                boxes: self.root_ranges.clone(),
            }];
        }
        if let Some(spec) = w.partition() {
            let k = spec.len();
            if self.m > 0 && k > 1 && (k as f64).powi(self.m as i32) <= MAX_STRATA as f64 {
                let ivs = spec.intervals();
                let mut out = Vec::new();
                for_each_tuple(&vec![k; self.m], |idx| {
                    out.push(Stratum {
                        boxes: idx.iter().map(|&i| ivs[i]).collect(),
                    });
                });
                return out;
            }
        }
        vec![Stratum {
            boxes: self.root_ranges.clone(),
        }]
    }

    fn free_coords<'a>(&self, x: &[f64], buf: &'a mut Vec<f64>, free: usize) -> &'a mut [f64] {
        buf.clear();
        buf.extend_from_slice(x);
        buf.resize(self.m + free, 0.0);
        &mut buf[self.m..]
    }

    fn term_value_at(&self, w: &Graphon, plan: &Plan, pts: &[f64]) -> f64 {
        plan.pairs
            .iter()
            .map(|&(i, j, e)| pair_value(w, pts[i], pts[j], e))
            .product()
    }

    pub(crate) fn term_exact(&self, w: &Graphon, plan: &Plan, x: &[f64], bp: &[f64]) -> f64 {
        if plan.free == 0 {
            return plan.coef;
        }
        let cells: Vec<Vec<(f64, f64)>> = plan
            .free_ranges
            .iter()
            .map(|&(lo, hi)| quad::cells(lo, hi, bp, 0))
            .collect();
        let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
        let mut buf = Vec::new();
        let mut acc = Neumaier::default();
        self.free_coords(x, &mut buf, plan.free);
        for_each_tuple(&sizes, |idx| {
            let mut weight = 1.0;
            for (f, &i) in idx.iter().enumerate() {
                let (a, b) = cells[f][i];
                let (lo, hi) = plan.free_ranges[f];
                buf[self.m + f] = 0.5 * (a + b);
                weight *= (b - a) / (hi - lo);
            }
            acc.add(weight * self.term_value_at(w, plan, &buf));
        });
        plan.coef * acc.total()
    }

    pub(crate) fn term_quad(&self, w: &Graphon, plan: &Plan, x: &[f64], gbp: &[f64], grid: usize) -> (f64, u64) {
        match plan.free {
            0 => (plan.coef, 0),
            1 if plan.pairs.len() == 1 => {
                let (lo, hi) = plan.free_ranges[0];
                let (i, _, edge) = plan.pairs[0];
                let (r, n) = w.row_integral(x[i], lo, hi, grid);
                let v = if edge { r } else { (hi - lo) - r };
                (plan.coef * v / (hi - lo), n)
            }
            1 => {
                let (lo, hi) = plan.free_ranges[0];
                let mut bp = gbp.to_vec();
                for &xi in x {
                    bp.extend(w.section_breakpoints(xi, lo, hi));
                }
                bp.sort_by(f64::total_cmp);
                bp.dedup();
                let (v, n) = quad::integrate_1d(
                    |y| {
                        let mut p = 1.0;
                        for &(i, _, e) in &plan.pairs {
                            p *= pair_value(w, x[i], y, e);
                        }
                        p
                    },
                    lo,
                    hi,
                    &bp,
                    grid,
                );
                (plan.coef * v / (hi - lo), n)
            }
            _ => unreachable!("quadrature is limited to one free vertex"),
        }
    }

    pub(crate) fn term_sample(&self, w: &Graphon, plan: &Plan, x: &[f64], rng: &mut ChaCha8Rng) -> f64 {
        if plan.free == 0 {
            return plan.coef;
        }
        let mut buf = Vec::with_capacity(self.m + plan.free);
        let free = self.free_coords(x, &mut buf, plan.free);
        for (v, &(lo, hi)) in free.iter_mut().zip(&plan.free_ranges) {
            *v = lo + (hi - lo) * rng.random::<f64>();
        }
        plan.coef * self.term_value_at(w, plan, &buf)
    }

    fn eval_sampled(&self, w: &Graphon, node: &Node, x: &[f64], rng: &mut ChaCha8Rng) -> f64 {
        match node {
            Node::Const(c) => *c,
            Node::Term(i) => self.term_sample(w, &self.plans[*i], x, rng),
            Node::Sum(xs) => xs.iter().map(|n| self.eval_sampled(w, n, x, rng)).sum(),
            Node::Product(xs) => {
                let mut p = 1.0;
                for n in xs {
                    p *= self.eval_sampled(w, n, x, rng);
                }
                p
            }
        }
    }

    /// `D` at fixed roots: deterministic where cheap, sampled otherwise.
    pub(crate) fn value_at(&self, w: &Graphon, x: &[f64], budget: &Budget, rng: &mut ChaCha8Rng) -> f64 {
        if w.is_piecewise_constant() && self.max_free() <= 2 {
            let bp = w.breakpoints();
            let vals: Vec<f64> = self.plans.iter().map(|p| self.term_exact(w, p, x, &bp)).collect();
            eval_det(&self.node, &vals)
        } else if self.max_free() <= 1 {
            let gbp = w.breakpoints();
            let grid = w.quadrature_grid(budget.grid);
            let vals: Vec<f64> = self
                .plans
                .iter()
                .map(|p| self.term_quad(w, p, x, &gbp, grid).0)
                .collect();
            eval_det(&self.node, &vals)
        } else {
            self.eval_sampled(w, &self.node, x, rng)
        }
    }

    /// A draw from `μ`: roots proposed uniformly in their ranges and
    /// accepted with probability `c_{H0}`.
    pub(crate) fn sample_roots(&self, w: &Graphon, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.m];
        for _ in 0..MAX_REJECTION_TRIES {
            for (v, &(lo, hi)) in x.iter_mut().zip(&self.root_ranges) {
                *v = lo + (hi - lo) * rng.random::<f64>();
            }
            if rng.random::<f64>() < self.c0(w, &x) {
                return Ok(x);
            }
        }
        Err(Error::ZeroMass(format!(
            "no root tuple accepted in {MAX_REJECTION_TRIES} proposals"
        )))
    }

    /// The single term of a one-term problem.
    pub(crate) fn only_plan(&self) -> &Plan {
        &self.plans[0]
    }

    pub(crate) fn plan_free(plan: &Plan) -> usize {
        plan.free
    }
}

fn sum_parts(parts: &[(f64, u64)]) -> (f64, u64) {
    let mut acc = Neumaier::default();
    let mut n = 0;
    for &(v, e) in parts {
        acc.add(v);
        n += e;
    }
    (acc.total(), n)
}

fn pairs_of(h: &Graph, m: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            out.push((i, j, h.has_edge(i, j)));
        }
    }
    out
}

fn eval_det(node: &Node, vals: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Term(i) => vals[*i],
        Node::Sum(xs) => xs.iter().map(|n| eval_det(n, vals)).sum(),
        Node::Product(xs) => xs.iter().map(|n| eval_det(n, vals)).product(),
    }
}

fn build_node<'a>(
    e: &'a DensityExpression,
    w: &Graphon,
    m: usize,
    keys: &mut Vec<&'a GraphTerm>,
    plans: &mut Vec<Plan>,
) -> Result<Node> {
    Ok(match e {
        DensityExpression::Constant(c) => Node::Const(*c),
        DensityExpression::Term(t) => {
            let i = match keys.iter().position(|k| *k == t) {
                Some(i) => i,
                None => {
                    keys.push(t);
                    plans.push(make_plan(t, w, m)?);
                    plans.len() - 1
                }
            };
            Node::Term(i)
        }
        DensityExpression::Sum(xs) => Node::Sum(
            xs.iter()
                .map(|x| build_node(x, w, m, keys, plans))
                .collect::<Result<_>>()?,
        ),
        DensityExpression::Product(xs) => Node::Product(
            xs.iter()
                .map(|x| build_node(x, w, m, keys, plans))
                .collect::<Result<_>>()?,
        ),
        DensityExpression::Unlabel(_) => {
            return Err(Error::Unsupported(
                "unlabeling nested inside a rooted expression".into(),
            ))
        }
    })
}

fn make_plan(t: &GraphTerm, w: &Graphon, m: usize) -> Result<Plan> {
    let (norm, perm) = t.graph().normalized();
    let n = norm.order();
    let free = n - m;
    let coef = factorial(free) / rooted_automorphism_count(&norm)? as f64;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1).max(m)..n {
            pairs.push((i, j, norm.graph().has_edge(i, j)));
        }
    }
    let free_ranges = match t.parts() {
        Some(parts) => {
            let mut relabeled = vec![0; n];
            for (old, &p) in parts.iter().enumerate() {
                relabeled[perm[old]] = p;
            }
            relabeled[m..]
                .iter()
                .map(|&l| part_range(w, l))
                .collect::<Result<_>>()?
        }
        None => vec![(0.0, 1.0); free],
    };
    Ok(Plan {
        free,
        pairs,
        coef,
        free_ranges,
    })
}
