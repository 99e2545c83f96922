//! `W`-random graphs and empirical subgraph densities.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{graphon_density, mc, Budget, Estimate, Method};
use crate::error::{invalid, Error, Result};
use crate::graphon::Graphon;
use crate::graphs::{binomial, count_induced_copies, for_each_subset, labeled_copies, Graph};

/// Largest order accepted by [`sample_w_random_graph`].
pub const MAX_SAMPLE_ORDER: usize = 1 << 14;
/// Largest number of vertex subsets enumerated by exact empirical densities.
pub const EXACT_SUBSET_LIMIT: u128 = 10_000_000;

const ROW_BLOCK: usize = 64;

/// Pick `k` uniform points and join each pair `{i, j}` with probability
/// `W(x_i, x_j)`. Rows are sampled in blocks of 64, each from its own stream,
/// so the graph depends only on `seed`.
pub fn sample_w_random_graph(w: &Graphon, k: usize, seed: u64) -> Result<Graph> {
    sample_with_points(w, k, seed).map(|(g, _)| g)
}

/// As [`sample_w_random_graph`], also returning the sampled points.
pub fn sample_with_points(w: &Graphon, k: usize, seed: u64) -> Result<(Graph, Vec<f64>)> {
    if k == 0 {
        return Err(invalid("a W-random graph needs at least one vertex"));
    }
    if k > MAX_SAMPLE_ORDER {
        return Err(invalid(format!(
            "order {k} exceeds the sampling cap {MAX_SAMPLE_ORDER}"
        )));
    }
    let mut rng = mc::chunk_rng(seed, 0, 0, 0);
    let xs: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let mut g = Graph::empty(k);
    let stride = g.stride();
    let blocks: Vec<Vec<u64>> = (0..k.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = mc::chunk_rng(seed, 1, 0, b as u64);
            let rows = (b * ROW_BLOCK)..((b + 1) * ROW_BLOCK).min(k);
            let mut words = vec![0u64; rows.len() * stride];
            for (r, i) in rows.enumerate() {
                let row = &mut words[r * stride..(r + 1) * stride];
                for j in i + 1..k {
                    if rng.random::<f64>() < w.value(xs[i], xs[j]) {
                        row[j / 64] |= 1 << (j % 64);
                    }
                }
            }
            words
        })
        .collect();
    for (b, words) in blocks.iter().enumerate() {
        for (r, chunk) in words.chunks(stride).enumerate() {
            g.row_words_mut(b * ROW_BLOCK + r).copy_from_slice(chunk);
        }
    }
    g.symmetrize_from_upper();
    Ok((g, xs))
}

/// How [`empirical_density`] counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmpiricalMode {
    /// Enumerate every `|H|`-subset; at most [`EXACT_SUBSET_LIMIT`] of them.
    Exact,
    /// Uniform random subsets.
    Sampled { samples: u64, seed: u64 },
}

/// `d(H, G)`: the probability that `|H|` distinct uniform vertices of `G`
/// induce a copy of `H`.
pub fn empirical_density(h: &Graph, g: &Graph, mode: EmpiricalMode) -> Result<Estimate> {
    let (k, n) = (h.order(), g.order());
    if k > n {
        return Ok(Estimate::exact(0.0, 0, Method::ExactStep));
    }
    match mode {
        EmpiricalMode::Exact => {
            let subsets = binomial(n, k);
            if subsets > EXACT_SUBSET_LIMIT {
                return Err(Error::BudgetExceeded(format!(
                    "{subsets} vertex subsets exceed the exact limit {EXACT_SUBSET_LIMIT}"
                )));
            }
            let count = count_induced_copies(h, g)?;
            Ok(Estimate::exact(
                count as f64 / subsets as f64,
                subsets as u64,
                Method::ExactStep,
            ))
        }
        EmpiricalMode::Sampled { samples, seed } => {
            let targets = labeled_copies(h);
            let budget = Budget::default().with_samples(samples).with_seed(seed);
            Ok(mc::integrate(&[mc::Stratum::unit(0)], &budget, 3, |_, rng| {
                let picks = rand::seq::index::sample(rng, n, k);
                let mut mask = 0u64;
                let mut bit = 0;
                let picks: Vec<usize> = picks.into_iter().collect();
                for j in 1..k {
                    for i in 0..j {
                        if g.has_edge(picks[i], picks[j]) {
                            mask |= 1 << bit;
                        }
                        bit += 1;
                    }
                }
                if targets.contains(&mask) {
                    1.0
                } else {
                    0.0
                }
            }))
        }
    }
}

/// Empirical densities of every listed graph, sharing one subset enumeration.
pub fn empirical_densities_exact(hs: &[Graph], g: &Graph) -> Result<Vec<f64>> {
    let k = match hs.first() {
        Some(h) => h.order(),
        None => return Ok(Vec::new()),
    };
    if hs.iter().any(|h| h.order() != k) {
        return Err(invalid("graphs must share one order"));
    }
    let subsets = binomial(g.order(), k);
    if subsets > EXACT_SUBSET_LIMIT {
        return Err(Error::BudgetExceeded(format!("{subsets} vertex subsets")));
    }
    let targets: Vec<_> = hs.iter().map(labeled_copies).collect();
    let mut counts = vec![0u64; hs.len()];
    for_each_subset(g.order(), k, |s| {
        let mut mask = 0u64;
        let mut bit = 0;
        for j in 1..k {
            for i in 0..j {
                if g.has_edge(s[i], s[j]) {
                    mask |= 1 << bit;
                }
                bit += 1;
            }
        }
        if let Some(t) = targets.iter().position(|t| t.contains(&mask)) {
            counts[t] += 1;
        }
    });
    Ok(counts.into_iter().map(|c| c as f64 / subsets as f64).collect())
}

/// Standard deviation of the edge density of a `W`-random graph of order `n`:
/// `sqrt(C(n,2) p(1-p) + n(n-1)(n-2) (∫deg^2 - p^2)) / C(n,2)`, where `p` is
/// the edge density of `W` and `∫deg^2` its mean squared degree.
pub fn edge_density_sd(n: usize, p: f64, mean_sq_degree: f64) -> f64 {
    let nf = n as f64;
    let pairs = nf * (nf - 1.0) / 2.0;
    let var = pairs * p * (1.0 - p) + nf * (nf - 1.0) * (nf - 2.0) * (mean_sq_degree - p * p).max(0.0);
    var.sqrt() / pairs
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub deviation: f64,
}

/// One sampled graph per order (seeded by `seed` and the position in
/// `orders`); `stderr` is the subset-sampling error of the empirical density
/// and `deviation` is measured against `d(H, W)`.
pub fn convergence_experiment(
    w: &Graphon,
    h: &Graph,
    orders: &[usize],
    seed: u64,
    budget: &Budget,
) -> Result<(Estimate, Vec<ConvergenceRow>)> {
    if orders.windows(2).any(|o| o[0] >= o[1]) {
        return Err(invalid("orders must increase"));
    }
    let target = graphon_density(h, w, None, budget)?;
    let rows = orders
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let g = sample_w_random_graph(w, n, seed.wrapping_add(i as u64))?;
            let est = if binomial(n, h.order()) <= EXACT_SUBSET_LIMIT {
                empirical_density(h, &g, EmpiricalMode::Exact)?
            } else {
                empirical_density(
                    h,
                    &g,
                    EmpiricalMode::Sampled {
                        samples: budget.samples,
                        seed: seed ^ n as u64,
                    },
                )?
            };
            Ok(ConvergenceRow {
                n,
                estimate: est.value,
                stderr: est.stderr,
                deviation: (est.value - target.value).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((target, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_constants() {
        let one = Graphon::constant(1.0).unwrap();
        assert_eq!(sample_w_random_graph(&one, 5, 1).unwrap(), Graph::complete(5));
        let zero = Graphon::constant(0.0).unwrap();
        assert_eq!(sample_w_random_graph(&zero, 5, 1).unwrap(), Graph::empty(5));
        assert!(sample_w_random_graph(&one, 0, 1).is_err());
        assert!(sample_w_random_graph(&one, MAX_SAMPLE_ORDER + 1, 1).is_err());
    }

    #[test]
    fn edge_count_concentrates() {
        let k = 1000;
        let g = sample_w_random_graph(&Graphon::constant(0.5).unwrap(), k, 17).unwrap();
        let pairs = (k * (k - 1) / 2) as f64;
        let sd = (pairs * 0.25).sqrt();
        assert!((g.edge_count() as f64 - pairs / 2.0).abs() <= 3.0 * sd);
    }

    #[test]
    fn reproducible_across_threads() {
        let w = Graphon::rademacher();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_w_random_graph(&w, 300, 5).unwrap())
        };
        let g = run(1);
        assert_eq!(g, run(4));
        assert_eq!(g, run(8));
        assert_ne!(g, sample_w_random_graph(&w, 300, 6).unwrap());
    }

    #[test]
    fn symmetric_output() {
        let g = sample_w_random_graph(&Graphon::half(), 130, 2).unwrap();
        for u in 0..130 {
            for v in 0..130 {
                assert_eq!(g.has_edge(u, v), g.has_edge(v, u));
            }
            assert!(!g.has_edge(u, u));
        }
    }

    #[test]
    fn empirical_examples() {
        let k4 = Graph::complete(4);
        let e = empirical_density(&Graph::edge(), &k4, EmpiricalMode::Exact).unwrap();
        assert_eq!(e.value, 1.0);
        let s = empirical_density(&Graph::edge(), &k4, EmpiricalMode::Sampled { samples: 5000, seed: 9 }).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.stderr, 0.0);
        let big = Graph::empty(2000);
        assert!(matches!(
            empirical_density(&Graph::triangle(), &big, EmpiricalMode::Exact),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn three_vertex_classes_sum_to_one_exactly() {
        let g = sample_w_random_graph(&Graphon::half(), 60, 4).unwrap();
        let classes = Graph::isomorphism_classes(3).unwrap();
        let ds = empirical_densities_exact(&classes, &g).unwrap();
        let exact_total: u128 = classes.iter().map(|h| count_induced_copies(h, &g).unwrap()).sum();
        assert_eq!(exact_total, binomial(60, 3));
        assert!((ds.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_density_of_sampled_graph() {
        let w = Graphon::constant(0.5).unwrap();
        let g = sample_w_random_graph(&w, 200, 8).unwrap();
        let emp = empirical_density(&Graph::triangle(), &g, EmpiricalMode::Exact).unwrap();
        let target = graphon_density(&Graph::triangle(), &w, None, &Budget::default()).unwrap();
        // sd of the triangle density of G(200, 1/2): dominated by the edge-count
        // fluctuation, 3 p^2 * sd(edge density)
        let sd = 3.0 * 0.25 * edge_density_sd(200, 0.5, 0.25);
        let pure = (target.value * (1.0 - target.value) / binomial(200, 3) as f64).sqrt();
        assert!(
            (emp.value - target.value).abs() <= 3.0 * sd.hypot(pure),
            "{emp:?} vs {target:?}"
        );
    }

    #[test]
    fn convergence_rows() {
        let (target, rows) = convergence_experiment(
            &Graphon::half(),
            &Graph::edge(),
            &[50, 100, 200, 400],
            1,
            &Budget::default(),
        )
        .unwrap();
        assert!((target.value - 0.5).abs() < 1e-9);
        assert_eq!(rows.len(), 4);
        let sd = edge_density_sd(400, 0.5, 1.0 / 3.0);
        assert!(rows[3].deviation <= 3.0 * sd, "{rows:?}");
        assert!(convergence_experiment(&Graphon::half(), &Graph::edge(), &[10, 5], 1, &Budget::default()).is_err());
        let (t, _) =
            convergence_experiment(&Graphon::rademacher(), &Graph::edge(), &[20], 1, &Budget::default()).unwrap();
        let l = crate::graphon::RademacherLayout;
        let table: f64 = crate::graphon::Part::ALL
            .iter()
            .map(|&p| l.width(p) * l.degree(p))
            .sum();
        assert!((t.value - table).abs() < 1e-4, "{t:?} vs {table}");
    }
}
