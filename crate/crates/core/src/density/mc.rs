//! Stratified Monte Carlo with deterministic chunked parallelism.
//!
//! The budget of every stratum is cut into fixed-size chunks. Chunk `c` of
//! stratum `s` draws from its own ChaCha stream, so the result depends on the
//! seed and the budget but not on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Budget, Estimate, Method};

const CHUNK: u64 = 4096;

/// A box `∏ [lo_i, hi_i)` sampled uniformly; its contribution is weighted by its volume.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub boxes: Vec<(f64, f64)>,
}

impl Stratum {
    pub fn unit(dims: usize) -> Self {
        Stratum {
            boxes: vec![(0.0, 1.0); dims],
        }
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(|(lo, hi)| hi - lo).product()
    }
}

/// Generator for chunk `chunk` of stratum `stratum` of the estimate tagged `stream`.
pub(crate) fn chunk_rng(seed: u64, stream: u64, stratum: usize, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(((stratum as u64) << 40) | chunk);
    rng
}

/// `Σ_s vol(s) · E[f(U_s)]` with `U_s` uniform in stratum `s`. The sample
/// budget is allocated proportionally to volume, at least two per stratum.
/// `f` also receives the chunk generator for any inner sampling it needs.
pub fn integrate<F>(strata: &[Stratum], budget: &Budget, stream: u64, f: F) -> Estimate
where
    F: Fn(&[f64], &mut ChaCha8Rng) -> f64 + Sync,
{
    let total_volume: f64 = strata.iter().map(Stratum::volume).sum();
    let alloc: Vec<u64> = strata
        .iter()
        .map(|s| {
            let share = if total_volume > 0.0 {
                s.volume() / total_volume
            } else {
                0.0
            };
            ((budget.samples as f64 * share).round() as u64).max(2)
        })
        .collect();
    let jobs: Vec<(usize, u64, u64)> = alloc
        .iter()
        .enumerate()
        .flat_map(|(s, &n)| (0..n.div_ceil(CHUNK)).map(move |c| (s, c, CHUNK.min(n - c * CHUNK))))
        .collect();
    // per chunk: count, mean and sum of squared deviations, merged pairwise in job order
    let partials: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(s, c, count)| {
            let mut rng = chunk_rng(budget.seed, stream, s, c);
            let stratum = &strata[s];
            let mut point = vec![0.0; stratum.boxes.len()];
            let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
            for _ in 0..count {
                for (p, &(lo, hi)) in point.iter_mut().zip(&stratum.boxes) {
                    *p = lo + (hi - lo) * rng.random::<f64>();
                }
                let v = f(&point, &mut rng);
                n += 1.0;
                let delta = v - mean;
                mean += delta / n;
                m2 += delta * (v - mean);
            }
            (n, mean, m2)
        })
        .collect();
    let mut per_stratum = vec![(0.0, 0.0, 0.0); strata.len()];
    for (&(s, _, _), &(nb, mb, m2b)) in jobs.iter().zip(&partials) {
        let (na, ma, m2a) = per_stratum[s];
        let n = na + nb;
        let delta = mb - ma;
        per_stratum[s] = (n, ma + delta * nb / n, m2a + m2b + delta * delta * na * nb / n);
    }
    let (mut value, mut variance) = (0.0, 0.0);
    for (stratum, &(n, mean, m2)) in strata.iter().zip(&per_stratum) {
        let var = m2 / (n - 1.0);
        let vol = stratum.volume();
        value += vol * mean;
        variance += vol * vol * var / n;
    }
    Estimate {
        value,
        stderr: variance.sqrt(),
        budget: alloc.iter().sum(),
        method: Method::MonteCarlo,
    }
}

/// Plain Monte Carlo over the unit cube of dimension `dims`.
pub fn integrate_unit<F>(dims: usize, budget: &Budget, stream: u64, f: F) -> Estimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    integrate(&[Stratum::unit(dims)], budget, stream, |p, _| f(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_integrals() {
        let b = Budget {
            samples: 200_000,
            ..Budget::default()
        };
        let e = integrate_unit(2, &b, 0, |p| p[0] * p[1]);
        assert!((e.value - 0.25).abs() < 4.0 * e.stderr + 1e-12);
        assert!(e.stderr > 0.0);
        let c = integrate_unit(3, &b, 0, |_| 0.7);
        assert!((c.value - 0.7).abs() < 1e-12);
        assert!(c.stderr < 1e-12);
    }

    #[test]
    fn stratification_weights_by_volume() {
        let strata = vec![
            Stratum {
                boxes: vec![(0.0, 0.25)],
            },
            Stratum {
                boxes: vec![(0.25, 1.0)],
            },
        ];
        let e = integrate(
            &strata,
            &Budget::default(),
            3,
            |p, _| if p[0] < 0.25 { 1.0 } else { 0.0 },
        );
        assert!((e.value - 0.25).abs() < 1e-12);
        assert!(e.stderr < 1e-12);
    }

    #[test]
    fn independent_of_thread_count() {
        let b = Budget {
            samples: 100_000,
            seed: 42,
            ..Budget::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| integrate_unit(3, &b, 1, |p| (p[0] + p[1] * p[2]).sin()))
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(7));
    }
}
