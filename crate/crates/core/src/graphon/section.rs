use std::fmt;
use std::sync::Arc;

use super::Graphon;
use crate::error::{invalid, Result};

/// Where a section came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    /// `y -> W(x, y)` for the stored `x`.
    Slice { x: f64 },
    /// An explicitly defined function with a label.
    Witness(String),
}

#[derive(Clone)]
enum Source {
    Slice(Graphon, f64),
    Explicit {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        breakpoints: Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>,
    },
}

/// A function `[0,1] -> [0,1]`, either a graphon slice or an explicit witness,
/// together with the points where it may be discontinuous.
#[derive(Clone)]
pub struct SectionFunction {
    source: Source,
    provenance: Provenance,
}

impl SectionFunction {
    pub(crate) fn slice(graphon: Graphon, x: f64) -> Self {
        SectionFunction {
            source: Source::Slice(graphon, x),
            provenance: Provenance::Slice { x },
        }
    }

    /// Explicit witness; `breakpoints` lists the discontinuities of `f`.
    pub fn explicit(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mut breakpoints: Vec<f64>,
    ) -> Self {
        breakpoints.retain(|b| (0.0..=1.0).contains(b));
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        SectionFunction::explicit_lazy(label, f, move |lo, hi| {
            breakpoints.iter().copied().filter(|&b| b > lo && b < hi).collect()
        })
    }

    /// Explicit witness whose discontinuities inside `(lo, hi)` are produced on
    /// demand, sorted, by `breakpoints(lo, hi)`.
    pub fn explicit_lazy(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        breakpoints: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SectionFunction {
            source: Source::Explicit {
                f: Arc::new(f),
                breakpoints: Arc::new(breakpoints),
            },
            provenance: Provenance::Witness(label.into()),
        }
    }

    pub fn constant(label: impl Into<String>, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(invalid(format!("section value {c} outside [0,1]")));
        }
        Ok(SectionFunction::explicit(label, move |_| c, Vec::new()))
    }

    /// Piecewise constant: `values[i]` on `[bounds[i], bounds[i+1])`.
    pub fn step(label: impl Into<String>, bounds: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if bounds.len() != values.len() + 1 || values.is_empty() {
            return Err(invalid("step section needs one more bound than values"));
        }
        if bounds[0] != 0.0 || *bounds.last().unwrap() != 1.0 || bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("step section bounds must increase from 0 to 1"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("step section values must lie in [0,1]"));
        }
        let inner = bounds.clone();
        Ok(SectionFunction::explicit(
            label,
            move |y| {
                let i = inner[1..].partition_point(|&b| b <= y).min(values.len() - 1);
                values[i]
            },
            bounds,
        ))
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.source {
            Source::Slice(w, x) => w.value(*x, y),
            Source::Explicit { f, .. } => f(y),
        }
    }

    /// Sorted points inside `(lo, hi)` where the function may jump.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        match &self.source {
            Source::Slice(w, x) => w.section_breakpoints(*x, lo, hi),
            Source::Explicit { breakpoints, .. } => breakpoints(lo, hi),
        }
    }

    /// Values at the midpoints of `n` equal cells.
    pub fn sample_grid(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.eval((j as f64 + 0.5) / n as f64)).collect()
    }
}

impl fmt::Debug for SectionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectionFunction")
            .field("provenance", &self.provenance)
            .finish()
    }
}
