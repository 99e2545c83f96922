//! Evaluable graphon kernels.

mod file;
pub mod maps;
mod norine;
pub mod rademacher;
mod section;

use std::sync::Arc;

pub use file::{graphon_from_json, load_graphon, parse_builtin, GraphonSpec, MapSpec};
pub use maps::{AffinePiece, DigitInterleave, MeasurePreservingMap};
pub use rademacher::{dyadic_index, Part, RademacherLayout};
pub use section::{Provenance, SectionFunction};

use crate::density::{quad, Budget, Estimate, Method};
use crate::error::{invalid, Error, Result};
use crate::graphs::PartitionSpec;
use norine::Norine;

/// How a rectangle of a patched graphon is rewritten.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PatchEdit {
    Set(f64),
    /// Added to the inner value, clamped to `[0,1]`.
    Shift(f64),
}

/// The rectangle `rows x cols` together with its mirror image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Patch {
    pub rows: (f64, f64),
    pub cols: (f64, f64),
    pub edit: PatchEdit,
}

/// Structured description of a graphon.
#[derive(Clone, Debug)]
pub enum GraphonKind {
    Constant(f64),
    /// `values[i][j]` on the product of cells `i` and `j`; `bounds` runs from 0 to 1.
    Step {
        bounds: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    Half,
    Rademacher,
    Norine {
        d: usize,
    },
    Transformed {
        inner: Graphon,
        map: MeasurePreservingMap,
    },
    /// An `n x n` matrix of values on the uniform grid.
    Grid {
        values: Vec<Vec<f64>>,
    },
    /// Block `(i, j)` holds a graphon evaluated at the local fractions of the
    /// two points within their cells.
    Blockwise {
        bounds: Vec<f64>,
        blocks: Vec<Vec<Graphon>>,
    },
    Patched {
        inner: Graphon,
        patch: Patch,
    },
}

/// A symmetric measurable kernel `[0,1]^2 -> [0,1]` with optional partition metadata.
#[derive(Clone, Debug)]
pub struct Graphon {
    kind: Arc<GraphonKind>,
    partition: Option<PartitionSpec>,
}

fn check_unit(what: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { what, value: v })
    }
}

fn bounds_from_sizes(sizes: &[f64]) -> Result<Vec<f64>> {
    if sizes.is_empty() || sizes.iter().any(|&a| !(a > 0.0)) {
        return Err(invalid("cell sizes must be positive"));
    }
    let total: f64 = sizes.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("cell sizes sum to {total}, not 1")));
    }
    let mut bounds = vec![0.0];
    let mut acc = 0.0;
    for &a in &sizes[..sizes.len() - 1] {
        acc += a;
        bounds.push(acc);
    }
    bounds.push(1.0);
    Ok(bounds)
}

fn check_symmetric_matrix(values: &[Vec<f64>], k: usize) -> Result<()> {
    if values.len() != k || values.iter().any(|r| r.len() != k) {
        return Err(invalid(format!("value matrix must be {k} x {k}")));
    }
    for i in 0..k {
        for j in 0..k {
            check_unit("graphon value", values[i][j])?;
            if values[i][j] != values[j][i] {
                return Err(invalid(format!("value matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Index of the cell `[bounds[i], bounds[i+1])` holding `x`; `x = 1` lands in the last cell.
fn cell_of(bounds: &[f64], x: f64) -> usize {
    let k = bounds.len() - 1;
    bounds[1..k].partition_point(|&b| b <= x)
}

fn in_range(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && (x < hi || (hi >= 1.0 && x <= 1.0))
}

fn row_degrees(sizes: &[f64], values: &[Vec<f64>]) -> Vec<f64> {
    values
        .iter()
        .map(|row| row.iter().zip(sizes).map(|(w, a)| w * a).sum())
        .collect()
}

impl Graphon {
    fn new(kind: GraphonKind, partition: Option<PartitionSpec>) -> Self {
        Graphon {
            kind: Arc::new(kind),
            partition,
        }
    }

    pub fn constant(p: f64) -> Result<Self> {
        check_unit("constant graphon value", p)?;
        Ok(Graphon::new(GraphonKind::Constant(p), None))
    }

    /// Step graphon over consecutive cells of the given sizes. Carries
    /// partition metadata when the row degrees are distinct.
    pub fn step(sizes: &[f64], values: Vec<Vec<f64>>) -> Result<Self> {
        let bounds = bounds_from_sizes(sizes)?;
        check_symmetric_matrix(&values, sizes.len())?;
        let partition = PartitionSpec::new(sizes.to_vec(), row_degrees(sizes, &values)).ok();
        Ok(Graphon::new(GraphonKind::Step { bounds, values }, partition))
    }

    pub fn half() -> Self {
        Graphon::new(GraphonKind::Half, None)
    }

    pub fn rademacher() -> Self {
        Graphon::new(GraphonKind::Rademacher, Some(RademacherLayout.partition_spec()))
    }

    /// `W_d`; partition metadata is attached only when the `2d+2` part degrees are distinct.
    pub fn norine(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("W_d needs d >= 1"));
        }
        let n = Norine { d };
        Ok(Graphon::new(GraphonKind::Norine { d }, n.partition()))
    }

    pub fn grid(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(invalid("grid graphon needs at least one cell"));
        }
        check_symmetric_matrix(&values, n)?;
        Ok(Graphon::new(GraphonKind::Grid { values }, None))
    }

    /// Block composition: cell `i` of the given sizes against cell `j` runs
    /// `blocks[i][j]` on local fractions. `blocks[j][i]` must be the same kernel
    /// as `blocks[i][j]` (checked by identity of the underlying description).
    pub fn blockwise(sizes: &[f64], blocks: Vec<Vec<Graphon>>) -> Result<Self> {
        let bounds = bounds_from_sizes(sizes)?;
        let k = sizes.len();
        if blocks.len() != k || blocks.iter().any(|r| r.len() != k) {
            return Err(invalid(format!("block matrix must be {k} x {k}")));
        }
        for i in 0..k {
            for j in 0..i {
                if !Arc::ptr_eq(&blocks[i][j].kind, &blocks[j][i].kind) {
                    return Err(invalid(format!("blocks ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(Graphon::new(GraphonKind::Blockwise { bounds, blocks }, None))
    }

    /// Rewrites the rectangle `rows x cols` and its mirror image.
    pub fn patched(inner: &Graphon, rows: (f64, f64), cols: (f64, f64), edit: PatchEdit) -> Result<Self> {
        for (lo, hi) in [rows, cols] {
            check_unit("patch bound", lo)?;
            check_unit("patch bound", hi)?;
            if lo >= hi {
                return Err(invalid("patch intervals must be non-empty"));
            }
        }
        match edit {
            PatchEdit::Set(v) => check_unit("patch value", v)?,
            PatchEdit::Shift(s) if !s.is_finite() => return Err(invalid("patch shift must be finite")),
            PatchEdit::Shift(_) => {}
        }
        let patch = Patch { rows, cols, edit };
        Ok(Graphon::new(
            GraphonKind::Patched {
                inner: inner.clone(),
                patch,
            },
            inner.partition.clone(),
        ))
    }

    /// `W^phi(x, y) = W(phi(x), phi(y))`.
    pub fn apply_measure_preserving(&self, map: &MeasurePreservingMap) -> Graphon {
        if matches!(map, MeasurePreservingMap::Identity) {
            return self.clone();
        }
        if let GraphonKind::Constant(p) = *self.kind {
            return Graphon::new(GraphonKind::Constant(p), None);
        }
        Graphon::new(
            GraphonKind::Transformed {
                inner: self.clone(),
                map: map.clone(),
            },
            None,
        )
    }

    /// Replaces the partition metadata.
    pub fn with_partition(mut self, spec: Option<PartitionSpec>) -> Self {
        self.partition = spec;
        self
    }

    pub fn kind(&self) -> &GraphonKind {
        &self.kind
    }

    pub fn partition(&self) -> Option<&PartitionSpec> {
        self.partition.as_ref()
    }

    /// Checked evaluation.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit("x", x)?;
        check_unit("y", y)?;
        Ok(self.value(x, y))
    }

    /// Evaluation without the domain check; `x` and `y` must lie in `[0,1]`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &*self.kind {
            GraphonKind::Constant(p) => *p,
            GraphonKind::Step { bounds, values } => values[cell_of(bounds, x)][cell_of(bounds, y)],
            GraphonKind::Half => {
                if x + y >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            GraphonKind::Rademacher => rademacher::eval(x, y),
            GraphonKind::Norine { d } => Norine { d: *d }.eval(x, y),
            GraphonKind::Transformed { inner, map } => inner.value(map.apply(x), map.apply(y)),
            GraphonKind::Grid { values } => {
                let n = values.len();
                let i = ((x * n as f64) as usize).min(n - 1);
                let j = ((y * n as f64) as usize).min(n - 1);
                values[i][j]
            }
            GraphonKind::Blockwise { bounds, blocks } => {
                let (i, j) = (cell_of(bounds, x), cell_of(bounds, y));
                let u = ((x - bounds[i]) / (bounds[i + 1] - bounds[i])).clamp(0.0, 1.0);
                let v = ((y - bounds[j]) / (bounds[j + 1] - bounds[j])).clamp(0.0, 1.0);
                blocks[i][j].value(u, v)
            }
            GraphonKind::Patched { inner, patch } => {
                let hit = (in_range(x, patch.rows) && in_range(y, patch.cols))
                    || (in_range(y, patch.rows) && in_range(x, patch.cols));
                let w = inner.value(x, y);
                match (hit, patch.edit) {
                    (false, _) => w,
                    (true, PatchEdit::Set(v)) => v,
                    (true, PatchEdit::Shift(s)) => (w + s).clamp(0.0, 1.0),
                }
            }
        }
    }

    /// True when the kernel is constant on every product of consecutive
    /// [`breakpoints`](Self::breakpoints) cells.
    pub fn is_piecewise_constant(&self) -> bool {
        match &*self.kind {
            GraphonKind::Constant(_) | GraphonKind::Step { .. } | GraphonKind::Grid { .. } => true,
            GraphonKind::Half | GraphonKind::Rademacher | GraphonKind::Norine { .. } => false,
            GraphonKind::Transformed { inner, map } => map.preserves_steps() && inner.is_piecewise_constant(),
            GraphonKind::Blockwise { blocks, .. } => blocks.iter().flatten().all(Graphon::is_piecewise_constant),
            GraphonKind::Patched { inner, .. } => inner.is_piecewise_constant(),
        }
    }

    /// Sorted global breakpoints, always including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &*self.kind {
            GraphonKind::Constant(_) | GraphonKind::Half => vec![],
            GraphonKind::Step { bounds, .. } => bounds.clone(),
            GraphonKind::Grid { values } => {
                let n = values.len();
                (0..=n).map(|j| j as f64 / n as f64).collect()
            }
            GraphonKind::Rademacher => rademacher::breakpoints(),
            GraphonKind::Norine { d } => Norine { d: *d }.breakpoints(),
            GraphonKind::Transformed { inner, map } => {
                let mut out = map.kinks();
                for b in inner.breakpoints() {
                    out.extend(map.preimages(b));
                }
                out
            }
            GraphonKind::Blockwise { bounds, blocks } => {
                let mut out = bounds.clone();
                for (i, row) in blocks.iter().enumerate() {
                    let (lo, hi) = (bounds[i], bounds[i + 1]);
                    let mut local: Vec<f64> = row.iter().flat_map(|g| g.breakpoints()).collect();
                    local.sort_by(f64::total_cmp);
                    local.dedup();
                    out.extend(local.into_iter().map(|u| lo + u * (hi - lo)));
                }
                out
            }
            GraphonKind::Patched { inner, patch } => {
                let mut out = inner.breakpoints();
                out.extend([patch.rows.0, patch.rows.1, patch.cols.0, patch.cols.1]);
                out
            }
        };
        out.extend([0.0, 1.0]);
        out.retain(|b| (0.0..=1.0).contains(b));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Sorted points in `(lo, hi)` where `y -> W(x, y)` may be discontinuous.
    pub fn section_breakpoints(&self, x: f64, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = match &*self.kind {
            GraphonKind::Half => vec![1.0 - x],
            GraphonKind::Rademacher => return rademacher::section_breakpoints(x, lo, hi),
            GraphonKind::Norine { d } => Norine { d: *d }.section_breakpoints(x),
            GraphonKind::Transformed { inner, map } => {
                let mut out = map.kinks();
                for b in inner.section_breakpoints(map.apply(x), 0.0, 1.0) {
                    out.extend(map.preimages(b));
                }
                out
            }
            GraphonKind::Blockwise { bounds, blocks } => {
                let i = cell_of(bounds, x);
                let u = ((x - bounds[i]) / (bounds[i + 1] - bounds[i])).clamp(0.0, 1.0);
                let mut out = bounds.clone();
                for (j, g) in blocks[i].iter().enumerate() {
                    let (a, b) = (bounds[j], bounds[j + 1]);
                    out.extend(g.section_breakpoints(u, 0.0, 1.0).into_iter().map(|v| a + v * (b - a)));
                }
                out
            }
            GraphonKind::Patched { inner, patch } => {
                let mut out = inner.section_breakpoints(x, lo, hi);
                out.extend([patch.rows.0, patch.rows.1, patch.cols.0, patch.cols.1]);
                out
            }
            _ => self.breakpoints(),
        };
        out.retain(|&b| b > lo && b < hi);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Uniform grid resolution to use alongside breakpoints in quadrature.
    pub(crate) fn quadrature_grid(&self, requested: usize) -> usize {
        if self.is_piecewise_constant() {
            0
        } else {
            requested.max(1)
        }
    }

    /// `y -> W(x, y)`.
    pub fn section(&self, x: f64) -> Result<SectionFunction> {
        check_unit("x", x)?;
        Ok(SectionFunction::slice(self.clone(), x))
    }

    /// `∫ W(x, y) dy` by quadrature.
    pub fn degree(&self, x: f64, budget: &Budget) -> Result<Estimate> {
        self.degree_with(x, None, budget)
    }

    /// `∫ W(x, y) dy` by the requested method; `None` picks exact summation
    /// for piecewise constant kernels and quadrature otherwise.
    pub fn degree_with(&self, x: f64, method: Option<Method>, budget: &Budget) -> Result<Estimate> {
        check_unit("x", x)?;
        let method = method.unwrap_or(if self.is_piecewise_constant() {
            Method::ExactStep
        } else {
            Method::Quadrature
        });
        match method {
            Method::ExactStep if !self.is_piecewise_constant() => Err(Error::Unsupported(
                "exact summation needs a piecewise constant kernel".into(),
            )),
            Method::ExactStep | Method::Quadrature => {
                let (value, evals) = self.row_integral(x, 0.0, 1.0, budget.grid);
                Ok(Estimate::exact(value, evals, method))
            }
            Method::MonteCarlo => Ok(crate::density::mc::integrate_unit(1, budget, 0, |p| {
                self.value(x, p[0])
            })),
        }
    }

    /// `∫_lo^hi W(x, y) dy` and the number of kernel evaluations: closed form
    /// where the kernel has one, breakpoint-aligned quadrature otherwise.
    pub(crate) fn row_integral(&self, x: f64, lo: f64, hi: f64, grid: usize) -> (f64, u64) {
        if !(hi > lo) {
            return (0.0, 0);
        }
        match self.kind.as_ref() {
            GraphonKind::Constant(p) => (p * (hi - lo), 0),
            GraphonKind::Rademacher => (rademacher::row_integral(x, lo, hi), 0),
            GraphonKind::Patched { inner, patch } => {
                let mut hit = Vec::new();
                if in_range(x, patch.rows) {
                    hit.push(patch.cols);
                }
                if in_range(x, patch.cols) {
                    hit.push(patch.rows);
                }
                hit.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (a, b) in hit {
                    match merged.last_mut() {
                        Some(last) if a <= last.1 => last.1 = last.1.max(b),
                        _ => merged.push((a, b)),
                    }
                }
                let mut total = 0.0;
                let mut evals = 0;
                let mut at = lo;
                for (a, b) in merged {
                    let (a, b) = (a.max(lo), b.min(hi));
                    if b <= a {
                        continue;
                    }
                    let (v, n) = inner.row_integral(x, at, a, grid);
                    let bp = self.section_breakpoints(x, a, b);
                    let (pv, pn) = quad::integrate_1d(|y| self.value(x, y), a, b, &bp, self.quadrature_grid(grid));
                    total += v + pv;
                    evals += n + pn;
                    at = b;
                }
                let (v, n) = inner.row_integral(x, at, hi, grid);
                (total + v, evals + n)
            }
            _ => {
                let bp = self.section_breakpoints(x, lo, hi);
                quad::integrate_1d(|y| self.value(x, y), lo, hi, &bp, self.quadrature_grid(grid))
            }
        }
    }

    /// Values at the midpoints of an `n x n` grid, row `i` for `x = (i + 1/2)/n`.
    pub fn heatmap(&self, n: usize) -> Vec<Vec<f64>> {
        let mid = |j: usize| (j as f64 + 0.5) / n as f64;
        (0..n)
            .map(|i| (0..n).map(|j| self.value(mid(i), mid(j))).collect())
            .collect()
    }
}
