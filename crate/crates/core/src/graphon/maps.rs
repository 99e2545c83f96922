//! Measure preserving self-maps of `[0,1]` and the digit de-interleaving map
//! `[0,1] -> [0,1]^d`.

use crate::error::{invalid, Result};

/// One affine piece of a piecewise affine map: `domain` is sent onto `image`;
/// an image with `image.0 > image.1` reverses orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffinePiece {
    pub domain: (f64, f64),
    pub image: (f64, f64),
}

impl AffinePiece {
    fn apply(&self, x: f64) -> f64 {
        let (a, b) = self.domain;
        let (c, d) = self.image;
        c + (x - a) / (b - a) * (d - c)
    }

    fn image_sorted(&self) -> (f64, f64) {
        let (c, d) = self.image;
        (c.min(d), c.max(d))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurePreservingMap {
    Identity,
    /// `x -> 1 - x`
    Reflection,
    /// `x -> x + c (mod 1)`
    Rotation(f64),
    PiecewiseAffine(Vec<AffinePiece>),
    /// Coordinate `index` of [`DigitInterleave`] with `dims` coordinates.
    Coordinate {
        dims: usize,
        index: usize,
    },
}

impl MeasurePreservingMap {
    pub fn rotation(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(invalid("rotation shift must be finite"));
        }
        Ok(MeasurePreservingMap::Rotation(shift.rem_euclid(1.0)))
    }

    /// Validates that the pieces tile `[0,1]` and that the pushforward of
    /// Lebesgue measure is Lebesgue measure.
    pub fn piecewise_affine(mut pieces: Vec<AffinePiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(invalid("piecewise affine map needs at least one piece"));
        }
        pieces.sort_by(|p, q| p.domain.0.total_cmp(&q.domain.0));
        let mut at = 0.0;
        for p in &pieces {
            let (a, b) = p.domain;
            if (a - at).abs() > 1e-12 || !(b > a) {
                return Err(invalid(format!("pieces do not tile [0,1] near {at}")));
            }
            let (c, d) = p.image_sorted();
            if !(c >= -1e-12 && d <= 1.0 + 1e-12 && d > c) {
                return Err(invalid("piece image must be a non-degenerate subinterval of [0,1]"));
            }
            at = b;
        }
        if (at - 1.0).abs() > 1e-12 {
            return Err(invalid("pieces do not reach 1"));
        }
        let mut cuts: Vec<f64> = pieces
            .iter()
            .flat_map(|p| {
                let (c, d) = p.image_sorted();
                [c, d]
            })
            .chain([0.0, 1.0])
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let density: f64 = pieces
                .iter()
                .filter(|p| {
                    let (c, d) = p.image_sorted();
                    c <= mid && mid < d
                })
                .map(|p| (p.domain.1 - p.domain.0) / (p.image_sorted().1 - p.image_sorted().0))
                .sum();
            if (density - 1.0).abs() > 1e-9 {
                return Err(invalid(format!(
                    "pushforward density {density} on [{}, {}) is not 1",
                    w[0], w[1]
                )));
            }
        }
        Ok(MeasurePreservingMap::PiecewiseAffine(pieces))
    }

    /// Interval exchange: `[0,1]` is cut into consecutive intervals of the
    /// given lengths, which are re-laid in the order `order`, each optionally flipped.
    pub fn interval_exchange(lengths: &[f64], order: &[usize], flipped: &[bool]) -> Result<Self> {
        let k = lengths.len();
        if order.len() != k || flipped.len() != k {
            return Err(invalid("interval exchange needs one order slot and flag per interval"));
        }
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..k).collect::<Vec<_>>() {
            return Err(invalid("interval exchange order must be a permutation"));
        }
        let mut dst_start = vec![0.0; k];
        let mut acc = 0.0;
        for &src in order {
            dst_start[src] = acc;
            acc += lengths[src];
        }
        let mut pieces = Vec::with_capacity(k);
        let mut lo = 0.0;
        for i in 0..k {
            let hi = lo + lengths[i];
            let (c, d) = (dst_start[i], dst_start[i] + lengths[i]);
            pieces.push(AffinePiece {
                domain: (lo, hi),
                image: if flipped[i] { (d, c) } else { (c, d) },
            });
            lo = hi;
        }
        MeasurePreservingMap::piecewise_affine(pieces)
    }

    /// The tent map `x -> 1 - |2x - 1|`: two-to-one but measure preserving.
    pub fn tent() -> Self {
        MeasurePreservingMap::PiecewiseAffine(vec![
            AffinePiece {
                domain: (0.0, 0.5),
                image: (0.0, 1.0),
            },
            AffinePiece {
                domain: (0.5, 1.0),
                image: (1.0, 0.0),
            },
        ])
    }

    pub fn coordinate(dims: usize, index: usize) -> Result<Self> {
        if dims == 0 || index >= dims {
            return Err(invalid(format!("coordinate {index} of a {dims}-dimensional map")));
        }
        Ok(MeasurePreservingMap::Coordinate { dims, index })
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            MeasurePreservingMap::Identity => x,
            MeasurePreservingMap::Reflection => 1.0 - x,
            MeasurePreservingMap::Rotation(c) => {
                let y = x + c;
                if y >= 1.0 {
                    y - 1.0
                } else {
                    y
                }
            }
            MeasurePreservingMap::PiecewiseAffine(pieces) => {
                let i = pieces.partition_point(|p| p.domain.1 <= x).min(pieces.len() - 1);
                pieces[i].apply(x).clamp(0.0, 1.0)
            }
            MeasurePreservingMap::Coordinate { dims, index } => DigitInterleave { dims: *dims }.coordinate(x, *index),
        }
    }

    /// Points of `[0,1]` mapped to `b`, for maps with closed-form inverses.
    pub(crate) fn preimages(&self, b: f64) -> Vec<f64> {
        match self {
            MeasurePreservingMap::Identity => vec![b],
            MeasurePreservingMap::Reflection => vec![1.0 - b],
            MeasurePreservingMap::Rotation(c) => vec![(b - c).rem_euclid(1.0)],
            MeasurePreservingMap::PiecewiseAffine(pieces) => pieces
                .iter()
                .filter_map(|p| {
                    let (c, d) = p.image_sorted();
                    if b < c || b > d {
                        return None;
                    }
                    let (lo, hi) = p.domain;
                    Some(lo + (b - p.image.0) / (p.image.1 - p.image.0) * (hi - lo))
                })
                .collect(),
            MeasurePreservingMap::Coordinate { .. } => Vec::new(),
        }
    }

    /// Points where the map itself is discontinuous or changes slope.
    pub(crate) fn kinks(&self) -> Vec<f64> {
        match self {
            MeasurePreservingMap::Rotation(c) => vec![(1.0 - c).rem_euclid(1.0)],
            MeasurePreservingMap::PiecewiseAffine(pieces) => pieces.iter().map(|p| p.domain.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Breakpoints of a piecewise constant function are carried to breakpoints
    /// of its composition with the map.
    pub(crate) fn preserves_steps(&self) -> bool {
        !matches!(self, MeasurePreservingMap::Coordinate { .. })
    }

    /// Lebesgue measure of the preimage of `[lo, hi]`, where it is known in closed form.
    pub fn preimage_measure(&self, lo: f64, hi: f64) -> Option<f64> {
        let len = (hi.min(1.0) - lo.max(0.0)).max(0.0);
        match self {
            MeasurePreservingMap::Identity | MeasurePreservingMap::Reflection | MeasurePreservingMap::Rotation(_) => {
                Some(len)
            }
            MeasurePreservingMap::PiecewiseAffine(pieces) => Some(
                pieces
                    .iter()
                    .map(|p| {
                        let (c, d) = p.image_sorted();
                        let overlap = (hi.min(d) - lo.max(c)).max(0.0);
                        overlap * (p.domain.1 - p.domain.0) / (d - c)
                    })
                    .sum(),
            ),
            MeasurePreservingMap::Coordinate { .. } => None,
        }
    }
}

/// Binary digit de-interleaving: coordinate `i` of the image takes input bits
/// `i, i + d, i + 2d, ...` (bit 0 being the most significant fractional bit).
/// Measure preserving off the null set of dyadic rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DigitInterleave {
    pub dims: usize,
}

const BITS: usize = 64;

impl DigitInterleave {
    pub fn coordinate(&self, x: f64, index: usize) -> f64 {
        let d = self.dims;
        // exact for every f64 in [0, 1)
        let bits = if x >= 1.0 {
            u64::MAX
        } else {
            (x.max(0.0) * 2f64.powi(BITS as i32)) as u64
        };
        let mut out = 0.0;
        let mut weight = 0.5;
        let mut pos = index;
        while pos < BITS {
            if bits >> (BITS - 1 - pos) & 1 == 1 {
                out += weight;
            }
            weight *= 0.5;
            pos += d;
        }
        out
    }

    pub fn apply(&self, x: f64) -> Vec<f64> {
        (0..self.dims).map(|i| self.coordinate(x, i)).collect()
    }
}
