//! Graphon spec files (JSON) and `builtin:NAME[:params]` addresses.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AffinePiece, Graphon, MeasurePreservingMap, PatchEdit};
use crate::error::{invalid, Error, Result};
use crate::graphs::PartitionSpec;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    Reflection,
    Rotation {
        shift: f64,
    },
    Tent,
    IntervalExchange {
        lengths: Vec<f64>,
        order: Vec<usize>,
        #[serde(default)]
        flipped: Vec<bool>,
    },
    /// Each piece is `[domain_lo, domain_hi, image_from, image_to]`.
    PiecewiseAffine {
        pieces: Vec<[f64; 4]>,
    },
    Coordinate {
        dims: usize,
        index: usize,
    },
}

impl MapSpec {
    pub fn build(&self) -> Result<MeasurePreservingMap> {
        match self {
            MapSpec::Identity => Ok(MeasurePreservingMap::Identity),
            MapSpec::Reflection => Ok(MeasurePreservingMap::Reflection),
            MapSpec::Rotation { shift } => MeasurePreservingMap::rotation(*shift),
            MapSpec::Tent => Ok(MeasurePreservingMap::tent()),
            MapSpec::IntervalExchange {
                lengths,
                order,
                flipped,
            } => {
                let flipped = if flipped.is_empty() {
                    vec![false; lengths.len()]
                } else {
                    flipped.clone()
                };
                MeasurePreservingMap::interval_exchange(lengths, order, &flipped)
            }
            MapSpec::PiecewiseAffine { pieces } => MeasurePreservingMap::piecewise_affine(
                pieces
                    .iter()
                    .map(|p| AffinePiece {
                        domain: (p[0], p[1]),
                        image: (p[2], p[3]),
                    })
                    .collect(),
            ),
            MapSpec::Coordinate { dims, index } => MeasurePreservingMap::coordinate(*dims, *index),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartitionFields {
    pub sizes: Vec<f64>,
    pub degrees: Vec<f64>,
    #[serde(default)]
    pub names: Vec<String>,
}

/// Body of a graphon spec file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphonSpec {
    Constant {
        p: f64,
    },
    Step {
        sizes: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    Half,
    Rademacher,
    Norine {
        d: usize,
    },
    Transformed {
        inner: Box<GraphonSpec>,
        map: MapSpec,
    },
    /// Either inline `values` or a `csv` path (relative to the spec file).
    Grid {
        #[serde(default)]
        values: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        csv: Option<String>,
    },
    /// Only `blocks[i][j]` with `i <= j` are read; the lower triangle mirrors it.
    Blockwise {
        sizes: Vec<f64>,
        blocks: Vec<Vec<Option<GraphonSpec>>>,
    },
    Patched {
        inner: Box<GraphonSpec>,
        rows: (f64, f64),
        cols: (f64, f64),
        #[serde(default)]
        set: Option<f64>,
        #[serde(default)]
        shift: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
struct SpecFile {
    #[serde(flatten)]
    body: GraphonSpec,
    #[serde(default)]
    partition: Option<PartitionFields>,
}

fn read_grid_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: line + 1,
                    msg: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

impl GraphonSpec {
    /// `base` resolves relative paths inside the spec.
    pub fn build(&self, base: &Path) -> Result<Graphon> {
        match self {
            GraphonSpec::Constant { p } => Graphon::constant(*p),
            GraphonSpec::Step { sizes, values } => Graphon::step(sizes, values.clone()),
            GraphonSpec::Half => Ok(Graphon::half()),
            GraphonSpec::Rademacher => Ok(Graphon::rademacher()),
            GraphonSpec::Norine { d } => Graphon::norine(*d),
            GraphonSpec::Transformed { inner, map } => Ok(inner.build(base)?.apply_measure_preserving(&map.build()?)),
            GraphonSpec::Grid { values, csv } => match (values, csv) {
                (Some(v), None) => Graphon::grid(v.clone()),
                (None, Some(path)) => Graphon::grid(read_grid_csv(&base.join(path))?),
                _ => Err(invalid("grid graphon needs exactly one of `values` and `csv`")),
            },
            GraphonSpec::Blockwise { sizes, blocks } => {
                let k = sizes.len();
                if blocks.len() != k || blocks.iter().any(|r| r.len() != k) {
                    return Err(invalid(format!("block matrix must be {k} x {k}")));
                }
                let mut built: Vec<Vec<Option<Graphon>>> = vec![vec![None; k]; k];
                for i in 0..k {
                    for j in i..k {
                        let spec = blocks[i][j]
                            .as_ref()
                            .ok_or_else(|| invalid(format!("block ({i}, {j}) missing")))?;
                        let g = spec.build(base)?;
                        built[j][i] = Some(g.clone());
                        built[i][j] = Some(g);
                    }
                }
                let blocks = built
                    .into_iter()
                    .map(|r| r.into_iter().map(|g| g.expect("filled above")).collect())
                    .collect();
                Graphon::blockwise(sizes, blocks)
            }
            GraphonSpec::Patched {
                inner,
                rows,
                cols,
                set,
                shift,
            } => {
                let edit = match (set, shift) {
                    (Some(v), None) => PatchEdit::Set(*v),
                    (None, Some(s)) => PatchEdit::Shift(*s),
                    _ => return Err(invalid("patch needs exactly one of `set` and `shift`")),
                };
                Graphon::patched(&inner.build(base)?, *rows, *cols, edit)
            }
        }
    }
}

/// Parses the part after `builtin:`, e.g. `half`, `constant:0.5`, `norine:3`.
pub fn parse_builtin(rest: &str) -> Result<Graphon> {
    let mut it = rest.split(':');
    let name = it.next().unwrap_or_default();
    let params: Vec<&str> = it.collect();
    let number = |i: usize| -> Result<f64> {
        params
            .get(i)
            .ok_or_else(|| invalid(format!("builtin:{name} needs parameter {}", i + 1)))?
            .parse::<f64>()
            .map_err(|e| invalid(format!("builtin:{name}: {e}")))
    };
    let expect_params = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(invalid(format!("builtin:{name} takes {n} parameter(s)")))
        }
    };
    match name {
        "constant" => {
            expect_params(1)?;
            Graphon::constant(number(0)?)
        }
        "half" => {
            expect_params(0)?;
            Ok(Graphon::half())
        }
        "rademacher" => {
            expect_params(0)?;
            Ok(Graphon::rademacher())
        }
        "norine" => {
            expect_params(1)?;
            let d = number(0)?;
            if d.fract() != 0.0 || d < 1.0 {
                return Err(invalid("builtin:norine needs a positive integer"));
            }
            Graphon::norine(d as usize)
        }
        other => Err(invalid(format!("unknown builtin graphon {other:?}"))),
    }
}

/// Loads `builtin:NAME[:params]` or a JSON spec file.
pub fn load_graphon(address: &str) -> Result<Graphon> {
    if let Some(rest) = address.strip_prefix("builtin:") {
        return parse_builtin(rest);
    }
    let path = PathBuf::from(address);
    let text = std::fs::read_to_string(&path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    graphon_from_json(&text, &base)
}

/// Builds a graphon from spec-file text; relative paths resolve against `base`.
pub fn graphon_from_json(text: &str, base: &Path) -> Result<Graphon> {
    let file: SpecFile = serde_json::from_str(text)?;
    let g = file.body.build(base)?;
    Ok(match file.partition {
        None => g,
        Some(p) => {
            let spec = if p.names.is_empty() {
                PartitionSpec::new(p.sizes, p.degrees)?
            } else {
                PartitionSpec::with_names(p.sizes, p.degrees, p.names)?
            };
            g.with_partition(Some(spec))
        }
    })
}
