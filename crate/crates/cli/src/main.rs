//! `graphonlab`: densities, constraint checks, W-random samples and
//! vertex-space diagnostics for graphons, with CSV (or `--json`) output.
//!
//! Exit status: 0 on success, 1 when a check is violated (or a packing is not
//! certified), 2 on usage or input errors.

mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphonlab::density::{decorated_density, graphon_density, rooted_density, rooted_density_decorated};
use graphonlab::expressions::{check_constraint, parse_constraint_file, DEFAULT_TOLERANCE};
use graphonlab::forcing::verify_wr_identities;
use graphonlab::graphon::load_graphon;
use graphonlab::graphs::{DecoratedGraph, GraphFile};
use graphonlab::sampling::{convergence_experiment, sample_w_random_graph};
use graphonlab::vertexspace::{packing_diagnostic, witness_g, witness_g_i_delta, DEFAULT_GRID};
use graphonlab::{Budget, Error, Estimate, Graphon, Method, Verdict};
use serde_json::Value;
use table::{num, text, Table};

#[derive(Parser)]
#[command(
    name = "graphonlab",
    version,
    about = "Graphon densities, constraints and vertex-space diagnostics"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random stream.
    #[arg(long, global = true, env = "GRAPHONLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Monte Carlo sample budget.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    budget: u64,
    /// Quadrature cells per axis (grid points for `vertex-space`).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Write the report here instead of stdout (`sample`: the graph file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit a JSON array of row objects instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Density of a plain, rooted or decorated graph.
    Density {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        graphon: String,
        /// mc, quad or exact; chosen automatically when omitted.
        #[arg(long)]
        method: Option<Method>,
        /// Root coordinates, comma separated, for rooted graphs.
        #[arg(long, value_delimiter = ',')]
        roots: Vec<f64>,
    },
    /// Degree `∫ W(x, y) dy` at one or more points.
    Degree {
        #[arg(long)]
        graphon: String,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
    },
    /// A W-random graph in the graph text format.
    Sample {
        #[arg(long)]
        graphon: String,
        #[arg(long)]
        order: usize,
    },
    /// Empirical densities of W-random graphs of increasing order.
    Converge {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        graphon: String,
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<usize>,
    },
    /// Checks a constraint file against a graphon.
    Check {
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long)]
        graphon: String,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long)]
        method: Option<Method>,
    },
    /// Numeric identities of the Rademacher graphon.
    VerifyWr {
        #[arg(long, default_value = "builtin:rademacher")]
        graphon: String,
    },
    /// Packing witnesses around the section `g`.
    VertexSpace {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        count: usize,
        /// Grid samples of `g` and every witness, as CSV.
        #[arg(long)]
        emit_sections: Option<PathBuf>,
    },
    /// Kernel values at the midpoints of a `res x res` grid.
    Heatmap {
        #[arg(long)]
        graphon: String,
        #[arg(long, default_value_t = 64)]
        res: usize,
    },
}

enum Outcome {
    Clean,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn estimate_cells(e: &Estimate) -> [Value; 2] {
    [num(e.value), num(e.stderr)]
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let c = &cli.common;
    let mut budget = Budget::default().with_seed(c.seed).with_samples(c.budget);
    if let Some(g) = c.grid {
        budget.grid = g;
    }
    let mut outcome = Outcome::Clean;
    let table = match &cli.command {
        Command::Density {
            graph,
            graphon,
            method,
            roots,
        } => {
            let w = load_graphon(graphon)?;
            let est = density(&read_graph(graph)?, &w, *method, roots, &budget)?;
            let mut t = Table::new(["value", "stderr", "method", "budget"]);
            let [v, s] = estimate_cells(&est);
            t.push(vec![v, s, text(est.method.name()), Value::from(est.budget)]);
            t
        }
        Command::Degree { graphon, x } => {
            let w = load_graphon(graphon)?;
            let mut t = Table::new(["x", "part", "degree", "stderr", "method"]);
            for &xi in x {
                let est = w.degree(xi, &budget)?;
                let part = w
                    .partition()
                    .map_or(String::new(), |p| p.names()[p.part_of(xi)].clone());
                let [v, s] = estimate_cells(&est);
                t.push(vec![num(xi), text(part), v, s, text(est.method.name())]);
            }
            t
        }
        Command::Sample { graphon, order } => {
            let path = c
                .out
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("sample needs --out FILE for the graph".into()))?;
            let w = load_graphon(graphon)?;
            let g = sample_w_random_graph(&w, *order, c.seed)?;
            let file = GraphFile {
                graph: g.clone(),
                roots: None,
                parts: None,
            };
            std::fs::write(path, file.to_text())?;
            let pairs = (order * order.saturating_sub(1) / 2) as f64;
            let mut t = Table::new(["order", "edges", "edge_density", "seed"]);
            t.push(vec![
                Value::from(*order),
                Value::from(g.edge_count()),
                num(if pairs > 0.0 {
                    g.edge_count() as f64 / pairs
                } else {
                    0.0
                }),
                Value::from(c.seed),
            ]);
            return emit(&t, c.json, None).map(|_| outcome);
        }
        Command::Converge { graph, graphon, orders } => {
            let w = load_graphon(graphon)?;
            let h = read_graph(graph)?.graph;
            let (target, rows) = convergence_experiment(&w, &h, orders, c.seed, &budget)?;
            let mut t = Table::new(["n", "estimate", "stderr", "deviation", "target"]);
            for r in rows {
                t.push(vec![
                    Value::from(r.n),
                    num(r.estimate),
                    num(r.stderr),
                    num(r.deviation),
                    num(target.value),
                ]);
            }
            t
        }
        Command::Check {
            constraints,
            graphon,
            tol,
            method,
        } => {
            let w = load_graphon(graphon)?;
            let file = parse_constraint_file(constraints)?;
            let mut t = Table::new(["name", "kind", "residual", "stderr", "tol", "verdict"]);
            for (k, (con, own_tol)) in file.build(w.partition())?.into_iter().enumerate() {
                let tol = own_tol.unwrap_or(*tol);
                let r = check_constraint(&con, &w, tol, *method, &budget.with_seed(c.seed.wrapping_add(k as u64)))?;
                if r.verdict == Verdict::Violated {
                    outcome = Outcome::Failed;
                }
                let [v, s] = estimate_cells(&r.residual);
                t.push(vec![
                    text(con.name.clone()),
                    serde_json::to_value(con.kind)?,
                    v,
                    s,
                    num(tol),
                    text(r.verdict.name()),
                ]);
            }
            t
        }
        Command::VerifyWr { graphon } => {
            let w = load_graphon(graphon)?;
            let report = verify_wr_identities(&w, &budget)?;
            if report.violated().next().is_some() {
                outcome = Outcome::Failed;
            }
            let mut t = Table::new(["identity", "target", "estimate", "stderr", "tol", "verdict"]);
            for ch in &report.checks {
                let [v, s] = estimate_cells(&ch.estimate);
                t.push(vec![
                    text(ch.name.clone()),
                    num(ch.target),
                    v,
                    s,
                    num(ch.tol),
                    text(ch.verdict.name()),
                ]);
            }
            t
        }
        Command::VertexSpace {
            eps,
            count,
            emit_sections,
        } => {
            let grid = c.grid.unwrap_or(DEFAULT_GRID);
            let report = packing_diagnostic(*eps, *count, grid)?;
            if !report.certified {
                outcome = Outcome::Failed;
            }
            if let Some(path) = emit_sections {
                let indices: Vec<u32> = report.witnesses.iter().map(|r| r.i).collect();
                write_sections(path, *eps, &indices, grid, c.json)?;
            }
            let mut t = Table::new([
                "i",
                "delta",
                "distance_to_g",
                "formula",
                "within_ball",
                "min_pairwise",
                "separation_bound",
                "certified",
            ]);
            for r in &report.witnesses {
                t.push(vec![
                    Value::from(r.i),
                    num(r.delta),
                    num(r.distance_to_g),
                    num(r.formula),
                    Value::from(r.within_ball),
                    num(report.min_pairwise),
                    num(report.separation_bound),
                    Value::from(report.certified),
                ]);
            }
            t
        }
        Command::Heatmap { graphon, res } => {
            if *res == 0 {
                return Err(Error::InvalidParameter("--res must be positive".into()));
            }
            let w = load_graphon(graphon)?;
            heatmap_table(&w, *res)
        }
    };
    emit(&table, c.json, c.out.as_deref())?;
    Ok(outcome)
}

fn read_graph(path: &Path) -> Result<GraphFile, Error> {
    GraphFile::parse(&std::fs::read_to_string(path)?)
}

fn density(
    file: &GraphFile,
    w: &Graphon,
    method: Option<Method>,
    roots: &[f64],
    budget: &Budget,
) -> Result<Estimate, Error> {
    let rooted = file.rooted()?;
    match (&file.parts, rooted.root_count()) {
        (Some(parts), 0) => decorated_density(&DecoratedGraph::new(rooted, parts.clone())?, w, method, budget),
        (Some(parts), _) => rooted_density_decorated(&DecoratedGraph::new(rooted, parts.clone())?, w, roots, budget),
        (None, 0) => graphon_density(&file.graph, w, method, budget),
        (None, _) => rooted_density(&rooted, w, roots, budget),
    }
}

fn heatmap_table(w: &Graphon, res: usize) -> Table {
    let mid = |j: usize| (j as f64 + 0.5) / res as f64;
    let mut t = Table::new((0..res).map(|j| format!("y={}", mid(j))));
    for row in w.heatmap(res) {
        t.push(row.into_iter().map(num).collect());
    }
    t
}

fn write_sections(path: &Path, eps: f64, indices: &[u32], grid: usize, json: bool) -> Result<(), Error> {
    let mut cols = vec![witness_g().sample_grid(grid)];
    for &i in indices {
        cols.push(witness_g_i_delta(i, eps)?.sample_grid(grid));
    }
    let header = ["x".to_string(), "g".to_string()]
        .into_iter()
        .chain(indices.iter().map(|i| format!("g_{i}")));
    let mut t = Table::new(header);
    for j in 0..grid {
        let mut row = vec![num((j as f64 + 0.5) / grid as f64)];
        row.extend(cols.iter().map(|c| num(c[j])));
        t.push(row);
    }
    emit(&t, json, Some(path))
}

fn emit(t: &Table, json: bool, path: Option<&Path>) -> Result<(), Error> {
    let mut out: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if json {
        t.write_json(&mut out)?;
    } else {
        t.write_csv(&mut out)?;
    }
    out.flush()?;
    Ok(())
}
