use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ks_cli::report::{self, RigiditySummary};
use ks_cli::{load_set, table, Settings};
use ks_core::rigidity::{self, parameter_count_with_basis, propagate_reconstruct};
use ks_core::{
    build_graph, check_critical, find_ks_coloring, graph, to_dot, RigidityError, Tolerance,
};
use serde::Serialize;

/// Verify Kochen-Specker ray sets and measure how rigid they are.
#[derive(Parser)]
#[command(name = "ks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Largest |<u,v>| still counted as orthogonal.
    #[arg(long, global = true, default_value_t = Tolerance::default().ortho_tol)]
    tolerance_ortho: f64,
    /// Relative singular-value threshold for numerical rank.
    #[arg(long, global = true, default_value_t = Tolerance::default().rank_tol)]
    rank_tol: f64,
    /// Smallest singular-value gap accepted as conclusive.
    #[arg(long, global = true, default_value_t = Tolerance::default().gap_min)]
    gap_min: f64,
    /// Seed for the propagation reconstruction.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Index of the basis to pin, in enumeration order.
    #[arg(long, global = true, default_value_t = 0)]
    basis_index: usize,
    /// Include wall-clock times (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check one catalog file against its header.
    Verify { path: PathBuf },
    /// Verify every catalog file in a directory and print the summary table.
    Table1 {
        #[arg(default_value = "catalog")]
        dir: PathBuf,
    },
    /// Search for a KS colouring and test criticality.
    Color { path: PathBuf },
    /// Count free parameters and cross-check by propagation.
    Rigidity { path: PathBuf },
    /// Deform a non-rigid set along one parameter direction.
    Flex {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        direction: usize,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 0.02)]
        step_size: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the orthogonality graph in DOT.
    Dot { path: PathBuf },
}

const MISMATCH: u8 = 1;
const INPUT: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT)
        }
    }
}

fn outcome(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(MISMATCH)
    }
}

fn settings(c: &Common) -> Result<Settings> {
    let tolerance =
        Tolerance::new(c.tolerance_ortho, c.rank_tol, c.gap_min).context("invalid tolerance")?;
    Ok(Settings {
        tolerance,
        seed: c.seed,
        basis_index: c.basis_index,
        timing: c.timing,
    })
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
        Format::Text => print!("{}", text()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let s = settings(&cli.common)?;
    let format = cli.common.format;
    match cli.command {
        Command::Verify { path } => {
            let set = load_set(&path)?;
            let doc = report::verify(&set, &s);
            emit(format, &doc, || report::render_text(&doc))?;
            Ok(outcome(doc.pass))
        }
        Command::Table1 { dir } => {
            let doc =
                table::build(&dir, &s).with_context(|| format!("reading {}", dir.display()))?;
            emit(format, &doc, || table::render_text(&doc))?;
            for m in &doc.missing {
                eprintln!("warning: missing {m}.ks");
            }
            if doc.sets.is_empty() {
                eprintln!("error: no catalog files in {}", dir.display());
                return Ok(ExitCode::from(INPUT));
            }
            if !doc.errors.is_empty() {
                return Ok(ExitCode::from(INPUT));
            }
            Ok(outcome(doc.pass))
        }
        Command::Color { path } => color(&path, &s, format),
        Command::Rigidity { path } => rigidity_cmd(&path, &s, format),
        Command::Flex {
            path,
            direction,
            steps,
            step_size,
            out_dir,
        } => flex_cmd(&path, direction, steps, step_size, &out_dir, &s, format),
        Command::Dot { path } => {
            let set = load_set(&path)?;
            let g = build_graph(&set, &s.tolerance);
            let labels: Vec<String> = (0..set.len()).map(|k| k.to_string()).collect();
            print!("{}", to_dot(&g, Some(&labels))?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct ColorDocument {
    name: String,
    colourable: bool,
    colouring: Option<Vec<u8>>,
    nodes_explored: u64,
    propagations: u64,
    critical: Option<bool>,
    expected_critical: Option<bool>,
    non_destroying_deletions: Vec<usize>,
}

fn color(path: &Path, s: &Settings, format: Format) -> Result<ExitCode> {
    let set = load_set(path)?;
    let g = build_graph(&set, &s.tolerance);
    let bases = graph::verified_bases(&set, &g)?;
    let (found, stats) = find_ks_coloring(&g, &bases)?;
    let (critical, non_destroying) = match &found {
        Some(_) => (None, Vec::new()),
        None => {
            let r = check_critical(&g, &bases)?;
            (Some(r.critical), r.non_destroying())
        }
    };
    let doc = ColorDocument {
        name: set.name().to_owned(),
        colourable: found.is_some(),
        colouring: found.map(|c| c.values().to_vec()),
        nodes_explored: stats.nodes_explored,
        propagations: stats.propagations,
        critical,
        expected_critical: set.expected().critical,
        non_destroying_deletions: non_destroying,
    };
    emit(format, &doc, || {
        let mut out = format!(
            "{}: {} ({} nodes, {} propagations)\n",
            doc.name,
            if doc.colourable {
                "COLOURABLE"
            } else {
                "UNCOLOURABLE"
            },
            doc.nodes_explored,
            doc.propagations
        );
        if let Some(c) = &doc.colouring {
            out += &format!("colouring: {c:?}\n");
        }
        if let Some(c) = doc.critical {
            out += &format!("critical: {c}\n");
        }
        if !doc.non_destroying_deletions.is_empty() {
            out += &format!(
                "deletions leaving the set uncolourable: {:?}\n",
                doc.non_destroying_deletions
            );
        }
        out
    })?;
    let critical_ok = doc
        .expected_critical
        .is_none_or(|e| doc.critical == Some(e));
    Ok(outcome(!doc.colourable && critical_ok))
}

#[derive(Serialize)]
struct RigidityDocument {
    name: String,
    summary: RigiditySummary,
    singular_values: Vec<f64>,
    parameter_count: Option<usize>,
    expected_parameters: Option<usize>,
    propagation: PropagationSummary,
}

#[derive(Serialize)]
struct PropagationSummary {
    seed: u64,
    parameters_introduced: usize,
    consistency: bool,
    /// Per connected component, one entry per attempt.
    attempts: Vec<Vec<AttemptSummary>>,
}

#[derive(Serialize)]
struct AttemptSummary {
    seed: u64,
    parameters_drawn: usize,
    jacobian_rank: usize,
    gauge_dim: usize,
    max_residue: f64,
    consistent: bool,
    count: Option<usize>,
}

fn rigidity_cmd(path: &Path, s: &Settings, format: Format) -> Result<ExitCode> {
    let set = load_set(path)?;
    let tol = s.tolerance;
    let r = parameter_count_with_basis(&set, &tol, s.basis_index)?;
    let g = build_graph(&set, &tol);
    let bases = graph::verified_bases(&set, &g)?;
    let p = propagate_reconstruct(&g, &bases, s.seed, &tol)?;
    let doc = RigidityDocument {
        name: set.name().to_owned(),
        summary: RigiditySummary {
            pinned_basis: r.pinned_basis.vertices().to_vec(),
            n_coords: r.n_coords,
            n_residues: r.n_residues,
            null_dim: r.null_dim,
            residual_gauge_dim: r.residual_gauge_dim,
            gap_ratio: r.gap_ratio.is_finite().then_some(r.gap_ratio),
            conclusive: r.conclusive,
            real_restricted_count: r.real_restricted_count,
        },
        singular_values: r.singular_values.clone(),
        parameter_count: r.conclusive.then_some(r.parameter_count),
        expected_parameters: set.expected().parameters,
        propagation: PropagationSummary {
            seed: s.seed,
            parameters_introduced: p.parameters_introduced,
            consistency: p.consistency,
            attempts: p
                .attempts
                .iter()
                .map(|comp| {
                    comp.iter()
                        .map(|a| AttemptSummary {
                            seed: a.seed,
                            parameters_drawn: a.parameters_drawn,
                            jacobian_rank: a.jacobian_rank,
                            gauge_dim: a.gauge_dim,
                            max_residue: a.max_residue,
                            consistent: a.consistent,
                            count: a.count,
                        })
                        .collect()
                })
                .collect(),
        },
    };
    emit(format, &doc, || {
        let sm = &doc.summary;
        let mut out = format!(
            "{}: pinned basis {:?}\n  coordinates {}, residues {}\n  null dimension {}, residual gauge {}, parameters {}\n",
            doc.name,
            sm.pinned_basis,
            sm.n_coords,
            sm.n_residues,
            sm.null_dim,
            sm.residual_gauge_dim,
            doc.parameter_count
                .map_or_else(|| "INCONCLUSIVE".to_owned(), |c| c.to_string())
        );
        out += &format!(
            "  gap ratio {}\n",
            sm.gap_ratio
                .map_or_else(|| "inf".to_owned(), |g| format!("{g:.3e}"))
        );
        if let Some(real) = sm.real_restricted_count {
            out += &format!("  real-restricted null dimension {real}\n");
        }
        let tail: Vec<String> = doc
            .singular_values
            .iter()
            .rev()
            .take(sm.null_dim + 3)
            .rev()
            .map(|x| format!("{x:.3e}"))
            .collect();
        out += &format!("  smallest singular values [{}]\n", tail.join(", "));
        out += &format!(
            "  propagation (seed {}): parameters {}, consistent {}\n",
            doc.propagation.seed,
            doc.propagation.parameters_introduced,
            doc.propagation.consistency
        );
        if let Some(e) = doc.expected_parameters {
            out += &format!("  expected parameters {e}\n");
        }
        out
    })?;
    let agree = doc.propagation.consistency
        && doc.parameter_count == Some(doc.propagation.parameters_introduced);
    let matches = doc
        .expected_parameters
        .is_none_or(|e| doc.parameter_count == Some(e));
    Ok(outcome(agree && matches))
}

#[derive(Serialize)]
struct FlexOutput {
    name: String,
    path: PathBuf,
    max_residue: f64,
    newton_iterations: usize,
}

fn flex_cmd(
    path: &Path,
    direction: usize,
    steps: usize,
    step_size: f64,
    out_dir: &Path,
    s: &Settings,
    format: Format,
) -> Result<ExitCode> {
    let set = load_set(path)?;
    let result = match rigidity::flex(&set, direction, steps, step_size, &s.tolerance) {
        Ok(r) => r,
        Err(e @ RigidityError::InvalidStepSize(_)) => bail!(e),
        Err(e) => {
            eprintln!("{}: {e}", set.name());
            return Ok(ExitCode::from(MISMATCH));
        }
    };
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::with_capacity(result.len());
    for step in &result {
        let file = out_dir.join(format!("{}.ks", step.record.name()));
        std::fs::write(&file, step.record.to_text())
            .with_context(|| format!("writing {}", file.display()))?;
        written.push(FlexOutput {
            name: step.record.name().to_owned(),
            path: file,
            max_residue: step.max_residue,
            newton_iterations: step.newton_iterations,
        });
    }
    emit(format, &written, || {
        written
            .iter()
            .map(|w| {
                format!(
                    "{}  max residue {:.3e}  newton iterations {}  -> {}\n",
                    w.name,
                    w.max_residue,
                    w.newton_iterations,
                    w.path.display()
                )
            })
            .collect()
    })?;
    Ok(ExitCode::SUCCESS)
}
