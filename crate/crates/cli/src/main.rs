//! `fdm`: eigenpairs of Dirichlet Sturm-Liouville problems with polynomial
//! potentials, by the functional-discrete method at arbitrary precision.

mod report;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use fdm_core::verify::{self, ReferenceSource};
use fdm_core::{residual_norm, run_fd, Float, PrecisionContext};

use report::{format_sig, render_csv, render_json, render_table, Row};
use spec::{OutputFormat, ReferenceMode, RunSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Solver(#[from] fdm_core::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Parser)]
#[command(
    name = "fdm",
    about = "Functional-discrete eigensolver for -u'' + q(x) u = lambda u with Dirichlet boundary conditions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the method for a range of eigenvalue indices and report
    /// per-rank eigenvalues, errors and residual norms.
    Solve(SolveArgs),
    /// Compute reference eigenvalues by mesh refinement and Richardson
    /// extrapolation, independent of the correction recursion.
    Reference(ReferenceArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file with `key = value` lines (flags override it)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Left endpoint A
    #[arg(long = "A", value_name = "A", allow_hyphen_values = true)]
    a: Option<String>,
    /// Right endpoint B
    #[arg(long = "B", value_name = "B", allow_hyphen_values = true)]
    b: Option<String>,
    /// Potential coefficients c0,c1,...
    #[arg(long, allow_hyphen_values = true)]
    coeffs: Option<String>,
    /// Mesh: uniform:N or points:x1,x2,...
    #[arg(long)]
    mesh: Option<String>,
    /// Base potential: average, zero, or explicit:v1,v2,...
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    /// Eigenvalue index or inclusive range, e.g. 1..4
    #[arg(long)]
    n: Option<String>,
    /// Number of correction layers m
    #[arg(long)]
    rank: Option<usize>,
    /// Trusted decimal digits
    #[arg(long)]
    digits: Option<u32>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output format: table, csv or json
    #[arg(long)]
    format: Option<String>,
    /// Reference eigenvalues for the error column: paper, oracle or none
    #[arg(long)]
    reference: Option<String>,
    /// Re-verify the structural invariants of every computed layer
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ReferenceArgs {
    #[command(flatten)]
    common: CommonArgs,
}

fn build_spec(common: &CommonArgs, format: Option<&str>, reference: Option<&str>) -> Result<RunSpec, CliError> {
    let mut spec = RunSpec::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        spec.apply_config(&text)?;
    }
    if let Some(v) = &common.a {
        spec.set("A", v)?;
    }
    if let Some(v) = &common.b {
        spec.set("B", v)?;
    }
    if let Some(v) = &common.coeffs {
        spec.set("coeffs", v)?;
    }
    if let Some(v) = &common.mesh {
        spec.set("mesh", v)?;
    }
    if let Some(v) = &common.base {
        spec.set("base", v)?;
    }
    if let Some(v) = &common.n {
        spec.set("n", v)?;
    }
    if let Some(v) = common.rank {
        spec.set("rank", &v.to_string())?;
    }
    if let Some(v) = common.digits {
        spec.set("digits", &v.to_string())?;
    }
    if let Some(v) = format {
        spec.set("format", v)?;
    }
    if let Some(v) = reference {
        spec.set("reference", v)?;
    }
    Ok(spec)
}

fn reference_for(
    spec: &RunSpec,
    n: usize,
    config: &fdm_core::ProblemConfig,
    ctx: &PrecisionContext,
) -> Result<Option<(Float, ReferenceSource)>, CliError> {
    match spec.reference {
        ReferenceMode::None => Ok(None),
        ReferenceMode::Paper => {
            let value = verify::known_exact_eigenvalue(
                &config.potential,
                config.mesh.a(),
                config.mesh.b(),
                n,
                ctx,
            )
            .ok_or_else(|| {
                CliError::Spec(format!(
                    "no published reference eigenvalue for this configuration at n = {n}; use --reference oracle"
                ))
            })?;
            Ok(Some((value, ReferenceSource::PaperExact)))
        }
        ReferenceMode::Oracle => {
            let value = verify::oracle_eigenvalue(
                &config.potential,
                config.mesh.a(),
                config.mesh.b(),
                n,
                ctx,
            )?;
            Ok(Some((value, ReferenceSource::Oracle)))
        }
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, CliError> {
    let spec = build_spec(&args.common, args.format.as_deref(), args.reference.as_deref())?;
    let ctx = spec.context()?;
    let digits = spec.digits as usize;
    let indices: Vec<usize> = (spec.n_lo..=spec.n_hi).collect();

    // one run per index; independent, so the sweep parallelizes
    let runs: Vec<Result<_, CliError>> = indices
        .par_iter()
        .map(|&n| {
            let config = spec.problem(n, &ctx)?;
            let result = run_fd(&config)?;
            let reference = reference_for(&spec, n, &config, &ctx)?;
            Ok((n, result, reference))
        })
        .collect();

    let mut rows: Vec<Row> = Vec::new();
    let mut check_failures = 0usize;
    let mut check_report = String::new();
    for run in runs {
        let (n, result, reference) = run?;
        let r_n = format_sig(&result.theorem1.r_n, 6);
        for m in 0..=spec.rank {
            let omega = residual_norm(&result, m)?;
            let delta = reference.as_ref().map(|(value, _)| {
                let d = Float::with_val(ctx.prec(), result.lambda_at_rank(m) - value).abs();
                format_sig(&d, 3)
            });
            rows.push(Row {
                n,
                m,
                lambda: format_sig(result.lambda_at_rank(m), digits),
                delta,
                omega: format_sig(&omega, 3),
                r_n: r_n.clone(),
                convergent: result.theorem1.convergent,
            });
        }
        if args.check {
            let report = verify::check_invariants(&result)?;
            // allowed noise: five digits above tolerance, scaled by lambda0
            let mut allowed = ctx.tolerance().clone() * ctx.pow10(5);
            let scale = Float::with_val(ctx.prec(), result.basic.lambda0.clone().abs() + 1u32);
            allowed *= &scale;
            check_report.push_str(&format!(
                "n={n}: normalization defect {}\n",
                format_sig(&report.normalization, 3)
            ));
            for layer in &report.layers {
                let worst = layer.worst();
                let status = if worst <= allowed { "ok" } else { "FAIL" };
                if worst > allowed {
                    check_failures += 1;
                }
                check_report.push_str(&format!(
                    "n={n} layer {:2}: worst violation {} [{}]\n",
                    layer.layer,
                    format_sig(&worst, 3),
                    status
                ));
            }
        }
    }

    let output = match spec.format {
        OutputFormat::Table => render_table(&rows, &indices, spec.rank, digits),
        OutputFormat::Csv => render_csv(&rows),
        OutputFormat::Json => render_json(&rows),
    };
    print!("{output}");
    if args.check {
        eprint!("{check_report}");
        if check_failures > 0 {
            eprintln!("{check_failures} layer(s) exceeded the invariant threshold");
            return Ok(ExitCode::FAILURE);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_reference(args: &ReferenceArgs) -> Result<ExitCode, CliError> {
    let spec = build_spec(&args.common, None, None)?;
    let ctx = PrecisionContext::for_run(spec.digits, 0, 0)?;
    let digits = spec.digits as usize;
    for n in spec.n_lo..=spec.n_hi {
        let config = spec.problem(n, &ctx)?;
        let value = verify::oracle_eigenvalue(
            &config.potential,
            config.mesh.a(),
            config.mesh.b(),
            n,
            &ctx,
        )?;
        println!("{n},{}", format_sig(&value, digits));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Reference(args) => cmd_reference(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
