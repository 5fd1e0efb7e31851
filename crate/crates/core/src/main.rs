//! Command-line front end: figure emission, grid validation, branch tables,
//! and parameter sweeps.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 bad input, 3 I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scs_teleport::cavity::Situation;
use scs_teleport::fock::DEFAULT_TAIL_BOUND;
use scs_teleport::pipeline::{evaluate_point, EvalParams};
use scs_teleport::sweep::{
    render_csv, render_figures, render_json, run_sweep, OutputFormat, SweepConfig,
};
use scs_teleport::validate::run_validation;
use scs_teleport::Error;

#[derive(Parser)]
#[command(
    name = "scs-teleport",
    version,
    about = "Deterministic simulator for teleporting superposed coherent states \
             through an unequal-amplitude entangled coherent channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write the figure data files (CSV) into a directory.
    Figures {
        /// Sweep configuration file (JSON); defaults to the standard grid.
        #[arg(long, value_name = "FILE")]
        grid: Option<PathBuf>,
        /// Output directory for the figure files.
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        /// Override the numerical tail bound.
        #[arg(long)]
        tail: Option<f64>,
    },
    /// Check every simulation invariant against its closed form and list
    /// printed expressions the computation contradicts.
    Validate {
        #[arg(long)]
        tail: Option<f64>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the five heralded branches at one parameter point.
    BranchTable {
        /// Mean photon number |α|² of the payload.
        #[arg(long, default_value_t = 4.0)]
        alpha_sq: f64,
        /// Payload polar angle θ.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        theta: f64,
        /// Payload azimuthal angle φ.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long)]
        tail: Option<f64>,
    },
    /// Evaluate the parameter grid into a flat table.
    Sweep {
        /// Sweep configuration file (JSON); defaults to the standard grid.
        #[arg(long, value_name = "FILE")]
        grid: Option<PathBuf>,
        /// Override the mean photon grid (comma-separated |α|² values).
        #[arg(long, value_delimiter = ',')]
        alpha_sq: Option<Vec<f64>>,
        /// Override the θ grid (comma-separated angles).
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// Override the φ grid (comma-separated angles).
        #[arg(long, value_delimiter = ',')]
        phi: Option<Vec<f64>>,
        #[arg(long)]
        tail: Option<f64>,
        /// Output file; "-" writes to stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// Table encoding; overrides the config's choice.
        #[arg(long, value_enum)]
        format: Option<TableFormat>,
    },
}

/// Errors with an exit-code classification.
enum CliError {
    /// Simulation invariant or validation failure.
    Invariant(String),
    /// Bad arguments, config, or parameter domain.
    BadInput(String),
    /// Filesystem failure.
    Io(String),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::Invariant(_) | Error::CutoffLeak { .. } => CliError::Invariant(err.to_string()),
            _ => CliError::BadInput(err.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::BadInput(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invariant(m) | CliError::BadInput(m) | CliError::Io(m) => m,
        }
    }
}

fn io_err(context: &str, err: std::io::Error) -> CliError {
    CliError::Io(format!("{context}: {err}"))
}

fn load_config(
    grid: Option<&Path>,
    tail: Option<f64>,
    alpha_sq: Option<Vec<f64>>,
    theta: Option<Vec<f64>>,
    phi: Option<Vec<f64>>,
) -> Result<SweepConfig, CliError> {
    let mut config = match grid {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| io_err(&format!("reading {}", path.display()), e))?;
            SweepConfig::from_json_str(&text)?
        }
        None => SweepConfig::default(),
    };
    if let Some(a) = alpha_sq {
        config.alpha_sq_grid = a;
    }
    if let Some(t) = theta {
        config.theta_grid = t;
    }
    if let Some(p) = phi {
        config.phi_grid = p;
    }
    if let Some(t) = tail {
        config.truncation_tail = t;
    }
    config.validate()?;
    Ok(config)
}

fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    if path.as_os_str() == "-" {
        std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| io_err("writing stdout", e))
    } else {
        std::fs::write(path, content)
            .map_err(|e| io_err(&format!("writing {}", path.display()), e))
    }
}

fn cmd_figures(grid: Option<PathBuf>, out: PathBuf, tail: Option<f64>) -> Result<(), CliError> {
    let config = load_config(grid.as_deref(), tail, None, None, None)?;
    let files = render_figures(&config)?;
    std::fs::create_dir_all(&out)
        .map_err(|e| io_err(&format!("creating {}", out.display()), e))?;
    for (name, content) in &files {
        let path = out.join(name);
        std::fs::write(&path, content)
            .map_err(|e| io_err(&format!("writing {}", path.display()), e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_validate(
    tail: Option<f64>,
    format: ReportFormat,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let report = run_validation(tail.unwrap_or(DEFAULT_TAIL_BOUND))?;
    let rendered = match format {
        ReportFormat::Text => report.render_text(),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Invariant(format!("report not serializable: {e}")))?;
            s.push('\n');
            s
        }
    };
    match out {
        Some(path) => write_output(&path, &rendered)?,
        None => print!("{rendered}"),
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Invariant(
            "one or more simulation invariants failed; see report".into(),
        ))
    }
}

fn cmd_branch_table(
    alpha_sq: f64,
    theta: f64,
    phi: f64,
    tail: Option<f64>,
) -> Result<(), CliError> {
    let params =
        EvalParams::new(alpha_sq, theta, phi).with_tail(tail.unwrap_or(DEFAULT_TAIL_BOUND));
    let point = evaluate_point(&params)?;

    println!(
        "heralded branches at |α|² = {alpha_sq}, θ = {theta}, φ = {phi} (x = {:.6e})",
        point.x
    );
    println!(
        "{:<6} {:<14} {:<14} {:>14} {:>14}  {}",
        "case", "sum-port", "diff-port", "p(simulated)", "p(closed)", "action"
    );
    let cases = [
        ("i", "zero", "zero", "discard (no recovery)"),
        ("ii", "nonzero-even", "zero", "remix with odd ancilla"),
        ("iii", "zero", "nonzero-even", "π shift, remix with odd ancilla"),
        ("iv", "odd", "zero", "remix with even ancilla"),
        ("v", "zero", "odd", "π shift, remix with even ancilla"),
    ];
    let mut total = 0.0;
    for (idx, (name, sum_port, diff_port, action)) in cases.iter().enumerate() {
        let sim = point.branch_probs_sim[idx];
        let closed = point.branch_probs_closed[idx];
        if !sim.is_finite() || !closed.is_finite() {
            return Err(CliError::Invariant(format!(
                "non-finite branch probability in case {name}"
            )));
        }
        total += sim;
        println!(
            "{:<6} {:<14} {:<14} {:>14.9e} {:>14.9e}  {}",
            name, sum_port, diff_port, sim, closed, action
        );
    }
    println!(
        "sum = {:.12} (impossible-pair weight {:.3e})",
        total, point.dark_weight
    );
    println!(
        "case-i fidelity: simulated {:.9}, closed form {:.9}",
        point.case_i_fidelity_sim, point.case_i_fidelity_closed
    );
    for report in [&point.minus, &point.plus] {
        let (p_a, f_a) = report
            .recovery
            .situation(Situation::A)
            .map(|r| (r.probability, r.fidelity))
            .unwrap_or((0.0, 0.0));
        println!(
            "family {}: direct-success p = {:.6}, fidelity = {:.9}, average payoff = {:.9}",
            report.family.name(),
            p_a,
            f_a,
            report.conditional_fidelity()
        );
    }
    println!("average fidelity: {:.12}", point.f_avg_sim);

    if (total + point.dark_weight - 1.0).abs() > 1e-9 {
        return Err(CliError::Invariant(format!(
            "branch probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    grid: Option<PathBuf>,
    alpha_sq: Option<Vec<f64>>,
    theta: Option<Vec<f64>>,
    phi: Option<Vec<f64>>,
    tail: Option<f64>,
    out: PathBuf,
    format: Option<TableFormat>,
) -> Result<(), CliError> {
    let config = load_config(grid.as_deref(), tail, alpha_sq, theta, phi)?;
    let rows = run_sweep(&config)?;
    let effective = match format {
        Some(TableFormat::Csv) => OutputFormat::Csv,
        Some(TableFormat::Json) => OutputFormat::Json,
        None => config.format,
    };
    let rendered = match effective {
        OutputFormat::Csv => render_csv(&rows)?,
        OutputFormat::Json => render_json(&rows)?,
    };
    write_output(&out, &rendered)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Figures { grid, out, tail } => cmd_figures(grid, out, tail),
        Command::Validate { tail, format, out } => cmd_validate(tail, format, out),
        Command::BranchTable {
            alpha_sq,
            theta,
            phi,
            tail,
        } => cmd_branch_table(alpha_sq, theta, phi, tail),
        Command::Sweep {
            grid,
            alpha_sq,
            theta,
            phi,
            tail,
            out,
            format,
        } => cmd_sweep(grid, alpha_sq, theta, phi, tail, out, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
