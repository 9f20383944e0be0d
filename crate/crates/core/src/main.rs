use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcmc::cli::{
    artifact_path, error_json, parse_complex, run_compare, run_flatten, run_parameterize, run_report, MuSource,
    ReportFormat, RunConfig,
};
use qcmc::{Error, SolverConfig};

#[derive(Parser)]
#[command(name = "qcmc", version, about = "Quasi-conformal maps of multiply-connected domains onto circle domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flatten a surface mesh into the plane.
    Flatten {
        input: PathBuf,
        #[arg(short, long, default_value = "flat")]
        output: PathBuf,
    },
    /// Map a mesh onto a punctured disk.
    Parameterize(ParamArgs),
    /// Compare two runs on the same mesh from their report JSON files.
    Compare { report_a: PathBuf, report_b: PathBuf },
    /// Tabulate report JSON files.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    input: PathBuf,
    /// Output prefix; artifacts are written as <prefix>.obj, <prefix>_report.json, ...
    #[arg(short, long, default_value = "qcmc")]
    output: PathBuf,
    /// Constant target coefficient `re,im`.
    #[arg(long, conflicts_with = "mu_file", allow_hyphen_values = true)]
    mu_const: Option<String>,
    /// Per-face target coefficient CSV (`face_index,re,im`).
    #[arg(long)]
    mu_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Keep the initially fitted circles.
    #[arg(long)]
    fixed_module: bool,
    /// Also write the final operator and constraint matrices (Matrix Market).
    #[arg(long)]
    dump_matrices: bool,
    /// Report formats, comma separated.
    #[arg(long, default_value = "json")]
    format: String,
}

impl ParamArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mu_source = match (&self.mu_const, &self.mu_file) {
            (Some(c), _) => MuSource::Constant(parse_complex(c)?),
            (None, Some(p)) => MuSource::File(p.clone()),
            (None, None) => MuSource::Zero,
        };
        let report_formats = self.format.split(',').map(str::parse).collect::<Result<BTreeSet<ReportFormat>, _>>()?;
        Ok(RunConfig {
            input_path: self.input.clone(),
            output_prefix: self.output.clone(),
            mu_source,
            solver: SolverConfig {
                epsilon: self.epsilon,
                max_iter: self.max_iter,
                step: self.step,
                fixed_module: self.fixed_module,
                p: 2,
            },
            report_formats,
            dump_matrices: self.dump_matrices,
        })
    }
}

fn fail(err: &Error, prefix: Option<&PathBuf>) -> ExitCode {
    let json = error_json(err);
    eprintln!("{json}");
    if let Some(p) = prefix {
        // best effort; the message is already on stderr
        let _ = std::fs::write(artifact_path(p, "_error.json"), &json);
    }
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Flatten { input, output } => match run_flatten(&input, &output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e, Some(&output)),
        },
        Command::Parameterize(args) => {
            let result = args.config().and_then(|cfg| run_parameterize(&cfg));
            match result {
                Ok(out) => {
                    let r = &out.report;
                    println!(
                        "{}: {} faces, {} iterations, mean(mu) {:.4}, std(mu) {:.4}, flips {}, {:.2}s",
                        r.mesh, r.faces, r.iterations, r.mu_error_mean, r.mu_error_std, r.flips, r.time_seconds
                    );
                    for w in &r.warnings {
                        eprintln!("warning: {w}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, Some(&args.output)),
            }
        }
        Command::Compare { report_a, report_b } => match run_compare(&report_a, &report_b) {
            Ok(csv) => {
                print!("{csv}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e, None),
        },
        Command::Report { reports } => match run_report(&reports) {
            Ok(table) => {
                print!("{table}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e, None),
        },
    }
}
