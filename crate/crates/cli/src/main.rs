//! `labelsense`: run compressed-label experiments or the oracle audits.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use labelsense::harness::{
    run_audit, run_experiment, AuditConfig, DataSource, RunConfig, SyntheticSpec,
};
use labelsense::{Algorithm, Error, ErrorKind, MatrixKind};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_AUDIT: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "labelsense",
    version,
    about = "Sparse multi-label prediction via compressed labels"
)]
#[command(group(ArgGroup::new("source").args(["train", "synthetic"])))]
struct Cli {
    /// Training set (text format with a `#dims` header).
    #[arg(long, requires = "test")]
    train: Option<PathBuf>,

    /// Test set, same format and dimensions as the training set.
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,

    /// Generate planted synthetic data: `d=..,p=..,k=..,n=..,noise=..`.
    #[arg(long)]
    synthetic: Option<String>,

    #[arg(long, default_value = "hadamard", value_parser = parse_kind)]
    matrix: MatrixKind,

    /// Comma-separated numbers of compressed targets.
    #[arg(long = "m", value_delimiter = ',', default_value = "64,128,256")]
    m_list: Vec<usize>,

    #[arg(long, default_value_t = 5)]
    k_max: usize,

    /// Comma-separated reconstruction algorithms: omp, cosamp, cd.
    #[arg(long = "algo", value_delimiter = ',', default_value = "omp", value_parser = parse_algo)]
    algorithms: Vec<Algorithm>,

    /// Ridge penalty; 0 requires a nonsingular XᵀX.
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output path: CSV for experiments, JSON lines for audits.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also run the uncompressed one-against-all reference (m = d).
    #[arg(long)]
    one_against_all: bool,

    /// Directory to store generated matrices and trained models.
    #[arg(long)]
    artifacts: Option<PathBuf>,

    /// Run the oracle sweeps and bound audits instead of an experiment.
    #[arg(long)]
    audit: bool,
}

fn parse_kind(s: &str) -> Result<MatrixKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_for(err: &Error) -> ExitCode {
    match err.kind() {
        ErrorKind::Config => ExitCode::from(EXIT_CONFIG),
        ErrorKind::Data => ExitCode::from(EXIT_DATA),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn run(cli: Cli) -> labelsense::Result<ExitCode> {
    if cli.audit {
        let cfg = AuditConfig {
            seed: cli.seed,
            ..AuditConfig::default()
        };
        let report = run_audit(&cfg);
        let out = cli.out.unwrap_or_else(|| PathBuf::from("audit.jsonl"));
        report.write(&out)?;
        for s in &report.sections {
            println!("{:<24} {}", s.name, if s.pass { "PASS" } else { "FAIL" });
        }
        log::info!("audit report written to {}", out.display());
        return Ok(if report.passed() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(EXIT_AUDIT)
        });
    }

    let data = match (cli.train, cli.test, cli.synthetic) {
        (Some(train), Some(test), None) => DataSource::Files { train, test },
        (None, None, Some(text)) => {
            let mut spec: SyntheticSpec = text.parse()?;
            // The data seed follows --seed unless the synthetic string names its own.
            if !text.split(',').any(|p| p.trim().starts_with("seed=")) {
                spec.seed = cli.seed;
            }
            DataSource::Synthetic(spec)
        }
        _ => {
            return Err(Error::Config(
                "give either --train and --test, or --synthetic".into(),
            ))
        }
    };
    let cfg = RunConfig {
        data,
        matrix: cli.matrix,
        m_list: cli.m_list,
        k_max: cli.k_max,
        algorithms: cli.algorithms,
        lambda: cli.lambda,
        seed: cli.seed,
        out: cli.out.clone(),
        one_against_all: cli.one_against_all,
        artifacts: cli.artifacts,
    };
    let output = run_experiment(&cfg)?;
    log::info!(
        "trained on {} examples (fingerprint {}), evaluated on {}",
        output.n_train,
        &output.train_fingerprint[..16],
        output.n_test
    );
    if cli.out.is_none() {
        print!("{}", labelsense::harness::records_to_csv(&output.records));
    }
    Ok(ExitCode::SUCCESS)
}
