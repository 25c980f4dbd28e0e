use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::warn;

use photonsrc::io::config::{parse_config_or_manifest, OutputFormat, RunConfig};
use photonsrc::io::manifest::{write_manifest, RunManifest};
use photonsrc::io::table::{write_table, write_table_json};
use photonsrc::{Error, ErrorClass};

mod commands;

use commands::Outcome;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "photonsrc",
    version,
    about = "Pulsed single-photon source simulations: two-photon and standard Jaynes-Cummings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config, or a manifest.json from an earlier run
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides output.directory)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and correlation maps
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Fixed Fock cutoff instead of the automatic one
    #[arg(long, global = true, value_name = "N")]
    fock_cutoff: Option<usize>,

    /// Pulses in the comb train
    #[arg(long, global = true, value_name = "M")]
    pulses: Option<usize>,

    /// Treat warnings as errors
    #[arg(long, global = true)]
    strict: bool,

    /// More log output (-v, -vv)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Dressed-state ladder: analytic against numerical eigenvalues
    Spectrum,
    /// Steady state under constant drive: occupations and g2(0) per coupling
    Steady,
    /// One Gaussian pulse: Fock dynamics and the three merits
    Pulse,
    /// Merits over a parameter grid (pulse-width sweeps, JC baseline)
    Sweep,
    /// Pulse widths giving a target efficiency for each pulse area
    Iso,
    /// Pulse-train g2(tau) comb
    Comb,
    /// Analytic-oracle and property suite
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Steady => "steady",
            Command::Pulse => "pulse",
            Command::Sweep => "sweep",
            Command::Iso => "iso",
            Command::Comb => "comb",
            Command::Selftest => "selftest",
        }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Numerical => EXIT_NUMERICAL,
        ErrorClass::Io => EXIT_IO,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_config_or_manifest(&text)?
        }
        None => commands::default_config(cli.command),
    };
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(n) = cli.fock_cutoff {
        cfg.numerics.fock_cutoff = Some(n);
    }
    if let Some(m) = cli.pulses {
        if m == 0 {
            return Err(Error::InvalidArgument("--pulses must be at least 1".into()));
        }
        cfg.pipeline.comb.pulses = m;
    }
    cfg.numerics.validate()?;
    Ok(cfg)
}

fn write_outputs(cfg: &RunConfig, outcome: &Outcome, dir: &Path) -> Result<Vec<String>, Error> {
    let mut written = Vec::new();
    for (name, table) in &outcome.tables {
        for format in &cfg.output.formats {
            let file = format!("{name}.{}", format.name());
            match format {
                OutputFormat::Csv => write_table(table, &dir.join(&file))?,
                OutputFormat::Json => write_table_json(table, &dir.join(&file))?,
            }
            written.push(file);
        }
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(Error::Config(errs)) => {
            eprintln!("error: invalid config");
            for e in &errs.0 {
                eprintln!("  {e}");
            }
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(e.class()));
        }
    };

    let dir = cfg.output.directory.clone();
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }

    let mut manifest = RunManifest::new(cli.command.name(), &cfg);
    let start = Instant::now();
    let result = commands::run(cli.command, &cfg);
    manifest
        .timings
        .insert("total_seconds".into(), start.elapsed().as_secs_f64());

    let mut code = 0;
    match result {
        Ok(outcome) => {
            match write_outputs(&cfg, &outcome, &dir) {
                Ok(files) => manifest.outputs = files,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_IO);
                }
            }
            for w in &outcome.warnings {
                warn!("{w}");
            }
            manifest.warnings = outcome.warnings.clone();
            manifest.convergence = outcome.convergence.clone();
            if cli.strict && !outcome.warnings.is_empty() {
                manifest.status = "failed".into();
                manifest.failure = Some(format!(
                    "{} warning(s) promoted to errors by --strict",
                    outcome.warnings.len()
                ));
                eprintln!("error: {}", manifest.failure.as_deref().unwrap_or_default());
                code = EXIT_NUMERICAL;
            } else if let Some(f) = &outcome.failure {
                manifest.status = "failed".into();
                manifest.failure = Some(f.clone());
                eprintln!("error: {f}");
                code = EXIT_NUMERICAL;
            } else {
                manifest.status = "ok".into();
            }
            for line in &outcome.summary {
                println!("{line}");
            }
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.failure = Some(e.to_string());
            eprintln!("error: {e}");
            code = exit_code(e.class());
        }
    }

    if let Err(e) = write_manifest(&manifest, &dir.join("manifest.json")) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(EXIT_IO);
    }
    ExitCode::from(code)
}
