use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meanclt::harness::{self, ExperimentConfig, Preset, RunManifest};
use meanclt::Error;

#[derive(Parser)]
#[command(name = "meanclt", version, about = "Mean CLT laboratory: W1 rates, explicit bounds and dependence diagnostics")]
struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix, overriding the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a built-in experiment.
    Preset {
        /// mds-doubling, circle-walk, iid-rademacher-exact or doubling-nonadapted
        name: String,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output prefix (defaults to the preset name).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fuzz the covariance and dispersion inequalities on random finite laws.
    CheckAppendix {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tabulate dependence and mixing conditions for a config's process.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        /// Index window of the theta search.
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Merge run manifests into one table.
    Report {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        /// Write `<prefix>.csv` and `<prefix>.json` instead of CSV on stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("MEANCLT_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Domain(format!("MEANCLT_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Resource(e.to_string()))?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn print_summary(m: &RunManifest) {
    println!("{:>8} {:>12} {:>12} {:>10} {:>10} {:>12} {:>12}", "n", "d1", "sqrt(n)*d1", "se", "ks", "bound_t21", "bound_t22");
    for r in &m.rows {
        println!(
            "{:>8} {:>12} {:>12} {:>10} {:>10} {:>12} {:>12}",
            r.n,
            fmt_opt(r.d1_normalized),
            fmt_opt(r.d1_unnormalized),
            fmt_opt(r.d1_se),
            fmt_opt(r.ks),
            fmt_opt(r.bound_t21),
            fmt_opt(r.bound_t22)
        );
    }
    if let Some(f) = &m.rate_fit {
        println!("rate fit: slope {:.4}, intercept {:.4}, r2 {:.4}", f.slope, f.intercept, f.r2);
    }
    for n in &m.notes {
        println!("note: {n}");
    }
}

fn finish_run(m: RunManifest, prefix: Option<&Path>) -> Result<ExitCode, Error> {
    print_summary(&m);
    if let Some(p) = prefix {
        println!("wrote {}.csv and {}.manifest.json", p.display(), p.display());
    }
    match &m.failure {
        Some(f) => {
            eprintln!("error: stage {} failed: {}", f.stage, f.message);
            Ok(ExitCode::from(f.exit_code as u8))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if output.is_some() {
                cfg.output = output;
            }
            let m = harness::run(&cfg)?;
            finish_run(m, cfg.output.as_deref())
        }
        Command::Preset { name, n_max, reps, seed, output } => {
            let p: Preset = name.parse()?;
            let mut cfg = p.config(n_max, reps, seed)?;
            cfg.output = Some(output.unwrap_or_else(|| PathBuf::from(p.name())));
            let m = harness::run(&cfg)?;
            finish_run(m, cfg.output.as_deref())
        }
        Command::CheckAppendix { count, seed } => {
            let r = harness::check_appendix(count, seed)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            if r.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: {} appendix checks failed", r.failures.len());
                Ok(ExitCode::from(1))
            }
        }
        Command::Diagnose { config, window } => {
            let cfg = ExperimentConfig::load(&config)?;
            let r = harness::diagnose_conditions(&cfg.process, &cfg.observable, cfg.kmax, cfg.alpha.as_ref(), window)?;
            let text = serde_json::to_string_pretty(&r)?;
            if let Some(prefix) = &cfg.output {
                let mut p = prefix.as_os_str().to_owned();
                p.push(".diagnostics.json");
                std::fs::write(&p, &text)?;
            }
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { manifests, output } => {
            let merged = harness::merge_reports(&manifests)?;
            match output {
                Some(prefix) => {
                    let mut csv = prefix.as_os_str().to_owned();
                    csv.push(".csv");
                    let mut json = prefix.as_os_str().to_owned();
                    json.push(".json");
                    merged.write_csv(std::fs::File::create(&csv)?)?;
                    std::fs::write(&json, serde_json::to_string_pretty(&merged)?)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    merged.write_csv(&mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
