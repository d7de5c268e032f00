use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polytail_cli::commands;
use polytail_cli::config::ExperimentConfig;
use polytail_cli::report::{emit_plot_data, run_pipeline, PipelineScope};

/// Tail asymptotics and stable-limit simulation for polynomials of
/// heavy-tailed random variables.
#[derive(Parser)]
#[command(name = "polytail", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config value, then $POLYTAIL_OUT, then
    /// ./polytail-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; affects wall time only, never results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tail arithmetic: per-monomial and polynomial tail specs.
    Tails(CommonArgs),
    /// Index summary and the shift/scale conditions.
    Indices(CommonArgs),
    /// Smooth-number decomposition, coloring and equivalence classes.
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
        /// Factorization bound.
        #[arg(long, default_value_t = 100_000)]
        bound: u64,
        /// Number of smooth-number ranks for the equivalence partition.
        #[arg(long, default_value_t = 8)]
        q: usize,
    },
    /// Simulate paths and export ensembles.
    Simulate(CommonArgs),
    /// Simulate and run the configured diagnostics.
    Diagnose(CommonArgs),
    /// Full pipeline into a report bundle, or plot-data emission from an
    /// existing bundle via --plot/--bundle.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Emit plot CSVs of this kind (tail-ladder, cf-grid, path-sample,
        /// trend) from --bundle instead of running.
        #[arg(long)]
        plot: Option<String>,
        /// Existing bundle directory for --plot.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
}

fn out_dir(cfg: &ExperimentConfig, cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os("POLYTAIL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("polytail-out"))
}

/// Exit codes: 2 invalid config, 3 numeric failure, 4 I/O failure.
fn classify(err: &anyhow::Error) -> u8 {
    if err.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        return 4;
    }
    let text = format!("{err:#}");
    if text.contains("config error") || text.contains("schema") || text.contains("invalid") {
        2
    } else {
        3
    }
}

fn load_config(common: &CommonArgs) -> Result<(ExperimentConfig, PathBuf), (u8, String)> {
    let mut cfg = ExperimentConfig::load(&common.config)
        .map_err(|e| (2u8, format!("invalid config: {e}")))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let base = common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

fn install_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

fn run() -> Result<(), (u8, String)> {
    let cli = Cli::parse();
    match cli.command {
        Command::Tails(common) => {
            let (cfg, _) = load_config(&common)?;
            install_threads(common.threads);
            let text = commands::tails(&cfg).map_err(|e| (classify(&e), format!("{e:#}")))?;
            println!("{text}");
            Ok(())
        }
        Command::Indices(common) => {
            let (cfg, _) = load_config(&common)?;
            install_threads(common.threads);
            let text = commands::indices(&cfg).map_err(|e| (classify(&e), format!("{e:#}")))?;
            println!("{text}");
            Ok(())
        }
        Command::Decompose { common, bound, q } => {
            let (cfg, _) = load_config(&common)?;
            install_threads(common.threads);
            let dir = out_dir(&cfg, &common.out);
            let text = commands::decompose(&cfg, bound, q, &dir)
                .map_err(|e| (classify(&e), format!("{e:#}")))?;
            println!("{text}");
            Ok(())
        }
        Command::Simulate(common) => {
            let (cfg, base) = load_config(&common)?;
            install_threads(common.threads);
            let dir = out_dir(&cfg, &common.out);
            run_pipeline(&cfg, &dir, PipelineScope::Simulate, &base)
                .map_err(|e| (classify(&e), format!("{e:#}")))?;
            println!("bundle written to {}", dir.display());
            Ok(())
        }
        Command::Diagnose(common) => {
            let (cfg, base) = load_config(&common)?;
            install_threads(common.threads);
            let dir = out_dir(&cfg, &common.out);
            run_pipeline(&cfg, &dir, PipelineScope::Diagnose, &base)
                .map_err(|e| (classify(&e), format!("{e:#}")))?;
            println!("bundle written to {}", dir.display());
            Ok(())
        }
        Command::Report { common, plot, bundle } => {
            if let Some(kind) = plot {
                let bundle = bundle
                    .ok_or_else(|| (2u8, "config error: --plot requires --bundle".to_string()))?;
                let dir = common.out.clone().unwrap_or_else(|| bundle.clone());
                return emit_plot_data(&bundle, &kind, &dir)
                    .map_err(|e| (classify(&e), format!("{e:#}")));
            }
            let (cfg, base) = load_config(&common)?;
            install_threads(common.threads);
            let dir = out_dir(&cfg, &common.out);
            run_pipeline(&cfg, &dir, PipelineScope::Report, &base)
                .map_err(|e| (classify(&e), format!("{e:#}")))?;
            println!("bundle written to {}", dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
