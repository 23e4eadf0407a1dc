//! Command-line front end for beam model updating.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use beamupdate::config::{load_config, parse_config, RunConfig};
use beamupdate::data::{load_measured, save_measured};
use beamupdate::report::{emit_histograms, histogram_csv, parse_chain_csv, write_atomic};
use beamupdate::workflow::{
    measured_data, model_table, report_from_chain, run_update, synthesize, write_outputs, write_report, Method,
    CHAIN_FILE, CONFIG_FILE, HISTOGRAM_FILE, MEASURED_FILE,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "beamupdate", version, about = "Finite-element beam updating from modal data")]
struct Cli {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the chain, optimizer and synthetic-data seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides `paths.output_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Elastic frequencies of the initial model (full, reduced, closed form).
    Model,
    /// Write synthetic measured data for the configured truth.
    Synth {
        /// Destination; defaults to `<output_dir>/measured.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Update the model and write reports and raw exports.
    Update {
        #[arg(long, value_enum, default_value_t = MethodArg::Bayes)]
        method: MethodArg,
    },
    /// Rebuild the Bayesian report from an exported chain.
    Report {
        /// Chain CSV; defaults to `<output_dir>/chain.csv`.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Bin predicted frequencies and shape coordinates over an exported chain.
    Histogram {
        #[arg(long)]
        chain: Option<PathBuf>,
        /// 0-based measured mode.
        #[arg(long)]
        mode: Option<usize>,
        /// 0-based measured coordinate (row of the shape matrix).
        #[arg(long)]
        coordinate: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Bayes,
    Ml,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bayes => Method::Bayes,
            MethodArg::Ml => Method::Ml,
            MethodArg::Both => Method::Both,
        }
    }
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p).with_context(|| format!("loading {}", p.display()))?,
        None => parse_config("{}", "defaults", None)?,
    };
    apply_overrides(cli, &mut cfg)?;
    Ok(cfg)
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) -> Result<()> {
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.paths.output_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(())
}

/// Configuration and data of the run that produced `chain`, when saved beside
/// it and no `--config` was given; otherwise the current configuration.
fn run_context(cli: &Cli, cfg: &RunConfig, chain: &Path) -> Result<(RunConfig, beamupdate::MeasuredModalData)> {
    let dir = chain.parent().unwrap_or(Path::new("."));
    let saved = dir.join(CONFIG_FILE);
    let mut run_cfg = cfg.clone();
    if cli.config.is_none() && saved.is_file() {
        run_cfg = load_config(&saved).with_context(|| format!("loading {}", saved.display()))?;
        apply_overrides(cli, &mut run_cfg)?;
        run_cfg.paths.output_dir = cfg.paths.output_dir.clone();
    }
    let beside = dir.join(MEASURED_FILE);
    let data = if beside.is_file() {
        load_measured(&beside)?
    } else {
        measured_data(&run_cfg)?
    };
    Ok((run_cfg, data))
}

fn load_chain(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_chain_csv(&text, &path.display().to_string())?.samples)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    let out_dir = cfg.paths.output_dir.clone();
    match &cli.command {
        Command::Model => {
            let table = model_table(&cfg)?;
            let csv = table.csv(&cfg.digest()?);
            let path = out_dir.join("model.csv");
            write_atomic(&path, csv.as_bytes())?;
            print!("{csv}");
            eprintln!("wrote {}", path.display());
        }
        Command::Synth { out } => {
            let data = synthesize(&cfg)?;
            let path = out.clone().unwrap_or_else(|| out_dir.join(MEASURED_FILE));
            save_measured(&data, &path)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Update { method } => {
            let data = measured_data(&cfg)?;
            let outcome = run_update(&cfg, &data, (*method).into())?;
            let files = write_outputs(&outcome, &cfg, &out_dir)?;
            for report in [outcome.bayes.as_ref().map(|b| &b.report), outcome.ml.as_ref().map(|m| &m.report)]
                .into_iter()
                .flatten()
            {
                print!("{}", report.render());
            }
            if let Some(b) = &outcome.bayes {
                eprintln!(
                    "acceptance rate {:.3}, skipped samples {}",
                    b.chain.acceptance_rate, b.predictive.skipped
                );
            }
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Report { chain } => {
            let chain = chain.clone().unwrap_or_else(|| out_dir.join(CHAIN_FILE));
            let samples = load_chain(&chain)?;
            let (cfg, data) = run_context(cli, &cfg, &chain)?;
            let (report, _) = report_from_chain(&cfg, &data, &samples)?;
            let files = write_report(&report, &out_dir)?;
            print!("{}", report.render());
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Histogram {
            chain,
            mode,
            coordinate,
            bins,
        } => {
            let chain = chain.clone().unwrap_or_else(|| out_dir.join(CHAIN_FILE));
            let samples = load_chain(&chain)?;
            let (cfg, data) = run_context(cli, &cfg, &chain)?;
            let (report, predictive) = report_from_chain(&cfg, &data, &samples)?;
            let h = &cfg.histogram;
            let pair = emit_histograms(
                &predictive,
                mode.unwrap_or(h.mode),
                coordinate.unwrap_or(h.coordinate),
                bins.unwrap_or(h.bins),
            )?;
            let csv = histogram_csv(&pair, &report.meta);
            let path = out_dir.join(HISTOGRAM_FILE);
            write_atomic(&path, csv.as_bytes())?;
            print!("{csv}");
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
