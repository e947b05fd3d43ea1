use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vqc_lab::config::{ExperimentConfig, Overrides};
use vqc_lab::emit::{self, write_file};
use vqc_lab::select::{run_select, scores_to_csv};
use vqc_lab::sweep::Workbench;
use vqc_lab::{run_sweep, LabError};

#[derive(Parser)]
#[command(
    name = "vqclab",
    version,
    about = "Gradient-variance experiments on variational quantum circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write CSV, SVG and per-run JSON.
    Sweep(RunArgs),
    /// Score every dr_max candidate and pick the best per diffusion strategy.
    SelectDr(RunArgs),
    /// Train a single run and write its report.
    TrainOne {
        #[command(flatten)]
        run: RunArgs,
        /// Index into the strategy list.
        #[arg(long, default_value_t = 0)]
        strategy: usize,
        /// Sweep value to train at (defaults to the first).
        #[arg(long)]
        value: Option<usize>,
        #[arg(long, default_value_t = 0)]
        repeat: usize,
    },
    /// Re-render the SVG chart from a variance CSV.
    Emit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// iris | wine | titanic | mnist | none
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_path: Option<PathBuf>,
    /// `qubits`, `layers`, or e.g. `qubits:2,4,6`.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to the config file's value, then
    /// `$VQCLAB_OUT`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), LabError> {
        let mut config = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        config.apply(&Overrides {
            dataset: self.dataset.clone(),
            data_path: self.data_path.clone(),
            sweep: self.sweep.clone(),
            repeats: self.repeats,
            seed: self.seed,
            out: None,
        })?;
        // validated when the workbench is built; select-dr fills in dr_max first
        let out = match &self.out {
            Some(o) => o.clone(),
            None => {
                let fallback = std::env::var_os("VQCLAB_OUT")
                    .map_or_else(|| PathBuf::from("out"), PathBuf::from);
                config.out_dir(&fallback)
            }
        };
        Ok((config, out))
    }
}

fn run(cli: Cli) -> Result<bool, LabError> {
    match cli.command {
        Command::Sweep(args) => {
            let (config, out) = args.load()?;
            let result = run_sweep(&config)?;
            write_file(&out.join("config.toml"), &config.to_toml()?)?;
            let written = emit::write_sweep(&out, &result)?;
            println!(
                "{} records, {} runs, {} failed, {} files in {}",
                result.records.len(),
                result.runs.len(),
                result.failures.len(),
                written.len() + 1,
                out.display()
            );
            for f in &result.failures {
                eprintln!(
                    "failed: {} at {} (repeat {}): {}",
                    f.strategy, f.axis_value, f.repeat, f.error
                );
            }
            Ok(!result.is_partial())
        }
        Command::SelectDr(args) => {
            let (config, out) = args.load()?;
            let sel = run_select(&config)?;
            write_file(&out.join("config.toml"), &config.to_toml()?)?;
            write_file(&out.join("select_dr.csv"), &scores_to_csv(&sel.scores)?)?;
            emit::write_sweep(&out, &sel.sweep)?;
            for (scenario, dr) in &sel.chosen {
                println!("{scenario}: dr_max = {dr}");
            }
            Ok(!sel.sweep.is_partial())
        }
        Command::TrainOne {
            run,
            strategy,
            value,
            repeat,
        } => {
            let (mut config, out) = run.load()?;
            let strategies = config.strategies();
            let spec = *strategies
                .get(strategy)
                .ok_or_else(|| LabError::Config(format!("no strategy #{strategy}")))?;
            let value = value.unwrap_or(config.sweep.values()[0]);
            config.sweep.values = Some(vec![value]);
            config.strategies = vec![spec];
            let bench = Workbench::new(&config)?;
            let outcome = bench.run_one(&spec, value, repeat)?;
            let dataset = bench.dataset_name();
            let doc = emit::run_document(&dataset, Some(config.sweep.axis), &outcome);
            let path = out.join(emit::run_file_name(&outcome, Some(config.sweep.axis)));
            write_file(&path, &emit::to_json(&doc)?)?;
            match &outcome.report {
                Some(r) => println!(
                    "{} {}={} seed={}: test accuracy {:.4}, final valid loss {:.4}",
                    outcome.strategy,
                    config.sweep.axis,
                    value,
                    outcome.seed,
                    r.test_accuracy,
                    r.epochs.last().map_or(f64::NAN, |e| e.valid_loss)
                ),
                None => println!("{}: initialization only", outcome.strategy),
            }
            println!("report: {}", path.display());
            Ok(true)
        }
        Command::Emit { csv, svg } => {
            let text = std::fs::read_to_string(&csv).map_err(|e| LabError::io(&csv, e))?;
            let records = emit::parse_csv(&text)?;
            write_file(&svg, &emit::records_to_svg(&records)?)?;
            println!("{} records -> {}", records.len(), svg.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
