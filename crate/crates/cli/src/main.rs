use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lser::frontend::MapKind;
use lser::pipeline::synthetic::{make_synthetic_corpus, SyntheticSpec};
use lser::pipeline::{
    run_all, run_evaluate, run_preprocess, run_simulate, EvaluationOutput, PipelineConfig,
    PipelineError, StageReport, SweepConfig,
};
use lser::readout::Stratify;

#[derive(Parser)]
#[command(name = "lser", version, about = "Speech emotion recognition with source/vocal-tract spiking reservoirs")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a configuration file with every default filled in.
    InitConfig {
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the 7-class synthetic test corpus.
    MakeSyntheticCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        per_class: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        duration_s: f64,
    },
    /// Compute and cache the source and vocal-tract maps.
    Preprocess(Opts),
    /// Run the reservoirs on the cached maps and cache the liquid states.
    Simulate(Opts),
    /// Cross-validate the readout on the cached states.
    Evaluate(Opts),
    /// Preprocess, simulate and evaluate.
    RunAll(Opts),
    /// Evaluate over a grid of principal-component counts.
    Sweep(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum Reservoir {
    Source,
    VocalTract,
}

#[derive(Clone, Copy, ValueEnum)]
enum StratifyArg {
    Emotion,
    EmotionSpeaker,
}

#[derive(Args, Clone)]
struct Opts {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, env = "LSER_CACHE_DIR")]
    cache: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    lp_order: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    fmin: Option<f64>,
    #[arg(long)]
    fmax: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    log_floor_db: Option<f64>,
    /// Topology seed of the vocal-tract reservoir; the source reservoir uses seed + 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the train/test splits.
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    dt_ms: Option<f64>,
    #[arg(long)]
    tau_minus_ratio_vt: Option<f64>,
    #[arg(long)]
    tau_minus_ratio_src: Option<f64>,
    #[arg(long)]
    gmax: Option<f64>,
    #[arg(long)]
    a_plus: Option<f64>,
    /// Run one reservoir only.
    #[arg(long, value_enum)]
    single_reservoir: Option<Reservoir>,
    #[arg(long)]
    k_vt: Option<usize>,
    #[arg(long)]
    k_src: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, value_enum)]
    stratify: Option<StratifyArg>,
    /// Label permutations for a significance test.
    #[arg(long)]
    permutations: Option<usize>,
    /// Component grid `A..BxC..D` (vocal tract x source).
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

impl Opts {
    fn resolve(&self, sweep_default: Option<&str>) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($opt:expr, $($field:tt)+) => {
                if let Some(v) = $opt.clone() {
                    $($field)+ = v;
                }
            };
        }
        set!(self.corpus, c.corpus);
        set!(self.cache, c.cache_dir);
        set!(self.out, c.output_dir);
        set!(self.jobs, c.jobs);
        set!(self.lp_order, c.frontend.lp_order);
        set!(self.fmin, c.frontend.fmin_hz);
        set!(self.fmax, c.frontend.fmax_hz);
        set!(self.log_floor_db, c.frontend.log_floor_db);
        if let Some(n) = self.channels {
            c.frontend.channels = n;
            c.reservoir.vocal_tract.n_layers = n;
            c.reservoir.source.n_layers = n;
        }
        if let Some(seed) = self.seed {
            c.reservoir.set_seed(seed);
        }
        set!(self.split_seed, c.readout.seed);
        for kind in MapKind::BOTH {
            let r = c.reservoir.get_mut(kind);
            set!(self.dt_ms, r.dt_ms);
            set!(self.gmax, r.g_max);
            if self.a_plus.is_some() {
                r.a_plus = self.a_plus;
            }
        }
        set!(self.tau_minus_ratio_vt, c.reservoir.vocal_tract.tau_minus_ratio);
        set!(self.tau_minus_ratio_src, c.reservoir.source.tau_minus_ratio);
        if let Some(r) = self.single_reservoir {
            c.single_reservoir = Some(match r {
                Reservoir::Source => MapKind::Source,
                Reservoir::VocalTract => MapKind::VocalTract,
            });
        }
        set!(self.k_vt, c.readout.k_vt);
        set!(self.k_src, c.readout.k_src);
        set!(self.folds, c.readout.n_folds);
        if let Some(s) = self.stratify {
            c.readout.stratify = match s {
                StratifyArg::Emotion => Stratify::Emotion,
                StratifyArg::EmotionSpeaker => Stratify::EmotionSpeaker,
            };
        }
        set!(self.permutations, c.permutations);
        if let Some(spec) = self.sweep.as_deref().or(sweep_default) {
            c.sweep = Some(SweepConfig::parse(spec, self.stride).map_err(anyhow::Error::msg)?);
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_stage(r: &StageReport) {
    println!(
        "{}: {} computed, {} reused, {} failed",
        r.stage,
        r.computed,
        r.reused,
        r.failures.len()
    );
    for f in &r.failures {
        eprintln!("  {}: {}", f.path.display(), f.reason);
    }
}

fn print_evaluation(out: &EvaluationOutput, config: &PipelineConfig) {
    let r = &out.report;
    println!(
        "accuracy: {:.2}% ± {:.2}% over {} folds (k_vt={}, k_src={})",
        100.0 * r.mean_accuracy,
        100.0 * r.ci95,
        r.n_folds,
        r.k_vt,
        r.k_src
    );
    if let Some(cells) = &out.sweep {
        if let Some(best) = cells.iter().max_by(|a, b| a.mean_acc.total_cmp(&b.mean_acc)) {
            println!(
                "sweep: {} cells, best {:.2}% at (k_vt={}, k_src={})",
                cells.len(),
                100.0 * best.mean_acc,
                best.k_vt,
                best.k_src
            );
        }
    }
    if let Some(p) = &out.permutation {
        println!(
            "permutation test: p = {:.4} ({} permutations)",
            p.p_value,
            p.null_accuracies.len()
        );
    }
    println!("reports written to {}", config.output_dir.display());
}

fn stage(report: Result<StageReport, PipelineError>) -> Result<ExitCode> {
    let report = report?;
    print_stage(&report);
    Ok(if report.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::InitConfig { out } => {
            let text = PipelineConfig::default().to_toml();
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::MakeSyntheticCorpus {
            out,
            per_class,
            seed,
            duration_s,
        } => {
            if per_class == 0 || !(duration_s > 0.05) {
                bail!("need --per-class >= 1 and --duration-s > 0.05");
            }
            let spec = SyntheticSpec {
                per_class,
                seed,
                duration_s,
                ..SyntheticSpec::default()
            };
            let paths = make_synthetic_corpus(&out, &spec)?;
            println!("wrote {} files to {}", paths.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Preprocess(o) => stage(run_preprocess(&o.resolve(None)?)),
        Command::Simulate(o) => stage(run_simulate(&o.resolve(None)?)),
        Command::Evaluate(o) => {
            let c = o.resolve(None)?;
            print_evaluation(&run_evaluate(&c)?, &c);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(o) => {
            let c = o.resolve(Some("1..40x1..50"))?;
            print_evaluation(&run_evaluate(&c)?, &c);
            Ok(ExitCode::SUCCESS)
        }
        Command::RunAll(o) => {
            let c = o.resolve(None)?;
            match run_all(&c) {
                Ok(summary) => {
                    print_stage(&summary.preprocess);
                    print_stage(&summary.simulate);
                    print_evaluation(&summary.evaluation, &c);
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ PipelineError::StageFailed { .. }) => {
                    eprintln!("error: {e}");
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
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
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
