//! Benchmark CLI: configuration-driven adaptive experiments, strategy
//! comparisons, and tolerance convergence studies.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use fipinn::harness::{
    self, convergence_study, run_comparison, run_experiment, ExperimentConfig, ToleranceAxis,
};

#[derive(Parser)]
#[command(
    name = "fipinn",
    about = "Failure-informed adaptive collocation for neural PDE solvers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Sais,
    Rar,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    EpsP,
    EpsR,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Desk,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config (flags override the file).
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Enrichment strategy override.
        #[arg(long)]
        strategy: Option<StrategyArg>,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the budget-matched SAIS/Uniform/RAR comparison instead of a
        /// single strategy.
        #[arg(long)]
        compare: bool,
    },
    /// Sweep a tolerance axis and fit the log-log error slope.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: AxisArg,
        /// Comma-separated tolerance grid (>= 3 values spanning a decade).
        #[arg(long, value_delimiter = ',')]
        tolerances: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset suite.
    Bench {
        #[arg(long, value_enum, default_value_t = SuiteArg::Desk)]
        suite: SuiteArg,
        #[arg(long, default_value = "out/bench")]
        out: PathBuf,
    },
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    seed: Option<u64>,
    strategy: Option<StrategyArg>,
    out: Option<&PathBuf>,
) {
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(s) = strategy {
        cfg.adaptive.strategy = match s {
            StrategyArg::Sais => "sais",
            StrategyArg::Rar => "rar",
            StrategyArg::Uniform => "uniform",
        }
        .to_string();
    }
    if let Some(o) = out {
        cfg.output_dir = o.to_string_lossy().into_owned();
    }
}

/// Desk presets shipped with the binary; the files under `presets/` carry
/// the same contents for editing.
const DESK_PRESETS: &[(&str, &str)] = &[
    (
        "poisson_peak_2d_desk",
        include_str!("../../presets/poisson_peak_2d_desk.toml"),
    ),
    (
        "poisson_two_peak_2d_desk",
        include_str!("../../presets/poisson_two_peak_2d_desk.toml"),
    ),
    (
        "poisson_highdim_desk",
        include_str!("../../presets/poisson_highdim_desk.toml"),
    ),
    (
        "poisson_unbounded_2d_desk",
        include_str!("../../presets/poisson_unbounded_2d_desk.toml"),
    ),
    (
        "heat_unbounded_1d_desk",
        include_str!("../../presets/heat_unbounded_1d_desk.toml"),
    ),
    (
        "burgers_1d_desk",
        include_str!("../../presets/burgers_1d_desk.toml"),
    ),
    (
        "allen_cahn_1d_desk",
        include_str!("../../presets/allen_cahn_1d_desk.toml"),
    ),
];

const FULL_PRESETS: &[(&str, &str)] = &[(
    "poisson_peak_2d_full",
    include_str!("../../presets/poisson_peak_2d_full.toml"),
)];

fn print_report(report: &harness::MetricsReport) {
    println!(
        "{} [{}] seeds={} median_rel_l2={} mean_rel_l2={}",
        report.problem,
        report.strategy,
        report.seeds.len(),
        report
            .median_rel_l2
            .map(|v| format!("{v:.4e}"))
            .unwrap_or_else(|| "n/a".into()),
        report
            .mean_rel_l2
            .map(|v| format!("{v:.4e}"))
            .unwrap_or_else(|| "n/a".into()),
    );
    for run in &report.runs {
        let last = run.trace.rounds.last();
        println!(
            "  seed {}: rounds={} final_p_hat={} rel_l2={}",
            run.seed_index,
            run.trace.rounds.len(),
            last.map(|r| format!("{:.3e}", r.p_hat)).unwrap_or_default(),
            run.final_rel_l2
                .map(|v| format!("{v:.4e}"))
                .unwrap_or_else(|| "n/a".into()),
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            strategy,
            out,
            compare,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            apply_overrides(&mut cfg, seed, strategy, out.as_ref());
            if compare {
                let report = run_comparison(&cfg)?;
                for s in [&report.sais, &report.uniform, &report.rar] {
                    println!(
                        "{:<8} median_rel_l2={}",
                        s.strategy,
                        s.median_rel_l2
                            .map(|v| format!("{v:.4e}"))
                            .unwrap_or_else(|| "n/a".into())
                    );
                }
            } else {
                let report = run_experiment(&cfg)?;
                print_report(&report);
            }
        }
        Command::Converge {
            config,
            axis,
            tolerances,
            seeds,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            apply_overrides(&mut cfg, None, None, out.as_ref());
            let axis = match axis {
                AxisArg::EpsP => ToleranceAxis::EpsP,
                AxisArg::EpsR => ToleranceAxis::EpsR,
            };
            let est = convergence_study(&cfg, axis, &tolerances, seeds)?;
            println!(
                "axis={:?} slope={:.4} intercept={:.4} rms_residual={:.4}",
                est.axis, est.slope, est.intercept, est.rms_residual
            );
            for (tol, err) in &est.points {
                println!("  tol={tol:.4e} median_rel_l2={err:.4e}");
            }
            let json = serde_json::to_string_pretty(&est)?;
            let path = PathBuf::from(&cfg.output_dir).join("convergence.json");
            harness::io::write(&path, &json)?;
        }
        Command::Bench { suite, out } => {
            let presets: &[(&str, &str)] = match suite {
                SuiteArg::Desk => DESK_PRESETS,
                SuiteArg::Full => FULL_PRESETS,
            };
            for (name, text) in presets {
                let mut cfg = ExperimentConfig::from_toml(text)?;
                cfg.output_dir = out.join(name).to_string_lossy().into_owned();
                println!("== {name}");
                if *name == "poisson_peak_2d_desk" {
                    let report = run_comparison(&cfg)?;
                    for s in [&report.sais, &report.uniform, &report.rar] {
                        println!(
                            "{:<8} median_rel_l2={}",
                            s.strategy,
                            s.median_rel_l2
                                .map(|v| format!("{v:.4e}"))
                                .unwrap_or_else(|| "n/a".into())
                        );
                    }
                } else {
                    let report = run_experiment(&cfg)?;
                    print_report(&report);
                }
            }
        }
    }
    Ok(())
}
