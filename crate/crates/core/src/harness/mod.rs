//! Experiment harness: runs configured adaptive experiments, budget-matched
//! strategy comparisons, and tolerance convergence studies, writing metrics
//! JSON and plot-ready CSVs.

pub mod config;
pub mod eval;
pub mod io;

pub use config::{build_prior, initial_training_set, problem_by_id, ExperimentConfig};
pub use eval::{evaluation_grid, relative_l2, EvalGrid, ReferenceTable};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptive::{run_fi_pinn, AdaptiveOutcome, AdaptiveTrace};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::derive_seed;

/// One seeded run's summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed_index: usize,
    pub seed: u64,
    pub trace: AdaptiveTrace,
    pub final_rel_l2: Option<f64>,
    pub max_abs_error: Option<f64>,
}

/// Experiment output: config echo, per-seed runs, and seed aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub problem: String,
    pub strategy: String,
    pub version: String,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub runs: Vec<SeedRun>,
    /// Median and mean of the per-seed final relative L2 errors.
    pub median_rel_l2: Option<f64>,
    pub mean_rel_l2: Option<f64>,
    pub config: ExperimentConfig,
}

impl MetricsReport {
    /// JSON with wall-clock fields zeroed: equal for reruns of the same
    /// config and master seed.
    pub fn stable_json(&self) -> Result<String> {
        let mut clone = self.clone();
        for run in &mut clone.runs {
            for r in &mut run.trace.rounds {
                r.seconds = 0.0;
            }
        }
        Ok(serde_json::to_string_pretty(&clone)?)
    }
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[values.len() / 2])
}

/// Per-seed artifacts written under `out_dir/seed_k/`.
fn write_seed_outputs(
    dir: &Path,
    problem_dim: usize,
    outcome: &AdaptiveOutcome,
    grid: &EvalGrid,
    net: &Network,
) -> Result<()> {
    io::write(&dir.join("trace.csv"), &io::trace_csv(&outcome.trace))?;
    for art in &outcome.artifacts {
        io::write(
            &dir.join(format!("points_round_{}.csv", art.round)),
            &io::points_csv(problem_dim, &art.added_points),
        )?;
        io::write(
            &dir.join(format!("loss_history_round_{}.csv", art.round)),
            &io::history_csv(&art.history),
        )?;
        let ck = serde_json::to_string(&art.checkpoint)?;
        io::write(&dir.join(format!("checkpoint_round_{}.json", art.round)), &ck)?;
        if let Some(rounds) = &art.sais_rounds {
            io::write(
                &dir.join(format!("sais_round_{}.csv", art.round)),
                &io::sais_rounds_csv(problem_dim, rounds),
            )?;
        }
        if let Some(p) = &art.sais_final_proposal {
            io::write(
                &dir.join(format!("sais_proposal_round_{}.json", art.round)),
                &serde_json::to_string(p)?,
            )?;
        }
    }
    io::write(&dir.join("field_pred.csv"), &io::field_pred_csv(grid, net)?)?;
    Ok(())
}

/// One full seeded adaptive run for a strategy; returns the outcome, the
/// final network, and its grid metrics.
fn run_one_seed(
    cfg: &ExperimentConfig,
    strategy: &str,
    seed: u64,
    budget: Option<Vec<usize>>,
    stop_on_tolerance: bool,
) -> Result<(AdaptiveOutcome, Network, Option<f64>, Option<f64>)> {
    let problem = cfg.build_problem()?;
    let mut net = Network::init(&cfg.widths, derive_seed(seed, &[10]))?;
    let mut ts = initial_training_set(&problem, cfg, seed)?;
    let prior = build_prior(&problem, cfg.prior.as_ref(), derive_seed(seed, &[11]))?;
    let grid = evaluation_grid(&problem, cfg.grid_n)?;

    let mut adaptive = cfg.adaptive_config(strategy, seed, budget)?;
    if !stop_on_tolerance {
        // Budget-matched baseline runs train the full schedule regardless of
        // their own failure estimate.
        adaptive.eps_p = f64::MIN_POSITIVE;
    }

    let eval_fn = |net: &Network| grid.rel_l2_of(net).ok();
    let outcome = run_fi_pinn(&problem, &mut net, &mut ts, &prior, &adaptive, Some(&eval_fn))?;
    let rel = grid.rel_l2_of(&net).ok();
    let max_abs = grid.max_abs_error(&net).ok();
    Ok((outcome, net, rel, max_abs))
}

/// Run the configured experiment over `n_seeds` derived seeds, writing
/// outputs under the config's output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let out_dir = PathBuf::from(&cfg.output_dir);
    let strategy = cfg.adaptive.strategy.clone();

    let mut runs = Vec::new();
    let mut seeds = Vec::new();
    for s in 0..cfg.n_seeds {
        let seed = derive_seed(cfg.master_seed, &[s as u64]);
        seeds.push(seed);
        let (outcome, net, rel, max_abs) = run_one_seed(cfg, &strategy, seed, None, true)?;
        let grid = evaluation_grid(&problem, cfg.grid_n)?;
        write_seed_outputs(
            &out_dir.join(format!("seed_{s}")),
            problem.dim,
            &outcome,
            &grid,
            &net,
        )?;
        runs.push(SeedRun {
            seed_index: s,
            seed,
            trace: outcome.trace,
            final_rel_l2: rel,
            max_abs_error: max_abs,
        });
    }

    let mut rels: Vec<f64> = runs.iter().filter_map(|r| r.final_rel_l2).collect();
    let mean = if rels.is_empty() {
        None
    } else {
        Some(rels.iter().sum::<f64>() / rels.len() as f64)
    };
    let report = MetricsReport {
        problem: cfg.problem.clone(),
        strategy,
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: cfg.master_seed,
        seeds,
        median_rel_l2: median(&mut rels),
        mean_rel_l2: mean,
        runs,
        config: cfg.clone(),
    };
    io::write(
        &out_dir.join("metrics.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// One strategy's summary inside a comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub per_seed_rel_l2: Vec<Option<f64>>,
    pub median_rel_l2: Option<f64>,
    pub traces: Vec<AdaptiveTrace>,
}

/// Budget-matched comparison: SAIS runs first with its own stopping rule;
/// Uniform and RAR then replay the same number of rounds adding exactly the
/// SAIS per-round point counts ("datasets with the same size").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub problem: String,
    pub master_seed: u64,
    pub sais: StrategySummary,
    pub uniform: StrategySummary,
    pub rar: StrategySummary,
}

pub fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let mut summaries = run_comparison_strategies(cfg, &["sais", "uniform", "rar"])?;
    let report = ComparisonReport {
        problem: cfg.problem.clone(),
        master_seed: cfg.master_seed,
        rar: summaries.pop().unwrap(),
        uniform: summaries.pop().unwrap(),
        sais: summaries.pop().unwrap(),
    };
    io::write(
        &PathBuf::from(&cfg.output_dir).join("comparison.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// Budget-matched runs for an explicit strategy list; "sais" must come
/// first, since its per-round point counts define the baselines' budgets.
pub fn run_comparison_strategies(
    cfg: &ExperimentConfig,
    strategies: &[&str],
) -> Result<Vec<StrategySummary>> {
    cfg.validate()?;
    if strategies.first() != Some(&"sais") {
        return Err(Error::config("comparisons must run sais first"));
    }
    let out_dir = PathBuf::from(&cfg.output_dir);
    let problem = cfg.build_problem()?;

    let mut summaries: Vec<StrategySummary> = Vec::new();
    let mut sais_budgets: Vec<Vec<usize>> = Vec::new();
    let mut sais_rounds_used: Vec<usize> = Vec::new();

    for strategy in strategies.iter().copied() {
        let mut rels = Vec::new();
        let mut traces = Vec::new();
        for s in 0..cfg.n_seeds {
            let seed = derive_seed(cfg.master_seed, &[s as u64]);
            let (budget, stop_on_tol, max_outer_override) = if strategy == "sais" {
                (None, true, None)
            } else {
                (
                    Some(sais_budgets[s].clone()),
                    false,
                    Some(sais_rounds_used[s]),
                )
            };
            let mut cfg_s = cfg.clone();
            if let Some(m) = max_outer_override {
                cfg_s.adaptive.max_outer = m;
            }
            let (outcome, net, rel, _) = run_one_seed(&cfg_s, strategy, seed, budget, stop_on_tol)?;
            if strategy == "sais" {
                sais_budgets.push(
                    outcome
                        .trace
                        .rounds
                        .iter()
                        .map(|r| r.added)
                        .collect::<Vec<_>>(),
                );
                sais_rounds_used.push(outcome.trace.rounds.len());
            }
            let grid = evaluation_grid(&problem, cfg.grid_n)?;
            write_seed_outputs(
                &out_dir.join(strategy).join(format!("seed_{s}")),
                problem.dim,
                &outcome,
                &grid,
                &net,
            )?;
            rels.push(rel);
            traces.push(outcome.trace);
        }
        let mut known: Vec<f64> = rels.iter().flatten().copied().collect();
        summaries.push(StrategySummary {
            strategy: strategy.to_string(),
            per_seed_rel_l2: rels,
            median_rel_l2: median(&mut known),
            traces,
        });
    }
    Ok(summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceAxis {
    EpsP,
    EpsR,
}

/// Fitted log-log slope of error versus tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub axis: ToleranceAxis,
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the least-squares fit in log space.
    pub rms_residual: f64,
    /// (tolerance, median relative L2) pairs.
    pub points: Vec<(f64, f64)>,
}

/// Sweep one tolerance axis, run the adaptive loop per tolerance and seed,
/// and fit `log(err)` against `log(tolerance)` by least squares.
pub fn convergence_study(
    cfg: &ExperimentConfig,
    axis: ToleranceAxis,
    tolerances: &[f64],
    n_seeds: usize,
) -> Result<SlopeEstimate> {
    if tolerances.len() < 3 {
        return Err(Error::config(
            "convergence study needs at least 3 tolerance values",
        ));
    }
    let lo = tolerances.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tolerances.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 10.0 {
        return Err(Error::config(
            "tolerance grid must be positive and span at least one decade",
        ));
    }

    let mut points = Vec::new();
    for &tol in tolerances {
        let mut cfg_t = cfg.clone();
        match axis {
            ToleranceAxis::EpsP => cfg_t.adaptive.eps_p = tol,
            ToleranceAxis::EpsR => cfg_t.adaptive.eps_r = tol,
        }
        let mut rels = Vec::new();
        for s in 0..n_seeds {
            let seed = derive_seed(cfg.master_seed, &[axis as u64, s as u64]);
            let (_, _, rel, _) =
                run_one_seed(&cfg_t, &cfg.adaptive.strategy, seed, None, true)?;
            if let Some(r) = rel {
                rels.push(r);
            }
        }
        let med = median(&mut rels)
            .ok_or_else(|| Error::config("convergence study produced no error values"))?;
        points.push((tol, med));
    }

    // Least squares on (log tol, log err).
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, e) in &points {
        let (x, y) = (t.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let rms = (points
        .iter()
        .map(|&(t, e)| {
            let r = e.ln() - (slope * t.ln() + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();

    Ok(SlopeEstimate {
        axis,
        slope,
        intercept,
        rms_residual: rms,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro_config(dir: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
problem = "poisson_peak_2d"
widths = [2, 8, 1]
n_collocation = 40
n_boundary = 12
master_seed = 7
n_seeds = 1
output_dir = "{dir}"
grid_n = 16

[train]
steps = 60
lr = 3e-3
lambda = 1.0
history_every = 30

[adaptive]
eps_r = 0.1
eps_p = 0.05
max_outer = 2
strategy = "sais"

[adaptive.sais]
n1 = 100
n2 = 200
p0 = 0.1
max_rounds = 10
model = "truncated_gaussian"
gmm_components = 2
"#
        ))
        .unwrap()
    }

    #[test]
    fn run_experiment_is_deterministic_and_writes_outputs() {
        let dir = std::env::temp_dir().join("fipinn_harness_det");
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = micro_config(dir.to_str().unwrap());
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.stable_json().unwrap(), b.stable_json().unwrap());

        for file in ["metrics.json", "seed_0/trace.csv", "seed_0/field_pred.csv"] {
            assert!(dir.join(file).exists(), "{file} missing");
        }
        let trace = std::fs::read_to_string(dir.join("seed_0/trace.csv")).unwrap();
        assert!(trace.starts_with(io::TRACE_HEADER));
        let hist =
            std::fs::read_to_string(dir.join("seed_0/loss_history_round_1.csv")).unwrap();
        assert!(hist.starts_with(io::HISTORY_HEADER));
        let points = std::fs::read_to_string(dir.join("seed_0/points_round_1.csv")).unwrap();
        assert!(points.starts_with("x0,x1"));
        let sais = std::fs::read_to_string(dir.join("seed_0/sais_round_1.csv")).unwrap();
        assert!(sais.starts_with("round,n_eta,mu0,mu1,sigma_diag0,sigma_diag1"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn config_echo_reproduces_the_run() {
        let dir = std::env::temp_dir().join("fipinn_harness_echo");
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = micro_config(dir.to_str().unwrap());
        let a = run_experiment(&cfg).unwrap();
        let json = std::fs::read_to_string(dir.join("metrics.json")).unwrap();
        let parsed: MetricsReport = serde_json::from_str(&json).unwrap();
        let b = run_experiment(&parsed.config).unwrap();
        assert_eq!(a.stable_json().unwrap(), b.stable_json().unwrap());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn comparison_enforces_budget_parity() {
        let dir = std::env::temp_dir().join("fipinn_harness_cmp");
        let _ = std::fs::remove_dir_all(&dir);
        let mut cfg = micro_config(dir.to_str().unwrap());
        cfg.adaptive.eps_p = 1e-9; // force both rounds
        let report = run_comparison(&cfg).unwrap();
        for (s, u, r) in itertools_zip(
            &report.sais.traces,
            &report.uniform.traces,
            &report.rar.traces,
        ) {
            assert_eq!(s.rounds.len(), u.rounds.len());
            assert_eq!(s.rounds.len(), r.rounds.len());
            for k in 0..s.rounds.len() {
                assert_eq!(s.rounds[k].added, u.rounds[k].added, "round {k}");
                assert_eq!(s.rounds[k].added, r.rounds[k].added, "round {k}");
                assert_eq!(s.rounds[k].n_collocation, u.rounds[k].n_collocation);
                assert_eq!(s.rounds[k].n_collocation, r.rounds[k].n_collocation);
            }
        }
        let _ = std::fs::remove_dir_all(&dir);
    }

    fn itertools_zip<'a, T>(
        a: &'a [T],
        b: &'a [T],
        c: &'a [T],
    ) -> impl Iterator<Item = (&'a T, &'a T, &'a T)> {
        a.iter()
            .zip(b.iter())
            .zip(c.iter())
            .map(|((x, y), z)| (x, y, z))
    }

    #[test]
    fn convergence_study_preconditions() {
        let cfg = micro_config("unused");
        assert!(convergence_study(&cfg, ToleranceAxis::EpsP, &[0.1], 1).is_err());
        assert!(convergence_study(&cfg, ToleranceAxis::EpsP, &[0.1, 0.09, 0.08], 1).is_err());
    }
}
