//! Failure-informed outer loop: train, build the limit state, estimate the
//! failure probability, stop if it is below tolerance, otherwise enrich the
//! collocation set and retrain (warm start, fresh optimizer moments).
//!
//! Enrichment strategies: SAIS (failure-informed), RAR (top residuals from a
//! uniform pool), and plain uniform draws. Baselines estimate the stopping
//! probability by plain Monte Carlo.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distributions::Proposal;
use crate::error::{Error, Result};
use crate::failure::{causal_limit_state, sais, LimitState, SaisConfig, SaisRound};
use crate::network::{Checkpoint, Network};
use crate::problems::PdeProblem;
use crate::rng::derive_seed;
use crate::training::{train_adam, HistoryEntry, Provenance, TrainConfig, TrainingSet};

/// Points added per enrichment round: a constant, or an explicit per-round
/// schedule (used to mirror another strategy's budget exactly).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointBudget {
    Fixed(usize),
    PerRound(Vec<usize>),
}

impl PointBudget {
    /// Budget for 1-based `round`; schedules repeat their last entry.
    pub fn at(&self, round: usize) -> usize {
        match self {
            PointBudget::Fixed(m) => *m,
            PointBudget::PerRound(v) => {
                if v.is_empty() {
                    0
                } else {
                    v[(round - 1).min(v.len() - 1)]
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Enrichment {
    Sais(SaisConfig),
    Rar {
        pool_size: usize,
        m: PointBudget,
    },
    Uniform {
        m: PointBudget,
        /// Monte Carlo sample count for the stopping estimate.
        pf_samples: usize,
    },
}

impl Enrichment {
    pub fn label(&self) -> &'static str {
        match self {
            Enrichment::Sais(_) => "sais",
            Enrichment::Rar { .. } => "rar",
            Enrichment::Uniform { .. } => "uniform",
        }
    }

    fn provenance(&self) -> Provenance {
        match self {
            Enrichment::Sais(_) => Provenance::Sais,
            Enrichment::Rar { .. } => Provenance::Rar,
            Enrichment::Uniform { .. } => Provenance::Uniform,
        }
    }
}

/// Outer-loop configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    /// Residual tolerance defining the limit state.
    pub eps_r: f64,
    /// Failure-probability tolerance stopping the loop.
    pub eps_p: f64,
    /// Maximum outer iterations.
    pub max_outer: usize,
    pub enrichment: Enrichment,
    pub train: TrainConfig,
    pub seed: u64,
}

impl AdaptiveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eps_r > 0.0) || !(self.eps_p > 0.0) {
            return Err(Error::config("tolerances eps_r and eps_p must be positive"));
        }
        if self.max_outer < 1 {
            return Err(Error::config("max_outer must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    PfBelowTol,
    MaxOuter,
}

/// One outer-round record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Collocation count used for this round's training.
    pub n_collocation: usize,
    pub p_hat: f64,
    pub rel_l2: Option<f64>,
    pub train_loss: f64,
    pub seconds: f64,
    /// Points appended after this round's estimate (0 on the stopping round).
    pub added: usize,
    /// Set when enrichment produced zero points while failing the tolerance.
    pub stalled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveTrace {
    pub rounds: Vec<RoundRecord>,
    pub stop_reason: StopReason,
}

/// Per-round byproducts the harness writes to disk.
pub struct RoundArtifacts {
    pub round: usize,
    pub added_points: Vec<Vec<f64>>,
    pub history: Vec<HistoryEntry>,
    pub checkpoint: Checkpoint,
    pub sais_rounds: Option<Vec<SaisRound>>,
    pub sais_final_proposal: Option<Proposal>,
}

pub struct AdaptiveOutcome {
    pub trace: AdaptiveTrace,
    pub artifacts: Vec<RoundArtifacts>,
}

/// `m` fresh prior draws.
pub fn enrich_uniform(prior: &Proposal, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    prior.sample(m, seed)
}

/// Draw `pool_size` prior points and keep the `m` with the largest
/// limit-state values (ties broken by draw index).
pub fn enrich_rar(
    ls: &LimitState,
    prior: &Proposal,
    pool_size: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if m > pool_size {
        return Err(Error::config(format!(
            "RAR selection size {m} exceeds pool size {pool_size}"
        )));
    }
    let pool = prior.sample(pool_size, seed)?;
    let g: Vec<f64> = pool.iter().map(|x| ls.eval(x)).collect();
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    Ok(order[..m].iter().map(|&i| pool[i].clone()).collect())
}

/// The failure-informed outer loop. `round_eval`, when given, computes a
/// per-round error metric on the current network (relative L2 on the
/// problem's evaluation grid in the harness).
pub fn run_fi_pinn(
    problem: &PdeProblem,
    net: &mut Network,
    ts: &mut TrainingSet,
    prior: &Proposal,
    cfg: &AdaptiveConfig,
    round_eval: Option<&(dyn Fn(&Network) -> Option<f64> + Sync)>,
) -> Result<AdaptiveOutcome> {
    cfg.validate()?;
    if ts.collocation.is_empty() || ts.boundary.is_empty() {
        return Err(Error::EmptySet("initial training set"));
    }

    let mut rounds = Vec::new();
    let mut artifacts = Vec::new();
    let mut stop_reason = StopReason::MaxOuter;

    for round in 1..=cfg.max_outer {
        let start = Instant::now();
        let n_collocation = ts.n_collocation();
        let history = train_adam(net, problem, ts, &cfg.train)?;
        let train_loss = history.last().map(|h| h.total).unwrap_or(f64::NAN);

        // Limit state from the freshly trained network.
        let ls = match &cfg.train.causal {
            Some(causal) => causal_limit_state(net, problem, ts, causal, cfg.eps_r)?,
            None => LimitState::from_network(net, problem, cfg.eps_r)?,
        };

        // Estimate the failure probability and collect enrichment points.
        // A stalled round (zero points while failing the tolerance) retries
        // with a reseeded stream up to twice, then continues.
        let mut p_hat = 0.0;
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut sais_rounds = None;
        let mut sais_final = None;
        let mut stalled = false;
        for attempt in 0..3u64 {
            let stream = derive_seed(cfg.seed, &[round as u64, attempt]);
            match &cfg.enrichment {
                Enrichment::Sais(sais_cfg) => {
                    let res = sais(&ls, prior, &problem.domain, sais_cfg, stream)?;
                    p_hat = res.p_hat;
                    points = res.adaptive_points;
                    sais_rounds = Some(res.rounds);
                    sais_final = Some(res.final_proposal);
                }
                Enrichment::Rar { pool_size, m } => {
                    let pool = prior.sample(*pool_size, stream)?;
                    let g: Vec<f64> = pool.iter().map(|x| ls.eval(x)).collect();
                    p_hat = g.iter().filter(|&&v| v > 0.0).count() as f64 / pool.len() as f64;
                    let want = m.at(round).min(pool.len());
                    let mut order: Vec<usize> = (0..pool.len()).collect();
                    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
                    points = order[..want].iter().map(|&i| pool[i].clone()).collect();
                }
                Enrichment::Uniform { m, pf_samples } => {
                    p_hat = crate::failure::pf_mc(&ls, prior, *pf_samples, stream)?;
                    points = enrich_uniform(prior, m.at(round), derive_seed(stream, &[1]))?;
                }
            }
            if p_hat < cfg.eps_p || !points.is_empty() {
                break;
            }
            stalled = true;
        }

        let rel_l2 = round_eval.and_then(|f| f(net));
        let stopping = p_hat < cfg.eps_p;
        let added = if stopping { 0 } else { points.len() };
        rounds.push(RoundRecord {
            round,
            n_collocation,
            p_hat,
            rel_l2,
            train_loss,
            seconds: start.elapsed().as_secs_f64(),
            added,
            stalled,
        });
        artifacts.push(RoundArtifacts {
            round,
            added_points: if stopping { Vec::new() } else { points.clone() },
            history,
            checkpoint: net.to_checkpoint(),
            sais_rounds,
            sais_final_proposal: sais_final,
        });

        if stopping {
            stop_reason = StopReason::PfBelowTol;
            break;
        }
        if !points.is_empty() {
            ts.extend_collocation(problem, points, cfg.enrichment.provenance())?;
        }
    }

    Ok(AdaptiveOutcome {
        trace: AdaptiveTrace {
            rounds,
            stop_reason,
        },
        artifacts,
    })
}
