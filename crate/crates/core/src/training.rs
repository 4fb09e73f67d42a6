//! Discrete composite losses, causal time weighting, and optimizers.
//!
//! The interior loss is the mean squared PDE residual over the collocation
//! set, the boundary loss the mean squared boundary residual, combined as
//! `total = interior + lambda * boundary`. Batch reductions run over fixed
//! 128-point chunks combined in order, so results are bit-identical for any
//! thread count (`RAYON_NUM_THREADS` caps the pool).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{JetTape, Network};
use crate::problems::PdeProblem;

const CHUNK: usize = 128;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const LBFGS_MEMORY: usize = 10;
const LBFGS_GTOL: f64 = 1e-10;

/// How a collocation point entered the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Initial,
    Uniform,
    Rar,
    Sais,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Initial => "initial",
            Provenance::Uniform => "uniform",
            Provenance::Rar => "rar",
            Provenance::Sais => "sais",
        }
    }
}

/// Collocation and boundary points with per-collocation-point provenance.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub collocation: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

impl TrainingSet {
    /// Validates that collocation points lie in the domain and boundary
    /// points satisfy the boundary predicate.
    pub fn new(
        problem: &PdeProblem,
        collocation: Vec<Vec<f64>>,
        boundary: Vec<Vec<f64>>,
    ) -> Result<Self> {
        for p in &collocation {
            if !problem.domain.contains(p) {
                return Err(Error::config(format!(
                    "collocation point {p:?} is outside the domain"
                )));
            }
        }
        for p in &boundary {
            if !problem.domain.on_boundary(p, 1e-12) {
                return Err(Error::config(format!(
                    "boundary point {p:?} is not on the boundary"
                )));
            }
        }
        let provenance = vec![Provenance::Initial; collocation.len()];
        Ok(TrainingSet {
            collocation,
            boundary,
            provenance,
        })
    }

    /// Append enrichment points, validated against the domain.
    pub fn extend_collocation(
        &mut self,
        problem: &PdeProblem,
        points: Vec<Vec<f64>>,
        tag: Provenance,
    ) -> Result<()> {
        for p in &points {
            if !problem.domain.contains(p) {
                return Err(Error::config(format!(
                    "enrichment point {p:?} is outside the domain"
                )));
            }
        }
        self.provenance.extend(std::iter::repeat_n(tag, points.len()));
        self.collocation.extend(points);
        Ok(())
    }

    pub fn n_collocation(&self) -> usize {
        self.collocation.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }
}

/// Composite loss at one parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub interior: f64,
    pub boundary: f64,
    pub lambda: f64,
}

impl LossReport {
    fn assemble(interior: f64, boundary: f64, lambda: f64) -> Self {
        LossReport {
            total: interior + lambda * boundary,
            interior,
            boundary,
            lambda,
        }
    }
}

/// Causal time-weighting configuration: number of time slabs and the
/// causality parameter epsilon.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CausalConfig {
    pub n_slabs: usize,
    pub epsilon: f64,
}

/// `w_1 = 1`, `w_i = exp(-eps * sum_{k<i} L_k)`; all weights in (0, 1] and
/// non-increasing when the slab losses are nonnegative.
pub fn causal_weights(slab_losses: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if epsilon < 0.0 {
        return Err(Error::config("causality parameter must be nonnegative"));
    }
    let mut weights = Vec::with_capacity(slab_losses.len());
    let mut acc = 0.0;
    for (i, &l) in slab_losses.iter().enumerate() {
        if i == 0 {
            weights.push(1.0);
        } else {
            weights.push((-epsilon * acc).exp());
        }
        acc += l;
    }
    Ok(weights)
}

/// Index of the time slab containing `t`: uniform half-open slabs over the
/// problem's time range, last slab closed.
pub fn slab_index(t: f64, range: (f64, f64), n_slabs: usize) -> usize {
    let width = (range.1 - range.0) / n_slabs as f64;
    let idx = ((t - range.0) / width).floor() as isize;
    idx.clamp(0, n_slabs as isize - 1) as usize
}

struct ChunkOut {
    sum: f64,
    grad: Option<Vec<f64>>,
}

/// Mean squared residual over the collocation set; when `want_grad`, also
/// accumulates the parameter gradient of that mean into `grad_out`.
fn interior_pass(
    net: &Network,
    problem: &PdeProblem,
    points: &[Vec<f64>],
    want_grad: bool,
    grad_out: &mut [f64],
) -> Result<f64> {
    let n = points.len() as f64;
    let mode = problem.residual_op.mode();
    let outs: Vec<ChunkOut> = points
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<ChunkOut> {
            let mut tape = JetTape::new();
            let mut grad = want_grad.then(|| vec![0.0; net.param_count()]);
            let mut sum = 0.0;
            for x in chunk {
                let jet = net.forward_jet_rec(x, mode, &mut tape)?;
                let r = problem.residual_op.eval(x, &jet);
                sum += r * r;
                if let Some(g) = grad.as_deref_mut() {
                    let mut adj = problem.residual_op.jet_adjoint(x, &jet);
                    adj.scale(2.0 * r / n);
                    net.backprop_params(&mut tape, &adj, g);
                }
            }
            Ok(ChunkOut { sum, grad })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for out in outs {
        total += out.sum;
        if let Some(g) = out.grad {
            for (acc, v) in grad_out.iter_mut().zip(&g) {
                *acc += v;
            }
        }
    }
    Ok(total / n)
}

/// Causal interior loss `(1/N_t) sum_i w_i L_i` with per-slab mean squared
/// residuals; weights are treated as constants for the gradient.
fn causal_interior_pass(
    net: &Network,
    problem: &PdeProblem,
    points: &[Vec<f64>],
    cfg: &CausalConfig,
    want_grad: bool,
    grad_out: &mut [f64],
) -> Result<f64> {
    let time_index = problem
        .time_index
        .ok_or_else(|| Error::config("causal loss requires a time-dependent problem"))?;
    let range = problem.time_range.unwrap_or((0.0, 1.0));
    if cfg.n_slabs < 1 {
        return Err(Error::config("causal loss needs at least one slab"));
    }
    let mode = problem.residual_op.mode();

    // Pass 1: residuals and slab assignment.
    let per_point: Vec<(usize, f64)> = points
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<Vec<(usize, f64)>> {
            let mut tape = JetTape::new();
            chunk
                .iter()
                .map(|x| {
                    let jet = net.forward_jet_rec(x, mode, &mut tape)?;
                    let r = problem.residual_op.eval(x, &jet);
                    Ok((slab_index(x[time_index], range, cfg.n_slabs), r))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut slab_sum = vec![0.0; cfg.n_slabs];
    let mut slab_count = vec![0usize; cfg.n_slabs];
    for &(slab, r) in &per_point {
        slab_sum[slab] += r * r;
        slab_count[slab] += 1;
    }
    let slab_losses: Vec<f64> = slab_sum
        .iter()
        .zip(&slab_count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let weights = causal_weights(&slab_losses, cfg.epsilon)?;
    let interior = weights
        .iter()
        .zip(&slab_losses)
        .map(|(w, l)| w * l)
        .sum::<f64>()
        / cfg.n_slabs as f64;

    if want_grad {
        // Pass 2: backprop with per-point coefficient 2 w_i r / (N_t n_i).
        let nt = cfg.n_slabs as f64;
        let chunks: Vec<Vec<f64>> = points
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(ci, chunk)| -> Result<Vec<f64>> {
                let mut tape = JetTape::new();
                let mut grad = vec![0.0; net.param_count()];
                for (j, x) in chunk.iter().enumerate() {
                    let (slab, r) = per_point[ci * CHUNK + j];
                    if slab_count[slab] == 0 {
                        continue;
                    }
                    let jet = net.forward_jet_rec(x, mode, &mut tape)?;
                    let mut adj = problem.residual_op.jet_adjoint(x, &jet);
                    adj.scale(2.0 * weights[slab] * r / (nt * slab_count[slab] as f64));
                    net.backprop_params(&mut tape, &adj, &mut grad);
                }
                Ok(grad)
            })
            .collect::<Result<Vec<_>>>()?;
        for g in chunks {
            for (acc, v) in grad_out.iter_mut().zip(&g) {
                *acc += v;
            }
        }
    }
    Ok(interior)
}

/// Mean squared boundary residual (summed over components per point); when
/// `want_grad`, accumulates `lambda * d(boundary)/d(theta)`.
fn boundary_pass(
    net: &Network,
    problem: &PdeProblem,
    points: &[Vec<f64>],
    lambda: f64,
    want_grad: bool,
    grad_out: &mut [f64],
) -> Result<f64> {
    let n = points.len() as f64;
    let outs: Vec<ChunkOut> = points
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<ChunkOut> {
            let mut tape = JetTape::new();
            let mut grad = want_grad.then(|| vec![0.0; net.param_count()]);
            let mut sum = 0.0;
            for x in chunk {
                let vals = problem.boundary_op.eval(net, x)?;
                for &b in vals.as_slice() {
                    sum += b * b;
                }
                if let Some(g) = grad.as_deref_mut() {
                    let coeff: Vec<f64> = vals
                        .as_slice()
                        .iter()
                        .map(|&b| lambda * 2.0 * b / n)
                        .collect();
                    problem
                        .boundary_op
                        .accumulate_grad(net, &mut tape, x, &coeff, g)?;
                }
            }
            Ok(ChunkOut { sum, grad })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for out in outs {
        total += out.sum;
        if let Some(g) = out.grad {
            for (acc, v) in grad_out.iter_mut().zip(&g) {
                *acc += v;
            }
        }
    }
    Ok(total / n)
}

fn check_nonempty(ts: &TrainingSet) -> Result<()> {
    if ts.collocation.is_empty() {
        return Err(Error::EmptySet("collocation set"));
    }
    if ts.boundary.is_empty() {
        return Err(Error::EmptySet("boundary set"));
    }
    Ok(())
}

/// Composite loss `interior + lambda * boundary` with mean reductions.
pub fn loss(
    net: &Network,
    problem: &PdeProblem,
    ts: &TrainingSet,
    lambda: f64,
) -> Result<LossReport> {
    check_nonempty(ts)?;
    let mut unused = [];
    let interior = interior_pass(net, problem, &ts.collocation, false, &mut unused)?;
    let boundary = boundary_pass(net, problem, &ts.boundary, lambda, false, &mut unused)?;
    Ok(LossReport::assemble(interior, boundary, lambda))
}

/// Composite loss with the causal-weighted interior.
pub fn causal_loss(
    net: &Network,
    problem: &PdeProblem,
    ts: &TrainingSet,
    cfg: &CausalConfig,
    lambda: f64,
) -> Result<LossReport> {
    check_nonempty(ts)?;
    let mut unused = [];
    let interior = causal_interior_pass(net, problem, &ts.collocation, cfg, false, &mut unused)?;
    let boundary = boundary_pass(net, problem, &ts.boundary, lambda, false, &mut unused)?;
    Ok(LossReport::assemble(interior, boundary, lambda))
}

/// Loss and its exact parameter gradient in one pass.
fn loss_and_grad(
    net: &Network,
    problem: &PdeProblem,
    ts: &TrainingSet,
    lambda: f64,
    causal: Option<&CausalConfig>,
    grad: &mut [f64],
) -> Result<LossReport> {
    check_nonempty(ts)?;
    grad.fill(0.0);
    let interior = match causal {
        Some(cfg) => causal_interior_pass(net, problem, &ts.collocation, cfg, true, grad)?,
        None => interior_pass(net, problem, &ts.collocation, true, grad)?,
    };
    let boundary = boundary_pass(net, problem, &ts.boundary, lambda, true, grad)?;
    Ok(LossReport::assemble(interior, boundary, lambda))
}

/// Optimizer settings for one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub lambda: f64,
    pub causal: Option<CausalConfig>,
    /// Record a history entry every this many steps.
    pub history_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 3000,
            lr: 1e-3,
            lambda: 1.0,
            causal: None,
            history_every: 100,
        }
    }
}

/// One loss-history row.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub total: f64,
    pub interior: f64,
    pub boundary: f64,
}

impl HistoryEntry {
    fn from_report(step: usize, r: &LossReport) -> Self {
        HistoryEntry {
            step,
            total: r.total,
            interior: r.interior,
            boundary: r.boundary,
        }
    }
}

/// Full-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the composite loss.
/// Deterministic: full-batch gradients and fixed chunk reductions.
pub fn train_adam(
    net: &mut Network,
    problem: &PdeProblem,
    ts: &TrainingSet,
    cfg: &TrainConfig,
) -> Result<Vec<HistoryEntry>> {
    if cfg.lr <= 0.0 {
        return Err(Error::config("learning rate must be positive"));
    }
    let n = net.param_count();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut history = Vec::new();
    let every = cfg.history_every.max(1);

    for step in 1..=cfg.steps {
        let report = loss_and_grad(net, problem, ts, cfg.lambda, cfg.causal.as_ref(), &mut grad)?;
        if (step - 1) % every == 0 {
            history.push(HistoryEntry::from_report(step - 1, &report));
        }
        let t = step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        let params = net.params_mut();
        for i in 0..n {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grad[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            params[i] -= cfg.lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }

    let final_report = match &cfg.causal {
        Some(c) => causal_loss(net, problem, ts, c, cfg.lambda)?,
        None => loss(net, problem, ts, cfg.lambda)?,
    };
    history.push(HistoryEntry::from_report(cfg.steps, &final_report));
    Ok(history)
}

/// Termination state of an L-BFGS run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LbfgsStatus {
    Converged,
    MaxIters,
    /// Backtracking failed to find a decreasing step; parameters hold the
    /// best point seen.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub status: LbfgsStatus,
    pub history: Vec<HistoryEntry>,
}

/// Two-loop-recursion L-BFGS (memory 10) with Armijo backtracking. Accepted
/// steps never increase the loss; a line-search failure returns the best
/// parameters seen with a flagged status.
pub fn train_lbfgs(
    net: &mut Network,
    problem: &PdeProblem,
    ts: &TrainingSet,
    max_iters: usize,
    lambda: f64,
) -> Result<LbfgsOutcome> {
    let n = net.param_count();
    let mut grad = vec![0.0; n];
    let mut history = Vec::new();
    let mut pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> =
        std::collections::VecDeque::new();

    let mut f = loss_and_grad(net, problem, ts, lambda, None, &mut grad)?;
    history.push(HistoryEntry::from_report(0, &f));
    let mut status = LbfgsStatus::MaxIters;

    for iter in 0..max_iters {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= LBFGS_GTOL {
            status = LbfgsStatus::Converged;
            break;
        }

        // Two-loop recursion for p = -H g.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in &mut q {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += (a - b) * s[i];
            }
        }
        let dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &dir);
        let dir = if slope >= 0.0 {
            // Not a descent direction; fall back to steepest descent.
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
            grad.iter().map(|g| -g).collect()
        } else {
            dir
        };

        // Armijo backtracking.
        let base = net.params().to_vec();
        let mut alpha = if iter == 0 { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = base
                .iter()
                .zip(&dir)
                .map(|(p, d)| p + alpha * d)
                .collect();
            net.set_params(&trial)?;
            let f_new = loss(net, problem, ts, lambda)?;
            if f_new.total <= f.total + 1e-4 * alpha * slope {
                let mut new_grad = vec![0.0; n];
                let report =
                    loss_and_grad(net, problem, ts, lambda, None, &mut new_grad)?;
                let s: Vec<f64> = trial.iter().zip(&base).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                let s_norm = dot(&s, &s).sqrt();
                let y_norm = dot(&y, &y).sqrt();
                if sy > 1e-12 * s_norm * y_norm {
                    if pairs.len() == LBFGS_MEMORY {
                        pairs.pop_front();
                    }
                    pairs.push_back((s, y, 1.0 / sy));
                }
                grad = new_grad;
                f = report;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            net.set_params(&base)?;
            status = LbfgsStatus::LineSearchFailed;
            history.push(HistoryEntry::from_report(iter + 1, &f));
            return Ok(LbfgsOutcome { status, history });
        }
        history.push(HistoryEntry::from_report(iter + 1, &f));
    }

    if status != LbfgsStatus::Converged && max_iters == 0 {
        status = LbfgsStatus::MaxIters;
    }
    Ok(LbfgsOutcome { status, history })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
