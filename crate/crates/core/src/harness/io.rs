//! Plot-ready CSV outputs with stable headers, plus the metrics JSON.

use std::fmt::Write as _;
use std::path::Path;

use crate::adaptive::AdaptiveTrace;
use crate::error::Result;
use crate::failure::SaisRound;
use crate::harness::eval::EvalGrid;
use crate::network::Network;
use crate::training::HistoryEntry;

pub const TRACE_HEADER: &str = "round,n_points,p_hat,rel_l2,train_loss,seconds";
pub const HISTORY_HEADER: &str = "step,total,interior,boundary";

pub fn trace_csv(trace: &AdaptiveTrace) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rounds {
        let rel = r.rel_l2.map(|v| format!("{v:.9e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{:.9e},{},{:.9e},{:.3}",
            r.round, r.n_collocation, r.p_hat, rel, r.train_loss, r.seconds
        )
        .unwrap();
    }
    out
}

pub fn points_csv(dim: usize, points: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.9e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::new();
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for h in history {
        writeln!(
            out,
            "{},{:.9e},{:.9e},{:.9e}",
            h.step, h.total, h.interior, h.boundary
        )
        .unwrap();
    }
    out
}

pub fn sais_rounds_csv(dim: usize, rounds: &[SaisRound]) -> String {
    let mut out = String::from("round,n_eta");
    for i in 0..dim {
        write!(out, ",mu{i}").unwrap();
    }
    for i in 0..dim {
        write!(out, ",sigma_diag{i}").unwrap();
    }
    out.push('\n');
    for r in rounds {
        write!(out, "{},{}", r.round, r.n_eta).unwrap();
        for v in &r.mu {
            write!(out, ",{v:.9e}").unwrap();
        }
        for v in &r.sigma_diag {
            write!(out, ",{v:.9e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn field_pred_csv(grid: &EvalGrid, net: &Network) -> Result<String> {
    let dim = grid.points.first().map(Vec::len).unwrap_or(0);
    let mut out = String::new();
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.extend(["u_pred".into(), "u_exact".into(), "abs_err".into()]);
    out.push_str(&header.join(","));
    out.push('\n');
    let preds = grid.predict(net)?;
    for ((p, pred), exact) in grid.points.iter().zip(&preds).zip(&grid.exact) {
        for v in p {
            write!(out, "{v:.9e},").unwrap();
        }
        writeln!(out, "{pred:.9e},{exact:.9e},{:.9e}", (pred - exact).abs()).unwrap();
    }
    Ok(out)
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}
