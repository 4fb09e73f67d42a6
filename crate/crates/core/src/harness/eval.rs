//! Error metrics, evaluation grids, and the shipped reference tables.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::network::Network;
use crate::problems::PdeProblem;
use crate::rng::rng_from;
use rand::Rng;

/// Relative L2 error `|pred - exact|_2 / |exact|_2` over a test point set.
pub fn relative_l2(pred: &[f64], exact: &[f64]) -> Result<f64> {
    if pred.is_empty() || pred.len() != exact.len() {
        return Err(Error::Dimension {
            expected: exact.len().max(1),
            got: pred.len(),
        });
    }
    let num: f64 = pred
        .iter()
        .zip(exact)
        .map(|(p, e)| (p - e) * (p - e))
        .sum();
    let den: f64 = exact.iter().map(|e| e * e).sum();
    if den == 0.0 {
        return Err(Error::config("relative L2 needs a nonzero exact vector"));
    }
    Ok((num.sqrt()) / den.sqrt())
}

/// Dense (x, t, u) reference solution on a tensor grid, bilinear lookup.
pub struct ReferenceTable {
    xs: Vec<f64>,
    ts: Vec<f64>,
    /// Row-major `[t][x]`.
    u: Vec<f64>,
}

impl ReferenceTable {
    fn parse(csv: &str) -> ReferenceTable {
        let mut xs = Vec::new();
        let mut ts = Vec::new();
        let mut u = Vec::new();
        for line in csv.lines().skip(1) {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let x: f64 = parts.next().unwrap().parse().unwrap();
            let t: f64 = parts.next().unwrap().parse().unwrap();
            let v: f64 = parts.next().unwrap().parse().unwrap();
            if ts.last() != Some(&t) {
                ts.push(t);
            }
            if ts.len() == 1 {
                xs.push(x);
            }
            u.push(v);
        }
        assert_eq!(u.len(), xs.len() * ts.len(), "ragged reference table");
        ReferenceTable { xs, ts, u }
    }

    /// The shipped Burgers table (512 x 201 over [-1,1] x [0,1]).
    pub fn burgers() -> &'static ReferenceTable {
        static TABLE: OnceLock<ReferenceTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            ReferenceTable::parse(include_str!("../../data/burgers_reference.csv"))
        })
    }

    /// The shipped Allen-Cahn table (512 x 201 over [-1,1] x [0,1]).
    pub fn allen_cahn() -> &'static ReferenceTable {
        static TABLE: OnceLock<ReferenceTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            ReferenceTable::parse(include_str!("../../data/allen_cahn_reference.csv"))
        })
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nt(&self) -> usize {
        self.ts.len()
    }

    pub fn node(&self, ix: usize, it: usize) -> (f64, f64, f64) {
        (self.xs[ix], self.ts[it], self.u[it * self.xs.len() + ix])
    }

    /// Bilinear interpolation, clamped to the grid hull.
    pub fn value(&self, x: f64, t: f64) -> f64 {
        let locate = |grid: &[f64], v: f64| -> (usize, f64) {
            let n = grid.len();
            if v <= grid[0] {
                return (0, 0.0);
            }
            if v >= grid[n - 1] {
                return (n - 2, 1.0);
            }
            let mut lo = 0;
            let mut hi = n - 1;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if grid[mid] <= v {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo, (v - grid[lo]) / (grid[lo + 1] - grid[lo]))
        };
        let (i, fx) = locate(&self.xs, x);
        let (j, ft) = locate(&self.ts, t);
        let nx = self.xs.len();
        let u00 = self.u[j * nx + i];
        let u10 = self.u[j * nx + i + 1];
        let u01 = self.u[(j + 1) * nx + i];
        let u11 = self.u[(j + 1) * nx + i + 1];
        (1.0 - ft) * ((1.0 - fx) * u00 + fx * u10) + ft * ((1.0 - fx) * u01 + fx * u11)
    }
}

/// Evaluation point set with reference values.
pub struct EvalGrid {
    pub points: Vec<Vec<f64>>,
    pub exact: Vec<f64>,
}

impl EvalGrid {
    pub fn rel_l2_of(&self, net: &Network) -> Result<f64> {
        let pred = self.predict(net)?;
        relative_l2(&pred, &self.exact)
    }

    pub fn predict(&self, net: &Network) -> Result<Vec<f64>> {
        self.points.iter().map(|p| net.forward(p)).collect()
    }

    pub fn max_abs_error(&self, net: &Network) -> Result<f64> {
        let pred = self.predict(net)?;
        Ok(pred
            .iter()
            .zip(&self.exact)
            .map(|(p, e)| (p - e).abs())
            .fold(0.0, f64::max))
    }
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Problem-appropriate evaluation grid:
/// - bounded 2d boxes: a tensor grid (`grid_n`^2, default 256^2);
/// - d >= 3 boxes: 10^4 uniform random points at a fixed seed;
/// - star-exterior plane: 10^4 quasi-random (Halton) points on the disk of
///   radius 10, star interior excluded;
/// - heat strip: tensor grid on [0,20] x [0,1];
/// - Burgers / Allen-Cahn: the shipped reference-table nodes.
pub fn evaluation_grid(problem: &PdeProblem, grid_n: usize) -> Result<EvalGrid> {
    match problem.name {
        "burgers_1d" | "allen_cahn_1d" => {
            let table = if problem.name == "burgers_1d" {
                ReferenceTable::burgers()
            } else {
                ReferenceTable::allen_cahn()
            };
            let mut points = Vec::new();
            let mut exact = Vec::new();
            // Stride the table down to roughly grid_n columns.
            let sx = (table.nx() / grid_n.min(table.nx())).max(1);
            let st = (table.nt() / 128).max(1);
            for it in (0..table.nt()).step_by(st) {
                for ix in (0..table.nx()).step_by(sx) {
                    let (x, t, u) = table.node(ix, it);
                    points.push(vec![x, t]);
                    exact.push(u);
                }
            }
            Ok(EvalGrid { points, exact })
        }
        "heat_unbounded_1d" => {
            let exact_fn = problem.exact.as_ref().unwrap();
            let mut points = Vec::new();
            let mut exact = Vec::new();
            let (nx, nt) = (grid_n, 65);
            for j in 0..nt {
                let t = j as f64 / (nt - 1) as f64;
                for i in 0..nx {
                    let x = 20.0 * i as f64 / (nx - 1) as f64;
                    points.push(vec![x, t]);
                    exact.push(exact_fn(&[x, t]));
                }
            }
            Ok(EvalGrid { points, exact })
        }
        "poisson_unbounded_2d" => {
            let exact_fn = problem.exact.as_ref().unwrap();
            let mut points = Vec::new();
            let mut exact = Vec::new();
            let mut idx = 1;
            while points.len() < 10_000 {
                let r = 10.0 * halton(idx, 2).sqrt();
                let th = 2.0 * std::f64::consts::PI * halton(idx, 3);
                idx += 1;
                let p = vec![r * th.cos(), r * th.sin()];
                if problem.domain.contains(&p) {
                    exact.push(exact_fn(&p));
                    points.push(p);
                }
            }
            Ok(EvalGrid { points, exact })
        }
        _ => {
            let exact_fn = problem
                .exact
                .as_ref()
                .ok_or_else(|| Error::config("problem has no exact solution for evaluation"))?;
            let bounds = problem
                .domain
                .bounds()
                .ok_or_else(|| Error::config("evaluation grid needs a box domain"))?;
            let mut points = Vec::new();
            if problem.dim <= 2 {
                let n = grid_n;
                for j in 0..n {
                    let y = bounds[1].0
                        + (bounds[1].1 - bounds[1].0) * j as f64 / (n - 1) as f64;
                    for i in 0..n {
                        let x = bounds[0].0
                            + (bounds[0].1 - bounds[0].0) * i as f64 / (n - 1) as f64;
                        points.push(vec![x, y]);
                    }
                }
            } else {
                let mut rng = rng_from(999);
                for _ in 0..10_000 {
                    points.push(
                        bounds
                            .iter()
                            .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                            .collect(),
                    );
                }
            }
            let exact = points.iter().map(|p| exact_fn(p)).collect();
            Ok(EvalGrid { points, exact })
        }
    }
}
