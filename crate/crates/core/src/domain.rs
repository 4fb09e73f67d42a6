//! Problem domains: membership tests, boundary predicates, and seeded
//! boundary samplers.
//!
//! Four geometries cover the problem catalog: axis-aligned boxes (optionally
//! with a time axis whose final face carries no condition), the exterior of a
//! fixed star-shaped curve, a time strip `R x [t0, t1]` for unbounded heat
//! problems, and all of `R^d`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Star-shaped interior boundary, in polar form `rho(t) = 1 - cos(5t)/4`:
/// the curve `(cos t - cos(5t)cos(t)/4, sin t - cos(5t)sin(t)/4)`.
pub fn star_radius(theta: f64) -> f64 {
    1.0 - (5.0 * theta).cos() / 4.0
}

/// Point on the star curve at parameter `t`.
pub fn star_point(t: f64) -> (f64, f64) {
    let r = star_radius(t);
    (r * t.cos(), r * t.sin())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DomainSpec {
    /// Axis-aligned box. When `time_index` is set, that coordinate is time
    /// and the final-time face is not part of the boundary.
    Box {
        bounds: Vec<(f64, f64)>,
        time_index: Option<usize>,
    },
    /// Exterior of the star curve: unbounded, dimension 2, Dirichlet data on
    /// the curve itself.
    BoxMinusStar,
    /// `R x [t0, t1]` in coordinates (x, t); the boundary is the initial
    /// line t = t0, sampled with x ~ N(ic_center, ic_sigma^2).
    HalfplaneTimeStrip {
        t_range: (f64, f64),
        ic_center: f64,
        ic_sigma: f64,
    },
    /// All of `R^d`; no boundary.
    Unbounded { dim: usize },
}

impl DomainSpec {
    pub fn unit_box(dim: usize) -> Self {
        DomainSpec::Box {
            bounds: vec![(-1.0, 1.0); dim],
            time_index: None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Box { bounds, .. } => bounds.len(),
            DomainSpec::BoxMinusStar => 2,
            DomainSpec::HalfplaneTimeStrip { .. } => 2,
            DomainSpec::Unbounded { dim } => *dim,
        }
    }

    /// Interior membership (closed-set semantics; the boundary itself has
    /// measure zero).
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Box { bounds, .. } => bounds
                .iter()
                .zip(x)
                .all(|(&(lo, hi), &xi)| xi >= lo && xi <= hi),
            DomainSpec::BoxMinusStar => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let theta = x[1].atan2(x[0]);
                rho >= star_radius(theta)
            }
            DomainSpec::HalfplaneTimeStrip { t_range, .. } => {
                x[1] >= t_range.0 && x[1] <= t_range.1
            }
            DomainSpec::Unbounded { .. } => true,
        }
    }

    /// Whether `x` lies on the boundary where conditions are imposed.
    pub fn on_boundary(&self, x: &[f64], tol: f64) -> bool {
        match self {
            DomainSpec::Box { bounds, time_index } => {
                if !self.contains(x) {
                    return false;
                }
                bounds.iter().zip(x).enumerate().any(|(i, (&(lo, hi), &xi))| {
                    if Some(i) == *time_index {
                        // Only the initial face carries a condition.
                        (xi - lo).abs() <= tol
                    } else {
                        (xi - lo).abs() <= tol || (xi - hi).abs() <= tol
                    }
                })
            }
            DomainSpec::BoxMinusStar => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let theta = x[1].atan2(x[0]);
                (rho - star_radius(theta)).abs() <= tol
            }
            DomainSpec::HalfplaneTimeStrip { t_range, .. } => (x[1] - t_range.0).abs() <= tol,
            DomainSpec::Unbounded { .. } => false,
        }
    }

    /// Volume, when finite.
    pub fn volume(&self) -> Option<f64> {
        match self {
            DomainSpec::Box { bounds, .. } => {
                let v = bounds.iter().map(|&(lo, hi)| hi - lo).product::<f64>();
                v.is_finite().then_some(v)
            }
            _ => None,
        }
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        match self {
            DomainSpec::Box { bounds, .. } => Some(bounds),
            _ => None,
        }
    }

    /// Draw `n` boundary points. Box faces are picked proportionally to their
    /// area; the final-time face, when a time axis exists, is excluded.
    pub fn sample_boundary(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        match self {
            DomainSpec::Box { bounds, time_index } => {
                let d = bounds.len();
                // Candidate faces: (axis, side at lo or hi) with weights.
                let mut faces = Vec::new();
                for axis in 0..d {
                    let area: f64 = bounds
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != axis)
                        .map(|(_, &(lo, hi))| hi - lo)
                        .product();
                    faces.push((axis, false, area));
                    if Some(axis) != *time_index {
                        faces.push((axis, true, area));
                    }
                }
                let total: f64 = faces.iter().map(|f| f.2).sum();
                if !(total > 0.0) {
                    return Err(Error::Sampling("degenerate box boundary".into()));
                }
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut pick = rng.random::<f64>() * total;
                    let mut chosen = faces.len() - 1;
                    for (idx, f) in faces.iter().enumerate() {
                        if pick < f.2 {
                            chosen = idx;
                            break;
                        }
                        pick -= f.2;
                    }
                    let (axis, upper, _) = faces[chosen];
                    let mut p = vec![0.0; d];
                    for (j, &(lo, hi)) in bounds.iter().enumerate() {
                        p[j] = if j == axis {
                            if upper {
                                hi
                            } else {
                                lo
                            }
                        } else {
                            lo + (hi - lo) * rng.random::<f64>()
                        };
                    }
                    out.push(p);
                }
                Ok(out)
            }
            DomainSpec::BoxMinusStar => {
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                    let (x, y) = star_point(t);
                    out.push(vec![x, y]);
                }
                Ok(out)
            }
            DomainSpec::HalfplaneTimeStrip {
                t_range,
                ic_center,
                ic_sigma,
            } => {
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    out.push(vec![ic_center + ic_sigma * z, t_range.0]);
                }
                Ok(out)
            }
            DomainSpec::Unbounded { .. } => {
                Err(Error::Sampling("unbounded domain has no boundary".into()))
            }
        }
    }
}
