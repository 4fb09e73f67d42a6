//! Poisson problems: `-lap(u) = f` with Dirichlet data from the exact
//! solution. Covers the peaked and two-peak unit squares, the d-dimensional
//! cube, and the star-exterior unbounded plane.

use std::sync::Arc;

use super::{DirichletBc, PdeProblem, PointFn, ResidualOp};
use crate::domain::DomainSpec;
use crate::network::{Jet2, JetAdjoint, JetMode};

/// r = -lap(u) - f.
struct PoissonResidual {
    dim: usize,
    forcing: PointFn,
}

impl ResidualOp for PoissonResidual {
    fn mode(&self) -> JetMode {
        JetMode::HessDiag
    }

    fn eval(&self, x: &[f64], jet: &Jet2) -> f64 {
        -jet.laplacian() - (self.forcing)(x)
    }

    fn jet_adjoint(&self, _x: &[f64], _jet: &Jet2) -> JetAdjoint {
        JetAdjoint {
            value: 0.0,
            grad: vec![0.0; self.dim],
            hess: vec![-1.0; self.dim],
        }
    }
}

fn dirichlet_poisson(
    name: &'static str,
    dim: usize,
    domain: DomainSpec,
    exact: PointFn,
    forcing: PointFn,
) -> PdeProblem {
    PdeProblem {
        name,
        dim,
        time_index: None,
        time_range: None,
        domain,
        residual_op: Box::new(PoissonResidual {
            dim,
            forcing: forcing.clone(),
        }),
        boundary_op: Box::new(DirichletBc {
            target: exact.clone(),
        }),
        exact: Some(exact),
        forcing,
    }
}

/// Sharp single peak at (0.5, 0.5) on [-1,1]^2:
/// `u = exp(-1000 [(x-1/2)^2 + (y-1/2)^2])`.
pub fn poisson_peak_2d() -> PdeProblem {
    const A: f64 = 1000.0;
    let exact: PointFn = Arc::new(|x: &[f64]| {
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
        (-A * r2).exp()
    });
    // lap(u) = u * (4 A^2 r^2 - 4 A), so f = -lap(u) = 4 A u (1 - A r^2).
    let forcing: PointFn = Arc::new(|x: &[f64]| {
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
        4.0 * A * (-A * r2).exp() * (1.0 - A * r2)
    });
    dirichlet_poisson(
        "poisson_peak_2d",
        2,
        DomainSpec::unit_box(2),
        exact,
        forcing,
    )
}

/// Two peaks at (0.5, 0.5) and (-0.5, -0.5) on [-1,1]^2.
pub fn poisson_two_peak_2d() -> PdeProblem {
    const A: f64 = 1000.0;
    let peak = |x: &[f64], cx: f64, cy: f64| {
        let r2 = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
        (-A * r2).exp()
    };
    let peak_forcing = |x: &[f64], cx: f64, cy: f64| {
        let r2 = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
        4.0 * A * (-A * r2).exp() * (1.0 - A * r2)
    };
    let exact: PointFn = Arc::new(move |x: &[f64]| peak(x, 0.5, 0.5) + peak(x, -0.5, -0.5));
    let forcing: PointFn =
        Arc::new(move |x: &[f64]| peak_forcing(x, 0.5, 0.5) + peak_forcing(x, -0.5, -0.5));
    dirichlet_poisson(
        "poisson_two_peak_2d",
        2,
        DomainSpec::unit_box(2),
        exact,
        forcing,
    )
}

/// `u = exp(-10 |x|^2)` on [-1,1]^d with `f = (20 d - 400 |x|^2) u`.
pub fn poisson_highdim(d: usize) -> PdeProblem {
    assert!(d >= 1, "dimension must be positive");
    let exact: PointFn = Arc::new(|x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-10.0 * r2).exp()
    });
    let dim = d;
    let forcing: PointFn = Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (20.0 * dim as f64 - 400.0 * r2) * (-10.0 * r2).exp()
    });
    dirichlet_poisson(
        "poisson_highdim",
        d,
        DomainSpec::unit_box(d),
        exact,
        forcing,
    )
}

/// `u = exp(-(x-4)^2 - (y-4)^2)` on the star-exterior unbounded plane, with
/// Dirichlet data on the star curve.
pub fn poisson_unbounded_2d() -> PdeProblem {
    let exact: PointFn = Arc::new(|x: &[f64]| {
        let r2 = (x[0] - 4.0).powi(2) + (x[1] - 4.0).powi(2);
        (-r2).exp()
    });
    // lap(u) = u (4 r^2 - 4), so f = 4 u (1 - r^2).
    let forcing: PointFn = Arc::new(|x: &[f64]| {
        let r2 = (x[0] - 4.0).powi(2) + (x[1] - 4.0).powi(2);
        4.0 * (-r2).exp() * (1.0 - r2)
    });
    dirichlet_poisson(
        "poisson_unbounded_2d",
        2,
        DomainSpec::BoxMinusStar,
        exact,
        forcing,
    )
}
