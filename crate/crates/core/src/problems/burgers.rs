//! Viscous Burgers equation on [-1,1] x [0,1] in coordinates (x, t):
//! `u_t + u u_x - (0.01/pi) u_xx = 0`, `u(x,0) = -sin(pi x)`,
//! `u(-1,t) = u(1,t) = 0`.
//!
//! No closed-form exact solution is attached; error reporting runs against
//! the shipped reference table (see the harness).

use std::sync::Arc;

use super::{DirichletBc, PdeProblem, PointFn, ResidualOp};
use crate::domain::DomainSpec;
use crate::network::{Jet2, JetAdjoint, JetMode};

pub const BURGERS_NU: f64 = 0.01 / std::f64::consts::PI;

/// r = u_t + u u_x - nu u_xx with x = coord 0, t = coord 1.
struct BurgersResidual {
    nu: f64,
}

impl ResidualOp for BurgersResidual {
    fn mode(&self) -> JetMode {
        JetMode::HessDiag
    }

    fn eval(&self, _x: &[f64], jet: &Jet2) -> f64 {
        jet.grad[1] + jet.value * jet.grad[0] - self.nu * jet.hess_diag(0)
    }

    fn jet_adjoint(&self, _x: &[f64], jet: &Jet2) -> JetAdjoint {
        JetAdjoint {
            value: jet.grad[0],
            grad: vec![jet.value, 1.0],
            hess: vec![-self.nu, 0.0],
        }
    }
}

pub fn burgers_1d() -> PdeProblem {
    // Initial face carries u + sin(pi x); lateral faces are homogeneous
    // Dirichlet. The target switches on the sampled coordinates.
    let target: PointFn = Arc::new(|x: &[f64]| {
        if x[1] == 0.0 {
            -(std::f64::consts::PI * x[0]).sin()
        } else {
            0.0
        }
    });
    PdeProblem {
        name: "burgers_1d",
        dim: 2,
        time_index: Some(1),
        time_range: Some((0.0, 1.0)),
        domain: DomainSpec::Box {
            bounds: vec![(-1.0, 1.0), (0.0, 1.0)],
            time_index: Some(1),
        },
        residual_op: Box::new(BurgersResidual { nu: BURGERS_NU }),
        boundary_op: Box::new(DirichletBc { target }),
        exact: None,
        forcing: Arc::new(|_| 0.0),
    }
}
