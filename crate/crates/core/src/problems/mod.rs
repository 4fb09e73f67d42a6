//! PDE problem catalog: residual and boundary operators built on the jet
//! network, plus exact solutions and hard-coded forcing terms where the
//! closed form is known.
//!
//! Forcing terms are derived analytically from the stated exact solutions and
//! cross-validated against finite differences in the tests.

mod allen_cahn;
mod burgers;
mod heat;
mod poisson;

pub use allen_cahn::allen_cahn_1d;
pub use burgers::burgers_1d;
pub use heat::heat_unbounded_1d;
pub use poisson::{poisson_highdim, poisson_peak_2d, poisson_two_peak_2d, poisson_unbounded_2d};

use std::sync::Arc;

use crate::domain::DomainSpec;
use crate::error::Result;
use crate::network::{Jet2, JetAdjoint, JetMode, JetTape, Network};

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Differential residual `r(x; theta)` expressed on second-order jets: how to
/// evaluate it and its partials with respect to the jet components.
pub trait ResidualOp: Send + Sync {
    /// Jet information the residual needs.
    fn mode(&self) -> JetMode;
    /// r(x; theta) given the jet of u at x.
    fn eval(&self, x: &[f64], jet: &Jet2) -> f64;
    /// dr/d(value, grad, hess) at this jet.
    fn jet_adjoint(&self, x: &[f64], jet: &Jet2) -> JetAdjoint;
}

/// Boundary residual components at one boundary point. At most two per point
/// in this catalog (value and derivative mismatch for periodic penalties).
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundaryValues {
    vals: [f64; 2],
    len: usize,
}

impl BoundaryValues {
    pub fn one(v: f64) -> Self {
        BoundaryValues {
            vals: [v, 0.0],
            len: 1,
        }
    }

    pub fn two(a: f64, b: f64) -> Self {
        BoundaryValues {
            vals: [a, b],
            len: 2,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.len]
    }
}

/// Boundary operator `b(x; theta)`: evaluation and parameter-gradient
/// accumulation of its components.
pub trait BoundaryOp: Send + Sync {
    fn eval(&self, net: &Network, x: &[f64]) -> Result<BoundaryValues>;

    /// Accumulate `sum_j coeff[j] * d b_j / d theta` into `grad`.
    fn accumulate_grad(
        &self,
        net: &Network,
        tape: &mut JetTape,
        x: &[f64],
        coeff: &[f64],
        grad: &mut [f64],
    ) -> Result<()>;
}

/// Dirichlet-type condition `b = u(x; theta) - target(x)`; covers boundary
/// data and initial conditions (the target may switch on the coordinates).
pub struct DirichletBc {
    pub target: PointFn,
}

impl BoundaryOp for DirichletBc {
    fn eval(&self, net: &Network, x: &[f64]) -> Result<BoundaryValues> {
        Ok(BoundaryValues::one(net.forward(x)? - (self.target)(x)))
    }

    fn accumulate_grad(
        &self,
        net: &Network,
        tape: &mut JetTape,
        x: &[f64],
        coeff: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        net.forward_jet_rec(x, JetMode::Grad, tape)?;
        let adj = JetAdjoint::value_only(coeff[0], net.input_dim(), JetMode::Grad);
        net.backprop_params(tape, &adj, grad);
        Ok(())
    }
}

/// One PDE problem: domain, residual, boundary operator, and (when the paper
/// states one) the exact solution and derived forcing.
pub struct PdeProblem {
    pub name: &'static str,
    pub dim: usize,
    /// Index of the time coordinate for time-dependent problems.
    pub time_index: Option<usize>,
    pub time_range: Option<(f64, f64)>,
    pub domain: DomainSpec,
    pub residual_op: Box<dyn ResidualOp>,
    pub boundary_op: Box<dyn BoundaryOp>,
    pub exact: Option<PointFn>,
    pub forcing: PointFn,
}

impl PdeProblem {
    /// r(x; theta).
    pub fn residual(&self, net: &Network, x: &[f64]) -> Result<f64> {
        let jet = net.forward_jet(x, self.residual_op.mode())?;
        Ok(self.residual_op.eval(x, &jet))
    }

    /// Boundary residual components at a boundary point.
    pub fn boundary_residual(&self, net: &Network, x: &[f64]) -> Result<BoundaryValues> {
        self.boundary_op.eval(net, x)
    }
}
