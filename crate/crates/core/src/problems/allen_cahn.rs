//! Allen-Cahn equation on [-1,1] x [0,1] in coordinates (x, t):
//! `u_t - 0.0001 u_xx + 5 u^3 - 5 u = 0`, `u(x,0) = x^2 cos(pi x)`, with the
//! periodic boundary `u(-1,t) = u(1,t)`, `u_x(-1,t) = u_x(1,t)` enforced by
//! penalty components rather than a hard constraint.

use std::sync::Arc;

use super::{BoundaryOp, BoundaryValues, PdeProblem, ResidualOp};
use crate::domain::DomainSpec;
use crate::error::Result;
use crate::network::{Jet2, JetAdjoint, JetMode, JetTape, Network};

pub const AC_DIFFUSIVITY: f64 = 1e-4;

/// r = u_t - 0.0001 u_xx + 5 u^3 - 5 u with x = coord 0, t = coord 1.
struct AllenCahnResidual;

impl ResidualOp for AllenCahnResidual {
    fn mode(&self) -> JetMode {
        JetMode::HessDiag
    }

    fn eval(&self, _x: &[f64], jet: &Jet2) -> f64 {
        jet.grad[1] - AC_DIFFUSIVITY * jet.hess_diag(0) + 5.0 * jet.value.powi(3)
            - 5.0 * jet.value
    }

    fn jet_adjoint(&self, _x: &[f64], jet: &Jet2) -> JetAdjoint {
        JetAdjoint {
            value: 15.0 * jet.value * jet.value - 5.0,
            grad: vec![0.0, 1.0],
            hess: vec![-AC_DIFFUSIVITY, 0.0],
        }
    }
}

fn initial_profile(x: f64) -> f64 {
    x * x * (std::f64::consts::PI * x).cos()
}

/// Initial condition on the t = 0 face; value and slope mismatch between the
/// x = -1 and x = 1 edges elsewhere.
struct AllenCahnBc;

impl BoundaryOp for AllenCahnBc {
    fn eval(&self, net: &Network, x: &[f64]) -> Result<BoundaryValues> {
        if x[1] == 0.0 {
            return Ok(BoundaryValues::one(
                net.forward(x)? - initial_profile(x[0]),
            ));
        }
        let t = x[1];
        let left = net.forward_jet(&[-1.0, t], JetMode::Grad)?;
        let right = net.forward_jet(&[1.0, t], JetMode::Grad)?;
        Ok(BoundaryValues::two(
            left.value - right.value,
            left.grad[0] - right.grad[0],
        ))
    }

    fn accumulate_grad(
        &self,
        net: &Network,
        tape: &mut JetTape,
        x: &[f64],
        coeff: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        if x[1] == 0.0 {
            net.forward_jet_rec(x, JetMode::Grad, tape)?;
            let adj = JetAdjoint::value_only(coeff[0], 2, JetMode::Grad);
            net.backprop_params(tape, &adj, grad);
            return Ok(());
        }
        let t = x[1];
        for (side, sign) in [(-1.0, 1.0), (1.0, -1.0)] {
            net.forward_jet_rec(&[side, t], JetMode::Grad, tape)?;
            let adj = JetAdjoint {
                value: sign * coeff[0],
                grad: vec![sign * coeff[1], 0.0],
                hess: vec![],
            };
            net.backprop_params(tape, &adj, grad);
        }
        Ok(())
    }
}

pub fn allen_cahn_1d() -> PdeProblem {
    PdeProblem {
        name: "allen_cahn_1d",
        dim: 2,
        time_index: Some(1),
        time_range: Some((0.0, 1.0)),
        domain: DomainSpec::Box {
            bounds: vec![(-1.0, 1.0), (0.0, 1.0)],
            time_index: Some(1),
        },
        residual_op: Box::new(AllenCahnResidual),
        boundary_op: Box::new(AllenCahnBc),
        exact: None,
        forcing: Arc::new(|_| 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_residual_at_origin_is_plain_value() {
        // x^2 cos(pi x) vanishes at x = 0, so b = u(0,0) - 0.
        let p = allen_cahn_1d();
        let net = Network::init(&[2, 6, 1], 3).unwrap();
        let b = p.boundary_residual(&net, &[0.0, 0.0]).unwrap();
        assert_eq!(b.as_slice(), &[net.forward(&[0.0, 0.0]).unwrap()]);
    }

    #[test]
    fn periodic_value_mismatch_vanishes_for_even_network() {
        // A network that ignores x is even in x, so the value mismatch is 0.
        let mut net = Network::init(&[2, 4, 1], 1).unwrap();
        // Zero the first-layer weights on the x input (row-major [out][in]).
        for o in 0..4 {
            net.params_mut()[o * 2] = 0.0;
        }
        let p = allen_cahn_1d();
        let b = p.boundary_residual(&net, &[-1.0, 0.5]).unwrap();
        assert_eq!(b.as_slice()[0], 0.0);
        assert_eq!(b.as_slice()[1], 0.0);
    }

    #[test]
    fn periodic_components_match_direct_evaluation() {
        let p = allen_cahn_1d();
        let net = Network::init(&[2, 8, 1], 9).unwrap();
        let t = 0.33;
        let b = p.boundary_residual(&net, &[-1.0, t]).unwrap();
        let l = net.forward_jet(&[-1.0, t], JetMode::Grad).unwrap();
        let r = net.forward_jet(&[1.0, t], JetMode::Grad).unwrap();
        assert_eq!(b.as_slice(), &[l.value - r.value, l.grad[0] - r.grad[0]]);
    }

    #[test]
    fn cubic_reaction_term_value() {
        // Constant net u = 2 has zero derivatives: r = 5*8 - 5*2 = 30.
        let mut net = Network::init(&[2, 4, 1], 0).unwrap();
        let n = net.param_count();
        net.params_mut().fill(0.0);
        net.params_mut()[n - 1] = 2.0;
        let p = allen_cahn_1d();
        let r = p.residual(&net, &[0.3, 0.5]).unwrap();
        assert_eq!(r, 30.0);
    }
}
