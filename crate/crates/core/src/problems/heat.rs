//! Heat equation on the unbounded strip R x [0,1] in coordinates (x, t):
//! `u_t = u_xx + f` with the shifted-kernel solution
//! `u(x,t) = exp(-(x-10)^2 / (4t+4)) / sqrt(t+1)`, for which f = 0.

use std::sync::Arc;

use super::{DirichletBc, PdeProblem, PointFn, ResidualOp};
use crate::domain::DomainSpec;
use crate::network::{Jet2, JetAdjoint, JetMode};

/// r = u_t - u_xx with x = coord 0, t = coord 1.
struct HeatResidual;

impl ResidualOp for HeatResidual {
    fn mode(&self) -> JetMode {
        JetMode::HessDiag
    }

    fn eval(&self, _x: &[f64], jet: &Jet2) -> f64 {
        jet.grad[1] - jet.hess_diag(0)
    }

    fn jet_adjoint(&self, _x: &[f64], _jet: &Jet2) -> JetAdjoint {
        JetAdjoint {
            value: 0.0,
            grad: vec![0.0, 1.0],
            hess: vec![-1.0, 0.0],
        }
    }
}

pub fn heat_unbounded_1d() -> PdeProblem {
    let exact: PointFn = Arc::new(|x: &[f64]| {
        let (xx, t) = (x[0], x[1]);
        (-(xx - 10.0).powi(2) / (4.0 * t + 4.0)).exp() / (t + 1.0).sqrt()
    });
    let ic = exact.clone();
    PdeProblem {
        name: "heat_unbounded_1d",
        dim: 2,
        time_index: Some(1),
        time_range: Some((0.0, 1.0)),
        domain: DomainSpec::HalfplaneTimeStrip {
            t_range: (0.0, 1.0),
            // Initial-condition abscissas; wide enough to reach the peak at
            // x = 10 with useful frequency.
            ic_center: 0.0,
            ic_sigma: 6.0,
        },
        residual_op: Box::new(HeatResidual),
        boundary_op: Box::new(DirichletBc { target: ic }),
        exact: Some(exact),
        forcing: Arc::new(|_| 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::fd;
    use crate::rng::rng_from;
    use rand::Rng;

    #[test]
    fn exact_peak_values() {
        let p = heat_unbounded_1d();
        let u = p.exact.as_ref().unwrap();
        assert_eq!(u(&[10.0, 0.0]), 1.0);
        // At t = 1 the peak sits at x = 10 with value 1/sqrt(2).
        assert!((u(&[10.0, 1.0]) - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!(u(&[9.0, 1.0]) < u(&[10.0, 1.0]));
        assert!(u(&[11.0, 1.0]) < u(&[10.0, 1.0]));
    }

    #[test]
    fn exact_solution_is_source_free() {
        // |u_t - u_xx| at random points confirms f = 0.
        let p = heat_unbounded_1d();
        let u = p.exact.as_ref().unwrap().clone();
        let mut rng = rng_from(12);
        for _ in 0..10 {
            let x = 6.0 + 8.0 * rng.random::<f64>();
            let t = rng.random::<f64>();
            let ut = fd::d1(|s| u(&[x, s]), t, 1e-4);
            let uxx = fd::d2(|s| u(&[s, t]), x, 1e-4);
            assert!((ut - uxx).abs() < 1e-6, "residual {} at ({x},{t})", ut - uxx);
        }
    }

    #[test]
    fn initial_condition_residual() {
        let p = heat_unbounded_1d();
        let net = crate::network::Network::init(&[2, 6, 1], 2).unwrap();
        let x = [8.0, 0.0];
        let b = p.boundary_residual(&net, &x).unwrap();
        let want = net.forward(&x).unwrap() - (-(8.0_f64 - 10.0).powi(2) / 4.0).exp();
        assert_eq!(b.as_slice(), &[want]);
    }
}
