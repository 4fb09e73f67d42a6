//! One-off generator for the Burgers reference table
//! `crates/core/data/burgers_reference.csv` (header x,t,u; 512 x 201 grid
//! over [-1,1] x [0,1]).
//!
//! Solves `u_t + u u_x = nu u_xx`, `u(x,0) = -sin(pi x)` by the Cole-Hopf
//! closed form,
//!
//! ```text
//! u(x,t) = - I[ sin(pi(x-eta)) f(x-eta) K(eta) ] / I[ f(x-eta) K(eta) ],
//! f(y) = exp(-cos(pi y) / (2 pi nu)),  K(eta) = exp(-eta^2 / (4 nu t)),
//! ```
//!
//! evaluated by trapezoid quadrature in the scaled variable
//! `eta = sqrt(4 nu t) z` with the max log-term subtracted for stability.
//! Exponential tilting by `f` pushes the integrand maximum out to
//! `|z| ~ 25 pi sqrt(4 nu t) < 9`, so the z-range of +-20 holds the full
//! mass. Run from the repository root:
//!
//! ```text
//! cargo run --release -p fipinn --bin gen_burgers_ref
//! ```

use std::fmt::Write as _;

const NU: f64 = 0.01 / std::f64::consts::PI;
const NX: usize = 512;
const NT: usize = 201;
const Z_RANGE: f64 = 20.0;
const Z_STEPS: usize = 8000;

fn cole_hopf(x: f64, t: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if t == 0.0 {
        return -(pi * x).sin();
    }
    let s = (4.0 * NU * t).sqrt();
    let tilt = 1.0 / (2.0 * pi * NU);
    let h = 2.0 * Z_RANGE / Z_STEPS as f64;

    // First pass: max exponent for stable normalization.
    let mut max_e = f64::NEG_INFINITY;
    for i in 0..=Z_STEPS {
        let z = -Z_RANGE + h * i as f64;
        let y = x - s * z;
        let e = -z * z - tilt * (pi * y).cos();
        if e > max_e {
            max_e = e;
        }
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=Z_STEPS {
        let z = -Z_RANGE + h * i as f64;
        let y = x - s * z;
        let w = if i == 0 || i == Z_STEPS { 0.5 } else { 1.0 };
        let g = w * (-z * z - tilt * (pi * y).cos() - max_e).exp();
        num += (pi * y).sin() * g;
        den += g;
    }
    -num / den
}

fn main() {
    let mut csv = String::with_capacity(NX * NT * 32);
    csv.push_str("x,t,u\n");
    let mut max_seam: f64 = 0.0;
    for j in 0..NT {
        let t = j as f64 / (NT - 1) as f64;
        for i in 0..NX {
            let x = -1.0 + 2.0 * i as f64 / (NX - 1) as f64;
            let u = cole_hopf(x, t);
            writeln!(csv, "{x:.9e},{t:.9e},{u:.9e}").unwrap();
            if x.abs() == 1.0 {
                max_seam = max_seam.max(u.abs());
            }
        }
        if j % 50 == 0 {
            eprintln!("t = {t:.3} done");
        }
    }

    // Self-checks: odd symmetry and homogeneous walls.
    let sym = (cole_hopf(0.37, 0.4) + cole_hopf(-0.37, 0.4)).abs();
    eprintln!("odd-symmetry defect {sym:.3e}, max |u(+-1,t)| {max_seam:.3e}");
    assert!(sym < 1e-10 && max_seam < 1e-10, "self-check failed");

    let path = std::path::Path::new("crates/core/data/burgers_reference.csv");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, csv).unwrap();
    eprintln!("wrote {}", path.display());
}
