//! One-off generator for the Allen-Cahn reference table
//! `crates/core/data/allen_cahn_reference.csv` (header x,t,u; 512 x 201 grid
//! over [-1,1] x [0,1]).
//!
//! Solves `u_t = 0.0001 u_xx - 5 u^3 + 5 u`, `u(x,0) = x^2 cos(pi x)` with
//! periodic boundaries by second-order central differences on a 2048-point
//! periodic grid and classic RK4 in time (dt = 1e-4; the diffusion CFL bound
//! is ~6.6e-3). The output subsamples every 4th grid point and every 50th
//! step. Run from the repository root:
//!
//! ```text
//! cargo run --release -p fipinn --bin gen_allen_cahn_ref
//! ```

use std::fmt::Write as _;

const N: usize = 2048;
const DT: f64 = 1e-4;
const STEPS: usize = 10_000;
const X_STRIDE: usize = 4; // 2048 / 4 = 512 output columns
const T_STRIDE: usize = 50; // 10000 / 50 = 200 output rows + initial

const NU: f64 = 1e-4;

fn rhs(u: &[f64], out: &mut [f64]) {
    let h = 2.0 / N as f64;
    let inv_h2 = 1.0 / (h * h);
    for i in 0..N {
        let um = u[(i + N - 1) % N];
        let up = u[(i + 1) % N];
        let ui = u[i];
        out[i] = NU * (um - 2.0 * ui + up) * inv_h2 - 5.0 * ui * ui * ui + 5.0 * ui;
    }
}

fn main() {
    let mut u: Vec<f64> = (0..N)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / N as f64;
            x * x * (std::f64::consts::PI * x).cos()
        })
        .collect();

    let mut csv = String::with_capacity(512 * 201 * 32);
    csv.push_str("x,t,u\n");
    let dump = |u: &[f64], t: f64, csv: &mut String| {
        for i in (0..N).step_by(X_STRIDE) {
            let x = -1.0 + 2.0 * i as f64 / N as f64;
            writeln!(csv, "{x:.9e},{t:.9e},{:.9e}", u[i]).unwrap();
        }
    };
    dump(&u, 0.0, &mut csv);

    let mut k1 = vec![0.0; N];
    let mut k2 = vec![0.0; N];
    let mut k3 = vec![0.0; N];
    let mut k4 = vec![0.0; N];
    let mut tmp = vec![0.0; N];

    for step in 1..=STEPS {
        rhs(&u, &mut k1);
        for i in 0..N {
            tmp[i] = u[i] + 0.5 * DT * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..N {
            tmp[i] = u[i] + 0.5 * DT * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..N {
            tmp[i] = u[i] + DT * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..N {
            u[i] += DT / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % T_STRIDE == 0 {
            dump(&u, step as f64 * DT, &mut csv);
        }
    }

    // Self-check: the solution must stay within the stable phase bounds.
    let max_abs = u.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    eprintln!("max |u(x,1)| = {max_abs:.6}");
    assert!(max_abs <= 1.0 + 1e-6, "solution left [-1,1]");

    let path = std::path::Path::new("crates/core/data/allen_cahn_reference.csv");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, csv).unwrap();
    eprintln!("wrote {}", path.display());
}
