//! Dense feed-forward tanh network with exact input derivatives (orders 0-2)
//! and exact parameter gradients of jet-valued losses.
//!
//! Input derivatives are computed by forward-mode jet propagation: every
//! neuron carries a channel block `[value, du/dx_1..du/dx_d, hessian...]`
//! through the affine/tanh layers, using `tanh' = 1 - t^2` and
//! `tanh'' = -2 t (1 - t^2)`. Parameter gradients are computed by reverse
//! accumulation through the recorded jet computation, so losses may depend on
//! the network value, its input gradient, and its input Hessian.
//!
//! Parameter layout (the checkpoint contract): for each layer in order,
//! weights in row-major `[out][in]` order, then biases. The final layer is
//! affine with no activation; the output is scalar.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Which input derivatives a jet evaluation carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JetMode {
    /// Value and input gradient.
    Grad,
    /// Value, gradient, and the diagonal of the input Hessian.
    HessDiag,
    /// Value, gradient, and the full input Hessian.
    HessFull,
}

impl JetMode {
    /// Channels carried per neuron.
    pub fn channels(self, d: usize) -> usize {
        1 + d + self.hess_len(d)
    }

    /// Hessian channels carried per neuron.
    pub fn hess_len(self, d: usize) -> usize {
        match self {
            JetMode::Grad => 0,
            JetMode::HessDiag => d,
            JetMode::HessFull => d * d,
        }
    }
}

/// Hessian part of a second-order jet.
#[derive(Debug, Clone, PartialEq)]
pub enum JetHess {
    None,
    /// Diagonal entries `d^2u/dx_i^2`.
    Diag(Vec<f64>),
    /// Row-major `d x d` matrix.
    Full(Vec<f64>),
}

/// Value, input gradient, and (optionally) input Hessian of the network
/// output at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: JetHess,
}

impl Jet2 {
    /// `d^2u/dx_i^2`. Panics if the jet carries no Hessian.
    pub fn hess_diag(&self, i: usize) -> f64 {
        match &self.hess {
            JetHess::Diag(h) => h[i],
            JetHess::Full(h) => h[i * self.grad.len() + i],
            JetHess::None => panic!("jet carries no Hessian"),
        }
    }

    /// `d^2u/dx_i dx_j`. Panics unless the jet carries a full Hessian.
    pub fn hess_entry(&self, i: usize, j: usize) -> f64 {
        match &self.hess {
            JetHess::Full(h) => h[i * self.grad.len() + j],
            _ => panic!("jet carries no full Hessian"),
        }
    }

    /// Trace of the Hessian.
    pub fn laplacian(&self) -> f64 {
        (0..self.grad.len()).map(|i| self.hess_diag(i)).sum()
    }
}

/// Adjoint of a scalar loss with respect to a jet: `dL/d(value)`,
/// `dL/d(grad_i)`, and `dL/d(hess)` in the layout of the jet's mode.
#[derive(Debug, Clone)]
pub struct JetAdjoint {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl JetAdjoint {
    pub fn zero(d: usize, mode: JetMode) -> Self {
        JetAdjoint {
            value: 0.0,
            grad: vec![0.0; d],
            hess: vec![0.0; mode.hess_len(d)],
        }
    }

    pub fn value_only(v: f64, d: usize, mode: JetMode) -> Self {
        let mut adj = Self::zero(d, mode);
        adj.value = v;
        adj
    }

    /// Scale every component in place.
    pub fn scale(&mut self, c: f64) {
        self.value *= c;
        for g in &mut self.grad {
            *g *= c;
        }
        for h in &mut self.hess {
            *h *= c;
        }
    }
}

/// Reusable forward-jet record plus backprop scratch. One per thread;
/// reusing it across points avoids per-point allocation in training loops.
#[derive(Debug, Default, Clone)]
pub struct JetTape {
    mode: Option<JetMode>,
    d: usize,
    c: usize,
    /// Input jets of each layer (`a[0]` holds the seeded input point).
    a: Vec<Vec<f64>>,
    /// Pre-activation jets of each layer.
    z: Vec<Vec<f64>>,
    bar0: Vec<f64>,
    bar1: Vec<f64>,
}

impl JetTape {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, widths: &[usize], d: usize, mode: JetMode) {
        let c = mode.channels(d);
        let layers = widths.len() - 1;
        self.mode = Some(mode);
        self.d = d;
        self.c = c;
        self.a.resize(layers, Vec::new());
        self.z.resize(layers, Vec::new());
        for l in 0..layers {
            self.a[l].resize(widths[l] * c, 0.0);
            self.z[l].resize(widths[l + 1] * c, 0.0);
        }
        let wmax = widths.iter().copied().max().unwrap_or(1);
        self.bar0.resize(wmax * c, 0.0);
        self.bar1.resize(wmax * c, 0.0);
    }
}

/// Checkpoint schema: layer widths, initialization seed, and the flat
/// parameter vector (weights then biases per layer).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_widths: Vec<usize>,
    pub seed: u64,
    pub params: Vec<f64>,
}

/// Dense feed-forward tanh network with scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    widths: Vec<usize>,
    params: Vec<f64>,
    init_seed: u64,
    /// Per-layer (weight offset, bias offset) into `params`.
    offsets: Vec<(usize, usize)>,
}

fn layer_offsets(widths: &[usize]) -> (Vec<(usize, usize)>, usize) {
    let mut offsets = Vec::with_capacity(widths.len() - 1);
    let mut at = 0;
    for l in 0..widths.len() - 1 {
        let w = widths[l + 1] * widths[l];
        offsets.push((at, at + w));
        at += w + widths[l + 1];
    }
    (offsets, at)
}

impl Network {
    /// Glorot-uniform weights (bound `sqrt(6/(fan_in+fan_out))`), zero biases,
    /// reproducible per seed.
    pub fn init(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::config("network needs at least input and output widths"));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::config(format!("zero layer width in {widths:?}")));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::config("output width must be 1"));
        }
        let (offsets, count) = layer_offsets(widths);
        let mut params = vec![0.0; count];
        let mut rng = rng_from(seed);
        for l in 0..widths.len() - 1 {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w_off, b_off) = offsets[l];
            for w in &mut params[w_off..w_off + fan_out * fan_in] {
                *w = bound * (2.0 * rng.random::<f64>() - 1.0);
            }
            // biases stay zero
            let _ = b_off;
        }
        Ok(Network {
            widths: widths.to_vec(),
            params,
            init_seed: seed,
            offsets,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.params.len() {
            return Err(Error::Dimension {
                expected: self.params.len(),
                got: p.len(),
            });
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.widths[0] {
            return Err(Error::Dimension {
                expected: self.widths[0],
                got: x.len(),
            });
        }
        Ok(())
    }

    /// u(x; theta).
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let wmax = self.widths.iter().copied().max().unwrap();
        let mut cur = vec![0.0; wmax];
        let mut next = vec![0.0; wmax];
        cur[..x.len()].copy_from_slice(x);
        let layers = self.widths.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w_off, b_off) = self.offsets[l];
            affine_forward(
                &self.params[w_off..w_off + n_out * n_in],
                &self.params[b_off..b_off + n_out],
                n_in,
                n_out,
                1,
                &cur[..n_in],
                &mut next[..n_out],
            );
            if l + 1 < layers {
                for v in &mut next[..n_out] {
                    *v = v.tanh();
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur[0])
    }

    /// Value plus exact input derivatives at `x`.
    pub fn forward_jet(&self, x: &[f64], mode: JetMode) -> Result<Jet2> {
        let mut tape = JetTape::new();
        self.forward_jet_rec(x, mode, &mut tape)
    }

    /// Same as [`forward_jet`](Self::forward_jet), recording the computation
    /// into `tape` for a subsequent [`backprop_params`](Self::backprop_params).
    pub fn forward_jet_rec(&self, x: &[f64], mode: JetMode, tape: &mut JetTape) -> Result<Jet2> {
        self.check_input(x)?;
        let d = self.widths[0];
        tape.prepare(&self.widths, d, mode);
        let c = tape.c;

        // Seed input jets: identity gradient, zero Hessian.
        let a0 = &mut tape.a[0];
        a0.fill(0.0);
        for i in 0..d {
            a0[i * c] = x[i];
            a0[i * c + 1 + i] = 1.0;
        }

        let layers = self.widths.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w_off, b_off) = self.offsets[l];
            affine_forward(
                &self.params[w_off..w_off + n_out * n_in],
                &self.params[b_off..b_off + n_out],
                n_in,
                n_out,
                c,
                &tape.a[l],
                &mut tape.z[l],
            );
            if l + 1 < layers {
                // a[l+1] = tanh(z[l]) jets
                let (z_done, a_rest) = (&tape.z[l], &mut tape.a[l + 1]);
                tanh_forward(d, mode, n_out, z_done, a_rest);
            }
        }

        let out = &tape.z[layers - 1];
        let grad = out[1..1 + d].to_vec();
        let hess = match mode {
            JetMode::Grad => JetHess::None,
            JetMode::HessDiag => JetHess::Diag(out[1 + d..1 + 2 * d].to_vec()),
            JetMode::HessFull => JetHess::Full(out[1 + d..1 + d + d * d].to_vec()),
        };
        Ok(Jet2 {
            value: out[0],
            grad,
            hess,
        })
    }

    /// Accumulate `dL/d(theta)` into `grad` for a loss whose jet adjoint at the
    /// recorded point is `adj`. The tape must come from `forward_jet_rec` on
    /// this network with unchanged parameters.
    pub fn backprop_params(&self, tape: &mut JetTape, adj: &JetAdjoint, grad: &mut [f64]) {
        let JetTape {
            mode,
            d,
            c,
            a: tape_a,
            z: tape_z,
            bar0: zbar,
            bar1: abar,
        } = tape;
        let mode = mode.expect("tape has no recorded forward pass");
        let (d, c) = (*d, *c);
        debug_assert_eq!(grad.len(), self.params.len());
        debug_assert_eq!(adj.grad.len(), d);
        debug_assert_eq!(adj.hess.len(), mode.hess_len(d));

        let layers = self.widths.len() - 1;
        // zbar: adjoint of the current layer's pre-activation jets.
        zbar[0] = adj.value;
        zbar[1..1 + d].copy_from_slice(&adj.grad);
        zbar[1 + d..c].copy_from_slice(&adj.hess);

        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w_off, b_off) = self.offsets[l];
            let a = &tape_a[l];
            let w = &self.params[w_off..w_off + n_out * n_in];

            // Parameter adjoints, fused with abar = W^T zbar when needed.
            let want_abar = l > 0;
            if want_abar {
                abar[..n_in * c].fill(0.0);
            }
            affine_backward(
                w,
                a,
                zbar,
                n_in,
                n_out,
                c,
                &mut grad[w_off..w_off + n_out * n_in],
                want_abar.then_some(&mut abar[..n_in * c]),
            );
            for o in 0..n_out {
                grad[b_off + o] += zbar[o * c];
            }

            if l == 0 {
                break;
            }

            // Tanh backward: abar is the adjoint of t = tanh(z[l-1]); convert
            // to the adjoint of z[l-1] in place in zbar.
            let t_vals = a; // post-activations feeding layer l
            let z_prev = &tape_z[l - 1];
            for i in 0..n_in {
                let tv = t_vals[i * c];
                let s = 1.0 - tv * tv;
                let zj = &z_prev[i * c..(i + 1) * c];
                let tb = &abar[i * c..(i + 1) * c];
                let zb = &mut zbar[i * c..(i + 1) * c];

                let mut vbar = s * tb[0];
                match mode {
                    JetMode::Grad => {
                        for k in 0..d {
                            vbar += tb[1 + k] * (-2.0 * tv * s * zj[1 + k]);
                            zb[1 + k] = s * tb[1 + k];
                        }
                    }
                    JetMode::HessDiag => {
                        let q = 2.0 * s * (1.0 - 3.0 * tv * tv);
                        for k in 0..d {
                            let zg = zj[1 + k];
                            let zh = zj[1 + d + k];
                            let th_bar = tb[1 + d + k];
                            vbar += tb[1 + k] * (-2.0 * tv * s * zg);
                            vbar += th_bar * (-2.0 * tv * s * zh - q * zg * zg);
                            zb[1 + k] = s * tb[1 + k] - 4.0 * tv * s * th_bar * zg;
                            zb[1 + d + k] = s * th_bar;
                        }
                    }
                    JetMode::HessFull => {
                        let q = 2.0 * s * (1.0 - 3.0 * tv * tv);
                        for k in 0..d {
                            vbar += tb[1 + k] * (-2.0 * tv * s * zj[1 + k]);
                        }
                        for k in 0..d {
                            let mut gbar = s * tb[1 + k];
                            for m in 0..d {
                                let t_km = tb[1 + d + k * d + m];
                                let t_mk = tb[1 + d + m * d + k];
                                gbar += -2.0 * tv * s * (t_km + t_mk) * zj[1 + m];
                            }
                            zb[1 + k] = gbar;
                        }
                        for k in 0..d {
                            for m in 0..d {
                                let idx = 1 + d + k * d + m;
                                vbar += tb[idx] * (-2.0 * tv * s * zj[idx] - q * zj[1 + k] * zj[1 + m]);
                                zb[idx] = s * tb[idx];
                            }
                        }
                    }
                }
                zb[0] = vbar;
            }
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            layer_widths: self.widths.clone(),
            seed: self.init_seed,
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.layer_widths.len() < 2 || ck.layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::config("invalid checkpoint widths"));
        }
        let (offsets, count) = layer_offsets(&ck.layer_widths);
        if ck.params.len() != count {
            return Err(Error::Dimension {
                expected: count,
                got: ck.params.len(),
            });
        }
        Ok(Network {
            widths: ck.layer_widths.clone(),
            params: ck.params.clone(),
            init_seed: ck.seed,
            offsets,
        })
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &self.to_checkpoint())?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ck: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        Self::from_checkpoint(&ck)
    }
}

/// Monomorphic affine kernel: stack accumulator so the channel loop unrolls.
#[inline(always)]
fn affine_forward_const<const C: usize>(
    w: &[f64],
    b: &[f64],
    n_in: usize,
    n_out: usize,
    inp: &[f64],
    out: &mut [f64],
) {
    for o in 0..n_out {
        let row = &w[o * n_in..(o + 1) * n_in];
        let mut acc = [0.0f64; C];
        for (i, &wi) in row.iter().enumerate() {
            let src = &inp[i * C..(i + 1) * C];
            for ch in 0..C {
                acc[ch] += wi * src[ch];
            }
        }
        acc[0] += b[o];
        out[o * C..(o + 1) * C].copy_from_slice(&acc);
    }
}

fn affine_forward_dyn(
    w: &[f64],
    b: &[f64],
    n_in: usize,
    n_out: usize,
    c: usize,
    inp: &[f64],
    out: &mut [f64],
) {
    for o in 0..n_out {
        let row = &w[o * n_in..(o + 1) * n_in];
        let acc = &mut out[o * c..(o + 1) * c];
        acc.fill(0.0);
        for (i, &wi) in row.iter().enumerate() {
            let src = &inp[i * c..(i + 1) * c];
            for ch in 0..c {
                acc[ch] += wi * src[ch];
            }
        }
        acc[0] += b[o];
    }
}

fn affine_forward(
    w: &[f64],
    b: &[f64],
    n_in: usize,
    n_out: usize,
    c: usize,
    inp: &[f64],
    out: &mut [f64],
) {
    // Common channel counts get monomorphic kernels: 1 (plain forward),
    // 3/5/7 (d=1..2 jets), 19 (d=9 Hessian diagonal).
    match c {
        1 => affine_forward_const::<1>(w, b, n_in, n_out, inp, out),
        3 => affine_forward_const::<3>(w, b, n_in, n_out, inp, out),
        5 => affine_forward_const::<5>(w, b, n_in, n_out, inp, out),
        7 => affine_forward_const::<7>(w, b, n_in, n_out, inp, out),
        10 => affine_forward_const::<10>(w, b, n_in, n_out, inp, out),
        19 => affine_forward_const::<19>(w, b, n_in, n_out, inp, out),
        _ => affine_forward_dyn(w, b, n_in, n_out, c, inp, out),
    }
}

/// Weight adjoints `gw[o,i] += <zbar_o, a_i>` and, when `abar` is given,
/// input adjoints `abar_i += w[o,i] * zbar_o`, in one pass over (o, i).
#[inline(always)]
fn affine_backward_const<const C: usize>(
    w: &[f64],
    a: &[f64],
    zbar: &[f64],
    n_in: usize,
    n_out: usize,
    gw: &mut [f64],
    mut abar: Option<&mut [f64]>,
) {
    for o in 0..n_out {
        let mut zb = [0.0f64; C];
        zb.copy_from_slice(&zbar[o * C..(o + 1) * C]);
        let w_row = &w[o * n_in..(o + 1) * n_in];
        let gw_row = &mut gw[o * n_in..(o + 1) * n_in];
        match abar.as_deref_mut() {
            Some(ab) => {
                for i in 0..n_in {
                    let ai = &a[i * C..(i + 1) * C];
                    let abi = &mut ab[i * C..(i + 1) * C];
                    let wi = w_row[i];
                    let mut dot = 0.0;
                    for ch in 0..C {
                        dot += zb[ch] * ai[ch];
                        abi[ch] += wi * zb[ch];
                    }
                    gw_row[i] += dot;
                }
            }
            None => {
                for i in 0..n_in {
                    let ai = &a[i * C..(i + 1) * C];
                    let mut dot = 0.0;
                    for ch in 0..C {
                        dot += zb[ch] * ai[ch];
                    }
                    gw_row[i] += dot;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn affine_backward(
    w: &[f64],
    a: &[f64],
    zbar: &[f64],
    n_in: usize,
    n_out: usize,
    c: usize,
    gw: &mut [f64],
    abar: Option<&mut [f64]>,
) {
    match c {
        1 => affine_backward_const::<1>(w, a, zbar, n_in, n_out, gw, abar),
        3 => affine_backward_const::<3>(w, a, zbar, n_in, n_out, gw, abar),
        5 => affine_backward_const::<5>(w, a, zbar, n_in, n_out, gw, abar),
        7 => affine_backward_const::<7>(w, a, zbar, n_in, n_out, gw, abar),
        10 => affine_backward_const::<10>(w, a, zbar, n_in, n_out, gw, abar),
        19 => affine_backward_const::<19>(w, a, zbar, n_in, n_out, gw, abar),
        _ => {
            for o in 0..n_out {
                let zb = &zbar[o * c..(o + 1) * c];
                let _ = &w[o * n_in..(o + 1) * n_in];
                let gw_row = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    let ai = &a[i * c..(i + 1) * c];
                    let mut dot = 0.0;
                    for ch in 0..c {
                        dot += zb[ch] * ai[ch];
                    }
                    gw_row[i] += dot;
                }
            }
            if let Some(ab) = abar {
                for o in 0..n_out {
                    let zb = &zbar[o * c..(o + 1) * c];
                    let w_row = &w[o * n_in..(o + 1) * n_in];
                    for i in 0..n_in {
                        let wi = w_row[i];
                        let abi = &mut ab[i * c..(i + 1) * c];
                        for ch in 0..c {
                            abi[ch] += wi * zb[ch];
                        }
                    }
                }
            }
        }
    }
}

fn tanh_forward(d: usize, mode: JetMode, n: usize, z: &[f64], out: &mut [f64]) {
    let c = mode.channels(d);
    for i in 0..n {
        let zi = &z[i * c..(i + 1) * c];
        let oi = &mut out[i * c..(i + 1) * c];
        let tv = zi[0].tanh();
        let s = 1.0 - tv * tv;
        oi[0] = tv;
        for k in 0..d {
            oi[1 + k] = s * zi[1 + k];
        }
        match mode {
            JetMode::Grad => {}
            JetMode::HessDiag => {
                for k in 0..d {
                    let zg = zi[1 + k];
                    oi[1 + d + k] = s * zi[1 + d + k] - 2.0 * tv * s * zg * zg;
                }
            }
            JetMode::HessFull => {
                for k in 0..d {
                    for m in 0..d {
                        let idx = 1 + d + k * d + m;
                        oi[idx] = s * zi[idx] - 2.0 * tv * s * zi[1 + k] * zi[1 + m];
                    }
                }
            }
        }
    }
}

/// One summand of a scalar loss: a point, the jet mode the loss needs there,
/// and the adjoint of the loss with respect to that jet.
pub struct LossTerm<'a> {
    pub point: &'a [f64],
    pub mode: JetMode,
    pub adjoint: &'a (dyn Fn(&[f64], &Jet2) -> JetAdjoint + Sync),
}

/// Exact gradient of `sum_i L_i` over the batch with respect to the
/// parameters. Gradient of a sum is the sum of gradients, accumulated in
/// batch order.
pub fn param_gradient(net: &Network, terms: &[LossTerm]) -> Result<Vec<f64>> {
    if terms.is_empty() {
        return Err(Error::EmptySet("param_gradient batch"));
    }
    let mut grad = vec![0.0; net.param_count()];
    let mut tape = JetTape::new();
    for term in terms {
        let jet = net.forward_jet_rec(term.point, term.mode, &mut tape)?;
        let adj = (term.adjoint)(term.point, &jet);
        net.backprop_params(&mut tape, &adj, &mut grad);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        let scale = a.abs().max(b.abs()).max(1e-12);
        (a - b).abs() / scale < tol
    }

    /// Independent matrix-free evaluator used as a second forward
    /// implementation: walks the flat parameter slice directly.
    fn forward_oracle(widths: &[usize], params: &[f64], x: &[f64]) -> f64 {
        let mut act: Vec<f64> = x.to_vec();
        let mut at = 0usize;
        for l in 0..widths.len() - 1 {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let w = &params[at..at + n_out * n_in];
            let b = &params[at + n_out * n_in..at + n_out * n_in + n_out];
            at += n_out * n_in + n_out;
            let mut next = vec![0.0; n_out];
            for o in 0..n_out {
                let mut sum = 0.0;
                for i in 0..n_in {
                    sum += w[o * n_in + i] * act[i];
                }
                sum += b[o];
                next[o] = if l + 1 < widths.len() - 1 { sum.tanh() } else { sum };
            }
            act = next;
        }
        act[0]
    }

    #[test]
    fn param_count_matches_layout_formula() {
        // 7 hidden layers of 20 on a 2d input:
        // 2*20+20 + 6*(20*20+20) + 20*1+1 = 2601
        let widths = [2, 20, 20, 20, 20, 20, 20, 20, 1];
        let net = Network::init(&widths, 0).unwrap();
        assert_eq!(net.param_count(), 2601);
    }

    #[test]
    fn biases_init_to_zero_and_init_is_reproducible() {
        let net = Network::init(&[1, 1], 5).unwrap();
        // Single affine layer: one weight then one bias.
        assert_eq!(net.param_count(), 2);
        assert_eq!(net.params()[1], 0.0);

        let a = Network::init(&[3, 8, 8, 1], 123).unwrap();
        let b = Network::init(&[3, 8, 8, 1], 123).unwrap();
        assert_eq!(a.params(), b.params());
        let c = Network::init(&[3, 8, 8, 1], 124).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn init_rejects_bad_widths() {
        assert!(Network::init(&[2], 0).is_err());
        assert!(Network::init(&[2, 0, 1], 0).is_err());
        assert!(Network::init(&[2, 4, 3], 0).is_err());
    }

    #[test]
    fn forward_affine_collapse() {
        // All-zero weights, final bias c -> output c for any x.
        let mut net = Network::init(&[2, 4, 1], 9).unwrap();
        let n = net.param_count();
        net.params_mut().fill(0.0);
        net.params_mut()[n - 1] = 2.5;
        assert_eq!(net.forward(&[0.3, -0.7]).unwrap(), 2.5);
        assert_eq!(net.forward(&[100.0, 3.0]).unwrap(), 2.5);
    }

    #[test]
    fn forward_zero_hidden_layer() {
        // [1,1,1] with hidden w=0,b=0 and out-layer w=1,b=0: u = tanh(0) = 0.
        let mut net = Network::init(&[1, 1, 1], 0).unwrap();
        net.params_mut().copy_from_slice(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(net.forward(&[0.77]).unwrap(), 0.0);
    }

    #[test]
    fn forward_matches_independent_evaluator() {
        let net = Network::init(&[3, 10, 7, 1], 42).unwrap();
        let mut rng = rng_from(99);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let ours = net.forward(&x).unwrap();
            let oracle = forward_oracle(net.widths(), net.params(), &x);
            assert!(close(ours, oracle, 1e-12), "{ours} vs {oracle}");
        }
    }

    #[test]
    fn forward_dimension_mismatch() {
        let net = Network::init(&[2, 4, 1], 0).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        assert!(net.forward_jet(&[1.0, 2.0, 3.0], JetMode::Grad).is_err());
    }

    #[test]
    fn jet_value_is_bit_identical_to_forward() {
        let net = Network::init(&[3, 9, 9, 1], 7).unwrap();
        let mut rng = rng_from(11);
        for mode in [JetMode::Grad, JetMode::HessDiag, JetMode::HessFull] {
            for _ in 0..20 {
                let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
                let v = net.forward(&x).unwrap();
                let jet = net.forward_jet(&x, mode).unwrap();
                assert_eq!(v.to_bits(), jet.value.to_bits());
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let net = Network::init(&[3, 8, 6, 1], 21).unwrap();
        let mut rng = rng_from(5);
        let h = 1e-5;
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let jet = net.forward_jet(&x, JetMode::Grad).unwrap();
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (net.forward(&xp).unwrap() - net.forward(&xm).unwrap()) / (2.0 * h);
                assert!(
                    close(jet.grad[i], fd, 1e-6),
                    "grad[{i}] {} vs fd {fd}",
                    jet.grad[i]
                );
            }
        }
    }

    #[test]
    fn hessian_diag_matches_central_differences() {
        let net = Network::init(&[2, 8, 8, 1], 3).unwrap();
        let mut rng = rng_from(17);
        let h = 5e-4;
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let jet = net.forward_jet(&x, JetMode::HessDiag).unwrap();
            let f0 = net.forward(&x).unwrap();
            for i in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd =
                    (net.forward(&xp).unwrap() - 2.0 * f0 + net.forward(&xm).unwrap()) / (h * h);
                assert!(
                    close(jet.hess_diag(i), fd, 1e-4),
                    "hess[{i}] {} vs fd {fd}",
                    jet.hess_diag(i)
                );
            }
        }
    }

    #[test]
    fn full_hessian_is_symmetric_and_matches_diag_mode() {
        let net = Network::init(&[3, 7, 5, 1], 31).unwrap();
        let mut rng = rng_from(23);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let full = net.forward_jet(&x, JetMode::HessFull).unwrap();
            let diag = net.forward_jet(&x, JetMode::HessDiag).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let hij = full.hess_entry(i, j);
                    let hji = full.hess_entry(j, i);
                    assert!(close(hij, hji, 1e-12), "asymmetry {hij} vs {hji}");
                }
                assert!(close(full.hess_diag(i), diag.hess_diag(i), 1e-12));
            }
        }
    }

    #[test]
    fn full_hessian_cross_terms_match_central_differences() {
        let net = Network::init(&[2, 6, 6, 1], 77).unwrap();
        let h = 5e-4;
        let x = [0.37, -0.21];
        let jet = net.forward_jet(&x, JetMode::HessFull).unwrap();
        let f = |a: f64, b: f64| net.forward(&[a, b]).unwrap();
        let fd = (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) - f(x[0] - h, x[1] + h)
            + f(x[0] - h, x[1] - h))
            / (4.0 * h * h);
        assert!(close(jet.hess_entry(0, 1), fd, 1e-4));
    }

    #[test]
    fn tiny_weights_give_vanishing_hessian() {
        // With all weights scaled tiny the map is effectively affine, so the
        // second derivative collapses.
        let mut net = Network::init(&[2, 8, 1], 2).unwrap();
        for p in net.params_mut() {
            *p *= 1e-4;
        }
        let jet = net.forward_jet(&[0.4, 0.6], JetMode::HessFull).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(jet.hess_entry(i, j).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn param_gradient_matches_central_differences() {
        // Loss = u(x0)^2; check 20 random parameter coordinates.
        let net = Network::init(&[2, 6, 5, 1], 13).unwrap();
        let x0 = [0.3, -0.5];
        let adj = |_: &[f64], jet: &Jet2| {
            JetAdjoint::value_only(2.0 * jet.value, 2, JetMode::Grad)
        };
        let grad = param_gradient(
            &net,
            &[LossTerm {
                point: &x0,
                mode: JetMode::Grad,
                adjoint: &adj,
            }],
        )
        .unwrap();

        let mut rng = rng_from(8);
        let h = 1e-5;
        for _ in 0..20 {
            let idx = (rng.random::<u64>() as usize) % net.param_count();
            let mut plus = net.clone();
            let mut minus = net.clone();
            plus.params_mut()[idx] += h;
            minus.params_mut()[idx] -= h;
            let lp = plus.forward(&x0).unwrap().powi(2);
            let lm = minus.forward(&x0).unwrap().powi(2);
            let fd = (lp - lm) / (2.0 * h);
            let scale = grad[idx].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grad[idx] - fd).abs() / scale < 1e-5,
                "param {idx}: {} vs {fd}",
                grad[idx]
            );
        }
    }

    #[test]
    fn param_gradient_of_jet_loss_matches_central_differences() {
        // Loss depending on gradient and Hessian diagonal:
        // L = (u_t + u*u_x - 0.1*(u_xx + u_tt))^2 at one point.
        let net = Network::init(&[2, 5, 5, 1], 914).unwrap();
        let x0 = [0.2, 0.7];
        let residual = |jet: &Jet2| jet.grad[1] + jet.value * jet.grad[0] - 0.1 * jet.laplacian();
        let adj = move |_: &[f64], jet: &Jet2| {
            let r = residual(jet);
            JetAdjoint {
                value: 2.0 * r * jet.grad[0],
                grad: vec![2.0 * r * jet.value, 2.0 * r],
                hess: vec![2.0 * r * -0.1, 2.0 * r * -0.1],
            }
        };
        let grad = param_gradient(
            &net,
            &[LossTerm {
                point: &x0,
                mode: JetMode::HessDiag,
                adjoint: &adj,
            }],
        )
        .unwrap();

        let loss_of = |net: &Network| {
            let jet = net.forward_jet(&x0, JetMode::HessDiag).unwrap();
            residual(&jet).powi(2)
        };
        let mut rng = rng_from(4);
        let h = 1e-6;
        for _ in 0..30 {
            let idx = (rng.random::<u64>() as usize) % net.param_count();
            let mut plus = net.clone();
            let mut minus = net.clone();
            plus.params_mut()[idx] += h;
            minus.params_mut()[idx] -= h;
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let scale = grad[idx].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grad[idx] - fd).abs() / scale < 1e-4,
                "param {idx}: {} vs {fd}",
                grad[idx]
            );
        }
    }

    #[test]
    fn param_gradient_full_hessian_mode_matches_central_differences() {
        // L = (u_xy)^2 exercises the full-Hessian backward path.
        let net = Network::init(&[2, 5, 4, 1], 55).unwrap();
        let x0 = [-0.4, 0.25];
        let adj = |_: &[f64], jet: &Jet2| {
            let uxy = jet.hess_entry(0, 1);
            let mut hess = vec![0.0; 4];
            hess[1] = 2.0 * uxy; // d/d h_{01}
            JetAdjoint {
                value: 0.0,
                grad: vec![0.0, 0.0],
                hess,
            }
        };
        let grad = param_gradient(
            &net,
            &[LossTerm {
                point: &x0,
                mode: JetMode::HessFull,
                adjoint: &adj,
            }],
        )
        .unwrap();
        let loss_of = |net: &Network| {
            net.forward_jet(&x0, JetMode::HessFull)
                .unwrap()
                .hess_entry(0, 1)
                .powi(2)
        };
        let mut rng = rng_from(6);
        let h = 1e-6;
        for _ in 0..30 {
            let idx = (rng.random::<u64>() as usize) % net.param_count();
            let mut plus = net.clone();
            let mut minus = net.clone();
            plus.params_mut()[idx] += h;
            minus.params_mut()[idx] -= h;
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let scale = grad[idx].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grad[idx] - fd).abs() / scale < 1e-4,
                "param {idx}: {} vs {fd}",
                grad[idx]
            );
        }
    }

    #[test]
    fn zero_adjoint_gives_zero_gradient() {
        let net = Network::init(&[2, 4, 1], 1).unwrap();
        let adj = |_: &[f64], _: &Jet2| JetAdjoint::zero(2, JetMode::HessDiag);
        let grad = param_gradient(
            &net,
            &[LossTerm {
                point: &[0.1, 0.2],
                mode: JetMode::HessDiag,
                adjoint: &adj,
            }],
        )
        .unwrap();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn duplicated_point_doubles_gradient_exactly() {
        let net = Network::init(&[2, 4, 1], 1).unwrap();
        let adj = |_: &[f64], jet: &Jet2| {
            JetAdjoint::value_only(2.0 * jet.value, 2, JetMode::Grad)
        };
        let term = || LossTerm {
            point: &[0.1, 0.2],
            mode: JetMode::Grad,
            adjoint: &adj,
        };
        let single = param_gradient(&net, &[term()]).unwrap();
        let double = param_gradient(&net, &[term(), term()]).unwrap();
        for (s, d) in single.iter().zip(&double) {
            assert_eq!(2.0 * s, *d);
        }
    }

    #[test]
    fn checkpoint_roundtrip() {
        let net = Network::init(&[2, 6, 1], 77).unwrap();
        let ck = net.to_checkpoint();
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        let net2 = Network::from_checkpoint(&back).unwrap();
        assert_eq!(net.params(), net2.params());
        assert_eq!(net.widths(), net2.widths());
        assert_eq!(net.init_seed(), net2.init_seed());
    }
}
