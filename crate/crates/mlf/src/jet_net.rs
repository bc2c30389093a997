//! Dense tanh networks with exact propagation of values, input gradients and
//! input Hessians, plus reverse accumulation of parameter gradients for scalar
//! losses built from those quantities.
//!
//! The input dimension is small (d ≤ 3 in every benchmark), so each neuron
//! carries the full jet `(u, ∇u, ∇²u)` as one row of `1 + d + d²` numbers.
//! Both derivative propagation directions are exact; no finite differences
//! anywhere.

use crate::error::{Error, Result};
use crate::stream::{stream, StreamId};
use rand::Rng;
use std::io::{Read, Write};
use std::path::Path;

/// Architecture of one dense network: `input_dim → hidden… → output_dim`,
/// tanh on every hidden layer, affine output layer, Xavier-uniform init.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub seed: u64,
}

impl NetSpec {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        hidden_sizes: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::config("network dimensions must be >= 1"));
        }
        if hidden_sizes.iter().any(|&h| h == 0) {
            return Err(Error::config("hidden layer sizes must be >= 1"));
        }
        Ok(NetSpec {
            input_dim,
            output_dim,
            hidden_sizes,
            seed,
        })
    }

    /// Layer widths including input and output: `[d, h1, …, hk, s]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_sizes.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden_sizes);
        w.push(self.output_dim);
        w
    }

    /// Stable digest of the architecture (seed excluded; it does not change the layout).
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        mix(self.input_dim as u64);
        mix(self.output_dim as u64);
        mix(self.hidden_sizes.len() as u64);
        for &s in &self.hidden_sizes {
            mix(s as u64);
        }
        h
    }
}

/// Shape and offsets of one layer's blocks inside the flat parameter vector.
/// Weights are row-major `fan_out × fan_in`, followed by the bias block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerLayout {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Flat real parameter array with its per-layer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluation machinery for one `NetSpec`: owns the derived layout and all
/// forward/reverse passes. Parameter vectors are plain data validated against it.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetSpec,
    layers: Vec<LayerLayout>,
    param_len: usize,
}

/// Jet width: one value column, d gradient columns, d² Hessian columns.
#[inline]
fn jet_width(d: usize) -> usize {
    1 + d + d * d
}

impl Network {
    pub fn new(spec: NetSpec) -> Self {
        let widths = spec.widths();
        let mut layers = Vec::with_capacity(widths.len() - 1);
        let mut offset = 0;
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            layers.push(LayerLayout {
                fan_in,
                fan_out,
                weight_offset: offset,
                bias_offset: offset + fan_in * fan_out,
            });
            offset += fan_in * fan_out + fan_out;
        }
        Network {
            spec,
            layers,
            param_len: offset,
        }
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[LayerLayout] {
        &self.layers
    }

    pub fn param_len(&self) -> usize {
        self.param_len
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.len() != self.param_len {
            return Err(Error::config(format!(
                "parameter vector length {} does not match layout length {}",
                params.len(),
                self.param_len
            )));
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::config(format!(
                "input point has dim {}, network expects {}",
                x.len(),
                self.spec.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite input point"));
        }
        Ok(())
    }

    /// Xavier-uniform weights, zero biases. Each layer draws from its own
    /// counter-based stream keyed by `(seed, level, layer)`, so generation
    /// order is irrelevant.
    pub fn init_params_at_level(&self, level: u32) -> ParamVector {
        let mut params = ParamVector::zeros(self.param_len);
        for (li, layer) in self.layers.iter().enumerate() {
            let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            let mut rng = stream(
                self.spec.seed,
                StreamId::Init {
                    level,
                    layer: li as u32,
                },
            );
            let w = &mut params.values
                [layer.weight_offset..layer.weight_offset + layer.fan_in * layer.fan_out];
            for wi in w.iter_mut() {
                *wi = bound * (2.0 * rng.gen::<f64>() - 1.0);
            }
            // biases stay zero
        }
        params
    }

    pub fn init_params(&self) -> ParamVector {
        self.init_params_at_level(0)
    }

    /// Plain value evaluation. Shares the exact accumulation order of the
    /// value column in [`Network::forward_jet`], so both agree to the last bit.
    pub fn forward(&self, params: &ParamVector, x: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.check_point(x)?;
        let mut cur = x.to_vec();
        let n_layers = self.layers.len();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.fan_out];
            for i in 0..layer.fan_out {
                let w = self.weight_row(params, layer, i);
                let mut acc = 0.0;
                for (wj, vj) in w.iter().zip(&cur) {
                    acc += wj * vj;
                }
                acc += params.values[layer.bias_offset + i];
                next[i] = if li + 1 < n_layers { acc.tanh() } else { acc };
            }
            cur = next;
        }
        Ok(cur)
    }

    #[inline]
    fn weight_row<'a>(&self, params: &'a ParamVector, layer: &LayerLayout, i: usize) -> &'a [f64] {
        let start = layer.weight_offset + i * layer.fan_in;
        &params.values[start..start + layer.fan_in]
    }

    /// Exact jet propagation: value, input gradient and input Hessian.
    pub fn forward_jet(&self, params: &ParamVector, x: &[f64]) -> Result<Jet> {
        let mut trace = JetTrace::new(self);
        self.forward_jet_trace(params, x, &mut trace)?;
        Ok(trace.output_jet(self))
    }

    /// Jet propagation that also records everything the reverse pass needs.
    /// `trace` buffers are reused across calls. A value-only trace (see
    /// [`JetTrace::value_only`]) runs the same kernels with zero derivative
    /// columns, which is the cheap path for boundary-value work.
    pub fn forward_jet_trace(
        &self,
        params: &ParamVector,
        x: &[f64],
        trace: &mut JetTrace,
    ) -> Result<()> {
        self.check_params(params)?;
        self.check_point(x)?;
        let d = trace.dim;
        let g = jet_width(d);

        trace.input.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            trace.input[j * g] = xj;
            if d > 0 {
                trace.input[j * g + 1 + j] = 1.0;
            }
        }

        let n_hidden = self.layers.len() - 1;
        {
            // hidden layers: affine jet then tanh jet
            let mut prev_is_input = true;
            for l in 0..n_hidden {
                let layer = self.layers[l];
                let (before, rest) = trace.hidden.split_at_mut(l);
                let cur = &mut rest[0];
                let input: &[f64] = if prev_is_input {
                    &trace.input
                } else {
                    &before[l - 1].activated
                };
                affine_jet(
                    self.weight_block(params, &layer),
                    self.bias_block(params, &layer),
                    input,
                    layer.fan_in,
                    g,
                    &mut cur.affine,
                );
                tanh_jet(&cur.affine, d, &mut cur.tanh, &mut cur.activated);
                prev_is_input = false;
            }
        }
        let out_layer = self.layers[self.layers.len() - 1];
        let last_input: &[f64] = if n_hidden == 0 {
            &trace.input
        } else {
            &trace.hidden[n_hidden - 1].activated
        };
        affine_jet(
            self.weight_block(params, &out_layer),
            self.bias_block(params, &out_layer),
            last_input,
            out_layer.fan_in,
            g,
            &mut trace.output,
        );
        Ok(())
    }

    #[inline]
    fn weight_block<'a>(&self, params: &'a ParamVector, layer: &LayerLayout) -> &'a [f64] {
        &params.values[layer.weight_offset..layer.weight_offset + layer.fan_in * layer.fan_out]
    }

    #[inline]
    fn bias_block<'a>(&self, params: &'a ParamVector, layer: &LayerLayout) -> &'a [f64] {
        &params.values[layer.bias_offset..layer.bias_offset + layer.fan_out]
    }

    /// Reverse accumulation through the jet-propagating forward pass:
    /// returns `∂(d_value·u + Σ d_grad·∇u + d_laplacian·Δu)/∂θ` exactly.
    /// Requires the trace of a prior [`Network::forward_jet_trace`] at the same `(params, x)`.
    pub fn backprop_jet(
        &self,
        params: &ParamVector,
        trace: &JetTrace,
        cot: &JetCotangent,
        grad: &mut [f64],
    ) -> Result<()> {
        let d = self.spec.input_dim;
        let s = self.spec.output_dim;
        if trace.dim != d {
            return Err(Error::config("backprop_jet needs a full jet trace"));
        }
        if cot.d_value.len() != s || cot.d_laplacian.len() != s || cot.d_grad.len() != s * d {
            return Err(Error::config("cotangent dims do not match network output"));
        }

        // Seed the cotangent matrix w.r.t. the output jet. The Laplacian is the
        // trace of the Hessian block, so its cotangent lands on the diagonal.
        let g = jet_width(d);
        let mut cot_rows = vec![0.0; s * g];
        for i in 0..s {
            let row = &mut cot_rows[i * g..(i + 1) * g];
            row[0] = cot.d_value[i];
            for p in 0..d {
                row[1 + p] = cot.d_grad[i * d + p];
                row[1 + d + p * d + p] += cot.d_laplacian[i];
            }
        }
        self.backprop_rows(params, trace, cot_rows, grad)
    }

    /// Reverse pass for value-only traces: returns `∂(Σᵢ d_value[i]·uᵢ)/∂θ`.
    pub fn backprop_value(
        &self,
        params: &ParamVector,
        trace: &JetTrace,
        d_value: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        let s = self.spec.output_dim;
        if trace.dim != 0 {
            return Err(Error::config("backprop_value needs a value-only trace"));
        }
        if d_value.len() != s {
            return Err(Error::config("cotangent dims do not match network output"));
        }
        self.backprop_rows(params, trace, d_value.to_vec(), grad)
    }

    fn backprop_rows(
        &self,
        params: &ParamVector,
        trace: &JetTrace,
        cot_rows: Vec<f64>,
        grad: &mut [f64],
    ) -> Result<()> {
        self.check_params(params)?;
        if grad.len() != self.param_len {
            return Err(Error::config("gradient buffer length mismatch"));
        }
        let d = trace.dim;
        let g = jet_width(d);
        let n_hidden = self.layers.len() - 1;
        // output layer (affine only)
        let out_layer = self.layers[n_hidden];
        let last_input: &[f64] = if n_hidden == 0 {
            &trace.input
        } else {
            &trace.hidden[n_hidden - 1].activated
        };
        let mut cot_prev = vec![0.0; out_layer.fan_in * g];
        let (w_grad, b_grad) = layer_grad_blocks(grad, &out_layer);
        affine_backward(
            self.weight_block(params, &out_layer),
            last_input,
            &cot_rows,
            out_layer.fan_in,
            g,
            w_grad,
            b_grad,
            Some(&mut cot_prev),
        );
        let mut cot_cur = cot_prev;

        for l in (0..n_hidden).rev() {
            let layer = self.layers[l];
            let hl = &trace.hidden[l];
            tanh_backward(&hl.affine, &hl.tanh, d, &mut cot_cur);
            let input: &[f64] = if l == 0 {
                &trace.input
            } else {
                &trace.hidden[l - 1].activated
            };
            let mut cot_prev = if l == 0 {
                None
            } else {
                Some(vec![0.0; layer.fan_in * g])
            };
            let (w_grad, b_grad) = layer_grad_blocks(grad, &layer);
            affine_backward(
                self.weight_block(params, &layer),
                input,
                &cot_cur,
                layer.fan_in,
                g,
                w_grad,
                b_grad,
                cot_prev.as_deref_mut(),
            );
            if let Some(prev) = cot_prev {
                cot_cur = prev;
            }
        }
        Ok(())
    }
}

/// Per-point network evaluation carrying value, input gradient and input
/// Hessian; the Laplacian is the trace of the Hessian by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// s values
    pub value: Vec<f64>,
    /// s×d, row-major
    pub grad: Vec<f64>,
    /// s×d×d, row-major, symmetric in the last two indices
    pub hess: Vec<f64>,
    /// s traces of the Hessian blocks
    pub laplacian: Vec<f64>,
}

impl Jet {
    pub fn zeros(s: usize, d: usize) -> Self {
        Jet {
            value: vec![0.0; s],
            grad: vec![0.0; s * d],
            hess: vec![0.0; s * d * d],
            laplacian: vec![0.0; s],
        }
    }

    pub fn outputs(&self) -> usize {
        self.value.len()
    }

    pub fn dim(&self) -> usize {
        if self.value.is_empty() {
            0
        } else {
            self.grad.len() / self.value.len()
        }
    }

    #[inline]
    pub fn grad_at(&self, i: usize, p: usize) -> f64 {
        self.grad[i * self.dim() + p]
    }

    #[inline]
    pub fn hess_at(&self, i: usize, p: usize, q: usize) -> f64 {
        let d = self.dim();
        self.hess[i * d * d + p * d + q]
    }

    pub fn add_assign(&mut self, other: &Jet) {
        debug_assert_eq!(self.value.len(), other.value.len());
        for (a, b) in self.value.iter_mut().zip(&other.value) {
            *a += b;
        }
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += b;
        }
        for (a, b) in self.hess.iter_mut().zip(&other.hess) {
            *a += b;
        }
        for (a, b) in self.laplacian.iter_mut().zip(&other.laplacian) {
            *a += b;
        }
    }
}

/// Sensitivities of a scalar loss with respect to the jet fields at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JetCotangent {
    pub d_value: Vec<f64>,
    pub d_grad: Vec<f64>,
    pub d_laplacian: Vec<f64>,
}

impl JetCotangent {
    pub fn zeros(s: usize, d: usize) -> Self {
        JetCotangent {
            d_value: vec![0.0; s],
            d_grad: vec![0.0; s * d],
            d_laplacian: vec![0.0; s],
        }
    }
}

struct HiddenTrace {
    affine: Vec<f64>,    // m×G jet of the pre-activation
    tanh: Vec<f64>,      // m activated values
    activated: Vec<f64>, // m×G jet after tanh
}

/// Reusable forward-pass record consumed by [`Network::backprop_jet`] /
/// [`Network::backprop_value`]. `dim` is the number of derivative directions
/// carried per neuron: the input dimension for full jets, 0 for value-only.
pub struct JetTrace {
    input: Vec<f64>, // input_dim × G seed rows
    hidden: Vec<HiddenTrace>,
    output: Vec<f64>, // s×G rows of the network output
    dim: usize,
}

impl JetTrace {
    fn with_dim(net: &Network, dim: usize) -> Self {
        let g = jet_width(dim);
        let n_hidden = net.layers.len() - 1;
        JetTrace {
            input: vec![0.0; net.spec.input_dim * g],
            hidden: (0..n_hidden)
                .map(|l| {
                    let m = net.layers[l].fan_out;
                    HiddenTrace {
                        affine: vec![0.0; m * g],
                        tanh: vec![0.0; m],
                        activated: vec![0.0; m * g],
                    }
                })
                .collect(),
            output: vec![0.0; net.spec.output_dim * g],
            dim,
        }
    }

    pub fn new(net: &Network) -> Self {
        Self::with_dim(net, net.spec.input_dim)
    }

    /// Trace that skips all derivative columns (boundary-value work).
    pub fn value_only(net: &Network) -> Self {
        Self::with_dim(net, 0)
    }

    /// Copies the recorded output rows into a [`Jet`]. Requires a full trace.
    pub fn output_jet(&self, net: &Network) -> Jet {
        let d = self.dim;
        assert_eq!(d, net.spec.input_dim, "output_jet needs a full jet trace");
        let g = jet_width(d);
        let s = net.spec.output_dim;
        let mut jet = Jet::zeros(s, d);
        for i in 0..s {
            let row = &self.output[i * g..(i + 1) * g];
            jet.value[i] = row[0];
            jet.grad[i * d..(i + 1) * d].copy_from_slice(&row[1..1 + d]);
            jet.hess[i * d * d..(i + 1) * d * d].copy_from_slice(&row[1 + d..]);
            let mut tr = 0.0;
            for p in 0..d {
                tr += row[1 + d + p * d + p];
            }
            jet.laplacian[i] = tr;
        }
        jet
    }

    /// Output values regardless of trace kind.
    pub fn output_values(&self) -> Vec<f64> {
        let g = jet_width(self.dim);
        self.output.iter().step_by(g).copied().collect()
    }

    pub fn write_output_values(&self, out: &mut [f64]) {
        let g = jet_width(self.dim);
        for (o, v) in out.iter_mut().zip(self.output.iter().step_by(g)) {
            *o = *v;
        }
    }
}

/// Splits a layer's contiguous weight+bias region out of the flat gradient.
fn layer_grad_blocks<'a>(grad: &'a mut [f64], layer: &LayerLayout) -> (&'a mut [f64], &'a mut [f64]) {
    let region =
        &mut grad[layer.weight_offset..layer.bias_offset + layer.fan_out];
    region.split_at_mut(layer.fan_in * layer.fan_out)
}

/// out[i] = Σ_j W[i,j]·in[j] over whole jet rows; bias enters the value column.
fn affine_jet(w: &[f64], b: &[f64], input: &[f64], fan_in: usize, g: usize, out: &mut [f64]) {
    let fan_out = b.len();
    debug_assert_eq!(out.len(), fan_out * g);
    debug_assert_eq!(input.len(), fan_in * g);
    for i in 0..fan_out {
        let row = &mut out[i * g..(i + 1) * g];
        row.iter_mut().for_each(|v| *v = 0.0);
        let wrow = &w[i * fan_in..(i + 1) * fan_in];
        for (j, &wj) in wrow.iter().enumerate() {
            let src = &input[j * g..(j + 1) * g];
            for (r, s) in row.iter_mut().zip(src) {
                *r += wj * s;
            }
        }
        row[0] += b[i];
    }
}

/// Per-neuron tanh on jet rows:
/// value ← σ(a), grad ← σ′·∇a, hess ← σ′·∇²a + σ″·∇a⊗∇a.
fn tanh_jet(affine: &[f64], d: usize, tanh_vals: &mut [f64], out: &mut [f64]) {
    let g = jet_width(d);
    let m = tanh_vals.len();
    for i in 0..m {
        let a = &affine[i * g..(i + 1) * g];
        let row = &mut out[i * g..(i + 1) * g];
        let t = a[0].tanh();
        tanh_vals[i] = t;
        let s1 = 1.0 - t * t;
        let s2 = -2.0 * t * s1;
        row[0] = t;
        for p in 0..d {
            row[1 + p] = s1 * a[1 + p];
        }
        for p in 0..d {
            let gp = a[1 + p];
            for q in 0..d {
                row[1 + d + p * d + q] = s1 * a[1 + d + p * d + q] + s2 * gp * a[1 + q];
            }
        }
    }
}

/// Pulls a cotangent w.r.t. the activated jet back to one w.r.t. the affine jet, in place.
fn tanh_backward(affine: &[f64], tanh_vals: &[f64], d: usize, cot: &mut [f64]) {
    let g = jet_width(d);
    let m = tanh_vals.len();
    for i in 0..m {
        let a = &affine[i * g..(i + 1) * g];
        let row = &mut cot[i * g..(i + 1) * g];
        let t = tanh_vals[i];
        let s1 = 1.0 - t * t;
        let s2 = -2.0 * t * s1;
        let s3 = s1 * (6.0 * t * t - 2.0);

        let mut abar = row[0] * s1;
        for p in 0..d {
            abar += row[1 + p] * s2 * a[1 + p];
        }
        for p in 0..d {
            let gp = a[1 + p];
            for q in 0..d {
                let hbar = row[1 + d + p * d + q];
                abar += hbar * (s2 * a[1 + d + p * d + q] + s3 * gp * a[1 + q]);
            }
        }

        let mut gbar = [0.0; 3];
        for p in 0..d {
            let mut acc = row[1 + p] * s1;
            for q in 0..d {
                acc += (row[1 + d + p * d + q] + row[1 + d + q * d + p]) * s2 * a[1 + q];
            }
            gbar[p] = acc;
        }

        for pq in 0..d * d {
            row[1 + d + pq] *= s1;
        }
        for p in 0..d {
            row[1 + p] = gbar[p];
        }
        row[0] = abar;
    }
}

/// Accumulates weight/bias gradients and optionally propagates the cotangent
/// to the layer input.
#[allow(clippy::too_many_arguments)]
fn affine_backward(
    w: &[f64],
    input: &[f64],
    cot_out: &[f64],
    fan_in: usize,
    g: usize,
    w_grad: &mut [f64],
    b_grad: &mut [f64],
    cot_in: Option<&mut [f64]>,
) {
    let fan_out = b_grad.len();
    for i in 0..fan_out {
        let crow = &cot_out[i * g..(i + 1) * g];
        b_grad[i] += crow[0];
        let wg = &mut w_grad[i * fan_in..(i + 1) * fan_in];
        for j in 0..fan_in {
            let src = &input[j * g..(j + 1) * g];
            let mut acc = 0.0;
            for (c, s) in crow.iter().zip(src) {
                acc += c * s;
            }
            wg[j] += acc;
        }
    }
    if let Some(cin) = cot_in {
        cin.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..fan_out {
            let crow = &cot_out[i * g..(i + 1) * g];
            let wrow = &w[i * fan_in..(i + 1) * fan_in];
            for (j, &wj) in wrow.iter().enumerate() {
                let dst = &mut cin[j * g..(j + 1) * g];
                for (dv, c) in dst.iter_mut().zip(crow) {
                    *dv += wj * c;
                }
            }
        }
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"MLF1";

/// Writes parameters as `magic, spec digest, length, little-endian f64s`.
pub fn save_params(path: &Path, spec: &NetSpec, params: &ParamVector) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + 8 * params.len());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&spec.digest().to_le_bytes());
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in &params.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

/// Reads a parameter file written by [`save_params`], validating magic and digest.
pub fn load_params(path: &Path, spec: &NetSpec) -> Result<ParamVector> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint(format!(
            "{} is not a parameter checkpoint",
            path.display()
        )));
    }
    let digest = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    if digest != spec.digest() {
        return Err(Error::Checkpoint(format!(
            "{}: architecture digest mismatch",
            path.display()
        )));
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() != 20 + 8 * len {
        return Err(Error::Checkpoint(format!(
            "{}: truncated parameter data",
            path.display()
        )));
    }
    let mut values = Vec::with_capacity(len);
    for chunk in bytes[20..].chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok(ParamVector { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::uniform;

    fn spec(d: usize, s: usize, hidden: &[usize], seed: u64) -> NetSpec {
        NetSpec::new(d, s, hidden.to_vec(), seed).unwrap()
    }

    /// Independent straightforward forward pass kept deliberately naive.
    fn naive_forward(net: &Network, params: &ParamVector, x: &[f64]) -> Vec<f64> {
        let widths = net.spec().widths();
        let mut v: Vec<f64> = x.to_vec();
        for (li, layer) in net.layers().iter().enumerate() {
            let mut out = Vec::new();
            for i in 0..layer.fan_out {
                let mut acc = 0.0;
                for j in 0..layer.fan_in {
                    acc += params.values[layer.weight_offset + i * layer.fan_in + j] * v[j];
                }
                acc += params.values[layer.bias_offset + i];
                if li + 1 < widths.len() - 1 {
                    acc = acc.tanh();
                }
                out.push(acc);
            }
            v = out;
        }
        v
    }

    fn rand_point(rng: &mut rand_chacha::ChaCha12Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| uniform(rng, -1.0, 1.0)).collect()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let sp = spec(2, 1, &[40, 40], 100);
        let net = Network::new(sp.clone());
        let a = net.init_params();
        let b = net.init_params();
        assert_eq!(a, b, "same (spec, seed) must give bit-identical params");

        let bound = (6.0f64 / 80.0).sqrt();
        let l = net.layers()[1]; // 40 -> 40
        for j in 0..l.fan_in * l.fan_out {
            assert!(a.values[l.weight_offset + j].abs() <= bound);
        }
        for layer in net.layers() {
            for i in 0..layer.fan_out {
                assert_eq!(a.values[layer.bias_offset + i], 0.0);
            }
        }

        let other_seed = Network::new(spec(2, 1, &[40, 40], 101)).init_params();
        assert_ne!(a, other_seed);
    }

    #[test]
    fn init_layer_streams_are_order_free() {
        // The second layer of a deeper net matches the second layer of a
        // shallower net with the same fan pair: draws are keyed by layer, not
        // by how much randomness earlier layers consumed.
        let small = Network::new(spec(3, 1, &[5], 42));
        let big = Network::new(spec(3, 2, &[5, 7], 42));
        let ps = small.init_params();
        let pb = big.init_params();
        let ls = small.layers()[0];
        let lb = big.layers()[0];
        assert_eq!(
            ps.values[ls.weight_offset..ls.weight_offset + 15],
            pb.values[lb.weight_offset..lb.weight_offset + 15]
        );
    }

    #[test]
    fn forward_identity_affine() {
        // 1 -> 1, no hidden layers, weight 1 bias 0: u(x) = x.
        let net = Network::new(spec(1, 1, &[], 0));
        let mut p = ParamVector::zeros(net.param_len());
        p.values[0] = 1.0;
        assert_eq!(net.forward(&p, &[0.3]).unwrap(), vec![0.3]);
    }

    #[test]
    fn forward_single_tanh_neuron_at_zero() {
        // 1 -> [1] -> 1 with unit weights: u(0) = tanh(0) = 0.
        let net = Network::new(spec(1, 1, &[1], 0));
        let mut p = ParamVector::zeros(net.param_len());
        p.values[0] = 1.0; // hidden weight
        let l1 = net.layers()[1];
        p.values[l1.weight_offset] = 1.0;
        assert_eq!(net.forward(&p, &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_matches_naive_reimplementation() {
        let net = Network::new(spec(2, 1, &[40, 40], 7));
        let p = net.init_params();
        let mut rng = stream(7, StreamId::Check { tag: 1 });
        for _ in 0..20 {
            let x = rand_point(&mut rng, 2);
            let got = net.forward(&p, &x).unwrap()[0];
            let want = naive_forward(&net, &p, &x)[0];
            let rel = (got - want).abs() / want.abs().max(1e-300);
            assert!(rel <= 1e-14, "rel error {rel}");
        }
    }

    #[test]
    fn forward_jet_value_matches_forward_bitwise() {
        let net = Network::new(spec(3, 2, &[17, 9], 11));
        let p = net.init_params();
        let mut rng = stream(11, StreamId::Check { tag: 2 });
        for _ in 0..20 {
            let x = rand_point(&mut rng, 3);
            let jet = net.forward_jet(&p, &x).unwrap();
            let val = net.forward(&p, &x).unwrap();
            for i in 0..2 {
                assert_eq!(jet.value[i].to_bits(), val[i].to_bits());
            }
        }
    }

    #[test]
    fn jet_of_affine_net() {
        // u = 2x + 1: grad 2, hess 0 at any x.
        let net = Network::new(spec(1, 1, &[], 0));
        let mut p = ParamVector::zeros(net.param_len());
        p.values[0] = 2.0;
        p.values[1] = 1.0;
        let jet = net.forward_jet(&p, &[0.7]).unwrap();
        assert_eq!(jet.value[0], 2.0 * 0.7 + 1.0);
        assert_eq!(jet.grad[0], 2.0);
        assert_eq!(jet.hess[0], 0.0);
        assert_eq!(jet.laplacian[0], 0.0);
    }

    #[test]
    fn jet_of_single_tanh_neuron_at_zero() {
        // u = tanh(x): u(0)=0, u'(0)=1, u''(0)=0.
        let net = Network::new(spec(1, 1, &[1], 0));
        let mut p = ParamVector::zeros(net.param_len());
        p.values[0] = 1.0;
        let l1 = net.layers()[1];
        p.values[l1.weight_offset] = 1.0;
        let jet = net.forward_jet(&p, &[0.0]).unwrap();
        assert_eq!(jet.value[0], 0.0);
        assert_eq!(jet.grad[0], 1.0);
        assert_eq!(jet.hess[0], 0.0);
    }

    /// Central finite-difference oracle for ∇u and Δu of the plain forward pass.
    fn fd_grad_lap(net: &Network, p: &ParamVector, x: &[f64], out: usize) -> (Vec<f64>, f64) {
        let d = x.len();
        let h = 1e-4;
        let f = |x: &[f64]| net.forward(p, x).unwrap()[out];
        let f0 = f(x);
        let mut grad = vec![0.0; d];
        let mut lap = 0.0;
        for p_ in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[p_] += h;
            xm[p_] -= h;
            grad[p_] = (f(&xp) - f(&xm)) / (2.0 * h);
            lap += (f(&xp) - 2.0 * f0 + f(&xm)) / (h * h);
        }
        (grad, lap)
    }

    #[test]
    fn jet_matches_finite_differences() {
        for (case, d) in [(0u32, 1usize), (1, 2), (2, 3)] {
            let net = Network::new(spec(d, 1, &[20], 50 + case as u64));
            let p = net.init_params();
            let mut rng = stream(99, StreamId::Check { tag: 10 + case });
            for _ in 0..10 {
                let x = rand_point(&mut rng, d);
                let jet = net.forward_jet(&p, &x).unwrap();
                let (fd_g, fd_l) = fd_grad_lap(&net, &p, &x, 0);
                // Outputs are O(1); relative errors are floored at unit scale so the
                // second-difference roundoff of the oracle itself does not dominate.
                for p_ in 0..d {
                    let rel = (jet.grad[p_] - fd_g[p_]).abs() / fd_g[p_].abs().max(1.0);
                    assert!(rel <= 1e-6, "grad rel {rel}");
                }
                let rel = (jet.laplacian[0] - fd_l).abs() / fd_l.abs().max(1.0);
                assert!(rel <= 1e-6, "laplacian rel {rel}");
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_and_laplacian_is_trace() {
        let net = Network::new(spec(3, 2, &[14, 14], 5));
        let p = net.init_params();
        let mut rng = stream(5, StreamId::Check { tag: 3 });
        for _ in 0..50 {
            let x = rand_point(&mut rng, 3);
            let jet = net.forward_jet(&p, &x).unwrap();
            for i in 0..2 {
                let mut scale: f64 = 0.0;
                for pq in 0..9 {
                    scale = scale.max(jet.hess[i * 9 + pq].abs());
                }
                let mut tr = 0.0;
                for p_ in 0..3 {
                    for q in 0..3 {
                        let asym = (jet.hess_at(i, p_, q) - jet.hess_at(i, q, p_)).abs();
                        assert!(asym <= 1e-12 * scale.max(1.0));
                    }
                    tr += jet.hess_at(i, p_, p_);
                }
                assert_eq!(tr.to_bits(), jet.laplacian[i].to_bits());
            }
        }
    }

    #[test]
    fn backprop_value_only_reduces_to_plain_backprop() {
        // cot with only d_value set: gradient of d_value·u. Checked against
        // finite differences of the plain forward pass.
        let net = Network::new(spec(2, 1, &[8], 3));
        let p = net.init_params();
        let x = [0.3, -0.4];
        let mut trace = JetTrace::new(&net);
        net.forward_jet_trace(&p, &x, &mut trace).unwrap();
        let mut cot = JetCotangent::zeros(1, 2);
        cot.d_value[0] = 1.5;
        let mut grad = vec![0.0; net.param_len()];
        net.backprop_jet(&p, &trace, &cot, &mut grad).unwrap();

        let h = 1e-6;
        for k in 0..net.param_len() {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.values[k] += h;
            pm.values[k] -= h;
            let fd = 1.5 * (net.forward(&pp, &x).unwrap()[0] - net.forward(&pm, &x).unwrap()[0])
                / (2.0 * h);
            assert!(
                (grad[k] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "param {k}: {} vs {}",
                grad[k],
                fd
            );
        }
    }

    #[test]
    fn backprop_grad_cotangent_of_affine_net() {
        // u = w·x + b with cot d_grad = 1: ∂(∂u/∂x)/∂w = 1, ∂(∂u/∂x)/∂b = 0.
        let net = Network::new(spec(1, 1, &[], 0));
        let mut p = ParamVector::zeros(net.param_len());
        p.values[0] = 0.8;
        p.values[1] = -0.2;
        let mut trace = JetTrace::new(&net);
        net.forward_jet_trace(&p, &[0.4], &mut trace).unwrap();
        let mut cot = JetCotangent::zeros(1, 1);
        cot.d_grad[0] = 1.0;
        let mut grad = vec![0.0; 2];
        net.backprop_jet(&p, &trace, &cot, &mut grad).unwrap();
        assert_eq!(grad, vec![1.0, 0.0]);
    }

    /// The scalar the full cotangent contracts from the jet fields.
    fn cot_scalar(net: &Network, p: &ParamVector, x: &[f64], cot: &JetCotangent) -> f64 {
        let jet = net.forward_jet(p, x).unwrap();
        let (s, d) = (jet.outputs(), jet.dim());
        let mut acc = 0.0;
        for i in 0..s {
            acc += cot.d_value[i] * jet.value[i] + cot.d_laplacian[i] * jet.laplacian[i];
            for p_ in 0..d {
                acc += cot.d_grad[i * d + p_] * jet.grad_at(i, p_);
            }
        }
        acc
    }

    #[test]
    fn backprop_matches_finite_differences_on_random_cotangents() {
        let mut rng = stream(2024, StreamId::Check { tag: 4 });
        for case in 0..50 {
            let d = 1 + (case % 3) as usize;
            let s = 1 + (case % 2) as usize;
            let net = Network::new(spec(d, s, &[7, 5], 600 + case));
            let p = net.init_params();
            let x = rand_point(&mut rng, d);
            let mut cot = JetCotangent::zeros(s, d);
            for v in cot
                .d_value
                .iter_mut()
                .chain(cot.d_grad.iter_mut())
                .chain(cot.d_laplacian.iter_mut())
            {
                *v = uniform(&mut rng, -1.0, 1.0);
            }
            let mut trace = JetTrace::new(&net);
            net.forward_jet_trace(&p, &x, &mut trace).unwrap();
            let mut grad = vec![0.0; net.param_len()];
            net.backprop_jet(&p, &trace, &cot, &mut grad).unwrap();

            let h = 1e-5;
            let mut max_rel: f64 = 0.0;
            let gscale = grad.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
            for k in 0..net.param_len() {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp.values[k] += h;
                pm.values[k] -= h;
                let fd = (cot_scalar(&net, &pp, &x, &cot) - cot_scalar(&net, &pm, &x, &cot))
                    / (2.0 * h);
                max_rel = max_rel.max((grad[k] - fd).abs() / gscale);
            }
            assert!(max_rel <= 1e-6, "case {case}: rel {max_rel}");
        }
    }

    #[test]
    fn value_only_trace_matches_forward_and_backprop() {
        let net = Network::new(spec(2, 2, &[9, 6], 8));
        let p = net.init_params();
        let x = [0.25, -0.6];
        let mut trace = JetTrace::value_only(&net);
        net.forward_jet_trace(&p, &x, &mut trace).unwrap();
        let vals = trace.output_values();
        let want = net.forward(&p, &x).unwrap();
        for (a, b) in vals.iter().zip(&want) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let d_value = [1.3, -0.7];
        let mut grad = vec![0.0; net.param_len()];
        net.backprop_value(&p, &trace, &d_value, &mut grad).unwrap();
        let h = 1e-6;
        let scalar = |p: &ParamVector| {
            let v = net.forward(p, &x).unwrap();
            d_value[0] * v[0] + d_value[1] * v[1]
        };
        for k in 0..net.param_len() {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.values[k] += h;
            pm.values[k] -= h;
            let fd = (scalar(&pp) - scalar(&pm)) / (2.0 * h);
            assert!((grad[k] - fd).abs() <= 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn zero_output_layer_forces_zero_output() {
        let net = Network::new(spec(2, 1, &[30, 30], 77));
        let mut p = net.init_params();
        let out = net.layers()[net.layers().len() - 1];
        for v in &mut p.values[out.weight_offset..] {
            *v = 0.0;
        }
        let mut rng = stream(77, StreamId::Check { tag: 5 });
        for _ in 0..1000 {
            let x = rand_point(&mut rng, 2);
            assert_eq!(net.forward(&p, &x).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn output_layer_scaling_scales_output() {
        let net = Network::new(spec(2, 1, &[30, 30], 78));
        let p = net.init_params();
        let c = -3.5;
        let mut pc = p.clone();
        let out = net.layers()[net.layers().len() - 1];
        for v in &mut pc.values[out.weight_offset..] {
            *v *= c;
        }
        let mut rng = stream(78, StreamId::Check { tag: 6 });
        for _ in 0..1000 {
            let x = rand_point(&mut rng, 2);
            let u = net.forward(&p, &x).unwrap()[0];
            let uc = net.forward(&pc, &x).unwrap()[0];
            let rel = (uc - c * u).abs() / (c * u).abs().max(1e-300);
            assert!(rel <= 1e-12);
        }
    }

    #[test]
    fn checkpoint_roundtrip() {
        let sp = spec(2, 1, &[9], 123);
        let net = Network::new(sp.clone());
        let p = net.init_params();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.bin");
        save_params(&path, &sp, &p).unwrap();
        let q = load_params(&path, &sp).unwrap();
        assert_eq!(p, q);

        let wrong = spec(2, 1, &[10], 123);
        assert!(load_params(&path, &wrong).is_err());
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = Network::new(spec(2, 1, &[4], 0));
        let p = net.init_params();
        assert!(matches!(
            net.forward(&p, &[1.0]),
            Err(crate::error::Error::Config(_))
        ));
    }
}
