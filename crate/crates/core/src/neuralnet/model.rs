use num_complex::Complex64;

use super::params::{DenseIdx, MlpIdx, Plan};
use super::{init_params, Layout, MagnitudeMlpSpec, ModelArch, ParamVector};
use crate::error::{Error, Result};
use crate::frontend::fir_filter;
use crate::signal::ComplexSeq;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A validated architecture with its resolved parameter plan.
#[derive(Debug, Clone)]
pub struct Model {
    arch: ModelArch,
    plan: Plan,
    layout: Layout,
}

/// Intermediate signals of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Stage boundaries: the model input first, the model output last.
    stages: Vec<Vec<Complex64>>,
    /// FFNN hidden activations, one `len × width` block per hidden layer.
    hidden: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[Complex64] {
        self.stages.last().expect("trace has stages")
    }

    pub fn into_output(mut self) -> Vec<Complex64> {
        self.stages.pop().expect("trace has stages")
    }
}

impl Model {
    pub fn new(arch: &ModelArch) -> Result<Self> {
        arch.validate()?;
        let (plan, layout) = Plan::build(arch);
        Ok(Self {
            arch: arch.clone(),
            plan,
            layout,
        })
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.total()
    }

    pub fn init(&self, seed: u64) -> ParamVector {
        init_params(&self.arch, seed).expect("architecture validated at construction")
    }

    pub fn check(&self, params: &ParamVector) -> Result<()> {
        params.check_against(&self.layout)
    }

    pub fn forward(&self, p: &[f64], x: &[Complex64]) -> Vec<Complex64> {
        self.forward_traced(p, x).into_output()
    }

    pub fn forward_traced(&self, p: &[f64], x: &[Complex64]) -> Trace {
        assert_eq!(p.len(), self.layout.total(), "parameter length");
        let l = self.arch.context_len;
        let mut stages = vec![x.to_vec()];
        let mut hidden = vec![];
        match &self.plan {
            Plan::Linear { fir } => {
                stages.push(fir_filter(x, &taps(p, *fir, l)));
            }
            Plan::Hammerstein { pre, fir } => {
                let a = magnitude_stage(pre, p, x);
                let y = fir_filter(&a, &taps(p, *fir, l));
                stages.push(a);
                stages.push(y);
            }
            Plan::Wiener { fir, post } => {
                let a = fir_filter(x, &taps(p, *fir, l));
                let y = magnitude_stage(post, p, &a);
                stages.push(a);
                stages.push(y);
            }
            Plan::WienerHammerstein { pre, fir, post } => {
                let a = magnitude_stage(pre, p, x);
                let b = fir_filter(&a, &taps(p, *fir, l));
                let y = magnitude_stage(post, p, &b);
                stages.push(a);
                stages.push(b);
                stages.push(y);
            }
            Plan::Ffnn { layers } => {
                let (y, h) = ffnn_forward(layers, p, x, l);
                hidden = h;
                stages.push(y);
            }
        }
        Trace { stages, hidden }
    }

    /// Accumulates `∂L/∂p` given `∂L/∂output` into a fresh gradient vector.
    pub fn backward(&self, p: &[f64], trace: &Trace, upstream: &[Complex64]) -> Vec<f64> {
        assert_eq!(upstream.len(), trace.output().len(), "upstream length");
        let l = self.arch.context_len;
        let mut grad = vec![0.0; p.len()];
        let s = &trace.stages;
        match &self.plan {
            Plan::Linear { fir } => {
                fir_backward(&taps(p, *fir, l), &s[0], upstream, &mut grad[*fir..], false);
            }
            Plan::Hammerstein { pre, fir } => {
                let ga = fir_backward(&taps(p, *fir, l), &s[1], upstream, &mut grad[*fir..], true);
                magnitude_backward(pre, p, &s[0], &ga, &mut grad, false);
            }
            Plan::Wiener { fir, post } => {
                let ga = magnitude_backward(post, p, &s[1], upstream, &mut grad, true);
                fir_backward(&taps(p, *fir, l), &s[0], &ga, &mut grad[*fir..], false);
            }
            Plan::WienerHammerstein { pre, fir, post } => {
                let gb = magnitude_backward(post, p, &s[2], upstream, &mut grad, true);
                let ga = fir_backward(&taps(p, *fir, l), &s[1], &gb, &mut grad[*fir..], true);
                magnitude_backward(pre, p, &s[0], &ga, &mut grad, false);
            }
            Plan::Ffnn { layers } => {
                ffnn_backward(layers, p, &s[0], &trace.hidden, upstream, &mut grad, l);
            }
        }
        grad
    }
}

fn taps(p: &[f64], offset: usize, len: usize) -> Vec<Complex64> {
    p[offset..offset + 2 * len]
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

#[inline]
fn mlp_value(m: &MlpIdx, p: &[f64], r: f64) -> f64 {
    let mut out = m.b2.map_or(0.0, |i| p[i]);
    for i in 0..m.width {
        let z = p[m.w1 + i] * r + m.b1.map_or(0.0, |b| p[b + i]);
        out += p[m.w2 + i] * m.act.apply(z);
    }
    out
}

/// `M(|x|) · e^{j·arg x}` with `arg 0 = 0`.
#[inline]
fn magnitude_apply(m: &MlpIdx, p: &[f64], x: Complex64) -> Complex64 {
    let r = x.norm();
    let v = mlp_value(m, p, r);
    if r == 0.0 {
        Complex64::new(v, 0.0)
    } else {
        x * (v / r)
    }
}

fn magnitude_stage(m: &MlpIdx, p: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    x.iter().map(|&v| magnitude_apply(m, p, v)).collect()
}

/// Parameter gradients of a magnitude stage; returns the input gradient when
/// requested. Writing `out = M(r)·u` with `u = x/r`, the input gradient is
/// `M'(r)·d·u + (M(r)/r)·(g − d·u)` where `d = Re(g·ū)`; it is zero at `x = 0`.
fn magnitude_backward(
    m: &MlpIdx,
    p: &[f64],
    x: &[Complex64],
    g: &[Complex64],
    grad: &mut [f64],
    want_input: bool,
) -> Vec<Complex64> {
    let mut gx = if want_input {
        vec![ZERO; x.len()]
    } else {
        vec![]
    };
    for (k, (&xk, &gk)) in x.iter().zip(g).enumerate() {
        if gk == ZERO {
            continue;
        }
        let r = xk.norm();
        let u = if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            xk / r
        };
        let d = (gk * u.conj()).re;
        let mut mval = m.b2.map_or(0.0, |i| p[i]);
        let mut dmdr = 0.0;
        for i in 0..m.width {
            let w1 = p[m.w1 + i];
            let w2 = p[m.w2 + i];
            let z = w1 * r + m.b1.map_or(0.0, |b| p[b + i]);
            let a = m.act.apply(z);
            let da = m.act.derivative(z, a);
            mval += w2 * a;
            dmdr += w2 * da * w1;
            grad[m.w1 + i] += d * w2 * da * r;
            if let Some(b) = m.b1 {
                grad[b + i] += d * w2 * da;
            }
            grad[m.w2 + i] += d * a;
        }
        if let Some(b) = m.b2 {
            grad[b] += d;
        }
        if want_input && r > 0.0 {
            gx[k] = u * (dmdr * d) + (gk - u * d) * (mval / r);
        }
    }
    gx
}

/// `grad` starts at the FIR segment. Tap gradient `Σ_k g[k]·conj(a[k−i])`;
/// input gradient `Σ_i g[m+i]·conj(h_i)`.
fn fir_backward(
    h: &[Complex64],
    a: &[Complex64],
    g: &[Complex64],
    grad: &mut [f64],
    want_input: bool,
) -> Vec<Complex64> {
    let n = a.len();
    for (i, _) in h.iter().enumerate() {
        let mut acc = ZERO;
        for k in i..n {
            acc += g[k] * a[k - i].conj();
        }
        grad[2 * i] += acc.re;
        grad[2 * i + 1] += acc.im;
    }
    if !want_input {
        return vec![];
    }
    let hc: Vec<Complex64> = h.iter().map(|v| v.conj()).collect();
    (0..n)
        .map(|m| {
            let mut acc = ZERO;
            for (i, hci) in hc.iter().enumerate().take(n - m) {
                acc += g[m + i] * hci;
            }
            acc
        })
        .collect()
}

/// Window `[x[k], x[k−1], …, x[k−L+1]]` as interleaved reals, zero history.
#[inline]
fn fill_window(x: &[Complex64], k: usize, l: usize, v: &mut [f64]) {
    for i in 0..l {
        let s = if i <= k { x[k - i] } else { ZERO };
        v[2 * i] = s.re;
        v[2 * i + 1] = s.im;
    }
}

#[inline]
fn dense(layer: &DenseIdx, p: &[f64], input: &[f64], out: &mut [f64]) {
    for (o, y) in out.iter_mut().enumerate() {
        let row = &p[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
        *y = p[layer.b + o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
    }
}

fn ffnn_forward(
    layers: &[DenseIdx],
    p: &[f64],
    x: &[Complex64],
    l: usize,
) -> (Vec<Complex64>, Vec<Vec<f64>>) {
    let n = x.len();
    let n_hidden = layers.len() - 1;
    let mut hidden: Vec<Vec<f64>> = layers[..n_hidden]
        .iter()
        .map(|d| vec![0.0; n * d.fan_out])
        .collect();
    let mut window = vec![0.0; 2 * l];
    let mut out = vec![ZERO; n];
    let mut scratch = vec![0.0; layers.iter().map(|d| d.fan_out).max().unwrap_or(2)];
    for k in 0..n {
        fill_window(x, k, l, &mut window);
        for (j, layer) in layers.iter().enumerate() {
            let input: &[f64] = if j == 0 {
                &window
            } else {
                let w = layers[j - 1].fan_out;
                &hidden[j - 1][k * w..(k + 1) * w]
            };
            let y = &mut scratch[..layer.fan_out];
            dense(layer, p, input, y);
            if j < n_hidden {
                let dst = &mut hidden[j][k * layer.fan_out..(k + 1) * layer.fan_out];
                for (d, v) in dst.iter_mut().zip(y.iter()) {
                    *d = v.max(0.0);
                }
            } else {
                out[k] = Complex64::new(y[0], y[1]);
            }
        }
    }
    (out, hidden)
}

fn ffnn_backward(
    layers: &[DenseIdx],
    p: &[f64],
    x: &[Complex64],
    hidden: &[Vec<f64>],
    g: &[Complex64],
    grad: &mut [f64],
    l: usize,
) {
    let max_w = layers.iter().map(|d| d.fan_out.max(d.fan_in)).max().unwrap_or(2);
    let mut window = vec![0.0; 2 * l];
    let mut delta = vec![0.0; max_w];
    let mut delta_prev = vec![0.0; max_w];
    for k in 0..x.len() {
        if g[k] == ZERO {
            continue;
        }
        fill_window(x, k, l, &mut window);
        delta[0] = g[k].re;
        delta[1] = g[k].im;
        for j in (0..layers.len()).rev() {
            let layer = &layers[j];
            let input: &[f64] = if j == 0 {
                &window
            } else {
                let w = layers[j - 1].fan_out;
                &hidden[j - 1][k * w..(k + 1) * w]
            };
            for o in 0..layer.fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grad[layer.b + o] += d;
                let row = &mut grad[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
                for (gw, v) in row.iter_mut().zip(input) {
                    *gw += d * v;
                }
            }
            if j > 0 {
                for (i, dp) in delta_prev[..layer.fan_in].iter_mut().enumerate() {
                    if input[i] > 0.0 {
                        let mut acc = 0.0;
                        for o in 0..layer.fan_out {
                            acc += p[layer.w + o * layer.fan_in + i] * delta[o];
                        }
                        *dp = acc;
                    } else {
                        *dp = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
    }
}

pub fn forward(arch: &ModelArch, params: &ParamVector, input: &ComplexSeq) -> Result<ComplexSeq> {
    let model = Model::new(arch)?;
    model.check(params)?;
    input.with_samples(model.forward(&params.values, input.samples()))
}

/// `∂L/∂params` for a loss whose gradient with respect to the model output
/// is `upstream`.
pub fn backward(
    arch: &ModelArch,
    params: &ParamVector,
    input: &ComplexSeq,
    upstream: &[Complex64],
) -> Result<ParamVector> {
    let model = Model::new(arch)?;
    model.check(params)?;
    if upstream.len() != input.len() {
        return Err(Error::LengthMismatch {
            what: "upstream gradient vs input",
            left: upstream.len(),
            right: input.len(),
        });
    }
    let trace = model.forward_traced(&params.values, input.samples());
    Ok(ParamVector {
        values: model.backward(&params.values, &trace, upstream),
        layout: params.layout.clone(),
    })
}

/// Applies one magnitude MLP to a single sample. `params` holds the stage's
/// own segments in layout order (w1, b1, w2, b2).
pub fn mlp_forward(x: Complex64, spec: &MagnitudeMlpSpec, params: &[f64]) -> Result<Complex64> {
    if params.len() != spec.param_count() {
        return Err(Error::Structural(format!(
            "MLP expects {} parameters, got {}",
            spec.param_count(),
            params.len()
        )));
    }
    let w = spec.hidden_width;
    let mut next = 0;
    let mut take = |n: usize| {
        let at = next;
        next += n;
        at
    };
    let w1 = take(w);
    let b1 = spec.hidden_bias.then(|| take(w));
    let w2 = take(w);
    let b2 = spec.output_bias.then(|| take(1));
    let idx = MlpIdx {
        width: w,
        act: spec.activation,
        w1,
        b1,
        w2,
        b2,
    };
    Ok(magnitude_apply(&idx, params, x))
}
