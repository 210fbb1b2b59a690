//! Reverse-mode differentiation over a dynamically recorded tape.
//!
//! Every operation appends a node holding its output value and the handles
//! of its inputs. Because nodes are only ever appended, the tape order is a
//! topological order and [`Tape::backward`] replays it once, in reverse.

pub mod gradcheck;
pub mod kernels;

use crate::error::{Error, Result};
use crate::fourier::{self, column_multiplicity, half_width, FreqLayout, Window};
use crate::tensor::Tensor;
use crate::wavelet::{self, Axis};

pub use gradcheck::{grad_check, registered_ops, GradCheckReport};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A trainable tensor with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        ParamTensor {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn numel(&self) -> usize {
        self.value.len()
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    ConvPointwise { x: Var, w: Var, b: Var },
    ConvDepthwise { x: Var, w: Var, b: Var },
    Conv3x3 { x: Var, w: Var, b: Var },
    Gelu(Var),
    Add(Var, Var),
    Sub(Var, Var),
    MulScalar(Var, f64),
    Concat(Vec<Var>),
    Split { x: Var, start: usize },
    L1(Var),
    WeightedSum { x: Var, weights: Tensor },
    Rfft2 { x: Var, layout: FreqLayout },
    Irfft2 { s: Var, layout: FreqLayout },
    SpectralL1 { s: Var, layout: FreqLayout, modulus: bool },
    Dwt2 { x: Var, lo: Var, hi: Var },
    Idwt2 { s: Var, lo: Var, hi: Var },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Single-writer record of executed operations.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one backward pass, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, zero if `v` does not influence the loss.
    pub fn wrt(&self, v: Var) -> Tensor {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[v.0]))
    }
}

fn dims(t: &Tensor) -> Result<(usize, usize, usize)> {
    t.dims3()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Result<Var> {
        if !value.all_finite() {
            return Err(Error::NonFinite(format!("output of {}", op_name(&op))));
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn leaf(&mut self, value: Tensor) -> Result<Var> {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, p: &ParamTensor) -> Result<Var> {
        self.leaf(p.value.clone())
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn conv_pointwise(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (cin, h, wd) = dims(self.value(x))?;
        let (wv, bv) = (self.value(w), self.value(b));
        let cout = match wv.shape() {
            [co, ci] if *ci == cin => *co,
            s => {
                return Err(Error::shape(format!(
                    "pointwise weight {:?} incompatible with {} input channels",
                    s, cin
                )))
            }
        };
        if bv.shape() != [cout] {
            return Err(Error::shape(format!("bias {:?} for {} outputs", bv.shape(), cout)));
        }
        let y = kernels::pointwise_forward(self.value(x).data(), cin, h * wd, wv.data(), bv.data(), cout);
        self.push(Tensor::new(&[cout, h, wd], y)?, Op::ConvPointwise { x, w, b })
    }

    pub fn conv_depthwise3x3(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (c, h, wd) = dims(self.value(x))?;
        if self.value(w).shape() != [c, 3, 3] || self.value(b).shape() != [c] {
            return Err(Error::shape(format!(
                "depthwise params {:?}/{:?} for {} channels",
                self.value(w).shape(),
                self.value(b).shape(),
                c
            )));
        }
        let y = kernels::depthwise_forward(
            self.value(x).data(),
            c,
            h,
            wd,
            self.value(w).data(),
            self.value(b).data(),
        );
        self.push(Tensor::new(&[c, h, wd], y)?, Op::ConvDepthwise { x, w, b })
    }

    pub fn conv3x3(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (cin, h, wd) = dims(self.value(x))?;
        let cout = match self.value(w).shape() {
            [co, ci, 3, 3] if *ci == cin => *co,
            s => {
                return Err(Error::shape(format!(
                    "3x3 weight {:?} incompatible with {} input channels",
                    s, cin
                )))
            }
        };
        if self.value(b).shape() != [cout] {
            return Err(Error::shape("3x3 bias shape"));
        }
        let y = kernels::conv3x3_forward(
            self.value(x).data(),
            cin,
            h,
            wd,
            self.value(w).data(),
            self.value(b).data(),
            cout,
        );
        self.push(Tensor::new(&[cout, h, wd], y)?, Op::Conv3x3 { x, w, b })
    }

    pub fn gelu(&mut self, x: Var) -> Result<Var> {
        let y = self.value(x).map(kernels::gelu);
        self.push(y, Op::Gelu(x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = self.value(a).add(self.value(b))?;
        self.push(y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = self.value(a).sub(self.value(b))?;
        self.push(y, Op::Sub(a, b))
    }

    pub fn mul_scalar(&mut self, x: Var, s: f64) -> Result<Var> {
        let y = self.value(x).scale(s);
        self.push(y, Op::MulScalar(x, s))
    }

    pub fn concat_channels(&mut self, parts: &[Var]) -> Result<Var> {
        let vals: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let y = Tensor::concat_channels(&vals)?;
        self.push(y, Op::Concat(parts.to_vec()))
    }

    pub fn split_channels(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let y = self.value(x).slice_channels(start, len)?;
        self.push(y, Op::Split { x, start })
    }

    /// `Σ |x|` as a scalar.
    pub fn l1(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).data().iter().map(|v| v.abs()).sum();
        self.push(Tensor::scalar(s), Op::L1(x))
    }

    /// `Σ weights ⊙ x` with constant weights.
    pub fn weighted_sum(&mut self, x: Var, weights: Tensor) -> Result<Var> {
        let s = self.value(x).dot(&weights)?;
        self.push(Tensor::scalar(s), Op::WeightedSum { x, weights })
    }

    /// Unitary FFT of each channel, packed as `[2C, Hs, Ws]`.
    pub fn rfft2(&mut self, x: Var, window: Window) -> Result<Var> {
        let (s, layout) = fourier::rfft2_tensor(self.value(x), window)?;
        self.push(s, Op::Rfft2 { x, layout })
    }

    pub fn irfft2(&mut self, s: Var, layout: FreqLayout) -> Result<Var> {
        let y = fourier::irfft2_tensor(self.value(s), &layout)?;
        self.push(y, Op::Irfft2 { s, layout })
    }

    /// L1 of a packed half-plane spectrum with off-axis bins counted twice,
    /// so the value equals the full-plane sum. `modulus` selects
    /// `Σ|z|` instead of `Σ(|re| + |im|)`.
    pub fn spectral_l1(&mut self, s: Var, layout: FreqLayout, modulus: bool) -> Result<Var> {
        let t = self.value(s);
        let (c2, fh, fw) = dims(t)?;
        if c2 % 2 != 0 || (fh, fw) != layout.freq_shape() {
            return Err(Error::shape("packed spectrum inconsistent with layout"));
        }
        let plane = fh * fw;
        let c = c2 / 2;
        let kwh = half_width(layout.kw);
        let d = t.data();
        let mut acc = 0.0;
        for ci in 0..c {
            for idx in 0..plane {
                let m = column_multiplicity((idx % fw) % kwh, layout.kw);
                let (re, im) = (d[ci * plane + idx], d[(c + ci) * plane + idx]);
                acc += m * if modulus {
                    re.hypot(im)
                } else {
                    re.abs() + im.abs()
                };
            }
        }
        self.push(Tensor::scalar(acc), Op::SpectralL1 { s, layout, modulus })
    }

    /// Trainable analysis step: `[C,H,W]` → `[4C,H/2,W/2]` with correlation
    /// taps `lo`, `hi` of shape `[L]`.
    pub fn dwt2(&mut self, x: Var, lo: Var, hi: Var) -> Result<Var> {
        let y = wavelet::analyze2(self.value(x), self.value(lo).data(), self.value(hi).data())?;
        self.push(y, Op::Dwt2 { x, lo, hi })
    }

    /// Trainable synthesis step: `[4C,h,w]` → `[C,2h,2w]` with scatter taps.
    pub fn idwt2(&mut self, s: Var, lo: Var, hi: Var) -> Result<Var> {
        let y = wavelet::synthesize2(self.value(s), self.value(lo).data(), self.value(hi).data())?;
        self.push(y, Op::Idwt2 { s, lo, hi })
    }

    /// Propagates `d loss / d node` for every node the loss depends on.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));

        for i in (0..n).rev() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            for (v, gi) in self.node_backward(node, &g)? {
                accumulate(&mut grads[v.0], gi)?;
            }
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn node_backward(&self, node: &Node, g: &Tensor) -> Result<Vec<(Var, Tensor)>> {
        Ok(match &node.op {
            Op::Leaf => Vec::new(),
            Op::ConvPointwise { x, w, b } => {
                let xv = self.value(*x);
                let (cin, h, wd) = dims(xv)?;
                let wv = self.value(*w);
                let cout = wv.shape()[0];
                let (gx, gw, gb) =
                    kernels::pointwise_backward(xv.data(), cin, h * wd, wv.data(), cout, g.data());
                vec![
                    (*x, Tensor::new(xv.shape(), gx)?),
                    (*w, Tensor::new(wv.shape(), gw)?),
                    (*b, Tensor::new(&[cout], gb)?),
                ]
            }
            Op::ConvDepthwise { x, w, b } => {
                let xv = self.value(*x);
                let (c, h, wd) = dims(xv)?;
                let (gx, gw, gb) =
                    kernels::depthwise_backward(xv.data(), c, h, wd, self.value(*w).data(), g.data());
                vec![
                    (*x, Tensor::new(xv.shape(), gx)?),
                    (*w, Tensor::new(&[c, 3, 3], gw)?),
                    (*b, Tensor::new(&[c], gb)?),
                ]
            }
            Op::Conv3x3 { x, w, b } => {
                let xv = self.value(*x);
                let (cin, h, wd) = dims(xv)?;
                let wv = self.value(*w);
                let cout = wv.shape()[0];
                let (gx, gw, gb) =
                    kernels::conv3x3_backward(xv.data(), cin, h, wd, wv.data(), cout, g.data());
                vec![
                    (*x, Tensor::new(xv.shape(), gx)?),
                    (*w, Tensor::new(wv.shape(), gw)?),
                    (*b, Tensor::new(&[cout], gb)?),
                ]
            }
            Op::Gelu(x) => {
                let gx = self.value(*x).zip_map(g, |xv, gv| gv * kernels::gelu_grad(xv))?;
                vec![(*x, gx)]
            }
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::Sub(a, b) => vec![(*a, g.clone()), (*b, g.scale(-1.0))],
            Op::MulScalar(x, s) => vec![(*x, g.scale(*s))],
            Op::Concat(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                let mut start = 0;
                for &p in parts {
                    let c = self.value(p).shape()[0];
                    out.push((p, g.slice_channels(start, c)?));
                    start += c;
                }
                out
            }
            Op::Split { x, start } => {
                let xv = self.value(*x);
                let (_, h, wd) = dims(xv)?;
                let mut gx = Tensor::zeros(xv.shape());
                let off = start * h * wd;
                gx.data_mut()[off..off + g.len()].copy_from_slice(g.data());
                vec![(*x, gx)]
            }
            Op::L1(x) => {
                let s = g.data()[0];
                vec![(*x, self.value(*x).map(|v| s * sign(v)))]
            }
            Op::WeightedSum { x, weights } => vec![(*x, weights.scale(g.data()[0]))],
            Op::Rfft2 { x, layout } => vec![(*x, fourier::rfft2_adjoint(g, layout)?)],
            Op::Irfft2 { s, layout } => vec![(*s, fourier::irfft2_adjoint(g, layout)?)],
            Op::SpectralL1 { s, layout, modulus } => {
                let sv = self.value(*s);
                let (c2, fh, fw) = dims(sv)?;
                let (c, plane) = (c2 / 2, fh * fw);
                let kwh = half_width(layout.kw);
                let scale = g.data()[0];
                let d = sv.data();
                let mut gs = Tensor::zeros(sv.shape());
                let gd = gs.data_mut();
                for ci in 0..c {
                    for idx in 0..plane {
                        let m = scale * column_multiplicity((idx % fw) % kwh, layout.kw);
                        let (ri, ii) = (ci * plane + idx, (c + ci) * plane + idx);
                        let (re, im) = (d[ri], d[ii]);
                        if *modulus {
                            let r = re.hypot(im);
                            if r > 0.0 {
                                gd[ri] = m * re / r;
                                gd[ii] = m * im / r;
                            }
                        } else {
                            gd[ri] = m * sign(re);
                            gd[ii] = m * sign(im);
                        }
                    }
                }
                vec![(*s, gs)]
            }
            Op::Dwt2 { x, lo, hi } => {
                let xv = self.value(*x);
                let (lo_t, hi_t) = (self.value(*lo).data(), self.value(*hi).data());
                let taps = lo_t.len();
                let c = g.shape()[0] / 4;
                let (gll, glh) = (g.slice_channels(0, c)?, g.slice_channels(c, c)?);
                let (ghl, ghh) = (g.slice_channels(2 * c, c)?, g.slice_channels(3 * c, c)?);
                let (lw, hw) = wavelet::analyze_axis(xv, Axis::Width, lo_t, hi_t)?;
                let g_lw = wavelet::synthesize_axis(&gll, &glh, Axis::Height, lo_t, hi_t)?;
                let g_hw = wavelet::synthesize_axis(&ghl, &ghh, Axis::Height, lo_t, hi_t)?;
                let (a1, b1) = wavelet::tap_correlation(&lw, &gll, &glh, Axis::Height, taps)?;
                let (a2, b2) = wavelet::tap_correlation(&hw, &ghl, &ghh, Axis::Height, taps)?;
                let (a3, b3) = wavelet::tap_correlation(xv, &g_lw, &g_hw, Axis::Width, taps)?;
                let gx = wavelet::synthesize_axis(&g_lw, &g_hw, Axis::Width, lo_t, hi_t)?;
                let glo: Vec<f64> = (0..taps).map(|j| a1[j] + a2[j] + a3[j]).collect();
                let ghi: Vec<f64> = (0..taps).map(|j| b1[j] + b2[j] + b3[j]).collect();
                vec![
                    (*x, gx),
                    (*lo, Tensor::new(&[taps], glo)?),
                    (*hi, Tensor::new(&[taps], ghi)?),
                ]
            }
            Op::Idwt2 { s, lo, hi } => {
                let sv = self.value(*s);
                let (lo_t, hi_t) = (self.value(*lo).data(), self.value(*hi).data());
                let taps = lo_t.len();
                let c = sv.shape()[0] / 4;
                let (ll, lh) = (sv.slice_channels(0, c)?, sv.slice_channels(c, c)?);
                let (hl, hh) = (sv.slice_channels(2 * c, c)?, sv.slice_channels(3 * c, c)?);
                let lw = wavelet::synthesize_axis(&ll, &lh, Axis::Height, lo_t, hi_t)?;
                let hw = wavelet::synthesize_axis(&hl, &hh, Axis::Height, lo_t, hi_t)?;
                let (g_lw, g_hw) = wavelet::analyze_axis(g, Axis::Width, lo_t, hi_t)?;
                let (a1, b1) = wavelet::tap_correlation(g, &lw, &hw, Axis::Width, taps)?;
                let (a2, b2) = wavelet::tap_correlation(&g_lw, &ll, &lh, Axis::Height, taps)?;
                let (a3, b3) = wavelet::tap_correlation(&g_hw, &hl, &hh, Axis::Height, taps)?;
                let (gll, glh) = wavelet::analyze_axis(&g_lw, Axis::Height, lo_t, hi_t)?;
                let (ghl, ghh) = wavelet::analyze_axis(&g_hw, Axis::Height, lo_t, hi_t)?;
                let glo: Vec<f64> = (0..taps).map(|j| a1[j] + a2[j] + a3[j]).collect();
                let ghi: Vec<f64> = (0..taps).map(|j| b1[j] + b2[j] + b3[j]).collect();
                vec![
                    (*s, Tensor::concat_channels(&[&gll, &glh, &ghl, &ghh])?),
                    (*lo, Tensor::new(&[taps], glo)?),
                    (*hi, Tensor::new(&[taps], ghi)?),
                ]
            }
        })
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) -> Result<()> {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::ConvPointwise { .. } => "conv_pointwise",
        Op::ConvDepthwise { .. } => "conv_depthwise3x3",
        Op::Conv3x3 { .. } => "conv3x3",
        Op::Gelu(_) => "gelu",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::MulScalar(..) => "mul_scalar",
        Op::Concat(_) => "concat_channels",
        Op::Split { .. } => "split_channels",
        Op::L1(_) => "l1",
        Op::WeightedSum { .. } => "weighted_sum",
        Op::Rfft2 { .. } => "fft2",
        Op::Irfft2 { .. } => "ifft2",
        Op::SpectralL1 { .. } => "spectral_l1",
        Op::Dwt2 { .. } => "dwt2",
        Op::Idwt2 { .. } => "idwt2",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_pointwise_is_identity() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::full(&[2, 2, 2], 1.0)).unwrap();
        let w = t.leaf(Tensor::new(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap()).unwrap();
        let b = t.leaf(Tensor::zeros(&[2])).unwrap();
        let y = t.conv_pointwise(x, w, b).unwrap();
        assert_eq!(t.value(y), t.value(x));
    }

    #[test]
    fn zero_pointwise_gives_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tape::new();
        let x = t.leaf(Tensor::random_uniform(&[3, 4, 4], -1.0, 1.0, &mut rng)).unwrap();
        let w = t.leaf(Tensor::zeros(&[2, 3])).unwrap();
        let b = t.leaf(Tensor::full(&[2], 1.0)).unwrap();
        let y = t.conv_pointwise(x, w, b).unwrap();
        assert!(t.value(y).data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn pointwise_rejects_mismatched_weight() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::zeros(&[3, 2, 2])).unwrap();
        let w = t.leaf(Tensor::zeros(&[2, 4])).unwrap();
        let b = t.leaf(Tensor::zeros(&[2])).unwrap();
        assert!(matches!(t.conv_pointwise(x, w, b), Err(Error::Shape(_))));
    }

    #[test]
    fn delta_depthwise_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = Tape::new();
        let xv = Tensor::random_uniform(&[2, 5, 6], -1.0, 1.0, &mut rng);
        let x = t.leaf(xv.clone()).unwrap();
        let mut k = Tensor::zeros(&[2, 3, 3]);
        k.data_mut()[4] = 1.0;
        k.data_mut()[13] = 1.0;
        let w = t.leaf(k).unwrap();
        let b = t.leaf(Tensor::zeros(&[2])).unwrap();
        let y = t.conv_depthwise3x3(x, w, b).unwrap();
        assert_eq!(t.value(y), &xv);
    }

    #[test]
    fn averaging_depthwise_keeps_constant_interior() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::full(&[1, 5, 5], 0.7)).unwrap();
        let w = t.leaf(Tensor::full(&[1, 3, 3], 1.0 / 9.0)).unwrap();
        let b = t.leaf(Tensor::zeros(&[1])).unwrap();
        let y = t.conv_depthwise3x3(x, w, b).unwrap();
        for i in 1..4 {
            for j in 1..4 {
                assert!((t.value(y).at3(0, i, j) - 0.7).abs() < 1e-15);
            }
        }
        // zero padding pulls the corner down to 4/9 of the value
        assert!((t.value(y).at3(0, 0, 0) - 0.7 * 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn add_zero_is_identity_and_l1_of_zero_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = Tape::new();
        let xv = Tensor::random_uniform(&[2, 3, 3], -1.0, 1.0, &mut rng);
        let x = t.leaf(xv.clone()).unwrap();
        let z = t.leaf(Tensor::zeros(&[2, 3, 3])).unwrap();
        let y = t.add(x, z).unwrap();
        assert_eq!(t.value(y), &xv);
        let l = t.l1(z).unwrap();
        assert_eq!(t.value(l).data()[0], 0.0);
    }

    #[test]
    fn scalar_weight_gradient_is_one() {
        // loss = l1(w · 1) with w > 0
        let mut t = Tape::new();
        let x = t.leaf(Tensor::full(&[1, 1, 1], 1.0)).unwrap();
        let w = t.leaf(Tensor::new(&[1, 1], vec![0.8]).unwrap()).unwrap();
        let b = t.leaf(Tensor::zeros(&[1])).unwrap();
        let y = t.conv_pointwise(x, w, b).unwrap();
        let l = t.l1(y).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.wrt(w).data(), &[1.0]);
    }

    #[test]
    fn unreachable_leaf_gets_zero_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::full(&[1, 2, 2], 2.0)).unwrap();
        let unused = t.leaf(Tensor::full(&[3], 5.0)).unwrap();
        let l = t.l1(x).unwrap();
        let g = t.backward(l).unwrap();
        assert!(g.get(unused).is_none());
        assert_eq!(g.wrt(unused), Tensor::zeros(&[3]));
    }

    #[test]
    fn non_scalar_loss_is_a_contract_error() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::zeros(&[1, 2, 2])).unwrap();
        assert!(matches!(t.backward(x), Err(Error::Contract(_))));
    }

    #[test]
    fn non_finite_output_is_rejected() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::full(&[1, 1, 1], f64::MAX)).unwrap();
        assert!(matches!(t.mul_scalar(x, 10.0), Err(Error::NonFinite(_))));
    }
}
