//! Three-scale wavelet/Fourier restoration network.
//!
//! Wavelet analysis of the input yields half- and quarter-resolution images
//! plus the high bands needed to invert them. The encoder descends through
//! trainable wavelet downsampling, fusing each scale's stem features; the
//! decoder climbs back with trainable inverse-wavelet upsampling and skip
//! connections. Heads predict a residual at the coarsest scale and corrected
//! high bands at the finer ones, and fixed inverse wavelet steps chain the
//! residuals up to full resolution.

mod block;
mod config;
mod cost;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use block::{block_params, feed_forward, pwfnet_block, token_mixer, Activation, BlockVars};
pub use config::{MixerKernel, ModelConfig, Variant};
pub use cost::{flops_estimate, param_count};

use crate::autodiff::{ParamTensor, Tape, Var};
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::tensor::Tensor;
use crate::wavelet::{analyze2, filter_bank, synthesize2, WaveletFamily};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Init {
    Zero,
    /// Uniform in `±1/sqrt(fan_in)`.
    Uniform(usize),
    Taps(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LayerSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
    /// Smallest variant that uses the parameter.
    pub variant: Variant,
}

struct Specs(Vec<LayerSpec>);

impl Specs {
    fn push(&mut self, name: String, shape: Vec<usize>, init: Init, variant: Variant) {
        self.0.push(LayerSpec {
            name,
            shape,
            init,
            variant,
        });
    }

    fn conv3(&mut self, name: &str, cin: usize, cout: usize, zero: bool, v: Variant) {
        let init = if zero { Init::Zero } else { Init::Uniform(cin * 9) };
        self.push(format!("{}.w", name), vec![cout, cin, 3, 3], init, v);
        self.push(format!("{}.b", name), vec![cout], Init::Zero, v);
    }

    fn pointwise(&mut self, name: &str, cin: usize, cout: usize, v: Variant) {
        self.push(format!("{}.w", name), vec![cout, cin], Init::Uniform(cin), v);
        self.push(format!("{}.b", name), vec![cout], Init::Zero, v);
    }

    fn taps(&mut self, name: &str, (lo, hi): &(Vec<f64>, Vec<f64>), v: Variant) {
        self.push(format!("{}.lo", name), vec![lo.len()], Init::Taps(lo.clone()), v);
        self.push(format!("{}.hi", name), vec![hi.len()], Init::Taps(hi.clone()), v);
    }

    fn blocks(&mut self, stack: &str, n: usize, ch: usize, v: Variant) {
        for i in 0..n {
            for (suffix, shape) in block_params(ch) {
                let init = match shape.len() {
                    2 => Init::Uniform(shape[1]),
                    3 => Init::Uniform(9),
                    _ => Init::Zero,
                };
                self.push(format!("{}.{}.{}", stack, i, suffix), shape, init, v);
            }
        }
    }
}

/// Ordered parameter list; a deterministic function of the config.
pub(crate) fn layer_specs(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let (c, io, n) = (cfg.base_channels, cfg.io_channels, cfg.blocks_per_level);
    let fam = filter_bank(cfg.family);
    let (down, up) = (fam.analysis_taps(), fam.synthesis_taps());
    let (s, m, l) = (Variant::S, Variant::M, Variant::L);
    let mut p = Specs(Vec::new());

    p.conv3("stem1", io, c, false, s);
    p.blocks("enc1", n[0], c, s);
    p.taps("down1", &down, s);
    p.conv3("stem2", 4 * io, 2 * c, false, s);
    p.pointwise("fuse2", 4 * c + 2 * c, 2 * c, s);
    p.blocks("enc2", n[1], 2 * c, s);
    p.taps("down2", &down, s);
    p.conv3("stem4", 4 * io, 4 * c, false, s);
    p.pointwise("fuse4", 8 * c + 4 * c, 4 * c, s);
    p.blocks("mid", n[2], 4 * c, s);
    p.conv3("head4", 4 * c, io, true, s);

    p.taps("up4", &up, m);
    p.pointwise("fuse_up2", c + 2 * c, 2 * c, m);
    p.blocks("dec2", n[1], 2 * c, m);
    p.conv3("head2", 2 * c, io, true, m);

    p.taps("up2", &up, l);
    p.pointwise("fuse_up1", c / 2 + c, c, l);
    p.blocks("dec1", n[0], c, l);
    p.conv3("head1", c, io, true, l);
    p.0
}

/// Built network: configuration plus named parameters in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub cfg: ModelConfig,
    pub params: Vec<ParamTensor>,
    index: HashMap<String, usize>,
    variants: Vec<Variant>,
}

/// Rounds to the nearest 32-bit float so parameters persist losslessly.
#[inline]
pub fn to_f32_grid(v: f64) -> f64 {
    v as f32 as f64
}

impl Model {
    pub fn build(cfg: &ModelConfig) -> Result<Model> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let specs = layer_specs(cfg);
        let mut params = Vec::with_capacity(specs.len());
        let mut variants = Vec::with_capacity(specs.len());
        for s in specs {
            let numel: usize = s.shape.iter().product();
            let data = match &s.init {
                Init::Zero => vec![0.0; numel],
                Init::Uniform(fan_in) => {
                    let bound = 1.0 / (*fan_in as f64).sqrt();
                    (0..numel).map(|_| to_f32_grid(rng.gen_range(-bound..bound))).collect()
                }
                Init::Taps(t) => t.iter().map(|&v| to_f32_grid(v)).collect(),
            };
            params.push(ParamTensor::new(s.name, Tensor::new(&s.shape, data)?));
            variants.push(s.variant);
        }
        let index = params.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
        Ok(Model {
            cfg: cfg.clone(),
            params,
            index,
            variants,
        })
    }

    pub fn param(&self, name: &str) -> Option<&ParamTensor> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut ParamTensor> {
        self.index.get(name).map(|&i| &mut self.params[i])
    }

    /// Whether parameter `i` takes part in `variant`.
    pub fn uses(&self, i: usize, variant: Variant) -> bool {
        self.variants[i] <= variant
    }

    pub fn family(&self) -> WaveletFamily {
        filter_bank(self.cfg.family)
    }

    pub fn zero_grads(&mut self) {
        self.params.iter_mut().for_each(ParamTensor::zero_grad);
    }

    pub fn forward(&self, x: &Image, variant: Variant) -> Result<MultiOutput> {
        let mut tape = Tape::new();
        let g = self.forward_on_tape(&mut tape, x, variant, None)?;
        Ok(g.outputs(&tape))
    }

    /// Forward pass that also returns every named intermediate activation
    /// in execution order.
    pub fn forward_traced(&self, x: &Image, variant: Variant) -> Result<(MultiOutput, Vec<(String, Tensor)>)> {
        let mut tape = Tape::new();
        let mut trace = Vec::new();
        let g = self.forward_on_tape(&mut tape, x, variant, Some(&mut trace))?;
        Ok((g.outputs(&tape), trace))
    }

    /// Records the forward pass on `tape`. Parameters enter the tape lazily,
    /// so a truncated variant only references the parameters it uses.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        x: &Image,
        variant: Variant,
        trace: Option<&mut Vec<(String, Tensor)>>,
    ) -> Result<ForwardGraph> {
        let mi = multi_input(x, &self.family(), self.cfg.io_channels)?;
        let mut cx = Ctx {
            tape,
            model: self,
            vars: vec![None; self.params.len()],
            trace,
        };
        let window = self.cfg.mixer_kernel.window();
        let n = self.cfg.blocks_per_level;
        let fam = self.family();
        let (slo, shi) = fam.synthesis_taps();
        let (alo, ahi) = fam.analysis_taps();
        let fixed_lo = cx.tape.leaf(Tensor::new(&[slo.len()], slo)?)?;
        let fixed_hi = cx.tape.leaf(Tensor::new(&[shi.len()], shi)?)?;
        let fixed_alo = cx.tape.leaf(Tensor::new(&[alo.len()], alo)?)?;
        let fixed_ahi = cx.tape.leaf(Tensor::new(&[ahi.len()], ahi)?)?;
        let io = self.cfg.io_channels;
        // heads emit an image-domain correction; only its high bands are used
        let high_bands = |cx: &mut Ctx, rho: Var| -> Result<Var> {
            let s = cx.tape.dwt2(rho, fixed_alo, fixed_ahi)?;
            cx.tape.split_channels(s, io, 3 * io)
        };

        let i1 = cx.tape.leaf(mi.i1.clone())?;
        let i2 = cx.tape.leaf(mi.i2.clone())?;
        let i4 = cx.tape.leaf(mi.i4.clone())?;
        let in2 = cx.tape.leaf(Tensor::concat_channels(&[&mi.i2, &mi.highs1])?)?;
        let in4 = cx.tape.leaf(Tensor::concat_channels(&[&mi.i4, &mi.highs2])?)?;

        // encoder
        let f = cx.conv3("stem1", i1)?;
        let e1 = cx.blocks("enc1", n[0], f, window)?;
        let d = cx.wavelet_down("down1", e1)?;
        let s2 = cx.conv3("stem2", in2)?;
        let f = cx.tape.concat_channels(&[d, s2])?;
        let f = cx.pointwise("fuse2", f)?;
        let e2 = cx.blocks("enc2", n[1], f, window)?;
        let d = cx.wavelet_down("down2", e2)?;
        let s4 = cx.conv3("stem4", in4)?;
        let f = cx.tape.concat_channels(&[d, s4])?;
        let f = cx.pointwise("fuse4", f)?;
        let d4 = cx.blocks("mid", n[2], f, window)?;
        let r4 = cx.conv3("head4", d4)?;

        let (h2, w2) = (mi.i2.shape()[1], mi.i2.shape()[2]);
        let (h1, w1) = (mi.i1.shape()[1], mi.i1.shape()[2]);

        let rh2 = if variant >= Variant::M {
            let u = cx.wavelet_up("up4", d4)?;
            let f = cx.tape.concat_channels(&[u, e2])?;
            let f = cx.pointwise("fuse_up2", f)?;
            let d2 = cx.blocks("dec2", n[1], f, window)?;
            let rho2 = cx.conv3("head2", d2)?;
            let rh2 = high_bands(&mut cx, rho2)?;
            if variant == Variant::L {
                let u = cx.wavelet_up("up2", d2)?;
                let f = cx.tape.concat_channels(&[u, e1])?;
                let f = cx.pointwise("fuse_up1", f)?;
                let d1 = cx.blocks("dec1", n[0], f, window)?;
                let rho1 = cx.conv3("head1", d1)?;
                let rh1 = high_bands(&mut cx, rho1)?;
                Some((rh2, Some(rh1)))
            } else {
                Some((rh2, None))
            }
        } else {
            None
        };

        // residual chain: R2 = idwt(2 R4, rh2), R1 = idwt(2 R2, rh1)
        let zeros2 = |cx: &mut Ctx| cx.tape.leaf(Tensor::zeros(&[3 * io, h2 / 2, w2 / 2]));
        let zeros1 = |cx: &mut Ctx| cx.tape.leaf(Tensor::zeros(&[3 * io, h1 / 2, w1 / 2]));
        let (rh2, rh1) = match rh2 {
            Some((a, Some(b))) => (a, b),
            Some((a, None)) => (a, zeros1(&mut cx)?),
            None => (zeros2(&mut cx)?, zeros1(&mut cx)?),
        };
        let t = cx.tape.mul_scalar(r4, 2.0)?;
        let t = cx.tape.concat_channels(&[t, rh2])?;
        let r2 = cx.tape.idwt2(t, fixed_lo, fixed_hi)?;
        let t = cx.tape.mul_scalar(r2, 2.0)?;
        let t = cx.tape.concat_channels(&[t, rh1])?;
        let r1 = cx.tape.idwt2(t, fixed_lo, fixed_hi)?;

        let o4 = cx.tape.add(i4, r4)?;
        let o2 = cx.tape.add(i2, r2)?;
        let o1 = cx.tape.add(i1, r1)?;
        cx.record("o4", o4);
        cx.record("o2", o2);
        cx.record("o1", o1);
        Ok(ForwardGraph {
            o1,
            o2,
            o4,
            params: cx.vars,
        })
    }
}

struct Ctx<'a> {
    tape: &'a mut Tape,
    model: &'a Model,
    vars: Vec<Option<Var>>,
    trace: Option<&'a mut Vec<(String, Tensor)>>,
}

impl Ctx<'_> {
    fn p(&mut self, name: &str) -> Result<Var> {
        let i = *self
            .model
            .index
            .get(name)
            .ok_or_else(|| Error::Architecture(format!("missing parameter {}", name)))?;
        if let Some(v) = self.vars[i] {
            return Ok(v);
        }
        let v = self.tape.param(&self.model.params[i])?;
        self.vars[i] = Some(v);
        Ok(v)
    }

    fn record(&mut self, name: &str, v: Var) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.push((name.to_string(), self.tape.value(v).clone()));
        }
    }

    fn conv3(&mut self, name: &str, x: Var) -> Result<Var> {
        let (w, b) = (self.p(&format!("{}.w", name))?, self.p(&format!("{}.b", name))?);
        let y = self.tape.conv3x3(x, w, b)?;
        self.record(name, y);
        Ok(y)
    }

    fn pointwise(&mut self, name: &str, x: Var) -> Result<Var> {
        let (w, b) = (self.p(&format!("{}.w", name))?, self.p(&format!("{}.b", name))?);
        let y = self.tape.conv_pointwise(x, w, b)?;
        self.record(name, y);
        Ok(y)
    }

    fn wavelet_down(&mut self, name: &str, x: Var) -> Result<Var> {
        let (lo, hi) = (self.p(&format!("{}.lo", name))?, self.p(&format!("{}.hi", name))?);
        let y = self.tape.dwt2(x, lo, hi)?;
        self.record(name, y);
        Ok(y)
    }

    fn wavelet_up(&mut self, name: &str, x: Var) -> Result<Var> {
        let (lo, hi) = (self.p(&format!("{}.lo", name))?, self.p(&format!("{}.hi", name))?);
        let y = self.tape.idwt2(x, lo, hi)?;
        self.record(name, y);
        Ok(y)
    }

    fn blocks(&mut self, stack: &str, n: usize, mut f: Var, window: crate::fourier::Window) -> Result<Var> {
        for i in 0..n {
            let pre = format!("{}.{}.", stack, i);
            let mut v = Vec::with_capacity(12);
            for (suffix, _) in block_params(0) {
                v.push(self.p(&format!("{}{}", pre, suffix))?);
            }
            let bv = BlockVars {
                mix_w_in: v[0],
                mix_b_in: v[1],
                mix_w_freq: v[2],
                mix_b_freq: v[3],
                mix_w_out: v[4],
                mix_b_out: v[5],
                ffn_w_in: v[6],
                ffn_b_in: v[7],
                ffn_w_dw: v[8],
                ffn_b_dw: v[9],
                ffn_w_out: v[10],
                ffn_b_out: v[11],
            };
            f = pwfnet_block(self.tape, f, &bv, window, Activation::Gelu)?;
            self.record(&format!("{}.{}", stack, i), f);
        }
        Ok(f)
    }
}

/// Tape handles of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardGraph {
    pub o1: Var,
    pub o2: Var,
    pub o4: Var,
    /// Tape handle of each model parameter the pass referenced.
    pub params: Vec<Option<Var>>,
}

impl ForwardGraph {
    pub fn outputs(&self, tape: &Tape) -> MultiOutput {
        MultiOutput {
            o1: tape.value(self.o1).clone(),
            o2: tape.value(self.o2).clone(),
            o4: tape.value(self.o4).clone(),
        }
    }
}

/// Restored images at full, half and quarter resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiOutput {
    pub o1: Image,
    pub o2: Image,
    pub o4: Image,
}

/// Wavelet-derived network inputs. `i2`, `i4` are half the LL bands (so
/// they stay in image range); `highs1`, `highs2` stack LH, HL, HH of the
/// analysis of `i1` and `i2`, so `i1 = idwt2(2·i2, highs1)` and likewise one
/// scale down.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiInput {
    pub i1: Image,
    pub i2: Image,
    pub i4: Image,
    pub highs1: Tensor,
    pub highs2: Tensor,
}

pub fn multi_input(x: &Image, fam: &WaveletFamily, io_channels: usize) -> Result<MultiInput> {
    let (c, h, w) = x.dims3()?;
    if c != io_channels {
        return Err(Error::shape(format!("expected {} channels, got {}", io_channels, c)));
    }
    if h % 4 != 0 || w % 4 != 0 || h == 0 || w == 0 {
        return Err(Error::shape(format!("{}x{} is not divisible by 4", h, w)));
    }
    let (lo, hi) = fam.analysis_taps();
    let split = |img: &Tensor| -> Result<(Tensor, Tensor)> {
        let s = analyze2(img, &lo, &hi)?;
        Ok((s.slice_channels(0, c)?.scale(0.5), s.slice_channels(c, 3 * c)?))
    };
    let (i2, highs1) = split(x)?;
    let (i4, highs2) = split(&i2)?;
    Ok(MultiInput {
        i1: x.clone(),
        i2,
        i4,
        highs1,
        highs2,
    })
}

/// Inverse of one [`multi_input`] level: `idwt2(2·coarse, highs)`.
pub fn merge_level(coarse: &Tensor, highs: &Tensor, fam: &WaveletFamily) -> Result<Tensor> {
    let (lo, hi) = fam.synthesis_taps();
    synthesize2(&Tensor::concat_channels(&[&coarse.scale(2.0), highs])?, &lo, &hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::FamilyTag;

    fn tiny() -> ModelConfig {
        ModelConfig {
            base_channels: 4,
            blocks_per_level: [1, 1, 1],
            ..Default::default()
        }
    }

    #[test]
    fn builds_are_deterministic() {
        let a = Model::build(&tiny()).unwrap();
        let b = Model::build(&tiny()).unwrap();
        assert_eq!(a, b);
        let c = Model::build(&ModelConfig { seed: 1, ..tiny() }).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn parameters_sit_on_the_f32_grid() {
        let m = Model::build(&tiny()).unwrap();
        for p in &m.params {
            assert!(p.value.data().iter().all(|&v| to_f32_grid(v) == v), "{}", p.name);
        }
    }

    #[test]
    fn multi_input_of_constant() {
        let x = Tensor::full(&[3, 16, 16], 0.5);
        let mi = multi_input(&x, &filter_bank(FamilyTag::Db2), 3).unwrap();
        assert!(mi.i2.data().iter().all(|&v| (v - 0.5).abs() < 1e-12));
        assert!(mi.i4.data().iter().all(|&v| (v - 0.5).abs() < 1e-12));
        assert!(mi.highs1.max_abs() < 1e-12 && mi.highs2.max_abs() < 1e-12);
        assert_eq!(mi.i4.shape(), &[3, 4, 4]);
        assert_eq!(mi.highs2.shape(), &[9, 4, 4]);
    }

    #[test]
    fn indivisible_sizes_are_rejected() {
        let m = Model::build(&tiny()).unwrap();
        assert!(m.forward(&Tensor::zeros(&[3, 18, 16]), Variant::L).is_err());
        assert!(m.forward(&Tensor::zeros(&[1, 16, 16]), Variant::L).is_err());
    }
}
