//! Parameter and multiply-accumulate accounting per variant.

use super::{Model, Variant};
use crate::error::{Error, Result};
use crate::fourier::FreqLayout;

/// Scalars in the parameters `variant` uses.
pub fn param_count(m: &Model, variant: Variant) -> usize {
    m.params
        .iter()
        .enumerate()
        .filter(|(i, _)| m.uses(*i, variant))
        .map(|(_, p)| p.numel())
        .sum()
}

/// Real multiply-accumulates of an `n`-point FFT.
pub fn fft_macs(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    2.5 * n as f64 * (n as f64).log2()
}

struct Counter<'a> {
    m: &'a Model,
    taps: f64,
    total: f64,
}

impl Counter<'_> {
    fn conv3(&mut self, cin: usize, cout: usize, plane: usize) {
        self.total += (cin * cout * 9 * plane) as f64;
    }

    fn pointwise(&mut self, cin: usize, cout: usize, plane: usize) {
        self.total += (cin * cout * plane) as f64;
    }

    /// Analysis of a `[c, h, w]` field, or synthesis producing one.
    fn wavelet(&mut self, c: usize, h: usize, w: usize) {
        self.total += 2.0 * (c * h * w) as f64 * self.taps;
    }

    fn block(&mut self, k: usize, h: usize, w: usize) -> Result<()> {
        let plane = h * w;
        let l = FreqLayout::new(h, w, self.m.cfg.mixer_kernel.window())?;
        let (fh, fw) = l.freq_shape();
        let fft = 2.0 * (2 * k * l.tiles()) as f64 * fft_macs(l.kh * l.kw);
        self.pointwise(k, 2 * k, plane);
        self.total += fft;
        self.pointwise(4 * k, 4 * k, fh * fw);
        self.pointwise(2 * k, k, plane);
        self.pointwise(k, 2 * k, plane);
        self.total += (9 * 2 * k * plane) as f64;
        self.pointwise(2 * k, k, plane);
        Ok(())
    }

    fn stack(&mut self, n: usize, k: usize, h: usize, w: usize) -> Result<()> {
        for _ in 0..n {
            self.block(k, h, w)?;
        }
        Ok(())
    }
}

/// Multiply-accumulates of one forward pass on an `h×w` input. Counts every
/// convolution, wavelet analysis/synthesis (two passes of `taps` MACs per
/// sample) and charges `2.5·n·log2(n)` per `n`-point FFT; elementwise ops
/// are free.
pub fn flops_estimate(m: &Model, h: usize, w: usize, variant: Variant) -> Result<f64> {
    if h % 4 != 0 || w % 4 != 0 || h == 0 || w == 0 {
        return Err(Error::shape(format!("{}x{} is not divisible by 4", h, w)));
    }
    let cfg = &m.cfg;
    let (c, io, n) = (cfg.base_channels, cfg.io_channels, cfg.blocks_per_level);
    let mut k = Counter {
        m,
        taps: m.family().len() as f64,
        total: 0.0,
    };
    let (p1, p2, p4) = (h * w, h * w / 4, h * w / 16);
    let (h2, w2, h4, w4) = (h / 2, w / 2, h / 4, w / 4);

    k.wavelet(io, h, w);
    k.wavelet(io, h2, w2);
    k.conv3(io, c, p1);
    k.stack(n[0], c, h, w)?;
    k.wavelet(c, h, w);
    k.conv3(4 * io, 2 * c, p2);
    k.pointwise(6 * c, 2 * c, p2);
    k.stack(n[1], 2 * c, h2, w2)?;
    k.wavelet(2 * c, h2, w2);
    k.conv3(4 * io, 4 * c, p4);
    k.pointwise(12 * c, 4 * c, p4);
    k.stack(n[2], 4 * c, h4, w4)?;
    k.conv3(4 * c, io, p4);
    if variant >= Variant::M {
        k.wavelet(c, h2, w2);
        k.pointwise(3 * c, 2 * c, p2);
        k.stack(n[1], 2 * c, h2, w2)?;
        k.conv3(2 * c, io, p2);
        k.wavelet(io, h2, w2);
    }
    if variant == Variant::L {
        k.wavelet(c / 2, h, w);
        k.pointwise(c / 2 + c, c, p1);
        k.stack(n[0], c, h, w)?;
        k.conv3(c, io, p1);
        k.wavelet(io, h, w);
    }
    // residual chain back to full resolution
    k.wavelet(io, h2, w2);
    k.wavelet(io, h, w);
    Ok(k.total)
}
