//! Orthonormal 2-D FFT of real fields, windowed (tiled) variant and radial
//! frequency masks.
//!
//! Spectra of real `H×W` fields are stored on the half plane
//! `H × (W/2 + 1)`; the missing half is implied by conjugate symmetry.
//! All transforms use unitary scaling `1/sqrt(H·W)`.
//!
//! Two representations exist. [`Spectrum`] is the complex, per-channel value
//! used by analysis code. The `*_tensor` functions pack a `[C,H,W]` field into
//! a real `[2C, Hs, Ws]` tensor (real parts in the first `C` channels,
//! imaginary parts in the last `C`), which is what the network mixes with
//! real-valued pointwise convolutions.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Imaginary residue tolerated by [`ifft2`] before reporting a Hermitian
/// violation (relative to `max(1, peak bin modulus)`).
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

#[inline]
pub fn half_width(w: usize) -> usize {
    w / 2 + 1
}

/// Multiplicity of half-plane column `v` in the full plane: 1 for the DC
/// column and (for even `w`) the Nyquist column, 2 otherwise.
#[inline]
pub fn column_multiplicity(v: usize, w: usize) -> f64 {
    if v == 0 || (w % 2 == 0 && v == w / 2) {
        1.0
    } else {
        2.0
    }
}

/// Unitary FFT of one real `h×w` plane into the half plane, written to
/// `re`/`im` (row-major `h × (w/2+1)`).
pub fn rfft2_plane(x: &[f64], h: usize, w: usize, re: &mut [f64], im: &mut [f64]) {
    let wh = half_width(w);
    debug_assert_eq!(x.len(), h * w);
    debug_assert_eq!(re.len(), h * wh);

    let mut rows: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(w, false).process(&mut rows);

    // transpose the kept half into column-major so columns are contiguous
    let mut cols = vec![Complex64::new(0.0, 0.0); wh * h];
    for u in 0..h {
        for v in 0..wh {
            cols[v * h + u] = rows[u * w + v];
        }
    }
    plan(h, false).process(&mut cols);

    let scale = 1.0 / ((h * w) as f64).sqrt();
    for v in 0..wh {
        for u in 0..h {
            let c = cols[v * h + u];
            re[u * wh + v] = c.re * scale;
            im[u * wh + v] = c.im * scale;
        }
    }
}

/// Inverse of [`rfft2_plane`] with real-output projection.
///
/// The half plane is read as the Hermitian extension it implies; any
/// imaginary content in the self-conjugate columns (DC and, for even `w`,
/// Nyquist) that is not conjugate-symmetric along the height axis is
/// discarded. Equivalently
/// `y[n,m] = Σ_{u,v} c_v · Re(S[u,v] · e^{2πi(un/h + vm/w)}) / sqrt(hw)`
/// with `c_v` from [`column_multiplicity`].
pub fn irfft2_plane(re: &[f64], im: &[f64], h: usize, w: usize, out: &mut [f64]) {
    let wh = half_width(w);
    debug_assert_eq!(re.len(), h * wh);
    debug_assert_eq!(out.len(), h * w);

    let mut cols = vec![Complex64::new(0.0, 0.0); wh * h];
    for u in 0..h {
        for v in 0..wh {
            cols[v * h + u] = Complex64::new(re[u * wh + v], im[u * wh + v]);
        }
    }
    plan(h, true).process(&mut cols);

    let mut rows = vec![Complex64::new(0.0, 0.0); h * w];
    for n in 0..h {
        let row = &mut rows[n * w..(n + 1) * w];
        for v in 0..wh {
            row[v] = cols[v * h + n];
        }
        // Hermitian completion; DC and Nyquist keep only their real part
        row[0] = Complex64::new(row[0].re, 0.0);
        if w % 2 == 0 && w > 1 {
            row[w / 2] = Complex64::new(row[w / 2].re, 0.0);
        }
        for v in 1..wh {
            if w - v != v && w - v < w {
                row[w - v] = row[v].conj();
            }
        }
    }
    plan(w, true).process(&mut rows);

    let scale = 1.0 / ((h * w) as f64).sqrt();
    for (o, c) in out.iter_mut().zip(&rows) {
        *o = c.re * scale;
    }
}

/// Complex half-plane spectrum of one real channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, bins: Vec<Complex64>) -> Result<Self> {
        if bins.len() != height * half_width(width) {
            return Err(Error::shape(format!(
                "spectrum of {}x{} needs {} half-plane bins, got {}",
                height,
                width,
                height * half_width(width),
                bins.len()
            )));
        }
        Ok(Spectrum {
            height,
            width,
            bins,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn half_width(&self) -> usize {
        half_width(self.width)
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn bin(&self, u: usize, v: usize) -> Complex64 {
        self.bins[u * self.half_width() + v]
    }

    /// Value of the implied full-plane spectrum at `(u, v)`, `v < width`.
    pub fn full_bin(&self, u: usize, v: usize) -> Complex64 {
        let wh = self.half_width();
        if v < wh {
            self.bin(u, v)
        } else {
            let uu = (self.height - u) % self.height;
            self.bin(uu, self.width - v).conj()
        }
    }

    /// `Σ |X|²` over the implied full plane.
    pub fn energy(&self) -> f64 {
        let wh = self.half_width();
        self.bins
            .iter()
            .enumerate()
            .map(|(i, b)| column_multiplicity(i % wh, self.width) * b.norm_sqr())
            .sum()
    }

    /// Full-plane inner product `Σ X · conj(Y)`.
    pub fn inner(&self, other: &Spectrum) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for u in 0..self.height {
            for v in 0..self.width {
                acc += self.full_bin(u, v) * other.full_bin(u, v).conj();
            }
        }
        acc
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.bins.iter().map(|c| c.re).collect(),
            self.bins.iter().map(|c| c.im).collect(),
        )
    }

    /// Largest imaginary part the inverse would have to discard.
    pub fn hermitian_residue(&self) -> f64 {
        let wh = self.half_width();
        let mut cols = vec![0];
        if self.width % 2 == 0 && self.width > 1 {
            cols.push(self.width / 2);
        }
        let mut worst: f64 = 0.0;
        for &v in &cols {
            for u in 0..self.height {
                let a = self.bins[u * wh + v];
                let b = self.bins[((self.height - u) % self.height) * wh + v];
                worst = worst.max(((a - b.conj()) * 0.5).norm());
            }
        }
        worst
    }
}

pub fn fft2_plane(x: &[f64], h: usize, w: usize) -> Spectrum {
    let wh = half_width(w);
    let mut re = vec![0.0; h * wh];
    let mut im = vec![0.0; h * wh];
    rfft2_plane(x, h, w, &mut re, &mut im);
    Spectrum {
        height: h,
        width: w,
        bins: re
            .into_iter()
            .zip(im)
            .map(|(r, i)| Complex64::new(r, i))
            .collect(),
    }
}

/// Errors if the spectrum is not Hermitian-completable within
/// [`HERMITIAN_TOLERANCE`].
pub fn ifft2_plane(s: &Spectrum) -> Result<Vec<f64>> {
    let peak = s.bins.iter().fold(1.0f64, |m, b| m.max(b.norm()));
    let tolerance = HERMITIAN_TOLERANCE * peak;
    let residue = s.hermitian_residue();
    if residue > tolerance {
        return Err(Error::Hermitian { residue, tolerance });
    }
    let (re, im) = s.split();
    let mut out = vec![0.0; s.height * s.width];
    irfft2_plane(&re, &im, s.height, s.width, &mut out);
    Ok(out)
}

/// Per-channel unitary FFT of a `[C,H,W]` tensor.
pub fn fft2(x: &Tensor) -> Result<Vec<Spectrum>> {
    let (c, h, w) = x.dims3()?;
    if h == 0 || w == 0 {
        return Err(Error::shape("fft2 needs H, W >= 1"));
    }
    Ok((0..c).map(|ci| fft2_plane(x.channel(ci), h, w)).collect())
}

/// Inverse of [`fft2`]; `out_shape` is `(H, W)`.
pub fn ifft2(spectra: &[Spectrum], out_shape: (usize, usize)) -> Result<Tensor> {
    let (h, w) = out_shape;
    let mut data = Vec::with_capacity(spectra.len() * h * w);
    for s in spectra {
        if (s.height, s.width) != (h, w) {
            return Err(Error::shape(format!(
                "spectrum {}x{} inconsistent with output {}x{}",
                s.height, s.width, h, w
            )));
        }
        data.extend(ifft2_plane(s)?);
    }
    Tensor::new(&[spectra.len(), h, w], data)
}

/// Tiling used by the windowed transform. `Global` is the single-tile case.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Global,
    Tiles(usize),
}

/// Geometry of a (possibly tiled) transform over an `h×w` field.
///
/// Tile extents are `min(k, h) × min(k, w)`; the field is reflect-padded up to
/// whole tiles. Tiles are laid out in a `ny × nx` grid, each occupying
/// `kh × (kw/2+1)` bins of the packed frequency plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FreqLayout {
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub ny: usize,
    pub nx: usize,
}

impl FreqLayout {
    pub fn new(h: usize, w: usize, window: Window) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::shape("transform needs H, W >= 1"));
        }
        let (kh, kw) = match window {
            Window::Global => (h, w),
            Window::Tiles(0) => return Err(Error::invalid("window size must be positive")),
            Window::Tiles(k) => (k.min(h), k.min(w)),
        };
        Ok(FreqLayout {
            h,
            w,
            kh,
            kw,
            ny: h.div_ceil(kh),
            nx: w.div_ceil(kw),
        })
    }

    pub fn padded(&self) -> (usize, usize) {
        (self.ny * self.kh, self.nx * self.kw)
    }

    /// Extent of the packed half-plane for one channel.
    pub fn freq_shape(&self) -> (usize, usize) {
        (self.ny * self.kh, self.nx * half_width(self.kw))
    }

    pub fn is_padded(&self) -> bool {
        self.padded() != (self.h, self.w)
    }

    pub fn tiles(&self) -> usize {
        self.ny * self.nx
    }
}

#[inline]
fn reflect(p: usize, n: usize) -> usize {
    if p < n {
        p
    } else {
        2 * (n - 1) - p
    }
}

fn pad_plane(x: &[f64], l: &FreqLayout) -> Vec<f64> {
    let (ph, pw) = l.padded();
    let mut out = vec![0.0; ph * pw];
    for i in 0..ph {
        let si = reflect(i, l.h);
        for j in 0..pw {
            out[i * pw + j] = x[si * l.w + reflect(j, l.w)];
        }
    }
    out
}

fn pad_plane_adjoint(g: &[f64], l: &FreqLayout, out: &mut [f64]) {
    let (ph, pw) = l.padded();
    for i in 0..ph {
        let si = reflect(i, l.h);
        for j in 0..pw {
            out[si * l.w + reflect(j, l.w)] += g[i * pw + j];
        }
    }
}

fn for_each_tile(l: &FreqLayout, mut f: impl FnMut(usize, usize)) {
    for ty in 0..l.ny {
        for tx in 0..l.nx {
            f(ty, tx);
        }
    }
}

/// Forward transform of one channel into packed half-plane `re`/`im`.
fn forward_channel(x: &[f64], l: &FreqLayout, re: &mut [f64], im: &mut [f64]) {
    let (kh, kw) = (l.kh, l.kw);
    let kwh = half_width(kw);
    let (_, fw) = l.freq_shape();
    if l.tiles() == 1 && !l.is_padded() {
        rfft2_plane(x, kh, kw, re, im);
        return;
    }
    let padded = pad_plane(x, l);
    let (_, pw) = l.padded();
    let mut tile = vec![0.0; kh * kw];
    let mut tre = vec![0.0; kh * kwh];
    let mut tim = vec![0.0; kh * kwh];
    for_each_tile(l, |ty, tx| {
        for i in 0..kh {
            let src = (ty * kh + i) * pw + tx * kw;
            tile[i * kw..(i + 1) * kw].copy_from_slice(&padded[src..src + kw]);
        }
        rfft2_plane(&tile, kh, kw, &mut tre, &mut tim);
        for u in 0..kh {
            let dst = (ty * kh + u) * fw + tx * kwh;
            re[dst..dst + kwh].copy_from_slice(&tre[u * kwh..(u + 1) * kwh]);
            im[dst..dst + kwh].copy_from_slice(&tim[u * kwh..(u + 1) * kwh]);
        }
    });
}

/// Inverse transform of one packed channel; `divide_multiplicity` scales
/// every bin by `1/c_v` first (used by the forward adjoint).
fn inverse_channel(re: &[f64], im: &[f64], l: &FreqLayout, out: &mut [f64], divide_multiplicity: bool) {
    let (kh, kw) = (l.kh, l.kw);
    let kwh = half_width(kw);
    let (_, fw) = l.freq_shape();
    let (ph, pw) = l.padded();
    let mut padded = vec![0.0; ph * pw];
    let mut tre = vec![0.0; kh * kwh];
    let mut tim = vec![0.0; kh * kwh];
    let mut tile = vec![0.0; kh * kw];
    for_each_tile(l, |ty, tx| {
        for u in 0..kh {
            let src = (ty * kh + u) * fw + tx * kwh;
            for v in 0..kwh {
                let s = if divide_multiplicity {
                    1.0 / column_multiplicity(v, kw)
                } else {
                    1.0
                };
                tre[u * kwh + v] = re[src + v] * s;
                tim[u * kwh + v] = im[src + v] * s;
            }
        }
        irfft2_plane(&tre, &tim, kh, kw, &mut tile);
        for i in 0..kh {
            let dst = (ty * kh + i) * pw + tx * kw;
            padded[dst..dst + kw].copy_from_slice(&tile[i * kw..(i + 1) * kw]);
        }
    });
    for i in 0..l.h {
        out[i * l.w..(i + 1) * l.w].copy_from_slice(&padded[i * pw..i * pw + l.w]);
    }
}

/// `[C,H,W]` → packed `[2C, Hs, Ws]` (real parts, then imaginary parts).
pub fn rfft2_tensor(x: &Tensor, window: Window) -> Result<(Tensor, FreqLayout)> {
    let (c, h, w) = x.dims3()?;
    let l = FreqLayout::new(h, w, window)?;
    let (fh, fw) = l.freq_shape();
    let plane = fh * fw;
    let mut out = Tensor::zeros(&[2 * c, fh, fw]);
    {
        let data = out.data_mut();
        let (re_all, im_all) = data.split_at_mut(c * plane);
        for ci in 0..c {
            forward_channel(
                x.channel(ci),
                &l,
                &mut re_all[ci * plane..(ci + 1) * plane],
                &mut im_all[ci * plane..(ci + 1) * plane],
            );
        }
    }
    Ok((out, l))
}

/// Packed `[2C, Hs, Ws]` → `[C,H,W]` with real-output projection.
pub fn irfft2_tensor(s: &Tensor, l: &FreqLayout) -> Result<Tensor> {
    inverse_tensor(s, l, false)
}

fn inverse_tensor(s: &Tensor, l: &FreqLayout, divide_multiplicity: bool) -> Result<Tensor> {
    let (c2, fh, fw) = s.dims3()?;
    if c2 % 2 != 0 || (fh, fw) != l.freq_shape() {
        return Err(Error::shape(format!(
            "packed spectrum {:?} inconsistent with layout {:?}",
            s.shape(),
            l
        )));
    }
    let c = c2 / 2;
    let plane = fh * fw;
    let mut out = Tensor::zeros(&[c, l.h, l.w]);
    for ci in 0..c {
        let re = &s.data()[ci * plane..(ci + 1) * plane];
        let im = &s.data()[(c + ci) * plane..(c + ci + 1) * plane];
        inverse_channel(re, im, l, out.channel_mut(ci), divide_multiplicity);
    }
    Ok(out)
}

/// Adjoint of [`rfft2_tensor`]: maps a cotangent on the packed spectrum back
/// to the spatial field.
pub fn rfft2_adjoint(g: &Tensor, l: &FreqLayout) -> Result<Tensor> {
    if !l.is_padded() {
        return inverse_tensor(g, l, true);
    }
    let (c2, _, _) = g.dims3()?;
    let c = c2 / 2;
    let (ph, pw) = l.padded();
    let inner = FreqLayout { h: ph, w: pw, ..*l };
    let padded = inverse_tensor(g, &inner, true)?;
    let mut out = Tensor::zeros(&[c, l.h, l.w]);
    for ci in 0..c {
        pad_plane_adjoint(padded.channel(ci), l, out.channel_mut(ci));
    }
    Ok(out)
}

/// Adjoint of [`irfft2_tensor`].
pub fn irfft2_adjoint(g: &Tensor, l: &FreqLayout) -> Result<Tensor> {
    let (c, h, w) = g.dims3()?;
    if (h, w) != (l.h, l.w) {
        return Err(Error::shape("cotangent inconsistent with layout"));
    }
    let (ph, pw) = l.padded();
    // adjoint of the crop: zero-extend to the padded extent
    let inner = FreqLayout { h: ph, w: pw, ..*l };
    let (fh, fw) = l.freq_shape();
    let plane = fh * fw;
    let mut out = Tensor::zeros(&[2 * c, fh, fw]);
    let mut ext = vec![0.0; ph * pw];
    let kwh = half_width(l.kw);
    for ci in 0..c {
        for i in 0..l.h {
            ext[i * pw..i * pw + l.w].copy_from_slice(&g.channel(ci)[i * l.w..(i + 1) * l.w]);
        }
        let data = out.data_mut();
        let (re_all, im_all) = data.split_at_mut(c * plane);
        let re = &mut re_all[ci * plane..(ci + 1) * plane];
        let im = &mut im_all[ci * plane..(ci + 1) * plane];
        forward_channel(&ext, &inner, re, im);
        for (idx, (r, m)) in re.iter_mut().zip(im.iter_mut()).enumerate() {
            let s = column_multiplicity((idx % fw) % kwh, l.kw);
            *r *= s;
            *m *= s;
        }
    }
    Ok(out)
}

/// Result of [`window_fft2`]: per channel, tiles in row-major grid order.
#[derive(Clone, Debug)]
pub struct WindowedSpectrum {
    pub layout: FreqLayout,
    pub channels: Vec<Vec<Spectrum>>,
}

/// Independent unitary FFT of each non-overlapping `k×k` tile. The field is
/// reflect-padded to whole tiles; tiles never exceed the field extent.
pub fn window_fft2(x: &Tensor, k: usize) -> Result<WindowedSpectrum> {
    let (c, h, w) = x.dims3()?;
    let l = FreqLayout::new(h, w, Window::Tiles(k))?;
    let padded_layout = l;
    let (_, pw) = l.padded();
    let mut channels = Vec::with_capacity(c);
    for ci in 0..c {
        let padded = pad_plane(x.channel(ci), &padded_layout);
        let mut tiles = Vec::with_capacity(l.tiles());
        let mut tile = vec![0.0; l.kh * l.kw];
        for_each_tile(&l, |ty, tx| {
            for i in 0..l.kh {
                let src = (ty * l.kh + i) * pw + tx * l.kw;
                tile[i * l.kw..(i + 1) * l.kw].copy_from_slice(&padded[src..src + l.kw]);
            }
            tiles.push(fft2_plane(&tile, l.kh, l.kw));
        });
        channels.push(tiles);
    }
    Ok(WindowedSpectrum {
        layout: l,
        channels,
    })
}

/// Reassembles the tiles and crops the reflect padding.
pub fn window_ifft2(ws: &WindowedSpectrum) -> Result<Tensor> {
    let l = ws.layout;
    let (ph, pw) = l.padded();
    let mut out = Tensor::zeros(&[ws.channels.len(), l.h, l.w]);
    for (ci, tiles) in ws.channels.iter().enumerate() {
        if tiles.len() != l.tiles() {
            return Err(Error::shape("tile count inconsistent with layout"));
        }
        let mut padded = vec![0.0; ph * pw];
        for (t, s) in tiles.iter().enumerate() {
            let (ty, tx) = (t / l.nx, t % l.nx);
            let tile = ifft2_plane(s)?;
            for i in 0..l.kh {
                let dst = (ty * l.kh + i) * pw + tx * l.kw;
                padded[dst..dst + l.kw].copy_from_slice(&tile[i * l.kw..(i + 1) * l.kw]);
            }
        }
        let dst = out.channel_mut(ci);
        for i in 0..l.h {
            dst[i * l.w..(i + 1) * l.w].copy_from_slice(&padded[i * pw..i * pw + l.w]);
        }
    }
    Ok(out)
}

/// High-frequency selector on the half plane.
///
/// A bin is selected when its folded radial frequency, normalized so the
/// corner bin `(H/2, W/2)` sits at 1, exceeds `cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialMask {
    height: usize,
    width: usize,
    cutoff: f64,
    bits: Vec<bool>,
}

impl RadialMask {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn is_high(&self, u: usize, v: usize) -> bool {
        self.bits[u * half_width(self.width) + v]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True if every bin selected here is also selected by `other`.
    pub fn is_subset_of(&self, other: &RadialMask) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Normalized radial frequency of half-plane bin `(u, v)`, in `[0, 1]`.
pub fn radial_frequency(u: usize, v: usize, h: usize, w: usize) -> f64 {
    let fu = u.min(h - u) as f64 / h as f64;
    let fv = v.min(w - v) as f64 / w as f64;
    // corner radius is sqrt(0.5); scale so it maps to 1
    (2.0 * (fu * fu + fv * fv)).sqrt()
}

pub fn radial_mask(h: usize, w: usize, cutoff: f64) -> Result<RadialMask> {
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(Error::invalid(format!("cutoff {} outside [0,1]", cutoff)));
    }
    if h == 0 || w == 0 {
        return Err(Error::shape("mask needs H, W >= 1"));
    }
    let wh = half_width(w);
    let mut bits = Vec::with_capacity(h * wh);
    for u in 0..h {
        for v in 0..wh {
            bits.push(radial_frequency(u, v, h, w) > cutoff);
        }
    }
    Ok(RadialMask {
        height: h,
        width: w,
        cutoff,
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &[f64], h: usize, w: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); h * w];
        let s = 1.0 / ((h * w) as f64).sqrt();
        for u in 0..h {
            for v in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..h {
                    for m in 0..w {
                        let th = -2.0 * std::f64::consts::PI
                            * ((u * n) as f64 / h as f64 + (v * m) as f64 / w as f64);
                        acc += Complex64::from_polar(x[n * w + m], th);
                    }
                }
                out[u * w + v] = acc * s;
            }
        }
        out
    }

    #[test]
    fn constant_image_has_only_dc() {
        let (h, w) = (6, 10);
        let c = 0.37;
        let s = fft2_plane(&vec![c; h * w], h, w);
        let expect = c * ((h * w) as f64).sqrt();
        for u in 0..h {
            for v in 0..s.half_width() {
                let b = s.bin(u, v);
                if u == 0 && v == 0 {
                    assert!((b.re - expect).abs() < 1e-12 && b.im.abs() < 1e-12);
                } else {
                    assert!(b.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn impulse_has_flat_modulus() {
        let (h, w) = (5, 8);
        let mut x = vec![0.0; h * w];
        x[0] = 1.0;
        let s = fft2_plane(&x, h, w);
        let m = 1.0 / ((h * w) as f64).sqrt();
        assert!(s.bins().iter().all(|b| (b.norm() - m).abs() < 1e-14));
    }

    #[test]
    fn matches_naive_dft_on_odd_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(h, w) in &[(7, 5), (9, 12), (1, 6), (6, 1)] {
            let x = Tensor::random_uniform(&[h * w], -1.0, 1.0, &mut rng);
            let s = fft2_plane(x.data(), h, w);
            let full = naive_dft(x.data(), h, w);
            for u in 0..h {
                for v in 0..w {
                    assert!((s.full_bin(u, v) - full[u * w + v]).norm() < 1e-12, "{}x{}", h, w);
                }
            }
        }
    }

    #[test]
    fn dc_only_spectrum_inverts_to_constant() {
        let (h, w) = (4, 6);
        let mut bins = vec![Complex64::new(0.0, 0.0); h * half_width(w)];
        bins[0] = Complex64::new(2.5 * ((h * w) as f64).sqrt(), 0.0);
        let s = Spectrum::new(h, w, bins).unwrap();
        let x = ifft2_plane(&s).unwrap();
        assert!(x.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn non_hermitian_dc_column_is_rejected() {
        let (h, w) = (4, 4);
        let mut bins = vec![Complex64::new(0.0, 0.0); h * half_width(w)];
        bins[0] = Complex64::new(0.0, 1.0);
        let s = Spectrum::new(h, w, bins).unwrap();
        assert!(matches!(ifft2_plane(&s), Err(Error::Hermitian { .. })));
    }

    #[test]
    fn window_round_trip_with_padding() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Tensor::random_uniform(&[2, 10, 10], 0.0, 1.0, &mut rng);
        let ws = window_fft2(&x, 8).unwrap();
        assert_eq!(ws.layout.padded(), (16, 16));
        let y = window_ifft2(&ws).unwrap();
        assert!(y.max_abs_diff(&x).unwrap() < 1e-10);
    }

    #[test]
    fn window_larger_than_field_degenerates_to_global() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Tensor::random_uniform(&[1, 8, 8], 0.0, 1.0, &mut rng);
        let (a, _) = rfft2_tensor(&x, Window::Global).unwrap();
        let (b, _) = rfft2_tensor(&x, Window::Tiles(64)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_window_is_rejected() {
        let x = Tensor::zeros(&[1, 4, 4]);
        assert!(window_fft2(&x, 0).is_err());
    }

    #[test]
    fn mask_extremes() {
        let m0 = radial_mask(8, 8, 0.0).unwrap();
        assert_eq!(m0.count(), 8 * 5 - 1);
        assert!(!m0.is_high(0, 0));
        assert_eq!(radial_mask(8, 8, 1.0).unwrap().count(), 0);
        assert!(radial_mask(8, 8, 1.5).is_err());
        assert!(radial_mask(8, 8, -0.1).is_err());
    }

    #[test]
    fn mask_half_cutoff_matches_hand_enumeration() {
        // r > 0.5 of the corner radius  <=>  a² + b² > 8 with a = min(u, 8-u), b = v
        let m = radial_mask(8, 8, 0.5).unwrap();
        let expected: &[(usize, usize)] = &[
            (0, 3), (0, 4),
            (1, 3), (1, 4),
            (2, 3), (2, 4),
            (3, 0), (3, 1), (3, 2), (3, 3), (3, 4),
            (4, 0), (4, 1), (4, 2), (4, 3), (4, 4),
            (5, 0), (5, 1), (5, 2), (5, 3), (5, 4),
            (6, 3), (6, 4),
            (7, 3), (7, 4),
        ];
        let mut got = Vec::new();
        for u in 0..8 {
            for v in 0..5 {
                if m.is_high(u, v) {
                    got.push((u, v));
                }
            }
        }
        assert_eq!(got, expected);
    }
}
