//! Separable 2-D discrete wavelet transform with periodic extension.
//!
//! Filters are stored in the usual convention: the analysis (decomposition)
//! filters are applied as convolutions, the synthesis (reconstruction)
//! filters as their transposes. Internally everything is expressed through
//! "taps": an analysis step computes `a[k] = Σ_j c[j] · x[(2k + j) mod N]`
//! with `c` the reversed decomposition filter, and a synthesis step scatters
//! `x[(2k + j) mod N] += r[j] · a[k]` with `r` the reconstruction filter.
//! The two are adjoint to each other for equal taps, which is what the
//! trainable layers rely on for their gradients.
//!
//! Band naming: the first letter is the filter along the width axis, the
//! second along the height axis. `HL` is high-pass across columns and
//! low-pass down rows, so near-vertical structures such as rain streaks land
//! there.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    #[serde(rename = "haar")]
    Haar,
    #[serde(rename = "db2")]
    Db2,
    #[serde(rename = "sym4")]
    Sym4,
    #[serde(rename = "coif1")]
    Coif1,
    #[serde(rename = "bior2.2")]
    Bior22,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 5] = [
        FamilyTag::Haar,
        FamilyTag::Db2,
        FamilyTag::Sym4,
        FamilyTag::Coif1,
        FamilyTag::Bior22,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Haar => "haar",
            FamilyTag::Db2 => "db2",
            FamilyTag::Sym4 => "sym4",
            FamilyTag::Coif1 => "coif1",
            FamilyTag::Bior22 => "bior2.2",
        }
    }

    pub fn is_orthogonal(self) -> bool {
        !matches!(self, FamilyTag::Bior22)
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(FamilyTag::Haar),
            "db2" | "daubechies" => Ok(FamilyTag::Db2),
            "sym4" | "symlets" => Ok(FamilyTag::Sym4),
            "coif1" | "coiflets" => Ok(FamilyTag::Coif1),
            "bior2.2" | "bior22" | "biorthogonal" => Ok(FamilyTag::Bior22),
            _ => Err(Error::Unknown {
                kind: "wavelet family",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFamily {
    pub tag: FamilyTag,
    pub analysis_lo: Vec<f64>,
    pub analysis_hi: Vec<f64>,
    pub synthesis_lo: Vec<f64>,
    pub synthesis_hi: Vec<f64>,
}

// reconstruction lowpass (scaling) filters of the orthogonal members
const SYM4_REC_LO: [f64; 8] = [
    0.032_223_100_604_052_116,
    -0.012_603_967_262_032_107,
    -0.099_219_543_576_632_561,
    0.297_857_795_605_308_58,
    0.803_738_751_805_132_40,
    0.497_618_667_632_772_96,
    -0.029_635_527_646_003_882,
    -0.075_765_714_789_502_465,
];

fn orthogonal(tag: FamilyTag, rec_lo: Vec<f64>) -> WaveletFamily {
    let n = rec_lo.len();
    let rec_hi: Vec<f64> = (0..n)
        .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * rec_lo[n - 1 - j])
        .collect();
    WaveletFamily {
        tag,
        analysis_lo: rec_lo.iter().rev().copied().collect(),
        analysis_hi: rec_hi.iter().rev().copied().collect(),
        synthesis_lo: rec_lo,
        synthesis_hi: rec_hi,
    }
}

/// Compiled-in coefficient sets for the supported families.
pub fn filter_bank(tag: FamilyTag) -> WaveletFamily {
    let s2 = std::f64::consts::SQRT_2;
    match tag {
        FamilyTag::Haar => orthogonal(tag, vec![std::f64::consts::FRAC_1_SQRT_2; 2]),
        FamilyTag::Db2 => {
            let r3 = 3f64.sqrt();
            let d = 4.0 * s2;
            orthogonal(
                tag,
                vec![(1.0 + r3) / d, (3.0 + r3) / d, (3.0 - r3) / d, (1.0 - r3) / d],
            )
        }
        FamilyTag::Sym4 => orthogonal(tag, SYM4_REC_LO.to_vec()),
        FamilyTag::Coif1 => {
            let r7 = 7f64.sqrt();
            let k = s2 / 32.0;
            // closed form of the reconstruction low-pass
            let rec = [
                1.0 - r7,
                5.0 + r7,
                14.0 + 2.0 * r7,
                14.0 - 2.0 * r7,
                1.0 - r7,
                -3.0 + r7,
            ];
            orthogonal(tag, rec.iter().map(|c| c * k).collect())
        }
        FamilyTag::Bior22 => {
            let a = s2 / 8.0;
            let b = s2 / 4.0;
            let c = 3.0 * s2 / 4.0;
            let d = s2 / 2.0;
            WaveletFamily {
                tag,
                analysis_lo: vec![0.0, -a, b, c, b, -a],
                analysis_hi: vec![0.0, b, -d, b, 0.0, 0.0],
                synthesis_lo: vec![0.0, b, d, b, 0.0, 0.0],
                synthesis_hi: vec![0.0, a, b, -c, b, a],
            }
        }
    }
}

impl WaveletFamily {
    pub fn len(&self) -> usize {
        self.analysis_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.analysis_lo.is_empty()
    }

    /// Correlation taps of the analysis step (reversed decomposition filters).
    pub fn analysis_taps(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.analysis_lo.iter().rev().copied().collect(),
            self.analysis_hi.iter().rev().copied().collect(),
        )
    }

    /// Scatter taps of the synthesis step.
    pub fn synthesis_taps(&self) -> (Vec<f64>, Vec<f64>) {
        (self.synthesis_lo.clone(), self.synthesis_hi.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Height,
    Width,
}

struct Lines {
    n: usize,
    count: usize,
    stride: usize,
}

/// Offset of the first element of line `idx` along `axis`, for a tensor of
/// width `w` whose extent along `axis` is `n_axis`.
fn line_base(axis: Axis, idx: usize, w: usize, n_axis: usize) -> usize {
    match axis {
        Axis::Width => idx * n_axis,
        Axis::Height => (idx / w) * n_axis * w + idx % w,
    }
}

fn lines(x: &Tensor, axis: Axis) -> Result<(usize, usize, usize, Lines)> {
    let (c, h, w) = x.dims3()?;
    Ok(match axis {
        Axis::Width => (c, h, w, Lines { n: w, count: c * h, stride: 1 }),
        Axis::Height => (c, h, w, Lines { n: h, count: c * w, stride: w }),
    })
}

/// One analysis step along `axis`; returns `(low, high)` halves.
pub fn analyze_axis(x: &Tensor, axis: Axis, lo: &[f64], hi: &[f64]) -> Result<(Tensor, Tensor)> {
    let (c, h, w, ln) = lines(x, axis)?;
    if ln.n % 2 != 0 {
        return Err(Error::shape(format!("odd extent {} along {:?}", ln.n, axis)));
    }
    let half = ln.n / 2;
    let out_shape = match axis {
        Axis::Width => [c, h, half],
        Axis::Height => [c, half, w],
    };
    let mut a = Tensor::zeros(&out_shape);
    let mut d = Tensor::zeros(&out_shape);
    let xs = x.data();
    for line in 0..ln.count {
        let bi = line_base(axis, line, w, ln.n);
        let bo = line_base(axis, line, w, half);
        for k in 0..half {
            let (mut al, mut ah) = (0.0, 0.0);
            for (j, (&cl, &chh)) in lo.iter().zip(hi).enumerate() {
                let v = xs[bi + ((2 * k + j) % ln.n) * ln.stride];
                al += cl * v;
                ah += chh * v;
            }
            a.data_mut()[bo + k * ln.stride] = al;
            d.data_mut()[bo + k * ln.stride] = ah;
        }
    }
    Ok((a, d))
}

/// One synthesis step along `axis` from `(low, high)` halves.
pub fn synthesize_axis(a: &Tensor, d: &Tensor, axis: Axis, lo: &[f64], hi: &[f64]) -> Result<Tensor> {
    a.check_same_shape(d)?;
    let (c, h, w, ln) = lines(a, axis)?;
    let half = ln.n;
    let n = 2 * half;
    let out_shape = match axis {
        Axis::Width => [c, h, n],
        Axis::Height => [c, n, w],
    };
    let mut x = Tensor::zeros(&out_shape);
    let (asd, dsd) = (a.data(), d.data());
    let xs = x.data_mut();
    for line in 0..ln.count {
        let bi = line_base(axis, line, w, half);
        let bo = line_base(axis, line, w, n);
        for k in 0..half {
            let av = asd[bi + k * ln.stride];
            let dv = dsd[bi + k * ln.stride];
            for (j, (&rl, &rh)) in lo.iter().zip(hi).enumerate() {
                xs[bo + ((2 * k + j) % n) * ln.stride] += rl * av + rh * dv;
            }
        }
    }
    Ok(x)
}

/// `t[j] = Σ_k band[k] · signal[(2k + j) mod N]` for the low and high band;
/// the tap gradient of both the analysis and the synthesis step.
pub fn tap_correlation(
    signal: &Tensor,
    low: &Tensor,
    high: &Tensor,
    axis: Axis,
    taps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, _, w, ln) = lines(signal, axis)?;
    let half = ln.n / 2;
    let mut tl = vec![0.0; taps];
    let mut th = vec![0.0; taps];
    let (s, bl, bh) = (signal.data(), low.data(), high.data());
    for line in 0..ln.count {
        let bi = line_base(axis, line, w, ln.n);
        let bo = line_base(axis, line, w, half);
        for k in 0..half {
            let (gl, gh) = (bl[bo + k * ln.stride], bh[bo + k * ln.stride]);
            for j in 0..taps {
                let v = s[bi + ((2 * k + j) % ln.n) * ln.stride];
                tl[j] += gl * v;
                th[j] += gh * v;
            }
        }
    }
    Ok((tl, th))
}

/// Width pass then height pass; output is `[4C, H/2, W/2]` stacked as
/// `LL, LH, HL, HH`. Both extents must be even.
pub fn analyze2(x: &Tensor, lo: &[f64], hi: &[f64]) -> Result<Tensor> {
    let (lw, hw) = analyze_axis(x, Axis::Width, lo, hi)?;
    let (ll, lh) = analyze_axis(&lw, Axis::Height, lo, hi)?;
    let (hl, hh) = analyze_axis(&hw, Axis::Height, lo, hi)?;
    Tensor::concat_channels(&[&ll, &lh, &hl, &hh])
}

/// Inverse layout of [`analyze2`]: `[4C, h, w]` → `[C, 2h, 2w]`.
pub fn synthesize2(bands: &Tensor, lo: &[f64], hi: &[f64]) -> Result<Tensor> {
    let (c4, _, _) = bands.dims3()?;
    if c4 % 4 != 0 {
        return Err(Error::shape(format!("{} channels is not four bands", c4)));
    }
    let c = c4 / 4;
    let ll = bands.slice_channels(0, c)?;
    let lh = bands.slice_channels(c, c)?;
    let hl = bands.slice_channels(2 * c, c)?;
    let hh = bands.slice_channels(3 * c, c)?;
    let lw = synthesize_axis(&ll, &lh, Axis::Height, lo, hi)?;
    let hw = synthesize_axis(&hl, &hh, Axis::Height, lo, hi)?;
    synthesize_axis(&lw, &hw, Axis::Width, lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    LL,
    LH,
    HL,
    HH,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::LL, Band::LH, Band::HL, Band::HH];

    pub fn name(self) -> &'static str {
        match self {
            Band::LL => "LL",
            Band::LH => "LH",
            Band::HL => "HL",
            Band::HH => "HH",
        }
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LL" => Ok(Band::LL),
            "LH" => Ok(Band::LH),
            "HL" => Ok(Band::HL),
            "HH" => Ok(Band::HH),
            _ => Err(Error::Unknown {
                kind: "sub-band",
                name: s.to_string(),
            }),
        }
    }
}

/// One analysis step. `orig` records the input extent before any odd-size
/// padding so the inverse can crop.
#[derive(Clone, Debug, PartialEq)]
pub struct SubBands {
    pub ll: Tensor,
    pub lh: Tensor,
    pub hl: Tensor,
    pub hh: Tensor,
    pub orig: (usize, usize),
}

impl SubBands {
    pub fn band(&self, b: Band) -> &Tensor {
        match b {
            Band::LL => &self.ll,
            Band::LH => &self.lh,
            Band::HL => &self.hl,
            Band::HH => &self.hh,
        }
    }

    pub fn band_mut(&mut self, b: Band) -> &mut Tensor {
        match b {
            Band::LL => &mut self.ll,
            Band::LH => &mut self.lh,
            Band::HL => &mut self.hl,
            Band::HH => &mut self.hh,
        }
    }

    pub fn energy(&self) -> f64 {
        Band::ALL.iter().map(|&b| self.band(b).sum_sq()).sum()
    }
}

fn pad_to_even(x: &Tensor) -> Result<Tensor> {
    let (c, h, w) = x.dims3()?;
    let (ph, pw) = (h + h % 2, w + w % 2);
    if (ph, pw) == (h, w) {
        return Ok(x.clone());
    }
    let src = |p: usize, n: usize| -> usize {
        if p < n {
            p
        } else if n >= 2 {
            2 * (n - 1) - p
        } else {
            0
        }
    };
    Ok(Tensor::from_fn3(c, ph, pw, |ci, i, j| x.at3(ci, src(i, h), src(j, w))))
}

fn crop(x: Tensor, h: usize, w: usize) -> Result<Tensor> {
    let (c, xh, xw) = x.dims3()?;
    if (xh, xw) == (h, w) {
        return Ok(x);
    }
    Ok(Tensor::from_fn3(c, h, w, |ci, i, j| x.at3(ci, i, j)))
}

pub fn dwt2(x: &Tensor, fam: &WaveletFamily) -> Result<SubBands> {
    let (c, h, w) = x.dims3()?;
    if h == 0 || w == 0 {
        return Err(Error::shape("dwt2 of an empty field"));
    }
    let xp = pad_to_even(x)?;
    let (lo, hi) = fam.analysis_taps();
    let stacked = analyze2(&xp, &lo, &hi)?;
    Ok(SubBands {
        ll: stacked.slice_channels(0, c)?,
        lh: stacked.slice_channels(c, c)?,
        hl: stacked.slice_channels(2 * c, c)?,
        hh: stacked.slice_channels(3 * c, c)?,
        orig: (h, w),
    })
}

pub fn idwt2(sb: &SubBands, fam: &WaveletFamily) -> Result<Tensor> {
    let shape = sb.ll.shape();
    for b in [&sb.lh, &sb.hl, &sb.hh] {
        if b.shape() != shape {
            return Err(Error::shape(format!(
                "band shapes differ: {:?} vs {:?}",
                shape,
                b.shape()
            )));
        }
    }
    let stacked = Tensor::concat_channels(&[&sb.ll, &sb.lh, &sb.hl, &sb.hh])?;
    let (lo, hi) = fam.synthesis_taps();
    let x = synthesize2(&stacked, &lo, &hi)?;
    let (_, h, w) = x.dims3()?;
    let (oh, ow) = sb.orig;
    if oh > h || ow > w || h - oh > 1 || w - ow > 1 {
        return Err(Error::shape(format!(
            "recorded extent {:?} inconsistent with bands {:?}",
            sb.orig, shape
        )));
    }
    crop(x, oh, ow)
}

/// Iterated decomposition of the LL band. `levels[0]` is the finest level;
/// each level keeps its own `ll` only at the deepest position, finer levels
/// hold empty `ll` placeholders.
#[derive(Clone, Debug, PartialEq)]
pub struct Pyramid {
    pub levels: Vec<SubBands>,
}

impl Pyramid {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn deepest(&self) -> &SubBands {
        self.levels.last().expect("pyramid has at least one level")
    }

    pub fn deepest_mut(&mut self) -> &mut SubBands {
        self.levels.last_mut().expect("pyramid has at least one level")
    }
}

pub fn pyramid(x: &Tensor, fam: &WaveletFamily, levels: usize) -> Result<Pyramid> {
    if levels == 0 {
        return Err(Error::invalid("pyramid needs at least one level"));
    }
    let (_, h, w) = x.dims3()?;
    let need = 1usize << levels;
    if h < need || w < need {
        return Err(Error::invalid(format!(
            "{}x{} image too small for {} levels (needs {}x{})",
            h, w, levels, need, need
        )));
    }
    let mut out = Vec::with_capacity(levels);
    let mut cur = x.clone();
    for l in 0..levels {
        let mut sb = dwt2(&cur, fam)?;
        if l + 1 < levels {
            cur = std::mem::replace(&mut sb.ll, Tensor::zeros(&[0, 0, 0]));
        }
        out.push(sb);
    }
    Ok(Pyramid { levels: out })
}

pub fn reconstruct(p: &Pyramid, fam: &WaveletFamily) -> Result<Tensor> {
    let mut ll = idwt2(p.deepest(), fam)?;
    for sb in p.levels.iter().rev().skip(1) {
        let level = SubBands {
            ll,
            lh: sb.lh.clone(),
            hl: sb.hl.clone(),
            hh: sb.hh.clone(),
            orig: sb.orig,
        };
        ll = idwt2(&level, fam)?;
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_lowpass_is_inverse_sqrt2() {
        let f = filter_bank(FamilyTag::Haar);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(f.analysis_lo, vec![r, r]);
    }

    #[test]
    fn lowpass_sums_to_sqrt2() {
        for tag in FamilyTag::ALL {
            let f = filter_bank(tag);
            let s: f64 = f.analysis_lo.iter().sum();
            assert!((s - std::f64::consts::SQRT_2).abs() < 1e-12, "{}", tag);
        }
    }

    #[test]
    fn orthogonal_synthesis_is_reversed_analysis() {
        for tag in FamilyTag::ALL.into_iter().filter(|t| t.is_orthogonal()) {
            let f = filter_bank(tag);
            let rev: Vec<f64> = f.analysis_lo.iter().rev().copied().collect();
            assert_eq!(rev, f.synthesis_lo);
            let rev: Vec<f64> = f.analysis_hi.iter().rev().copied().collect();
            assert_eq!(rev, f.synthesis_hi);
        }
    }

    #[test]
    fn unknown_family_is_rejected() {
        assert!("db7".parse::<FamilyTag>().is_err());
        assert_eq!("Daubechies".parse::<FamilyTag>().unwrap(), FamilyTag::Db2);
    }

    #[test]
    fn constant_haar_puts_everything_in_ll() {
        let x = Tensor::full(&[1, 4, 6], 1.0);
        let sb = dwt2(&x, &filter_bank(FamilyTag::Haar)).unwrap();
        assert!(sb.ll.data().iter().all(|v| (v - 2.0).abs() < 1e-14));
        for b in [&sb.lh, &sb.hl, &sb.hh] {
            assert!(b.max_abs() < 1e-14);
        }
    }

    #[test]
    fn vertical_stripes_load_hl_only() {
        // x[i,j] = (-1)^j. Width pass: low (1 - 1)/√2 = 0, high ±2/√2 = ±√2.
        // Height pass over two identical rows: HL = ±√2·2/√2 = ±2, rest 0.
        let x = Tensor::from_fn3(1, 4, 4, |_, _, j| if j % 2 == 0 { 1.0 } else { -1.0 });
        let sb = dwt2(&x, &filter_bank(FamilyTag::Haar)).unwrap();
        assert!(sb.ll.max_abs() < 1e-14);
        assert!(sb.lh.max_abs() < 1e-14);
        assert!(sb.hh.max_abs() < 1e-14);
        assert!(sb.hl.data().iter().all(|v| (v.abs() - 2.0).abs() < 1e-14));
        assert!((sb.hl.sum_sq() - x.sum_sq()).abs() < 1e-12);
    }

    #[test]
    fn zero_bands_give_zero_image() {
        let z = Tensor::zeros(&[2, 3, 3]);
        let sb = SubBands {
            ll: z.clone(),
            lh: z.clone(),
            hl: z.clone(),
            hh: z,
            orig: (6, 6),
        };
        let x = idwt2(&sb, &filter_bank(FamilyTag::Sym4)).unwrap();
        assert_eq!(x, Tensor::zeros(&[2, 6, 6]));
    }

    #[test]
    fn odd_sizes_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Tensor::random_uniform(&[2, 7, 9], -1.0, 1.0, &mut rng);
        for tag in FamilyTag::ALL {
            let f = filter_bank(tag);
            let sb = dwt2(&x, &f).unwrap();
            assert_eq!(sb.ll.shape(), &[2, 4, 5]);
            let y = idwt2(&sb, &f).unwrap();
            assert!(y.max_abs_diff(&x).unwrap() < 1e-10, "{}", tag);
        }
    }

    #[test]
    fn band_shape_mismatch_is_an_error() {
        let f = filter_bank(FamilyTag::Haar);
        let sb = SubBands {
            ll: Tensor::zeros(&[1, 2, 2]),
            lh: Tensor::zeros(&[1, 2, 2]),
            hl: Tensor::zeros(&[1, 2, 3]),
            hh: Tensor::zeros(&[1, 2, 2]),
            orig: (4, 4),
        };
        assert!(idwt2(&sb, &f).is_err());
    }

    #[test]
    fn pyramid_shapes_and_limits() {
        let x = Tensor::zeros(&[1, 256, 256]);
        let p = pyramid(&x, &filter_bank(FamilyTag::Db2), 4).unwrap();
        assert_eq!(p.deepest().ll.shape(), &[1, 16, 16]);
        for (l, sb) in p.levels.iter().enumerate() {
            let e = 256 >> (l + 1);
            assert_eq!(sb.hl.shape(), &[1, e, e]);
        }
        assert!(pyramid(&Tensor::zeros(&[1, 8, 8]), &filter_bank(FamilyTag::Haar), 4).is_err());
        assert!(pyramid(&x, &filter_bank(FamilyTag::Haar), 0).is_err());
    }

    #[test]
    fn single_level_pyramid_is_dwt2() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Tensor::random_uniform(&[3, 8, 8], 0.0, 1.0, &mut rng);
        let f = filter_bank(FamilyTag::Coif1);
        let p = pyramid(&x, &f, 1).unwrap();
        assert_eq!(p.levels[0], dwt2(&x, &f).unwrap());
    }
}
