//! Sub-band exchange between a degraded and a clean image.
//!
//! Both images are decomposed into a wavelet pyramid; selected bands of the
//! degraded pyramid are replaced by the clean image's bands (whole, or only
//! their high-frequency spectrum bins), and the result is reconstructed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{fft2, ifft2, radial_mask};
use crate::imaging::metrics::{psnr, ssim};
use crate::imaging::Image;
use crate::tensor::Tensor;
use crate::wavelet::{pyramid, reconstruct, Band, Pyramid, WaveletFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwapMode {
    /// Replace entire sub-bands.
    Whole,
    /// Replace only spectrum bins above the radial cutoff.
    Masked,
}

impl SwapMode {
    pub fn name(self) -> &'static str {
        match self {
            SwapMode::Whole => "whole",
            SwapMode::Masked => "masked",
        }
    }
}

impl fmt::Display for SwapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SwapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "whole" | "whole-band" => Ok(SwapMode::Whole),
            "masked" | "fourier-masked" => Ok(SwapMode::Masked),
            _ => Err(Error::Unknown {
                kind: "swap mode",
                name: s.to_string(),
            }),
        }
    }
}

/// Subset of `{LL, LH, HL, HH}`; bit `i` is `Band::ALL[i]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandSet(u8);

impl BandSet {
    pub const EMPTY: BandSet = BandSet(0);
    pub const ALL: BandSet = BandSet(0b1111);

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits > 0b1111 {
            return Err(Error::invalid(format!("band mask {:#b} has more than four bits", bits)));
        }
        Ok(BandSet(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    fn bit(b: Band) -> u8 {
        1 << Band::ALL.iter().position(|&x| x == b).expect("band is listed")
    }

    pub fn of(bands: &[Band]) -> Self {
        BandSet(bands.iter().fold(0, |m, &b| m | Self::bit(b)))
    }

    pub fn contains(self, b: Band) -> bool {
        self.0 & Self::bit(b) != 0
    }

    pub fn bands(self) -> impl Iterator<Item = Band> {
        Band::ALL.into_iter().filter(move |&b| self.contains(b))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for BandSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<&str> = self.bands().map(Band::name).collect();
        f.write_str(&names.join("+"))
    }
}

/// Parses `HL,LL`, `HL+LL`, `none` or `all`.
impl FromStr for BandSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "none" => return Ok(BandSet::EMPTY),
            "all" => return Ok(BandSet::ALL),
            _ => {}
        }
        let bands = s
            .split([',', '+'])
            .map(str::parse)
            .collect::<Result<Vec<Band>>>()?;
        Ok(BandSet::of(&bands))
    }
}

/// Which bands to exchange. The same band set applies at every level; LL
/// only exists, and is only exchanged, at the deepest level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapSpec {
    pub levels: usize,
    pub bands: BandSet,
    pub mode: SwapMode,
    /// Radial cutoff in `[0, 1]`, used by [`SwapMode::Masked`] only.
    pub cutoff: f64,
}

impl SwapSpec {
    pub fn whole(levels: usize, bands: BandSet) -> Self {
        SwapSpec {
            levels,
            bands,
            mode: SwapMode::Whole,
            cutoff: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::invalid("swap needs at least one level"));
        }
        if !(0.0..=1.0).contains(&self.cutoff) {
            return Err(Error::invalid(format!("cutoff {} outside [0,1]", self.cutoff)));
        }
        Ok(())
    }
}

fn exchange_band(a: &mut Tensor, b: &mut Tensor, mode: SwapMode, cutoff: f64) -> Result<()> {
    match mode {
        SwapMode::Whole => std::mem::swap(a, b),
        SwapMode::Masked => {
            let (_, h, w) = a.dims3()?;
            let mask = radial_mask(h, w, cutoff)?;
            if mask.count() == 0 {
                return Ok(());
            }
            let mut sa = fft2(a)?;
            let mut sb = fft2(b)?;
            for (pa, pb) in sa.iter_mut().zip(sb.iter_mut()) {
                for ((za, zb), &hit) in pa.bins_mut().iter_mut().zip(pb.bins_mut()).zip(mask.bits()) {
                    if hit {
                        std::mem::swap(za, zb);
                    }
                }
            }
            *a = ifft2(&sa, (h, w))?;
            *b = ifft2(&sb, (h, w))?;
        }
    }
    Ok(())
}

fn exchange_pyramids(pa: &mut Pyramid, pb: &mut Pyramid, spec: &SwapSpec) -> Result<()> {
    let deepest = pa.depth() - 1;
    for (l, (la, lb)) in pa.levels.iter_mut().zip(pb.levels.iter_mut()).enumerate() {
        for band in spec.bands.bands() {
            if band == Band::LL && l != deepest {
                continue;
            }
            exchange_band(la.band_mut(band), lb.band_mut(band), spec.mode, spec.cutoff)?;
        }
    }
    Ok(())
}

/// Exchanges the selected bands in both directions and reconstructs both
/// images without clamping. Applying it twice returns the inputs.
pub fn subband_exchange(a: &Image, b: &Image, spec: &SwapSpec, fam: &WaveletFamily) -> Result<(Image, Image)> {
    spec.validate()?;
    a.check_same_shape(b)?;
    let mut pa = pyramid(a, fam, spec.levels)?;
    let mut pb = pyramid(b, fam, spec.levels)?;
    exchange_pyramids(&mut pa, &mut pb, spec)?;
    Ok((reconstruct(&pa, fam)?, reconstruct(&pb, fam)?))
}

/// Degraded image with the selected bands taken from `clean`, clamped to
/// `[0, 1]`.
pub fn subband_swap(degraded: &Image, clean: &Image, spec: &SwapSpec, fam: &WaveletFamily) -> Result<Image> {
    spec.validate()?;
    degraded.check_same_shape(clean)?;
    let mut pd = pyramid(degraded, fam, spec.levels)?;
    let mut pc = pyramid(clean, fam, spec.levels)?;
    exchange_pyramids(&mut pd, &mut pc, spec)?;
    Ok(reconstruct(&pd, fam)?.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwapRow {
    pub bands: BandSet,
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwapReport {
    pub levels: usize,
    pub family: String,
    pub mode: SwapMode,
    pub cutoff: f64,
    /// One row per band subset, ordered by bitmask; row 0 is the no-swap
    /// baseline and row 15 swaps everything.
    pub rows: Vec<SwapRow>,
}

impl SwapReport {
    pub fn row(&self, bands: BandSet) -> &SwapRow {
        &self.rows[bands.bits() as usize]
    }

    pub fn baseline(&self) -> &SwapRow {
        self.row(BandSet::EMPTY)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bands,mode,cutoff,psnr_db,ssim\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.6}\n",
                r.bands, self.mode, self.cutoff, r.psnr_db, r.ssim
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "family {}  levels {}  mode {}  cutoff {}\n{:<12} {:>10} {:>9}\n",
            self.family, self.levels, self.mode, self.cutoff, "bands", "PSNR(dB)", "SSIM"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>10.3} {:>9.5}\n",
                r.bands.to_string(),
                r.psnr_db,
                r.ssim
            ));
        }
        out
    }
}

/// PSNR/SSIM against `clean` for all sixteen band subsets.
pub fn swap_table(
    degraded: &Image,
    clean: &Image,
    levels: usize,
    fam: &WaveletFamily,
    mode: SwapMode,
    cutoff: f64,
) -> Result<SwapReport> {
    let rows = (0..16u8)
        .map(|bits| {
            let spec = SwapSpec {
                levels,
                bands: BandSet(bits),
                mode,
                cutoff,
            };
            let out = subband_swap(degraded, clean, &spec, fam)?;
            Ok(SwapRow {
                bands: spec.bands,
                psnr_db: psnr(&out, clean)?,
                ssim: ssim(&out, clean)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SwapReport {
        levels,
        family: fam.tag.to_string(),
        mode,
        cutoff,
        rows,
    })
}
