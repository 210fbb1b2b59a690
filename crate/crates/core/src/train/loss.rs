//! Reconstruction objectives over the three output scales.

use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::fourier::{FreqLayout, Window};
use crate::model::{multi_input, ForwardGraph, MultiOutput};
use crate::tensor::Tensor;
use crate::wavelet::WaveletFamily;

use super::config::LossSet;

/// Levels of the wavelet-domain loss.
pub const WAVELET_LOSS_LEVELS: usize = 3;

/// Ground truth at the three output scales, built exactly like the
/// network's own multi-scale inputs.
pub fn targets(clean: &Tensor, fam: &WaveletFamily) -> Result<MultiOutput> {
    let (c, _, _) = clean.dims3()?;
    let mi = multi_input(clean, fam, c)?;
    Ok(MultiOutput {
        o1: mi.i1,
        o2: mi.i2,
        o4: mi.i4,
    })
}

/// `Σ (|Δre| + |Δim|)` (or `Σ |Δ|` with `modulus`) over the full-plane
/// equivalent of the unitary spectrum of `o - g`.
pub fn fourier_l1_term(tape: &mut Tape, o: Var, g: &Tensor, modulus: bool) -> Result<Var> {
    let gv = tape.leaf(g.clone())?;
    let d = tape.sub(o, gv)?;
    let (_, h, w) = tape.value(d).dims3()?;
    let s = tape.rfft2(d, Window::Global)?;
    tape.spectral_l1(s, FreqLayout::new(h, w, Window::Global)?, modulus)
}

pub fn spatial_l1_term(tape: &mut Tape, o: Var, g: &Tensor) -> Result<Var> {
    let gv = tape.leaf(g.clone())?;
    let d = tape.sub(o, gv)?;
    tape.l1(d)
}

/// L1 of all four sub-bands of `o - g` at each pyramid level; deeper levels
/// decompose the LL band of the previous one. Stops early once a band
/// would have odd size.
pub fn wavelet_l1_term(tape: &mut Tape, o: Var, g: &Tensor, fam: &WaveletFamily) -> Result<Var> {
    let (lo, hi) = fam.analysis_taps();
    let lo = tape.leaf(Tensor::new(&[lo.len()], lo)?)?;
    let hi = tape.leaf(Tensor::new(&[hi.len()], hi)?)?;
    let gv = tape.leaf(g.clone())?;
    let mut cur = tape.sub(o, gv)?;
    let mut terms = Vec::new();
    for _ in 0..WAVELET_LOSS_LEVELS {
        let (c, h, w) = tape.value(cur).dims3()?;
        if h % 2 != 0 || w % 2 != 0 || h < 2 || w < 2 {
            break;
        }
        let s = tape.dwt2(cur, lo, hi)?;
        cur = tape.split_channels(s, 0, c)?;
        let highs = tape.split_channels(s, c, 3 * c)?;
        terms.push(tape.l1(cur)?);
        terms.push(tape.l1(highs)?);
    }
    sum(tape, &terms)
}

fn sum(tape: &mut Tape, terms: &[Var]) -> Result<Var> {
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = tape.add(acc, t)?;
    }
    Ok(acc)
}

/// Total training objective on a recorded forward pass. Fourier and spatial
/// terms cover all three scales; the wavelet term covers full resolution.
pub fn objective(
    tape: &mut Tape,
    g: &ForwardGraph,
    t: &MultiOutput,
    set: LossSet,
    fourier_modulus: bool,
    fam: &WaveletFamily,
) -> Result<Var> {
    let pairs = [(g.o1, &t.o1), (g.o2, &t.o2), (g.o4, &t.o4)];
    let mut terms = Vec::new();
    if set.fourier {
        for (o, gt) in pairs {
            terms.push(fourier_l1_term(tape, o, gt, fourier_modulus)?);
        }
    }
    if set.spatial {
        for (o, gt) in pairs {
            terms.push(spatial_l1_term(tape, o, gt)?);
        }
    }
    if set.wavelet {
        terms.push(wavelet_l1_term(tape, g.o1, &t.o1, fam)?);
    }
    if terms.is_empty() {
        return Err(crate::error::Error::invalid("empty loss set"));
    }
    sum(tape, &terms)
}

/// Multi-scale Fourier L1 between two output sets.
pub fn fourier_l1_loss(outputs: &MultiOutput, targets: &MultiOutput, modulus: bool) -> Result<f64> {
    let mut tape = Tape::new();
    let mut total = 0.0;
    for (o, g) in [
        (&outputs.o1, &targets.o1),
        (&outputs.o2, &targets.o2),
        (&outputs.o4, &targets.o4),
    ] {
        o.check_same_shape(g)?;
        let ov = tape.leaf(o.clone())?;
        let v = fourier_l1_term(&mut tape, ov, g, modulus)?;
        total += tape.value(v).data()[0];
    }
    Ok(total)
}
