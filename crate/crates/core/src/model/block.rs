//! The restoration block: a Fourier token mixer followed by a depthwise
//! feed-forward network, each wrapped in a residual connection.

use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::fourier::{FreqLayout, Window};

/// Nonlinearity inside the block. `Identity` exists for analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Gelu,
    Identity,
}

impl Activation {
    fn apply(self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            Activation::Gelu => tape.gelu(x),
            Activation::Identity => Ok(x),
        }
    }
}

/// Parameter handles of one block, all already on the tape.
#[derive(Clone, Copy, Debug)]
pub struct BlockVars {
    pub mix_w_in: Var,
    pub mix_b_in: Var,
    pub mix_w_freq: Var,
    pub mix_b_freq: Var,
    pub mix_w_out: Var,
    pub mix_b_out: Var,
    pub ffn_w_in: Var,
    pub ffn_b_in: Var,
    pub ffn_w_dw: Var,
    pub ffn_b_dw: Var,
    pub ffn_w_out: Var,
    pub ffn_b_out: Var,
}

/// Parameter name suffixes and shapes of a block with `c` channels.
pub fn block_params(c: usize) -> [(&'static str, Vec<usize>); 12] {
    [
        ("mixer.w_in", vec![2 * c, c]),
        ("mixer.b_in", vec![2 * c]),
        ("mixer.w_freq", vec![4 * c, 4 * c]),
        ("mixer.b_freq", vec![4 * c]),
        ("mixer.w_out", vec![c, 2 * c]),
        ("mixer.b_out", vec![c]),
        ("ffn.w_in", vec![2 * c, c]),
        ("ffn.b_in", vec![2 * c]),
        ("ffn.w_dw", vec![2 * c, 3, 3]),
        ("ffn.b_dw", vec![2 * c]),
        ("ffn.w_out", vec![c, 2 * c]),
        ("ffn.b_out", vec![c]),
    ]
}

/// Expand to 2C, transform, mix the concatenated real and imaginary parts
/// with a pointwise convolution and activation, transform back, project to C.
pub fn token_mixer(tape: &mut Tape, f: Var, p: &BlockVars, window: Window, act: Activation) -> Result<Var> {
    let (_, h, w) = tape.value(f).dims3()?;
    let layout = FreqLayout::new(h, w, window)?;
    let x = tape.conv_pointwise(f, p.mix_w_in, p.mix_b_in)?;
    let s = tape.rfft2(x, window)?;
    let s = tape.conv_pointwise(s, p.mix_w_freq, p.mix_b_freq)?;
    let s = act.apply(tape, s)?;
    let x = tape.irfft2(s, layout)?;
    tape.conv_pointwise(x, p.mix_w_out, p.mix_b_out)
}

pub fn feed_forward(tape: &mut Tape, f: Var, p: &BlockVars, act: Activation) -> Result<Var> {
    let x = tape.conv_pointwise(f, p.ffn_w_in, p.ffn_b_in)?;
    let x = tape.conv_depthwise3x3(x, p.ffn_w_dw, p.ffn_b_dw)?;
    let x = act.apply(tape, x)?;
    tape.conv_pointwise(x, p.ffn_w_out, p.ffn_b_out)
}

pub fn pwfnet_block(tape: &mut Tape, f: Var, p: &BlockVars, window: Window, act: Activation) -> Result<Var> {
    let m = token_mixer(tape, f, p, window, act)?;
    let f = tape.add(f, m)?;
    let n = feed_forward(tape, f, p, act)?;
    tape.add(f, n)
}
