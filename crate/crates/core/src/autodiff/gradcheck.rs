//! Central finite-difference gradient checks for every registered operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::fourier::{half_width, FreqLayout, Window};
use crate::tensor::Tensor;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared in absolute rather than
/// relative terms.
pub const REL_ERR_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct TrialReport {
    pub shape: Vec<usize>,
    pub max_rel_err: f64,
    pub checked: usize,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub op: String,
    pub trials: Vec<TrialReport>,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

type MakeInputs = fn(&[usize], &mut ChaCha8Rng) -> Vec<Tensor>;
type Apply = fn(&mut Tape, &[Var]) -> Result<Var>;

struct OpCase {
    name: &'static str,
    make: MakeInputs,
    apply: Apply,
}

fn rnd(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::random_uniform(shape, -1.0, 1.0, rng)
}

fn chw(s: &[usize]) -> (usize, usize, usize) {
    (s[0], s[1], s[2])
}

fn taps(rng: &mut ChaCha8Rng) -> (Tensor, Tensor) {
    (rnd(&[4], rng), rnd(&[4], rng))
}

const CASES: &[OpCase] = &[
    OpCase {
        name: "conv_pointwise",
        make: |s, r| {
            let (c, _, _) = chw(s);
            vec![rnd(s, r), rnd(&[c + 1, c], r), rnd(&[c + 1], r)]
        },
        apply: |t, v| t.conv_pointwise(v[0], v[1], v[2]),
    },
    OpCase {
        name: "conv_depthwise3x3",
        make: |s, r| {
            let (c, _, _) = chw(s);
            vec![rnd(s, r), rnd(&[c, 3, 3], r), rnd(&[c], r)]
        },
        apply: |t, v| t.conv_depthwise3x3(v[0], v[1], v[2]),
    },
    OpCase {
        name: "conv3x3",
        make: |s, r| {
            let (c, _, _) = chw(s);
            vec![rnd(s, r), rnd(&[2, c, 3, 3], r), rnd(&[2], r)]
        },
        apply: |t, v| t.conv3x3(v[0], v[1], v[2]),
    },
    OpCase {
        name: "gelu",
        make: |s, r| vec![Tensor::random_uniform(s, -3.0, 3.0, r)],
        apply: |t, v| t.gelu(v[0]),
    },
    OpCase {
        name: "add",
        make: |s, r| vec![rnd(s, r), rnd(s, r)],
        apply: |t, v| t.add(v[0], v[1]),
    },
    OpCase {
        name: "sub",
        make: |s, r| vec![rnd(s, r), rnd(s, r)],
        apply: |t, v| t.sub(v[0], v[1]),
    },
    OpCase {
        name: "mul_scalar",
        make: |s, r| vec![rnd(s, r)],
        apply: |t, v| t.mul_scalar(v[0], -1.75),
    },
    OpCase {
        name: "concat_channels",
        make: |s, r| {
            let (_, h, w) = chw(s);
            vec![rnd(s, r), rnd(&[1, h, w], r)]
        },
        apply: |t, v| t.concat_channels(&[v[0], v[1]]),
    },
    OpCase {
        name: "split_channels",
        make: |s, r| {
            let (c, h, w) = chw(s);
            vec![rnd(&[c + 2, h, w], r)]
        },
        apply: |t, v| t.split_channels(v[0], 1, 1),
    },
    OpCase {
        name: "l1",
        make: |s, r| vec![rnd(s, r)],
        apply: |t, v| t.l1(v[0]),
    },
    OpCase {
        name: "fft2",
        make: |s, r| vec![rnd(s, r)],
        apply: |t, v| t.rfft2(v[0], Window::Global),
    },
    OpCase {
        name: "ifft2",
        make: |s, r| {
            let (c, h, w) = chw(s);
            // the spatial width is recovered from the stored field below
            vec![rnd(&[2 * c, h, half_width(w)], r), Tensor::zeros(&[0, h, w])]
        },
        apply: |t, v| {
            let (_, h, w) = t.value(v[1]).dims3()?;
            let l = FreqLayout::new(h, w, Window::Global)?;
            t.irfft2(v[0], l)
        },
    },
    OpCase {
        name: "window_fft2",
        make: |s, r| vec![rnd(s, r)],
        apply: |t, v| t.rfft2(v[0], Window::Tiles(2)),
    },
    OpCase {
        name: "window_ifft2",
        make: |s, r| {
            let (c, h, w) = chw(s);
            let l = FreqLayout::new(h, w, Window::Tiles(2)).expect("valid layout");
            let (fh, fw) = l.freq_shape();
            vec![rnd(&[2 * c, fh, fw], r), Tensor::zeros(&[0, h, w])]
        },
        apply: |t, v| {
            let (_, h, w) = t.value(v[1]).dims3()?;
            let l = FreqLayout::new(h, w, Window::Tiles(2))?;
            t.irfft2(v[0], l)
        },
    },
    OpCase {
        name: "spectral_l1",
        make: |s, r| vec![rnd(s, r)],
        apply: |t, v| {
            let (_, h, w) = t.value(v[0]).dims3()?;
            let s = t.rfft2(v[0], Window::Global)?;
            t.spectral_l1(s, FreqLayout::new(h, w, Window::Global)?, false)
        },
    },
    OpCase {
        name: "spectral_l1_modulus",
        make: |s, r| vec![rnd(s, r)],
        apply: |t, v| {
            let (_, h, w) = t.value(v[0]).dims3()?;
            let s = t.rfft2(v[0], Window::Global)?;
            t.spectral_l1(s, FreqLayout::new(h, w, Window::Global)?, true)
        },
    },
    OpCase {
        name: "dwt2",
        make: |s, r| {
            let (c, h, w) = chw(s);
            let (lo, hi) = taps(r);
            vec![rnd(&[c, 2 * h, 2 * w], r), lo, hi]
        },
        apply: |t, v| t.dwt2(v[0], v[1], v[2]),
    },
    OpCase {
        name: "idwt2",
        make: |s, r| {
            let (c, h, w) = chw(s);
            let (lo, hi) = taps(r);
            vec![rnd(&[4 * c, h, w], r), lo, hi]
        },
        apply: |t, v| t.idwt2(v[0], v[1], v[2]),
    },
];

pub fn registered_ops() -> Vec<&'static str> {
    CASES.iter().map(|c| c.name).collect()
}

/// Deterministic `[C,H,W]` trial shapes with small extents.
pub fn random_shapes(n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| vec![rng.gen_range(1..=3), rng.gen_range(2..=5), rng.gen_range(2..=5)])
        .collect()
}

fn evaluate(case: &OpCase, inputs: &[Tensor], probe: &Option<Tensor>) -> Result<(Tape, Vec<Var>, Var)> {
    let mut tape = Tape::new();
    let vars = inputs
        .iter()
        .map(|t| tape.leaf(t.clone()))
        .collect::<Result<Vec<_>>>()?;
    let y = (case.apply)(&mut tape, &vars)?;
    let loss = match probe {
        Some(p) => tape.weighted_sum(y, p.clone())?,
        None => y,
    };
    Ok((tape, vars, loss))
}

/// Compares reverse-mode gradients of `op` against central differences on
/// each trial shape. Errors with [`Error::GradCheck`] when any relative
/// error exceeds `tolerance`.
pub fn grad_check(op: &str, shapes: &[Vec<usize>], tolerance: f64, seed: u64) -> Result<GradCheckReport> {
    let case = CASES.iter().find(|c| c.name == op).ok_or_else(|| Error::Unknown {
        kind: "differentiable op",
        name: op.to_string(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(shapes.len());

    for shape in shapes {
        if shape.len() != 3 {
            return Err(Error::shape(format!("trial shape {:?} is not [C,H,W]", shape)));
        }
        let inputs = (case.make)(shape, &mut rng);
        // probe weights turn tensor outputs into a scalar objective
        let (tape, _, y) = evaluate(case, &inputs, &None)?;
        let out = tape.value(y);
        let probe = if out.len() == 1 {
            None
        } else {
            Some(Tensor::random_uniform(out.shape(), -1.0, 1.0, &mut rng))
        };
        let (tape, vars, loss) = evaluate(case, &inputs, &probe)?;
        let grads = tape.backward(loss)?;

        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for (k, input) in inputs.iter().enumerate() {
            let analytic = grads.wrt(vars[k]);
            for idx in 0..input.len() {
                let mut plus = inputs.to_vec();
                plus[k].data_mut()[idx] += FD_STEP;
                let mut minus = inputs.to_vec();
                minus[k].data_mut()[idx] -= FD_STEP;
                let fp = scalar(case, &plus, &probe)?;
                let fm = scalar(case, &minus, &probe)?;
                let numeric = (fp - fm) / (2.0 * FD_STEP);
                let a = analytic.data()[idx];
                let denom = a.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
                worst = worst.max((a - numeric).abs() / denom);
                checked += 1;
            }
        }
        trials.push(TrialReport {
            shape: shape.clone(),
            max_rel_err: worst,
            checked,
        });
    }

    let max_rel_err = trials.iter().fold(0.0f64, |m, t| m.max(t.max_rel_err));
    if max_rel_err > tolerance {
        return Err(Error::GradCheck {
            op: op.to_string(),
            max_rel_err,
            tolerance,
        });
    }
    Ok(GradCheckReport {
        op: op.to_string(),
        trials,
        max_rel_err,
        tolerance,
    })
}

fn scalar(case: &OpCase, inputs: &[Tensor], probe: &Option<Tensor>) -> Result<f64> {
    let (tape, _, loss) = evaluate(case, inputs, probe)?;
    Ok(tape.value(loss).data()[0])
}
