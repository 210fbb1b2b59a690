//! Fast invariant checks run by `pwfnet selftest`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{grad_check, gradcheck::random_shapes, registered_ops};
use crate::error::Result;
use crate::fourier::{fft2, ifft2, radial_mask, window_fft2, window_ifft2};
use crate::imaging::checkpoint::{decode_checkpoint, encode_checkpoint};
use crate::model::{flops_estimate, param_count, Model, ModelConfig, Variant};
use crate::tensor::Tensor;
use crate::wavelet::{filter_bank, pyramid, reconstruct, FamilyTag};

pub struct Check {
    pub name: String,
    pub outcome: std::result::Result<String, String>,
}

fn check(name: impl Into<String>, f: impl FnOnce() -> Result<std::result::Result<String, String>>) -> Check {
    let outcome = match f() {
        Ok(o) => o,
        Err(e) => Err(e.to_string()),
    };
    Check {
        name: name.into(),
        outcome,
    }
}

fn within(what: &str, err: f64, tol: f64) -> std::result::Result<String, String> {
    if err <= tol {
        Ok(format!("{} {:.2e} <= {:.0e}", what, err, tol))
    } else {
        Err(format!("{} {:.2e} > {:.0e}", what, err, tol))
    }
}

pub fn run_all() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Tensor::random_uniform(&[3, 32, 32], 0.0, 1.0, &mut rng);
    let mut out = Vec::new();

    for tag in FamilyTag::ALL {
        out.push(check(format!("wavelet PR {}", tag), || {
            let fam = filter_bank(tag);
            let mut worst: f64 = 0.0;
            for levels in 1..=4 {
                let r = reconstruct(&pyramid(&x, &fam, levels)?, &fam)?;
                worst = worst.max(r.max_abs_diff(&x)?);
            }
            Ok(within("max error", worst, 1e-8))
        }));
    }

    out.push(check("fft round trip 60x92", || {
        let y = Tensor::random_uniform(&[2, 60, 92], -1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        let back = ifft2(&fft2(&y)?, (60, 92))?;
        Ok(within("max error", back.max_abs_diff(&y)?, 1e-10))
    }));
    out.push(check("parseval", || {
        let e: f64 = fft2(&x)?.iter().map(|s| s.energy()).sum();
        Ok(within("energy gap", (e - x.sum_sq()).abs(), 1e-10 * x.sum_sq().max(1.0)))
    }));
    out.push(check("window fft round trip", || {
        let y = x.slice_channels(0, 1)?;
        let back = window_ifft2(&window_fft2(&y, 8)?)?;
        Ok(within("max error", back.max_abs_diff(&y)?, 1e-10))
    }));
    out.push(check("radial mask nesting", || {
        let a = radial_mask(16, 16, 0.7)?;
        let b = radial_mask(16, 16, 0.3)?;
        Ok(if a.is_subset_of(&b) {
            Ok("nested".into())
        } else {
            Err("mask(0.7) not inside mask(0.3)".into())
        })
    }));

    for (i, op) in registered_ops().into_iter().enumerate() {
        out.push(check(format!("gradcheck {}", op), || {
            let r = grad_check(op, &random_shapes(3, 100 + i as u64), 1e-4, i as u64)?;
            Ok(within("max rel err", r.max_rel_err, 1e-4))
        }));
    }

    let cfg = ModelConfig {
        base_channels: 4,
        blocks_per_level: [1, 1, 1],
        ..Default::default()
    };
    out.push(check("residual identity", || {
        let m = Model::build(&cfg)?;
        let o = m.forward(&x, Variant::L)?;
        Ok(if o.o1 == x {
            Ok("o1 == input".into())
        } else {
            Err(format!("max deviation {:e}", o.o1.max_abs_diff(&x)?))
        })
    }));
    out.push(check("variant ordering", || {
        let m = Model::build(&cfg)?;
        let p: Vec<usize> = Variant::ALL.iter().map(|&v| param_count(&m, v)).collect();
        let f: Vec<f64> = Variant::ALL
            .iter()
            .map(|&v| flops_estimate(&m, 64, 64, v))
            .collect::<Result<_>>()?;
        Ok(if p[0] < p[1] && p[1] < p[2] && f[0] < f[1] && f[1] < f[2] {
            Ok(format!("params {:?}", p))
        } else {
            Err(format!("params {:?} flops {:?}", p, f))
        })
    }));
    out.push(check("checkpoint round trip", || {
        let m = Model::build(&cfg)?;
        let back = decode_checkpoint(&encode_checkpoint(&m, None, 0)?, std::path::Path::new("<memory>"))?;
        Ok(if back.model == m {
            Ok("bit exact".into())
        } else {
            Err("parameters differ".into())
        })
    }));
    out
}
