//! Optimization: objectives, AdamW, cosine schedule, augmentation and the
//! training loop.

mod augment;
mod config;
mod loss;
mod optim;
mod schedule;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use augment::{augment, crop, rot90, AugmentDraw};
pub use config::{LossSet, RunConfig, TrainConfig};
pub use loss::{fourier_l1_loss, fourier_l1_term, objective, spatial_l1_term, targets, wavelet_l1_term};
pub use optim::AdamW;
pub use schedule::cosine_lr;

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::imaging::checkpoint::save_checkpoint;
use crate::imaging::{psnr, Image, Pair};
use crate::model::{to_f32_grid, Model, Variant};
use crate::tensor::Tensor;

/// One line of the metrics log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub lr: f64,
    /// Mean batch loss; `NaN` for the evaluation-only row at iteration 0.
    pub loss: f64,
    pub eval_psnr: Option<f64>,
}

pub const LOG_HEADER: &str = "iter,lr,loss,eval_psnr";

pub fn log_csv(rows: &[LogRow]) -> String {
    let mut out = format!("{}\n", LOG_HEADER);
    for r in rows {
        let loss = if r.loss.is_nan() { String::new() } else { format!("{:.9e}", r.loss) };
        let eval = r.eval_psnr.map(|p| format!("{:.6}", p)).unwrap_or_default();
        let _ = writeln!(out, "{},{:.9e},{},{}", r.iter, r.lr, loss, eval);
    }
    out
}

/// Where the loop persists checkpoints. With a path, the final model is
/// written there, the best-evaluating one to `<path>.best`, and on a
/// non-finite loss the last good model is written before aborting.
#[derive(Clone, Debug, Default)]
pub struct Sink {
    pub checkpoint: Option<PathBuf>,
}

impl Sink {
    pub fn to(path: impl AsRef<Path>) -> Self {
        Sink {
            checkpoint: Some(path.as_ref().to_path_buf()),
        }
    }

    fn best_path(&self) -> Option<PathBuf> {
        self.checkpoint.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".best");
            PathBuf::from(s)
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: Vec<LogRow>,
    /// Mean held-out PSNR of the degraded inputs themselves.
    pub input_psnr: f64,
    pub initial_eval_psnr: f64,
    pub final_eval_psnr: f64,
    pub best_eval_psnr: f64,
    pub best_iter: usize,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.log.iter().filter(|r| r.iter > 0).map(|r| r.loss).collect()
    }
}

/// Mean PSNR of the clamped full-resolution output over `pairs`.
pub fn evaluate(model: &Model, pairs: &[Pair], variant: Variant) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let mut acc = 0.0;
    for p in pairs {
        let o = model.forward(&p.degraded, variant)?;
        acc += psnr(&o.o1.clamp(0.0, 1.0), &p.clean)?;
    }
    Ok(acc / pairs.len() as f64)
}

pub fn input_psnr(pairs: &[Pair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let mut acc = 0.0;
    for p in pairs {
        acc += psnr(&p.degraded, &p.clean)?;
    }
    Ok(acc / pairs.len() as f64)
}

/// Loss and per-parameter gradients for one training sample.
pub fn sample_gradients(
    model: &Model,
    degraded: &Image,
    clean: &Image,
    cfg: &TrainConfig,
) -> Result<(f64, Vec<Option<Tensor>>)> {
    let fam = model.family();
    let t = targets(clean, &fam)?;
    let mut tape = Tape::new();
    let g = model.forward_on_tape(&mut tape, degraded, Variant::L, None)?;
    let loss = objective(&mut tape, &g, &t, cfg.loss, cfg.fourier_modulus, &fam)?;
    let lv = tape.value(loss).data()[0];
    let grads = tape.backward(loss)?;
    let per_param = g.params.iter().map(|v| v.map(|v| grads.wrt(v))).collect();
    Ok((lv, per_param))
}

/// Seeded training run. Batch elements may be processed on `threads`
/// workers; their gradients are always reduced in batch order, so results
/// do not depend on the thread count.
pub fn train_loop(
    mut model: Model,
    train: &[Pair],
    eval: &[Pair],
    cfg: &TrainConfig,
    threads: usize,
    sink: &Sink,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if eval.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {}", e)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamW::new(&model.params, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
    let total = cfg.iterations;

    let input = input_psnr(eval)?;
    let initial = evaluate(&model, eval, Variant::L)?;
    let mut log = vec![LogRow {
        iter: 0,
        lr: cosine_lr(0, total, cfg.lr0, cfg.lr_min)?,
        loss: f64::NAN,
        eval_psnr: Some(initial),
    }];
    let (mut best, mut best_iter) = (initial, 0);
    if let Some(p) = sink.best_path() {
        save_checkpoint(&model, Some(cfg), 0, p)?;
    }
    let mut last_eval = initial;

    for it in 1..=total {
        let batch: Vec<(Image, Image)> = (0..cfg.batch_size)
            .map(|_| {
                let p = &train[rng.gen_range(0..train.len())];
                augment(&p.clean, &p.degraded, cfg.patch_size, &mut rng)
            })
            .collect::<Result<_>>()?;
        let results: Vec<Result<(f64, Vec<Option<Tensor>>)>> = pool.install(|| {
            batch
                .par_iter()
                .map(|(c, d)| sample_gradients(&model, d, c, cfg))
                .collect()
        });
        let scale = 1.0 / cfg.batch_size as f64;
        let mut loss = 0.0;
        model.zero_grads();
        let nonfinite = |what: String, model: &Model| -> Result<TrainOutcome> {
            if let Some(p) = &sink.checkpoint {
                save_checkpoint(model, Some(cfg), (it - 1) as u64, p)?;
            }
            Err(Error::NonFinite(format!("{} at iteration {}", what, it)))
        };
        let results = match results.into_iter().collect::<Result<Vec<_>>>() {
            Ok(r) => r,
            Err(Error::NonFinite(what)) => return nonfinite(what, &model),
            Err(e) => return Err(e),
        };
        for (l, grads) in results {
            loss += l * scale;
            for (p, g) in model.params.iter_mut().zip(grads) {
                if let Some(g) = g {
                    for (a, b) in p.grad.data_mut().iter_mut().zip(g.data()) {
                        *a += b * scale;
                    }
                }
            }
        }
        if !loss.is_finite() {
            return nonfinite("training loss".into(), &model);
        }
        let lr = cosine_lr(it - 1, total, cfg.lr0, cfg.lr_min)?;
        let backup = model.params.clone();
        match opt.step(&mut model.params, lr) {
            Ok(()) => {}
            Err(Error::NonFinite(what)) => {
                model.params = backup;
                return nonfinite(what, &model);
            }
            Err(e) => return Err(e),
        }
        for p in &mut model.params {
            p.value.data_mut().iter_mut().for_each(|v| *v = to_f32_grid(*v));
        }
        // a finite f64 step can still overflow the f32 grid
        if let Some(p) = model.params.iter().find(|p| !p.value.all_finite()) {
            let what = format!("parameter {}", p.name);
            model.params = backup;
            return nonfinite(what, &model);
        }

        let eval_now = it == total || (cfg.eval_period > 0 && it % cfg.eval_period == 0);
        let eval_psnr = if eval_now {
            let e = evaluate(&model, eval, Variant::L)?;
            last_eval = e;
            if e > best {
                best = e;
                best_iter = it;
                if let Some(p) = sink.best_path() {
                    save_checkpoint(&model, Some(cfg), it as u64, p)?;
                }
            }
            Some(e)
        } else {
            None
        };
        log.push(LogRow {
            iter: it,
            lr,
            loss,
            eval_psnr,
        });
    }
    if let Some(p) = &sink.checkpoint {
        save_checkpoint(&model, Some(cfg), total as u64, p)?;
    }
    Ok(TrainOutcome {
        model,
        log,
        input_psnr: input,
        initial_eval_psnr: initial,
        final_eval_psnr: last_eval,
        best_eval_psnr: best,
        best_iter,
    })
}
