//! Equal-budget comparisons of wavelet family, mixer kernel and loss terms.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::Pair;
use crate::model::{param_count, MixerKernel, Model, Variant};
use crate::train::{train_loop, LossSet, RunConfig, Sink};
use crate::wavelet::FamilyTag;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationKind {
    Wavelet,
    Kernel,
    Loss,
}

impl fmt::Display for AblationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationKind::Wavelet => "wavelet",
            AblationKind::Kernel => "kernel",
            AblationKind::Loss => "loss",
        })
    }
}

impl FromStr for AblationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wavelet" => Ok(AblationKind::Wavelet),
            "kernel" => Ok(AblationKind::Kernel),
            "loss" => Ok(AblationKind::Loss),
            _ => Err(Error::Unknown {
                kind: "ablation",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub kind: AblationKind,
    pub setting: String,
    pub params: usize,
    pub input_psnr: f64,
    pub eval_psnr: f64,
    pub final_loss: f64,
}

pub const ABLATION_HEADER: &str = "ablation,setting,params,input_psnr,eval_psnr,final_loss";

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = format!("{}\n", ABLATION_HEADER);
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.6e}\n",
            r.kind, r.setting, r.params, r.input_psnr, r.eval_psnr, r.final_loss
        ));
    }
    out
}

/// The configurations compared by one ablation, each derived from `base`.
pub fn settings(kind: AblationKind, base: &RunConfig) -> Vec<(String, RunConfig)> {
    match kind {
        AblationKind::Wavelet => FamilyTag::ALL
            .iter()
            .map(|&f| {
                let mut c = base.clone();
                c.model.family = f;
                (f.to_string(), c)
            })
            .collect(),
        AblationKind::Kernel => MixerKernel::ALLOWED_WINDOWS
            .iter()
            .map(|&k| MixerKernel::Window(k))
            .chain([MixerKernel::Global])
            .map(|k| {
                let mut c = base.clone();
                c.model.mixer_kernel = k;
                (k.to_string(), c)
            })
            .collect(),
        AblationKind::Loss => LossSet::COMBINATIONS
            .iter()
            .map(|&l| {
                let mut c = base.clone();
                c.train.loss = l;
                (l.to_string(), c)
            })
            .collect(),
    }
}

/// Trains one model per setting with the same seed and `budget` iterations
/// and reports held-out PSNR.
pub fn run_ablation(
    kind: AblationKind,
    base: &RunConfig,
    budget: usize,
    train: &[Pair],
    eval: &[Pair],
    threads: usize,
    mut progress: impl FnMut(&AblationRow),
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for (setting, mut cfg) in settings(kind, base) {
        cfg.train.iterations = budget;
        let model = Model::build(&cfg.model)?;
        let params = param_count(&model, Variant::L);
        let out = train_loop(model, train, eval, &cfg.train, threads, &Sink::default())?;
        let row = AblationRow {
            kind,
            setting,
            params,
            input_psnr: out.input_psnr,
            eval_psnr: out.final_eval_psnr,
            final_loss: out.log.last().map(|r| r.loss).unwrap_or(f64::NAN),
        };
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting_counts() {
        let base = RunConfig::default();
        assert_eq!(settings(AblationKind::Wavelet, &base).len(), 5);
        assert_eq!(settings(AblationKind::Kernel, &base).len(), 5);
        assert_eq!(settings(AblationKind::Loss, &base).len(), 7);
        assert!("kernels".parse::<AblationKind>().is_err());
    }
}
