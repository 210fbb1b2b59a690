use crate::error::{Error, Result};

/// Cosine annealing from `lr0` at step 0 to `lr_min` at `total`.
pub fn cosine_lr(step: usize, total: usize, lr0: f64, lr_min: f64) -> Result<f64> {
    if step > total {
        return Err(Error::invalid(format!("step {} beyond schedule length {}", step, total)));
    }
    if total == 0 {
        return Ok(lr0);
    }
    let t = step as f64 / total as f64;
    Ok(lr_min + (lr0 - lr_min) * (1.0 + (std::f64::consts::PI * t).cos()) / 2.0)
}
