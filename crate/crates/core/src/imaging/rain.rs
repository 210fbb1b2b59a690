//! Additive synthetic rain: anti-aliased line segments near vertical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Image;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RainParams {
    /// Expected streaks per pixel of image area.
    pub density: f64,
    /// Streak length range in pixels.
    pub length: (f64, f64),
    /// Angle range in degrees from vertical.
    pub angle: (f64, f64),
    /// Peak additive intensity range.
    pub intensity: (f64, f64),
    /// Full streak width in pixels.
    pub thickness: f64,
    pub seed: u64,
}

impl Default for RainParams {
    fn default() -> Self {
        RainParams {
            density: 0.006,
            length: (10.0, 24.0),
            angle: (-8.0, 8.0),
            intensity: (0.3, 0.6),
            thickness: 1.0,
            seed: 7,
        }
    }
}

impl RainParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !(self.density.is_finite() && self.density >= 0.0) {
            return Err(Error::invalid(format!("rain density {} must be >= 0", self.density)));
        }
        if !ordered(self.length) || self.length.0 < 0.0 {
            return Err(Error::invalid("rain length range must be ordered and non-negative"));
        }
        if !ordered(self.angle) || self.angle.0 < -90.0 || self.angle.1 > 90.0 {
            return Err(Error::invalid("rain angle range must be ordered within [-90, 90]"));
        }
        if !ordered(self.intensity) || self.intensity.0 < 0.0 {
            return Err(Error::invalid("rain intensity range must be ordered and non-negative"));
        }
        if !(self.thickness.is_finite() && self.thickness > 0.0) {
            return Err(Error::invalid("rain thickness must be positive"));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Non-negative `h×w` streak layer; a pixel's value is the sum over streaks
/// of intensity times approximate area coverage of a capsule around the
/// segment.
pub fn rain_layer(h: usize, w: usize, p: &RainParams) -> Result<Vec<f64>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let count = (p.density * (h * w) as f64).round() as usize;
    let mut layer = vec![0.0; h * w];
    let half = p.thickness / 2.0;
    for _ in 0..count {
        let cx = rng.gen_range(0.0..w as f64);
        let cy = rng.gen_range(0.0..h as f64);
        let len = draw(&mut rng, p.length);
        let theta = draw(&mut rng, p.angle).to_radians();
        let amp = draw(&mut rng, p.intensity);
        let (dx, dy) = (theta.sin() * len / 2.0, theta.cos() * len / 2.0);
        let (x0, y0, x1, y1) = (cx - dx, cy - dy, cx + dx, cy + dy);
        let reach = half + 1.0;
        let i0 = (y0.min(y1) - reach).floor().max(0.0) as usize;
        let i1 = ((y0.max(y1) + reach).ceil().max(0.0) as usize).min(h);
        let j0 = (x0.min(x1) - reach).floor().max(0.0) as usize;
        let j1 = ((x0.max(x1) + reach).ceil().max(0.0) as usize).min(w);
        let (sx, sy) = (x1 - x0, y1 - y0);
        let ss = sx * sx + sy * sy;
        for i in i0..i1 {
            for j in j0..j1 {
                // pixel centres sit at half-integer coordinates
                let (px, py) = (j as f64 + 0.5, i as f64 + 0.5);
                let t = if ss > 0.0 {
                    (((px - x0) * sx + (py - y0) * sy) / ss).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let d = (px - x0 - t * sx).hypot(py - y0 - t * sy);
                let cover = (half + 0.5 - d).clamp(0.0, 1.0);
                layer[i * w + j] += amp * cover;
            }
        }
    }
    Ok(layer)
}

/// `clamp(clean + rain)` with the same grey streak layer added to every
/// channel.
pub fn synth_rain(clean: &Image, p: &RainParams) -> Result<Image> {
    let (c, h, w) = clean.dims3()?;
    let layer = rain_layer(h, w, p)?;
    Ok(Tensor::from_fn3(c, h, w, |ci, i, j| {
        (clean.at3(ci, i, j) + layer[i * w + j]).clamp(0.0, 1.0)
    }))
}
