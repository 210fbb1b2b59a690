//! Deterministic procedural clean images for desk-scale datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Image;
use crate::tensor::Tensor;

/// Uniform mid-grey test card.
pub fn gray_card(h: usize, w: usize) -> Image {
    Tensor::full(&[3, h, w], 0.5)
}

enum Shape {
    Disc { cx: f64, cy: f64, r: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    /// Signed distance, negative inside.
    fn sdf(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Disc { cx, cy, r } => (x - cx).hypot(y - cy) - r,
            Shape::Rect { x0, y0, x1, y1 } => {
                let dx = (x0 - x).max(x - x1);
                let dy = (y0 - y).max(y - y1);
                if dx <= 0.0 && dy <= 0.0 {
                    dx.max(dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
        }
    }
}

/// A smooth colour gradient with a low-frequency ripple, overlaid with a
/// few soft-edged discs and rectangles. Values stay inside `[0.05, 0.75]`
/// so additive rain has headroom before clipping.
pub fn scene(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut col = || [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    let (c0, c1) = (col(), col());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (ga, gb) = (angle.cos(), angle.sin());
    let freq = rng.gen_range(1.0..3.0) * std::f64::consts::TAU;
    let ripple_phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let n_shapes = rng.gen_range(3..7);
    let shapes: Vec<(Shape, [f64; 3])> = (0..n_shapes)
        .map(|_| {
            let s = if rng.gen_bool(0.5) {
                Shape::Disc {
                    cx: rng.gen_range(0.0..1.0),
                    cy: rng.gen_range(0.0..1.0),
                    r: rng.gen_range(0.08..0.3),
                }
            } else {
                let (x0, y0) = (rng.gen_range(0.0..0.8), rng.gen_range(0.0..0.8));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.gen_range(0.1..0.5),
                    y1: y0 + rng.gen_range(0.1..0.5),
                }
            };
            let c = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            (s, c)
        })
        .collect();
    let edge = 1.5 / h.max(w) as f64;

    let mut img = Tensor::zeros(&[3, h, w]);
    for i in 0..h {
        for j in 0..w {
            let (x, y) = ((j as f64 + 0.5) / w as f64, (i as f64 + 0.5) / h as f64);
            let t = (0.5 + 0.5 * ((x - 0.5) * ga + (y - 0.5) * gb) * 1.4).clamp(0.0, 1.0);
            let ripple = 0.08 * (freq * (x * gb - y * ga) + ripple_phase).sin();
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = c0[c] * (1.0 - t) + c1[c] * t + ripple;
            }
            for (s, sc) in &shapes {
                let a = (0.5 - s.sdf(x, y) / edge).clamp(0.0, 1.0);
                for c in 0..3 {
                    px[c] = px[c] * (1.0 - a) + sc[c] * a;
                }
            }
            for (c, v) in px.iter().enumerate() {
                img.set3(c, i, j, 0.05 + 0.7 * v.clamp(0.0, 1.0));
            }
        }
    }
    img
}
