use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::tensor::Tensor;

/// One random geometric transform shared by a clean/degraded pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentDraw {
    pub top: usize,
    pub left: usize,
    pub patch: usize,
    /// Counter-clockwise quarter turns.
    pub quarter_turns: u8,
    pub flip_h: bool,
    pub flip_v: bool,
}

impl AugmentDraw {
    pub fn identity(patch: usize) -> Self {
        AugmentDraw {
            top: 0,
            left: 0,
            patch,
            quarter_turns: 0,
            flip_h: false,
            flip_v: false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(h: usize, w: usize, patch: usize, rng: &mut R) -> Result<Self> {
        if patch == 0 || patch > h || patch > w {
            return Err(Error::invalid(format!("patch {} does not fit a {}x{} image", patch, h, w)));
        }
        Ok(AugmentDraw {
            top: rng.gen_range(0..=h - patch),
            left: rng.gen_range(0..=w - patch),
            patch,
            quarter_turns: rng.gen_range(0..4),
            flip_h: rng.gen_bool(0.5),
            flip_v: rng.gen_bool(0.5),
        })
    }

    pub fn apply(&self, img: &Image) -> Result<Image> {
        let (c, h, w) = img.dims3()?;
        let p = self.patch;
        if self.top + p > h || self.left + p > w {
            return Err(Error::invalid(format!("patch {} does not fit a {}x{} image", p, h, w)));
        }
        let mut out = crop(img, self.top, self.left, p)?;
        out = rot90(&out, self.quarter_turns as usize)?;
        if self.flip_h {
            out = Tensor::from_fn3(c, p, p, |ci, i, j| out.at3(ci, i, p - 1 - j));
        }
        if self.flip_v {
            out = Tensor::from_fn3(c, p, p, |ci, i, j| out.at3(ci, p - 1 - i, j));
        }
        Ok(out)
    }
}

pub fn crop(img: &Image, top: usize, left: usize, size: usize) -> Result<Image> {
    let (c, h, w) = img.dims3()?;
    if top + size > h || left + size > w {
        return Err(Error::invalid("crop outside image"));
    }
    Ok(Tensor::from_fn3(c, size, size, |ci, i, j| img.at3(ci, top + i, left + j)))
}

/// Rotates counter-clockwise by `k` quarter turns.
pub fn rot90(img: &Image, k: usize) -> Result<Image> {
    let (c, h, w) = img.dims3()?;
    Ok(match k % 4 {
        0 => img.clone(),
        1 => Tensor::from_fn3(c, w, h, |ci, i, j| img.at3(ci, j, w - 1 - i)),
        2 => Tensor::from_fn3(c, h, w, |ci, i, j| img.at3(ci, h - 1 - i, w - 1 - j)),
        _ => Tensor::from_fn3(c, w, h, |ci, i, j| img.at3(ci, h - 1 - j, i)),
    })
}

/// Applies one random draw to both images.
pub fn augment<R: Rng + ?Sized>(clean: &Image, degraded: &Image, patch: usize, rng: &mut R) -> Result<(Image, Image)> {
    clean.check_same_shape(degraded)?;
    let (_, h, w) = clean.dims3()?;
    let d = AugmentDraw::sample(h, w, patch, rng)?;
    Ok((d.apply(clean)?, d.apply(degraded)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(h: usize, w: usize) -> Image {
        Tensor::from_fn3(2, h, w, |c, i, j| (c * 100 + i * 10 + j) as f64)
    }

    #[test]
    fn identity_draw_is_identity() {
        let x = ramp(6, 6);
        assert_eq!(AugmentDraw::identity(6).apply(&x).unwrap(), x);
    }

    #[test]
    fn quarter_turn_moves_top_right_to_top_left() {
        let x = ramp(3, 3);
        let r = rot90(&x, 1).unwrap();
        assert_eq!(r.at3(0, 0, 0), x.at3(0, 0, 2));
        assert_eq!(rot90(&r, 1).unwrap(), rot90(&x, 2).unwrap());
        assert_eq!(rot90(&rot90(&x, 3).unwrap(), 1).unwrap(), x);
    }

    #[test]
    fn pairs_stay_aligned() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = ramp(9, 7);
        for _ in 0..20 {
            let (a, b) = augment(&x, &x, 4, &mut rng).unwrap();
            assert_eq!(a, b);
        }
        assert!(augment(&x, &x, 8, &mut rng).is_err());
    }
}
