use proptest::prelude::*;
use pwfnet::imaging::{psnr, ssim, PSNR_CAP_DB};
use pwfnet::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pattern() -> (Tensor, Tensor) {
    let a = Tensor::from_fn3(3, 24, 20, |c, i, j| 0.5 + 0.4 * (0.3 * i as f64 + 0.7 * j as f64 + c as f64).sin());
    let b = Tensor::from_fn3(3, 24, 20, |c, i, j| {
        a.at3(c, i, j) + 0.05 * (1.3 * i as f64 - 0.4 * j as f64 + 2.0 * c as f64).cos()
    });
    (a, b)
}

// skimage.metrics with gaussian_weights, sigma 1.5, population covariance,
// data_range 1 on the pattern pair above
const SKIMAGE_SSIM: f64 = 0.9891972267255625;
const SKIMAGE_PSNR: f64 = 29.03069429333325;

#[test]
fn agrees_with_scikit_image() {
    let (a, b) = pattern();
    assert!((ssim(&a, &b).unwrap() - SKIMAGE_SSIM).abs() < 1e-10);
    assert!((psnr(&a, &b).unwrap() - SKIMAGE_PSNR).abs() < 1e-10);
}

/// Direct per-window SSIM with an explicitly built Gaussian, averaged over
/// all fully-contained 11x11 windows and then over channels.
fn naive_ssim(a: &Tensor, b: &Tensor) -> f64 {
    let (c, h, w) = a.dims3().unwrap();
    let g: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / (2.0 * 1.5 * 1.5)).exp()).collect();
    let total: f64 = g.iter().sum::<f64>().powi(2);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut acc = 0.0;
    for ch in 0..c {
        let mut sum = 0.0;
        let mut n = 0;
        for y in 0..=h - 11 {
            for x in 0..=w - 11 {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let k = g[i] * g[j] / total;
                        let (p, q) = (a.at3(ch, y + i, x + j), b.at3(ch, y + i, x + j));
                        ma += k * p;
                        mb += k * q;
                        saa += k * p * p;
                        sbb += k * q * q;
                        sab += k * p * q;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                n += 1;
            }
        }
        acc += sum / n as f64;
    }
    acc / c as f64
}

#[test]
fn ssim_matches_direct_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = Tensor::random_uniform(&[2, 16, 19], 0.0, 1.0, &mut rng);
    let b = a.zip_map(&Tensor::random_uniform(&[2, 16, 19], -0.1, 0.1, &mut rng), |x, y| x + y).unwrap();
    assert!((ssim(&a, &b).unwrap() - naive_ssim(&a, &b)).abs() < 1e-12);
}

#[test]
fn identical_images_hit_the_caps() {
    let (a, _) = pattern();
    assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
    assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn psnr_of_known_mse() {
    let a = Tensor::zeros(&[1, 4, 4]);
    let b = Tensor::full(&[1, 4, 4], 0.1);
    // mse = 0.01 -> 20 dB
    assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-12);
}

#[test]
fn mismatched_shapes_are_errors() {
    let a = Tensor::zeros(&[1, 16, 16]);
    let b = Tensor::zeros(&[1, 16, 12]);
    assert!(psnr(&a, &b).is_err());
    assert!(ssim(&a, &b).is_err());
    assert!(ssim(&Tensor::zeros(&[1, 8, 8]), &Tensor::zeros(&[1, 8, 8])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psnr_is_symmetric(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::random_uniform(&[3, 12, 12], 0.0, 1.0, &mut rng);
        let b = Tensor::random_uniform(&[3, 12, 12], 0.0, 1.0, &mut rng);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        let s = (ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        prop_assert!((s.0 - s.1).abs() < 1e-14);
    }

    #[test]
    fn psnr_falls_as_noise_grows(seed in 0u64..10_000, s1 in 0.01f64..0.2, grow in 1.1f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::random_uniform(&[1, 12, 12], 0.0, 1.0, &mut rng);
        let n = Tensor::random_uniform(&[1, 12, 12], -1.0, 1.0, &mut rng);
        let near = a.add(&n.scale(s1)).unwrap();
        let far = a.add(&n.scale(s1 * grow)).unwrap();
        prop_assert!(psnr(&a, &near).unwrap() > psnr(&a, &far).unwrap());
    }
}
