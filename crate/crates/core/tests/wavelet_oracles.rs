use proptest::prelude::*;
use pwfnet::tensor::Tensor;
use pwfnet::wavelet::{dwt2, filter_bank, idwt2, pyramid, reconstruct, Band, FamilyTag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Decomposition low/high filters as published by PyWavelets (v1.x).
const REFERENCE_DEC: [(&str, &[f64], &[f64]); 5] = [
    ("haar", &[0.7071067811865476, 0.7071067811865476], &[-0.7071067811865476, 0.7071067811865476]),
    (
        "db2",
        &[-0.12940952255126037, 0.2241438680420134, 0.8365163037378079, 0.48296291314453416],
        &[-0.48296291314453416, 0.8365163037378079, -0.2241438680420134, -0.12940952255126037],
    ),
    (
        "sym4",
        &[
            -0.07576571478927333,
            -0.02963552764599851,
            0.49761866763201545,
            0.8037387518059161,
            0.29785779560527736,
            -0.09921954357684722,
            -0.012603967262037833,
            0.0322231006040427,
        ],
        &[
            -0.0322231006040427,
            -0.012603967262037833,
            0.09921954357684722,
            0.29785779560527736,
            -0.8037387518059161,
            0.49761866763201545,
            0.02963552764599851,
            -0.07576571478927333,
        ],
    ),
    (
        "coif1",
        &[
            -0.015655728135791993,
            -0.07273261951252645,
            0.3848648468648578,
            0.8525720202116004,
            0.3378976624574818,
            -0.07273261951252645,
        ],
        &[
            0.07273261951252645,
            0.3378976624574818,
            -0.8525720202116004,
            0.3848648468648578,
            0.07273261951252645,
            -0.015655728135791993,
        ],
    ),
    (
        "bior2.2",
        &[0.0, -0.1767766952966369, 0.3535533905932738, 1.0606601717798212, 0.3535533905932738, -0.1767766952966369],
        &[0.0, 0.3535533905932738, -0.7071067811865476, 0.3535533905932738, 0.0, 0.0],
    ),
];

fn random(shape: &[usize], seed: u64) -> Tensor {
    Tensor::random_uniform(shape, -1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn filters_match_published_coefficients() {
    for (name, lo, hi) in REFERENCE_DEC {
        let f = filter_bank(name.parse().unwrap());
        assert_eq!(f.analysis_lo.len(), lo.len(), "{}", name);
        for (a, b) in f.analysis_lo.iter().zip(lo).chain(f.analysis_hi.iter().zip(hi)) {
            // published sym4 values are only orthonormal to ~5e-13
            assert!((a - b).abs() < 1e-12, "{}: {} vs {}", name, a, b);
        }
    }
}

#[test]
fn lowpass_admissibility() {
    for tag in FamilyTag::ALL {
        let f = filter_bank(tag);
        let s: f64 = f.analysis_lo.iter().sum();
        assert!((s - 2f64.sqrt()).abs() < 1e-14, "{} sums to {}", tag, s);
        let d: f64 = f.analysis_hi.iter().sum();
        assert!(d.abs() < 1e-14, "{} high-pass sums to {}", tag, d);
    }
}

/// One 2-D analysis step written as a direct double sum over both tap
/// indices: `band[k, l] = Σ_i Σ_j row[i] · col[j] · x[(2k+i) mod H, (2l+j) mod W]`
/// with taps = reversed decomposition filters.
fn naive_dwt(x: &Tensor, lo: &[f64], hi: &[f64]) -> [Tensor; 4] {
    let (c, h, w) = x.dims3().unwrap();
    let rl: Vec<f64> = lo.iter().rev().copied().collect();
    let rh: Vec<f64> = hi.iter().rev().copied().collect();
    // (width filter, height filter) per band, first letter = width
    let pick = |b: Band| match b {
        Band::LL => (&rl, &rl),
        Band::LH => (&rl, &rh),
        Band::HL => (&rh, &rl),
        Band::HH => (&rh, &rh),
    };
    Band::ALL.map(|b| {
        let (fw, fh) = pick(b);
        Tensor::from_fn3(c, h / 2, w / 2, |ci, k, l| {
            let mut s = 0.0;
            for (i, &a) in fh.iter().enumerate() {
                for (j, &bj) in fw.iter().enumerate() {
                    s += a * bj * x.at3(ci, (2 * k + i) % h, (2 * l + j) % w);
                }
            }
            s
        })
    })
}

#[test]
fn dwt_matches_direct_double_sum() {
    let x = random(&[2, 12, 16], 11);
    for tag in FamilyTag::ALL {
        let f = filter_bank(tag);
        let sb = dwt2(&x, &f).unwrap();
        let want = naive_dwt(&x, &f.analysis_lo, &f.analysis_hi);
        for (b, w) in Band::ALL.iter().zip(&want) {
            let err = sb.band(*b).max_abs_diff(w).unwrap();
            assert!(err < 1e-13, "{} {}: {}", tag, b.name(), err);
        }
    }
}

#[test]
fn vertical_lines_land_in_hl() {
    // columns alternate: pure horizontal variation
    let x = Tensor::from_fn3(1, 16, 16, |_, _, j| if j % 2 == 0 { 1.0 } else { -1.0 });
    let sb = dwt2(&x, &filter_bank(FamilyTag::Haar)).unwrap();
    let e = |b: Band| sb.band(b).sum_sq();
    assert!(e(Band::HL) > 0.0);
    assert_eq!(e(Band::LL) + e(Band::LH) + e(Band::HH), 0.0);
}

#[test]
fn perfect_reconstruction_all_families_levels() {
    let x = random(&[3, 64, 64], 1);
    for tag in FamilyTag::ALL {
        let f = filter_bank(tag);
        for levels in 1..=4 {
            let r = reconstruct(&pyramid(&x, &f, levels).unwrap(), &f).unwrap();
            let err = r.max_abs_diff(&x).unwrap();
            assert!(err <= 1e-8, "{} L{}: {}", tag, levels, err);
        }
    }
}

#[test]
fn odd_extents_reconstruct_after_crop() {
    let x = random(&[1, 9, 13], 2);
    for tag in FamilyTag::ALL {
        let f = filter_bank(tag);
        let r = idwt2(&dwt2(&x, &f).unwrap(), &f).unwrap();
        assert_eq!(r.shape(), x.shape());
        assert!(r.max_abs_diff(&x).unwrap() < 1e-10, "{}", tag);
    }
}

#[test]
fn too_deep_pyramid_is_rejected() {
    let x = random(&[1, 8, 8], 3);
    assert!(pyramid(&x, &filter_bank(FamilyTag::Haar), 4).is_err());
    assert!(pyramid(&x, &filter_bank(FamilyTag::Haar), 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analysis_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0, fi in 0usize..5) {
        let f = filter_bank(FamilyTag::ALL[fi]);
        let x = random(&[1, 8, 12], seed);
        let y = random(&[1, 8, 12], seed + 7);
        let mix = x.scale(a).add(&y.scale(b)).unwrap();
        let lhs = dwt2(&mix, &f).unwrap();
        let (sx, sy) = (dwt2(&x, &f).unwrap(), dwt2(&y, &f).unwrap());
        for band in Band::ALL {
            let rhs = sx.band(band).scale(a).add(&sy.band(band).scale(b)).unwrap();
            prop_assert!(lhs.band(band).max_abs_diff(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_families_preserve_energy(seed in 0u64..1000, fi in 0usize..4) {
        let tag = FamilyTag::ALL[fi];
        prop_assume!(tag.is_orthogonal());
        let x = random(&[2, 16, 8], seed);
        let sb = dwt2(&x, &filter_bank(tag)).unwrap();
        prop_assert!((sb.energy() - x.sum_sq()).abs() < 1e-10 * x.sum_sq());
    }
}
