use proptest::prelude::*;
use pwfnet::imaging::rain::{synth_rain, RainParams};
use pwfnet::imaging::scenes::{gray_card, scene};
use pwfnet::imaging::psnr;
use pwfnet::swap::{subband_exchange, subband_swap, swap_table, BandSet, SwapMode, SwapSpec};
use pwfnet::tensor::Tensor;
use pwfnet::wavelet::{filter_bank, Band, FamilyTag};
use std::time::Instant;

// Golden values of the seed-7 rain benchmark on a 64x64 gray card,
// established by the first oracle run and pinned thereafter.
const GRAY_CARD_INPUT_PSNR: f64 = 18.806297093112416;
const GRAY_CARD_LL_HL_PSNR: f64 = 30.422522913077398;

fn benchmark() -> (Tensor, Tensor) {
    let clean = gray_card(64, 64);
    let deg = synth_rain(&clean, &RainParams::default()).unwrap();
    (deg, clean)
}

// Plain Haar pyramid with explicit 2x2 butterflies, written independently
// of the library transform.
fn haar_step(x: &[f64], h: usize, w: usize) -> [Vec<f64>; 4] {
    let (h2, w2) = (h / 2, w / 2);
    let mut out = [vec![0.0; h2 * w2], vec![0.0; h2 * w2], vec![0.0; h2 * w2], vec![0.0; h2 * w2]];
    for k in 0..h2 {
        for l in 0..w2 {
            let a = x[2 * k * w + 2 * l];
            let b = x[2 * k * w + 2 * l + 1];
            let c = x[(2 * k + 1) * w + 2 * l];
            let d = x[(2 * k + 1) * w + 2 * l + 1];
            let i = k * w2 + l;
            out[0][i] = (a + b + c + d) / 2.0;
            out[1][i] = (a + b - c - d) / 2.0; // low along width, high along height
            out[2][i] = (a - b + c - d) / 2.0; // high along width
            out[3][i] = (a - b - c + d) / 2.0;
        }
    }
    out
}

fn haar_inverse(bands: &[Vec<f64>; 4], h2: usize, w2: usize) -> Vec<f64> {
    let w = 2 * w2;
    let mut x = vec![0.0; 4 * h2 * w2];
    for k in 0..h2 {
        for l in 0..w2 {
            let i = k * w2 + l;
            let (s, v, u, q) = (bands[0][i], bands[1][i], bands[2][i], bands[3][i]);
            x[2 * k * w + 2 * l] = (s + v + u + q) / 2.0;
            x[2 * k * w + 2 * l + 1] = (s + v - u - q) / 2.0;
            x[(2 * k + 1) * w + 2 * l] = (s - v + u - q) / 2.0;
            x[(2 * k + 1) * w + 2 * l + 1] = (s - v - u + q) / 2.0;
        }
    }
    x
}

/// Swaps HL at every level plus the deepest LL, per channel.
fn oracle_ll_hl(deg: &Tensor, clean: &Tensor, levels: usize) -> Tensor {
    let (c, h, w) = deg.dims3().unwrap();
    let mut out = Tensor::zeros(&[c, h, w]);
    for ch in 0..c {
        let (mut a, mut b) = (deg.channel(ch).to_vec(), clean.channel(ch).to_vec());
        let mut stack = Vec::new();
        let (mut ch_h, mut ch_w) = (h, w);
        for _ in 0..levels {
            let mut da = haar_step(&a, ch_h, ch_w);
            let db = haar_step(&b, ch_h, ch_w);
            da[2] = db[2].clone();
            a = da[0].clone();
            b = db[0].clone();
            ch_h /= 2;
            ch_w /= 2;
            stack.push(da);
        }
        let mut cur = b; // deepest LL from the clean image
        while let Some(mut bands) = stack.pop() {
            bands[0] = cur;
            cur = haar_inverse(&bands, ch_h, ch_w);
            ch_h *= 2;
            ch_w *= 2;
        }
        out.channel_mut(ch).copy_from_slice(&cur);
    }
    out.clamp(0.0, 1.0)
}

#[test]
fn benchmark_input_psnr_is_pinned() {
    let (deg, clean) = benchmark();
    assert!((psnr(&deg, &clean).unwrap() - GRAY_CARD_INPUT_PSNR).abs() < 1e-9);
}

#[test]
fn ll_hl_row_matches_oracle_and_pin() {
    let t = Instant::now();
    let (deg, clean) = benchmark();
    let haar = filter_bank(FamilyTag::Haar);
    let report = swap_table(&deg, &clean, 3, &haar, SwapMode::Whole, 0.5).unwrap();
    let row = report.row(BandSet::of(&[Band::LL, Band::HL]));
    let oracle = psnr(&oracle_ll_hl(&deg, &clean, 3), &clean).unwrap();
    assert!((row.psnr_db - oracle).abs() < 1e-9, "{} vs {}", row.psnr_db, oracle);
    assert!((row.psnr_db - GRAY_CARD_LL_HL_PSNR).abs() < 1e-9);
    assert!(row.psnr_db - report.baseline().psnr_db >= 5.0);
    assert!(row.psnr_db > report.row(BandSet::of(&[Band::LH])).psnr_db);
    assert!(t.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn extreme_rows() {
    let (deg, clean) = benchmark();
    for tag in FamilyTag::ALL {
        let f = filter_bank(tag);
        let all = subband_swap(&deg, &clean, &SwapSpec::whole(3, BandSet::ALL), &f).unwrap();
        assert!(all.max_abs_diff(&clean).unwrap() < 1e-12, "{}", tag);
        assert_eq!(psnr(&all, &clean).unwrap(), 100.0);
        let none = subband_swap(&deg, &clean, &SwapSpec::whole(3, BandSet::EMPTY), &f).unwrap();
        assert!(none.max_abs_diff(&deg).unwrap() < 1e-12, "{}", tag);
    }
}

#[test]
fn table_has_sixteen_distinct_rows_and_csv_header() {
    let clean = scene(32, 32, 4);
    let deg = synth_rain(&clean, &RainParams::default()).unwrap();
    let r = swap_table(&deg, &clean, 2, &filter_bank(FamilyTag::Db2), SwapMode::Whole, 0.5).unwrap();
    assert_eq!(r.rows.len(), 16);
    let csv = r.to_csv();
    assert!(csv.starts_with("bands,mode,cutoff,psnr_db,ssim\n"));
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn masked_mode_at_full_cutoff_moves_nothing() {
    let clean = scene(32, 32, 5);
    let deg = synth_rain(&clean, &RainParams::default()).unwrap();
    let f = filter_bank(FamilyTag::Haar);
    let spec = SwapSpec {
        levels: 2,
        bands: BandSet::of(&[Band::HL]),
        mode: SwapMode::Masked,
        cutoff: 1.0,
    };
    // nothing lies above the corner radius, so nothing moves
    let out = subband_swap(&deg, &clean, &spec, &f).unwrap();
    assert!(out.max_abs_diff(&deg.clamp(0.0, 1.0)).unwrap() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exchange_is_an_involution(seed in 0u64..1000, bits in 0u8..16, fi in 0usize..5, masked: bool, cutoff in 0.0f64..1.0) {
        let f = filter_bank(FamilyTag::ALL[fi]);
        let a = scene(16, 16, seed);
        let b = scene(16, 16, seed + 1);
        let spec = SwapSpec {
            levels: 2,
            bands: BandSet::from_bits(bits).unwrap(),
            mode: if masked { SwapMode::Masked } else { SwapMode::Whole },
            cutoff,
        };
        let (a1, b1) = subband_exchange(&a, &b, &spec, &f).unwrap();
        let (a2, b2) = subband_exchange(&a1, &b1, &spec, &f).unwrap();
        prop_assert!(a2.max_abs_diff(&a).unwrap() < 1e-10);
        prop_assert!(b2.max_abs_diff(&b).unwrap() < 1e-10);
    }
}
