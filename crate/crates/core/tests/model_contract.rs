use pwfnet::imaging::rain::{synth_rain, RainParams};
use pwfnet::imaging::scenes::scene;
use pwfnet::model::{multi_input, MixerKernel, Model, ModelConfig, Variant};
use pwfnet::tensor::Tensor;
use pwfnet::train::{sample_gradients, LossSet, TrainConfig};
use pwfnet::wavelet::FamilyTag;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OUTPUTS: [&str; 3] = ["o4", "o2", "o1"];

fn micro(c: usize) -> ModelConfig {
    ModelConfig {
        base_channels: c,
        blocks_per_level: [1, 1, 1],
        ..Default::default()
    }
}

/// Every parameter, heads included, drawn at random so no path is trivially zero.
fn scrambled(cfg: &ModelConfig, seed: u64, scale: f64) -> Model {
    let mut m = Model::build(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in &mut m.params {
        let taps = p.name.ends_with(".lo") || p.name.ends_with(".hi");
        for v in p.value.data_mut() {
            *v = if taps { *v + rng.gen_range(-0.05..0.05) } else { rng.gen_range(-scale..scale) };
        }
    }
    m
}

#[test]
fn fresh_model_is_the_identity_for_every_variant_and_family() {
    let x = scene(32, 32, 2);
    for family in FamilyTag::ALL {
        for kernel in [MixerKernel::Global, MixerKernel::Window(8)] {
            let cfg = ModelConfig {
                family,
                mixer_kernel: kernel,
                ..micro(4)
            };
            let m = Model::build(&cfg).unwrap();
            let mi = multi_input(&x, &m.family(), 3).unwrap();
            for v in Variant::ALL {
                let o = m.forward(&x, v).unwrap();
                assert!(o.o1 == x, "{} {} {}", family, kernel, v);
                assert!(o.o2 == mi.i2 && o.o4 == mi.i4);
            }
        }
    }
}

#[test]
fn default_model_is_the_identity() {
    let x = scene(64, 64, 8);
    let deg = synth_rain(&x, &RainParams::default()).unwrap();
    let m = Model::build(&ModelConfig::default()).unwrap();
    assert!(m.forward(&deg, Variant::L).unwrap().o1 == deg);
}

#[test]
fn variants_share_bit_identical_prefixes() {
    let m = scrambled(&micro(4), 5, 0.3);
    let x = scene(32, 32, 6);
    let traces: Vec<Vec<(String, Tensor)>> = Variant::ALL.iter().map(|&v| m.forward_traced(&x, v).unwrap().1).collect();
    let inner = |t: &[(String, Tensor)]| -> Vec<(String, Tensor)> {
        t.iter().filter(|(n, _)| !OUTPUTS.contains(&n.as_str())).cloned().collect()
    };
    for k in 0..2 {
        let (small, large) = (inner(&traces[k]), inner(&traces[k + 1]));
        assert!(small.len() < large.len());
        for (a, b) in small.iter().zip(&large) {
            assert_eq!(a.0, b.0);
            assert!(a.1 == b.1, "{} differs", a.0);
        }
    }
    let o4 = |t: &[(String, Tensor)]| t.iter().find(|(n, _)| n == "o4").unwrap().1.clone();
    assert!(o4(&traces[0]) == o4(&traces[2]));
    let o1 = |t: &[(String, Tensor)]| t.iter().find(|(n, _)| n == "o1").unwrap().1.clone();
    assert!(o1(&traces[0]) != o1(&traces[2]));
}

#[test]
fn end_to_end_gradients_match_finite_differences() {
    let cfg = micro(2);
    let model = scrambled(&cfg, 17, 0.25);
    let clean = scene(16, 16, 4);
    let deg = synth_rain(&clean, &RainParams::default()).unwrap();
    let tc = TrainConfig {
        loss: LossSet {
            spatial: true,
            wavelet: true,
            fourier: true,
        },
        ..Default::default()
    };
    let (_, grads) = sample_gradients(&model, &deg, &clean, &tc).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..32 {
        let pi = rng.gen_range(0..model.params.len());
        let i = rng.gen_range(0..model.params[pi].numel());
        let analytic = grads[pi].as_ref().map_or(0.0, |g| g.data()[i]);
        let eval = |delta: f64| {
            let mut m = model.clone();
            m.params[pi].value.data_mut()[i] += delta;
            sample_gradients(&m, &deg, &clean, &tc).unwrap().0
        };
        let numeric = (eval(h) - eval(-h)) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2);
        assert!(rel <= 1e-3, "{}[{}]: analytic {} numeric {}", model.params[pi].name, i, analytic, numeric);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-3);
}

#[test]
fn odd_channel_width_is_rejected() {
    assert!(Model::build(&micro(3)).is_err());
    let bad = ModelConfig {
        mixer_kernel: MixerKernel::Window(12),
        ..micro(4)
    };
    assert!(Model::build(&bad).is_err());
}

#[test]
fn inputs_must_divide_by_four() {
    let m = Model::build(&micro(2)).unwrap();
    assert!(m.forward(&Tensor::zeros(&[3, 18, 16]), Variant::S).is_err());
    assert!(m.forward(&Tensor::zeros(&[1, 16, 16]), Variant::S).is_err());
}

#[test]
fn parameter_names_are_unique_and_seeded() {
    let a = Model::build(&micro(4)).unwrap();
    let mut names: Vec<&str> = a.params.iter().map(|p| p.name.as_str()).collect();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), a.params.len());
    assert_eq!(a, Model::build(&micro(4)).unwrap());
    let b = Model::build(&ModelConfig { seed: 1, ..micro(4) }).unwrap();
    assert_ne!(a, b);
    assert!(a.params.iter().all(|p| p.value.data().iter().all(|&v| v == v as f32 as f64)));
}
