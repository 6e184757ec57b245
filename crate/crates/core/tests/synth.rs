use camokit_core::raster::{chamfer_distance, directed_distances, hausdorff_distance, BinaryMask};
use camokit_core::rng::Stream;
use camokit_core::sketch::AugmentConfig;
use camokit_core::synth::{gen_mask, gen_sample, gt_sketch, mask_boundary, value_noise, SynthConfig};

fn directed_max(from: &BinaryMask, to: &BinaryMask) -> f64 {
    directed_distances(from, to).unwrap().into_iter().fold(0.0, f64::max)
}

fn suite_mask(seed: u64) -> BinaryMask {
    gen_mask(128, 128, 3, &mut Stream::new(seed)).unwrap()
}

#[test]
fn same_seed_same_sample() {
    let cfg = SynthConfig { seed: 77, ..Default::default() };
    let a = gen_sample(&cfg).unwrap();
    let b = gen_sample(&cfg).unwrap();
    assert_eq!(a, b);
    let c = gen_sample(&SynthConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(a.mask, c.mask);
}

#[test]
fn masks_are_nonempty_and_not_full() {
    for seed in 0..100 {
        let s = gen_sample(&SynthConfig { seed, ..Default::default() }).unwrap();
        assert!(!s.mask.is_empty(), "seed {seed}");
        assert!(s.mask.count() < 128 * 128, "seed {seed}");
        assert!(!s.sketch.is_empty(), "seed {seed}");
    }
}

#[test]
fn zero_delta_hides_the_object() {
    let cfg = SynthConfig { delta: 0.0, seed: 5, ..Default::default() };
    let s = gen_sample(&cfg).unwrap();
    let noise = value_noise(128, 128, cfg.noise_scale, &mut Stream::split(5, 0));
    assert_eq!(s.image.data(), noise.as_slice());
    let with = gen_sample(&SynthConfig { delta: 0.2, ..cfg }).unwrap();
    assert_eq!(with.mask, s.mask);
    assert_ne!(with.image, s.image);
}

#[test]
fn config_validation() {
    assert!(gen_sample(&SynthConfig { height: 16, ..Default::default() }).is_err());
    assert!(gen_sample(&SynthConfig { delta: 0.6, ..Default::default() }).is_err());
    assert!(gen_sample(&SynthConfig { blob_count: 0, ..Default::default() }).is_err());
    assert!(gt_sketch(&BinaryMask::empty(64, 64).unwrap(), &AugmentConfig::default()).is_err());
}

#[test]
fn clean_square_sketch_is_closed_and_close() {
    let sq = BinaryMask::from_fn(128, 128, |r, c| (20..=100).contains(&r) && (20..=100).contains(&c)).unwrap();
    let ring = mask_boundary(&sq).unwrap();
    let out = gt_sketch(&sq, &AugmentConfig { increment: 0.0, ..Default::default() }).unwrap();
    assert!(hausdorff_distance(&out.raster, &ring) <= 3.0);
    // One loop: a single component enclosing one hole.
    assert_eq!(camokit_core::raster::euler_number(&out.raster), 0);
}

#[test]
fn clean_sketch_stays_on_the_boundary() {
    for seed in 0..100 {
        let mask = suite_mask(seed);
        let b = mask_boundary(&mask).unwrap();
        let out = gt_sketch(&mask, &AugmentConfig { increment: 0.0, seed, ..Default::default() }).unwrap();
        assert!(directed_max(&out.raster, &b) <= 3.0, "seed {seed}");
    }
}

#[test]
fn perturbed_sketch_within_delta_plus_fit_budget() {
    for seed in 0..100 {
        let mask = suite_mask(seed);
        let b = mask_boundary(&mask).unwrap();
        for k in [8.0, 20.0] {
            let out = gt_sketch(&mask, &AugmentConfig { increment: k, seed, ..Default::default() }).unwrap();
            assert!(directed_max(&out.raster, &b) <= out.delta + 3.0, "seed {seed} K {k}");
        }
    }
}

#[test]
fn chamfer_grows_with_increment() {
    let mut sums = [0.0; 3];
    for seed in 0..20 {
        let mask = suite_mask(seed);
        let clean = mask_boundary(&mask).unwrap();
        for (slot, k) in [0.0, 8.0, 20.0].into_iter().enumerate() {
            let out = gt_sketch(&mask, &AugmentConfig { increment: k, seed, ..Default::default() }).unwrap();
            sums[slot] += chamfer_distance(&clean, &out.raster);
        }
    }
    assert!(sums[0] < sums[1] && sums[1] < sums[2], "{sums:?}");
}
