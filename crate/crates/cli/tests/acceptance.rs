//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use camokit_core::losses::{
    adaptive_focal_loss, bce_dice, boundary_f1, extract_boundary, focal_loss, LossConfig,
};
use camokit_core::neural::{
    cross_attention, fusion_forward, grad_check, make_target, FusionParams, GradDims, GradOp, Tensor,
};
use camokit_core::losses::LossId;
use camokit_core::raster::{
    chamfer_distance, euler_number, load_raster, read_pf32, read_pgm, save_mask, save_prob, write_pf32, write_pgm,
    BinaryMask, ProbMap, Raster,
};
use camokit_core::rng::Stream;
use camokit_core::sketch::{compute_delta, fit_cubic_bezier_with_params, has_full_block, skeletonize, AugmentConfig, Point};
use camokit_core::synth::{gen_mask, gt_sketch, mask_boundary};
use camokit_oracle::geometry::{jittered_samples, random_cubic};
use camokit_oracle::losses as oracle;
use camokit_oracle::raster::{euler_by_components, random_shape};
use camokit_oracle::TestRng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn bezier_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = TestRng::new(101);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let c = random_cubic(&mut rng, 64.0);
        let m = 16 + rng.below(33);
        let (pts, t) = jittered_samples(c, m, &mut rng);
        let points: Vec<Point> = pts.iter().map(|p| Point::new(p[0], p[1])).collect();
        let fit = fit_cubic_bezier_with_params(&points, &t).map_err(|e| e.to_string())?;
        for (got, want) in [(fit.curve.p1, c[1]), (fit.curve.p2, c[2])] {
            let err = (got.x - want[0]).abs().max((got.y - want[1]).abs());
            worst = worst.max(err);
            ensure!(err <= 1e-6, "curve {i}: control error {err:e}");
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!("100 curves, worst control error {worst:.1e}, {took:.0?}"))
}

fn delta_arithmetic() -> Outcome {
    for (row, c, k, want) in [(128, 64, 8.0, 16.0), (63, 64, 8.0, 0.0), (200, 64, 20.0, 60.0)] {
        let got = compute_delta(row, c, k).map_err(|e| e.to_string())?;
        ensure!(got == want, "({row},{c},{k}) gave {got}, want {want}");
    }
    let mut rng = TestRng::new(102);
    for _ in 0..1000 {
        let row = rng.below(100_000);
        let c = 1 + rng.below(1000);
        let k = rng.below(100) as u64;
        let want = ((row / c) as u64 * k) as f64;
        let got = compute_delta(row, c, k as f64).map_err(|e| e.to_string())?;
        ensure!(got == want, "({row},{c},{k}) gave {got}, want {want}");
    }
    Ok("case table and 1000 random triples exact".into())
}

fn boundary_machinery() -> Outcome {
    let m5 = |f: &dyn Fn(usize, usize) -> bool| BinaryMask::from_fn(5, 5, f).unwrap();
    let dot = m5(&|r, c| r == 2 && c == 2);
    ensure!(extract_boundary(&dot.to_prob(), 3).unwrap() == dot.to_prob(), "single-pixel boundary differs");
    let square = m5(&|r, c| (1..=3).contains(&r) && (1..=3).contains(&c));
    let ring = m5(&|r, c| square.get(r, c) && (r, c) != (2, 2));
    ensure!(extract_boundary(&square.to_prob(), 3).unwrap() == ring.to_prob(), "3x3 square boundary differs");
    let gt = BinaryMask::from_fn(16, 16, |r, c| (3..11).contains(&r) && (4..12).contains(&c)).unwrap();
    let same = boundary_f1(&gt.to_prob(), &gt, 3, 3).unwrap().loss;
    ensure!(same == 0.0, "pred = gt gave loss {same}");
    let far_gt = BinaryMask::from_fn(32, 32, |r, c| r < 6 && c < 6).unwrap();
    let far_pd = BinaryMask::from_fn(32, 32, |r, c| r > 24 && c > 24).unwrap();
    let far = boundary_f1(&far_pd.to_prob(), &far_gt, 3, 3).unwrap().loss;
    ensure!(far == 1.0, "far-disjoint gave loss {far}");
    Ok("hand maps exact, identical 0, far-disjoint 1".into())
}

fn loss_oracles() -> Outcome {
    let cfg = LossConfig::default();
    let mut rng = TestRng::new(103);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let pred = ProbMap::new(16, 16, (0..256).map(|_| rng.unit()).collect()).unwrap();
        let gt = BinaryMask::from_fn(16, 16, |_, _| rng.chance(0.4)).unwrap();
        let (p, g) = (pred.data(), gt.data());
        let bd = bce_dice(&pred, &gt, cfg.eps).unwrap();
        let focal = focal_loss(&pred, &gt, cfg.gamma, cfg.eps).unwrap().sum;
        let afl = adaptive_focal_loss(&pred, &gt, cfg.gamma, cfg.alpha, cfg.eps).unwrap().loss;
        let bnd = boundary_f1(&pred, &gt, cfg.theta1, cfg.theta2).unwrap().loss;
        let ga = oracle::gamma_a(p, g, cfg.eps);
        let pairs = [
            ("bce", bd.bce, oracle::bce(p, g, cfg.eps)),
            ("dice", bd.dice, oracle::dice(p, g)),
            ("focal", focal, oracle::focal(p, g, cfg.gamma, cfg.eps)),
            ("afl", afl, oracle::adaptive_focal(p, g, cfg.gamma, cfg.alpha, ga, cfg.eps)),
            ("boundary", bnd, oracle::boundary(p, g, 16, 16, cfg.theta1, cfg.theta2).3),
        ];
        for (name, got, want) in pairs {
            let e = rel(got, want);
            worst = worst.max(e);
            ensure!(e <= 1e-9, "instance {i} {name}: {got} vs {want}");
        }
    }
    let one = ProbMap::filled(1, 1, 0.5).unwrap();
    let fg = BinaryMask::new(1, 1, vec![true]).unwrap();
    let scalar = adaptive_focal_loss(&one, &fg, 2.0, 0.25, cfg.eps).unwrap().loss;
    let want = oracle::adaptive_focal(&[0.5], &[true], 2.0, 0.25, oracle::gamma_a(&[0.5], &[true], cfg.eps), cfg.eps);
    ensure!((scalar - want).abs() <= 1e-4 && (scalar - 0.1446).abs() <= 1e-4, "AFL scalar {scalar} vs {want}");
    Ok(format!("50 instances, worst rel err {worst:.1e}; AFL(0.5) = {scalar:.6}"))
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let dims = GradDims::default();
    let ops = [
        (GradOp::Loss(LossId::Focal), 1e-4),
        (GradOp::Loss(LossId::AdaptiveFocal), 1e-4),
        (GradOp::Loss(LossId::Bce), 1e-4),
        (GradOp::Loss(LossId::Dice), 1e-4),
        (GradOp::Loss(LossId::Boundary), 1e-3),
        (GradOp::Fusion, 1e-4),
        (GradOp::Adapter, 1e-4),
    ];
    let mut summary = Vec::new();
    for (op, tol) in ops {
        let mut worst: f64 = 0.0;
        for seed in 0..5 {
            let target = make_target(op, seed, &dims).map_err(|e| e.to_string())?;
            let r = grad_check(target.as_ref(), 1e-4, tol).map_err(|e| e.to_string())?;
            worst = worst.max(r.max_rel_err);
            ensure!(r.pass, "{} seed {seed}: {:.2e} at {:?}", op.name(), r.max_rel_err, r.worst);
        }
        summary.push(format!("{} {worst:.0e}", op.name()));
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(30), "took {took:?}");
    Ok(format!("{} in {took:.1?}", summary.join(", ")))
}

fn fusion_identities() -> Outcome {
    let (d, heads, t, ts) = (32, 4, 16, 12);
    let mut rng = Stream::new(106);
    let params = FusionParams::random(d, heads, 7).unwrap();
    let fi = Tensor::random(vec![t, d], -1.0, 1.0, &mut rng);
    let fs = Tensor::random(vec![ts, d], -1.0, 1.0, &mut rng);

    let mut closed = params.clone();
    let n_out = closed.w_film.n_out;
    for row in 0..closed.w_film.n_in {
        closed.w_film.w[row * n_out + 2 * d..(row + 1) * n_out].fill(0.0);
    }
    closed.w_film.b[2 * d..].fill(0.0);
    ensure!(fusion_forward(&fi, &fs, &closed).unwrap() == fi, "closed gate is not the identity");

    let base = cross_attention(&fi, &fs, &params).unwrap();
    let mut perm: Vec<usize> = (0..ts).collect();
    perm.rotate_left(5);
    perm.swap(0, 3);
    let permuted: Vec<f64> = perm.iter().flat_map(|&j| fs.data()[j * d..(j + 1) * d].to_vec()).collect();
    let fs_perm = Tensor::new(vec![ts, d], permuted).unwrap();
    let moved = cross_attention(&fi, &fs_perm, &params).unwrap();
    let perm_err = base.output.data().iter().zip(moved.output.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(perm_err <= 1e-12, "key/value permutation changed output by {perm_err:e}");
    let fused = fusion_forward(&fi, &fs, &params).unwrap();
    let fused_perm = fusion_forward(&fi, &fs_perm, &params).unwrap();
    let fuse_err = fused.data().iter().zip(fused_perm.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(fuse_err <= 1e-12, "fusion permutation error {fuse_err:e}");

    let w = base.weights.data();
    let mut row_err: f64 = 0.0;
    for row in w.chunks(ts) {
        row_err = row_err.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    ensure!(row_err <= 1e-12, "softmax row sum off by {row_err:e}");
    Ok(format!("gate identity exact, permutation {perm_err:.0e}, row sums {row_err:.0e}"))
}

fn topology() -> Outcome {
    let mut rng = TestRng::new(107);
    let mut holes_seen = [0usize; 4];
    for i in 0..50 {
        let holes = i % 4;
        let (h, w) = (40 + rng.below(40), 40 + rng.below(40));
        let data = random_shape(&mut rng, h, w, holes);
        let want = euler_by_components(&data, h, w);
        let mask = BinaryMask::new(h, w, data).unwrap();
        let skel = skeletonize(&mask);
        let got = euler_number(&skel);
        ensure!(got == want, "shape {i}: euler {got}, want {want}");
        ensure!(!has_full_block(&skel), "shape {i}: skeleton has a 2x2 block");
        holes_seen[(1 - want).clamp(0, 3) as usize] += 1;
    }
    Ok(format!("50/50 preserved, 1 px wide; by hole count {holes_seen:?}"))
}

fn perturbation_trend() -> Outcome {
    let mut sums = [0.0; 3];
    let seeds = 20;
    for seed in 0..seeds {
        let mask = gen_mask(128, 128, 3, &mut Stream::new(seed)).unwrap();
        let clean = mask_boundary(&mask).unwrap();
        for (slot, k) in [0.0, 8.0, 20.0].into_iter().enumerate() {
            let cfg = AugmentConfig { increment: k, seed, ..AugmentConfig::default() };
            let out = gt_sketch(&mask, &cfg).map_err(|e| e.to_string())?;
            sums[slot] += chamfer_distance(&clean, &out.raster);
        }
    }
    let means = sums.map(|s| s / seeds as f64);
    ensure!(means[0] < means[1] && means[1] < means[2], "means not ordered: {means:?}");
    Ok(format!("mean Chamfer K=0 {:.3} < K=8 {:.3} < K=20 {:.3} over {seeds} seeds", means[0], means[1], means[2]))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline(root: &Path, threads: usize) -> Result<(BTreeMap<String, Vec<u8>>, Duration), String> {
    std::fs::create_dir_all(root).map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_camokit");
    let start = Instant::now();
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin)
            .args(args)
            .arg("--quiet")
            .current_dir(root)
            .env("CAMOKIT_THREADS", threads.to_string())
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr));
        Ok(())
    };
    run(&["synth", "--out", "synth", "--count", "20", "--seed", "2024"])?;
    run(&["augment", "--in-dir", "synth", "--suffix", "_sketch.pgm", "--out-dir", "aug", "--emit-json", "vec", "--seed", "7"])?;
    std::fs::create_dir_all(root.join("loss")).map_err(|e| e.to_string())?;
    for i in 0..20 {
        let id = format!("{i:04}");
        run(&[
            "loss",
            "--pred",
            &format!("synth/{id}_img.pf32"),
            "--gt",
            &format!("synth/{id}_gt.pgm"),
            "--report",
            &format!("loss/{id}.json"),
        ])?;
    }
    run(&[
        "eval", "--pred-dir", "aug", "--pred-suffix", "_sketch.pgm", "--gt-dir", "synth", "--gt-suffix", "_gt.pgm",
        "--report", "eval.json",
    ])?;
    let took = start.elapsed();
    Ok((read_tree(root), took))
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // At least four workers so the comparison exercises real scheduling.
    let max = std::thread::available_parallelism().map_or(1, |n| n.get()).max(4);
    let mut runs = Vec::new();
    for (i, threads) in [1, max, 1, max].into_iter().enumerate() {
        runs.push((threads, pipeline(&dir.path().join(format!("run{i}")), threads)?));
    }
    let (_, (first, _)) = &runs[0];
    ensure!(first.len() >= 20 * 3 + 20 * 2 + 20 * 2 + 2, "only {} files produced", first.len());
    for (threads, (tree, _)) in &runs[1..] {
        ensure!(tree.keys().eq(first.keys()), "file sets differ with {threads} threads");
        for (name, bytes) in tree {
            ensure!(&first[name] == bytes, "{name} differs with {threads} threads");
        }
    }
    let slowest = runs.iter().map(|(_, (_, t))| *t).max().unwrap();
    ensure!(slowest < Duration::from_secs(60), "pipeline took {slowest:?}");
    Ok(format!("{} files identical over 4 runs (threads 1 and {max}), slowest {slowest:.1?}", first.len()))
}

fn io_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = TestRng::new(110);
    for i in 0..100 {
        let (h, w) = (1 + rng.below(96), 1 + rng.below(96));
        let mask = BinaryMask::from_fn(h, w, |_, _| rng.chance(0.5)).unwrap();
        let prob = ProbMap::new(h, w, (0..h * w).map(|_| rng.unit() as f32 as f64).collect()).unwrap();
        ensure!(read_pgm(&write_pgm(&mask)).unwrap() == mask, "raster {i}: PGM bytes round trip");
        let back = read_pf32(&write_pf32(&prob)).unwrap();
        ensure!(
            back.data().iter().zip(prob.data()).all(|(a, b)| a.to_bits() == b.to_bits()),
            "raster {i}: PF32 bytes round trip"
        );
        let (mp, pp) = (dir.path().join(format!("{i}.pgm")), dir.path().join(format!("{i}.pf32")));
        save_mask(&mask, &mp).map_err(|e| e.to_string())?;
        save_prob(&prob, &pp).map_err(|e| e.to_string())?;
        ensure!(load_raster(&mp).unwrap() == Raster::Mask(mask), "raster {i}: PGM file round trip");
        ensure!(load_raster(&pp).unwrap() == Raster::Prob(prob), "raster {i}: PF32 file round trip");
    }
    Ok("100 rasters bit-exact in PGM and PF32".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Bezier recovery", bezier_recovery),
        ("displacement arithmetic", delta_arithmetic),
        ("boundary machinery", boundary_machinery),
        ("loss oracles", loss_oracles),
        ("gradient checks", gradient_checks),
        ("fusion identities", fusion_identities),
        ("skeleton topology", topology),
        ("perturbation trend", perturbation_trend),
        ("end-to-end determinism", end_to_end_determinism),
        ("raster I/O round trip", io_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
