use camokit_core::neural::{
    adapter_forward, cross_attention, film_gate, fusion_forward, gelu, grad_check, highpass_fft, make_target, mask_readout,
    patch_embed, AdapterParams, FusionParams, GradDims, GradOp, Linear, Tensor,
};
use camokit_core::rng::Stream;
use camokit_oracle::neural as oracle;

fn dense(l: &Linear) -> oracle::Dense {
    oracle::Dense { n_in: l.n_in, n_out: l.n_out, w: l.w.clone(), b: l.b.clone() }
}

fn random(shape: Vec<usize>, seed: u64) -> Tensor {
    Tensor::random(shape, -1.0, 1.0, &mut Stream::new(seed))
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "index {i}: {x} vs {y}");
    }
}

#[test]
fn fusion_matches_scalar_oracle() {
    for seed in 0..5 {
        let p = FusionParams::random(12, 3, seed).unwrap();
        let (fi, fs) = (random(vec![6, 12], 100 + seed), random(vec![5, 12], 200 + seed));
        let got = fusion_forward(&fi, &fs, &p).unwrap();
        let want = oracle::fusion(
            fi.data(),
            6,
            fs.data(),
            5,
            12,
            3,
            &dense(&p.w_q),
            &dense(&p.w_k),
            &dense(&p.w_v),
            &dense(&p.w_o),
            &dense(&p.w_film),
        );
        assert_close(got.data(), &want, 1e-12);
    }
}

#[test]
fn attention_permutation_properties() {
    let p = FusionParams::random(32, 4, 9).unwrap();
    let (fi, fs) = (random(vec![16, 32], 1), random(vec![16, 32], 2));
    let base = cross_attention(&fi, &fs, &p).unwrap().output;
    let perm: Vec<usize> = (0..16).map(|i| (i * 7 + 3) % 16).collect();
    let permute = |t: &Tensor| {
        let d = t.shape()[1];
        let data = perm.iter().flat_map(|&i| t.data()[i * d..(i + 1) * d].to_vec()).collect();
        Tensor::new(t.shape().to_vec(), data).unwrap()
    };
    let kv_perm = cross_attention(&fi, &permute(&fs), &p).unwrap().output;
    assert_close(kv_perm.data(), base.data(), 1e-12);
    let q_perm = cross_attention(&permute(&fi), &fs, &p).unwrap().output;
    assert_close(q_perm.data(), permute(&base).data(), 1e-12);
}

#[test]
fn film_identities() {
    let d = 4;
    let fs = random(vec![3, d], 5);
    let zero = FusionParams::new(
        d,
        2,
        Linear::zeros(d, d),
        Linear::zeros(d, d),
        Linear::zeros(d, d),
        Linear::zeros(d, d),
        Linear::zeros(d, 3 * d),
    )
    .unwrap();
    let f = film_gate(&fs, &zero).unwrap();
    assert!(f.gamma.iter().chain(&f.beta).chain(&f.alpha).all(|&v| v == 0.0));

    let p = FusionParams::random(d, 2, 6).unwrap();
    let doubled = Tensor::new(vec![6, d], [fs.data(), fs.data()].concat()).unwrap();
    let (a, b) = (film_gate(&fs, &p).unwrap(), film_gate(&doubled, &p).unwrap());
    assert_close(&a.gamma, &b.gamma, 1e-12);
    assert_close(&a.alpha, &b.alpha, 1e-12);

    // Identity blocks: gamma = beta = alpha = pooled mean.
    let mut w = vec![0.0; d * 3 * d];
    for i in 0..d {
        for block in 0..3 {
            w[i * 3 * d + block * d + i] = 1.0;
        }
    }
    let mut ident = p.clone();
    ident.w_film = Linear::new(d, 3 * d, w, vec![0.0; 3 * d]).unwrap();
    let f = film_gate(&fs, &ident).unwrap();
    let mean: Vec<f64> = (0..d).map(|c| (0..3).map(|j| fs.data()[j * d + c]).sum::<f64>() / 3.0).collect();
    assert_close(&f.gamma, &mean, 1e-15);
    assert_close(&f.beta, &mean, 1e-15);
    assert_close(&f.alpha, &mean, 1e-15);
    let (_, _, oa) = oracle::film(fs.data(), 3, d, &dense(&ident.w_film));
    assert_close(&f.alpha, &oa, 1e-15);
}

#[test]
fn open_gate_without_modulation_adds_attention() {
    let d = 8;
    let mut p = FusionParams::random(d, 2, 3).unwrap();
    p.w_film = Linear::new(d, 3 * d, vec![0.0; 3 * d * d], [vec![0.0; 2 * d], vec![1.0; d]].concat()).unwrap();
    let (fi, fs) = (random(vec![4, d], 7), random(vec![5, d], 8));
    let o = cross_attention(&fi, &fs, &p).unwrap().output;
    let want: Vec<f64> = fi.data().iter().zip(o.data()).map(|(a, b)| a + b).collect();
    assert_close(fusion_forward(&fi, &fs, &p).unwrap().data(), &want, 1e-15);
}

#[test]
fn highpass_matches_naive_dft() {
    let mut rng = Stream::new(4);
    for &(h, w, tau) in &[(16, 16, 0.25), (8, 12, 0.3), (7, 9, 0.5), (16, 16, 0.0)] {
        let img = Tensor::random(vec![h, w], 0.0, 1.0, &mut rng);
        let got = highpass_fft(&img, tau).unwrap();
        assert_close(got.data(), &oracle::highpass(img.data(), h, w, tau), 1e-10);
        let e_in: f64 = img.data().iter().map(|v| v * v).sum();
        let e_out: f64 = got.data().iter().map(|v| v * v).sum();
        assert!(e_out <= e_in + 1e-10);
    }
    let img = Tensor::random(vec![16, 16], 0.0, 1.0, &mut rng);
    assert_close(highpass_fft(&img, 0.0).unwrap().data(), img.data(), 1e-10);
}

#[test]
fn highpass_is_linear() {
    let (x, y) = (random(vec![10, 12], 1), random(vec![10, 12], 2));
    let (a, b) = (0.7, -1.3);
    let mix = Tensor::new(vec![10, 12], x.data().iter().zip(y.data()).map(|(u, v)| a * u + b * v).collect()).unwrap();
    let hx = highpass_fft(&x, 0.3).unwrap();
    let hy = highpass_fft(&y, 0.3).unwrap();
    let want: Vec<f64> = hx.data().iter().zip(hy.data()).map(|(u, v)| a * u + b * v).collect();
    assert_close(highpass_fft(&mix, 0.3).unwrap().data(), &want, 1e-10);
}

#[test]
fn patch_embed_and_adapter_match_oracle() {
    let p = AdapterParams::random(16, 4, 0.25, 11).unwrap();
    let img = Tensor::random(vec![16, 12], 0.0, 1.0, &mut Stream::new(12));
    let got = patch_embed(&img, &p).unwrap();
    assert_eq!(got.shape(), &[12, 16]);
    assert_close(got.data(), &oracle::patch_embed(img.data(), 16, 12, 4, &dense(&p.w_pe)), 1e-12);

    let (hfc, hpe) = (random(vec![12, 16], 13), random(vec![12, 16], 14));
    let out = adapter_forward(&hfc, &hpe, &p).unwrap();
    let want = oracle::adapter(hfc.data(), hpe.data(), 12, &dense(&p.w_mlp), &dense(&p.w_up));
    assert_close(out.data(), &want, 1e-12);
    for x in [-3.0, -0.4, 0.0, 0.8, 2.5] {
        assert!((gelu(x) - oracle::gelu(x)).abs() < 1e-15);
    }
}

#[test]
fn zero_adapter_is_zero() {
    let mut p = AdapterParams::random(8, 2, 0.25, 1).unwrap();
    p.w_mlp.b.fill(0.0);
    p.w_up.b.fill(0.0);
    let z = Tensor::zeros(vec![4, 8]);
    assert!(adapter_forward(&z, &z, &p).unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn identity_patch_embed_returns_pixels() {
    let p = AdapterParams {
        w_pe: Linear::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
        w_mlp: Linear::zeros(1, 1),
        w_up: Linear::zeros(1, 1),
        ..AdapterParams::random(1, 1, 0.0, 0).unwrap()
    };
    let img = Tensor::new(vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(patch_embed(&img, &p).unwrap().data(), img.data());
}

#[test]
fn forward_passes_are_repeatable() {
    let p = FusionParams::random(8, 2, 1).unwrap();
    let (fi, fs) = (random(vec![4, 8], 1), random(vec![3, 8], 2));
    assert_eq!(fusion_forward(&fi, &fs, &p).unwrap(), fusion_forward(&fi, &fs, &p).unwrap());
}

#[test]
fn readout_thresholds_logits() {
    let tokens = Tensor::new(vec![4, 2], vec![1.0, 0.0, -1.0, 0.0, 0.5, 0.5, 0.0, -2.0]).unwrap();
    let r = Linear::new(2, 1, vec![1.0, 1.0], vec![0.0]).unwrap();
    let m = mask_readout(&tokens, &r, 2, 2).unwrap();
    assert_eq!(m.data(), &[true, false, true, false]);
}

#[test]
fn every_target_passes_grad_check_at_five_points() {
    let dims = GradDims::default();
    for op in GradOp::ALL {
        for seed in 0..5 {
            let target = make_target(op, seed, &dims).unwrap();
            let report = grad_check(target.as_ref(), 1e-4, 1e-4).unwrap();
            // Max-pool subgradients only agree with differences away from ties.
            let boundary = matches!(op.name(), "boundary" | "total");
            let tol = if boundary { 1e-3 } else { 1e-4 };
            assert!(report.max_rel_err < tol, "{} seed {seed}: {report:?}", op.name());
        }
    }
}
