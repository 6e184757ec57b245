use std::path::PathBuf;

use camokit_core::neural::{
    fusion_forward, grad_check, make_target, mask_readout, FusionParams, GradDims, GradOp, GradReport, Linear,
    Tensor,
};
use camokit_core::rng::Stream;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::manifest::{beside, to_json, write_file, RunManifest};
use crate::Context;

/// Finite-difference step for the checks.
const DEFAULT_STEP: f64 = 1e-4;
const DEFAULT_TOL: f64 = 1e-4;

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Operation to check (linear, attention, film, fusion, highpass,
    /// patch-embed, adapter, adapter-pipeline, bce, dice, focal, afl,
    /// boundary, total).
    #[arg(long)]
    target: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum relative error that passes.
    #[arg(long)]
    tol: Option<f64>,
    /// Central-difference step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    tokens: Option<usize>,
    /// Report path; standard output if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GradcheckRun {
    target: String,
    seed: u64,
    tol: f64,
    step: f64,
    dims: GradDims,
}

#[derive(Debug, Serialize)]
struct CheckReport<'a> {
    op: &'a str,
    seed: u64,
    max_rel_err: f64,
    pass: bool,
    tol: f64,
    checked: usize,
    worst: Option<&'a str>,
    failure: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    demo: Option<DemoSummary>,
}

impl<'a> CheckReport<'a> {
    fn new(r: &'a GradReport, seed: u64, demo: Option<DemoSummary>) -> Self {
        Self {
            op: &r.op,
            seed,
            max_rel_err: r.max_rel_err,
            pass: r.pass,
            tol: r.tol,
            checked: r.checked,
            worst: r.worst.as_deref(),
            failure: r.failure.as_deref(),
            demo,
        }
    }
}

fn emit(ctx: &Context, subcommand: &str, report: &CheckReport, path: Option<&PathBuf>, mut manifest: RunManifest) -> CliResult<()> {
    let text = to_json(report)?;
    let default_manifest = match path {
        Some(p) => {
            write_file(p, text.as_bytes())?;
            manifest.output(p);
            beside(p)
        }
        None => {
            print!("{text}");
            PathBuf::from(format!("{subcommand}.manifest.json"))
        }
    };
    ctx.write_manifest(manifest, default_manifest)?;
    ctx.info(format!(
        "{subcommand}: {} max relative error {:.3e} (tol {:.1e}) {}",
        report.op,
        report.max_rel_err,
        report.tol,
        if report.pass { "PASS" } else { "FAIL" }
    ));
    if report.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("{} failed its gradient check", report.op)))
    }
}

fn check_dims(dims: &GradDims) -> CliResult<()> {
    if dims.d_model == 0 || dims.n_heads == 0 || !dims.d_model.is_multiple_of(dims.n_heads) {
        return Err(CliError::invalid(format!("d_model {} must be a positive multiple of heads {}", dims.d_model, dims.n_heads)));
    }
    if dims.tokens == 0 || dims.kv_tokens == 0 {
        return Err(CliError::invalid("token counts must be positive"));
    }
    Ok(())
}

pub fn gradcheck(ctx: &Context, args: GradcheckArgs) -> CliResult<()> {
    let mut dims = GradDims::default();
    if let Some(v) = args.d_model {
        dims.d_model = v;
    }
    if let Some(v) = args.heads {
        dims.n_heads = v;
    }
    if let Some(v) = args.tokens {
        dims.tokens = v;
    }
    let flags = GradcheckRun {
        target: args.target.clone(),
        seed: args.seed.unwrap_or(0),
        tol: args.tol.unwrap_or(DEFAULT_TOL),
        step: args.step.unwrap_or(DEFAULT_STEP),
        dims,
    };
    let cfg = resolve(flags, ctx.config_file(), "gradcheck")?;
    check_dims(&cfg.dims)?;
    let op: GradOp = cfg.target.parse()?;
    let target = make_target(op, cfg.seed, &cfg.dims)?;
    let result = grad_check(target.as_ref(), cfg.step, cfg.tol)?;
    let manifest = RunManifest::new("gradcheck", Some(cfg.seed), &cfg)?;
    emit(ctx, "gradcheck", &CheckReport::new(&result, cfg.seed, None), args.report.as_ref(), manifest)
}

#[derive(Debug, Args)]
pub struct FusionDemoArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    /// Image tokens; a perfect square also gets a mask read-out.
    #[arg(long)]
    tokens: Option<usize>,
    /// Sketch (key/value) tokens.
    #[arg(long)]
    kv_tokens: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Report path; standard output if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FusionDemoRun {
    seed: u64,
    d_model: usize,
    n_heads: usize,
    tokens: usize,
    kv_tokens: usize,
    tol: f64,
    step: f64,
}

#[derive(Debug, Serialize)]
struct DemoSummary {
    /// Closing the gate returned `F_I` bit for bit.
    closed_gate_identity: bool,
    output_l2: f64,
    /// Foreground pixels of the read-out mask, when `tokens` is square.
    readout_pixels: Option<usize>,
}

fn closed_gate(params: &FusionParams) -> FusionParams {
    let mut p = params.clone();
    let d = p.d_model;
    let n_out = p.w_film.n_out;
    for row in 0..p.w_film.n_in {
        p.w_film.w[row * n_out + 2 * d..(row + 1) * n_out].fill(0.0);
    }
    p.w_film.b[2 * d..].fill(0.0);
    p
}

pub fn fusion_demo(ctx: &Context, args: FusionDemoArgs) -> CliResult<()> {
    let flags = FusionDemoRun {
        seed: args.seed.unwrap_or(0),
        d_model: args.d_model.unwrap_or(32),
        n_heads: args.heads.unwrap_or(4),
        tokens: args.tokens.unwrap_or(16),
        kv_tokens: args.kv_tokens.unwrap_or(16),
        tol: args.tol.unwrap_or(DEFAULT_TOL),
        step: DEFAULT_STEP,
    };
    let cfg = resolve(flags, ctx.config_file(), "fusion-demo")?;
    let dims = GradDims {
        d_model: cfg.d_model,
        n_heads: cfg.n_heads,
        tokens: cfg.tokens,
        kv_tokens: cfg.kv_tokens,
        ..GradDims::default()
    };
    check_dims(&dims)?;

    let params = FusionParams::random(cfg.d_model, cfg.n_heads, cfg.seed)?;
    let mut rng = Stream::split(cfg.seed, 1);
    let fi = Tensor::random(vec![cfg.tokens, cfg.d_model], -1.0, 1.0, &mut rng);
    let fs = Tensor::random(vec![cfg.kv_tokens, cfg.d_model], -1.0, 1.0, &mut rng);
    let out = fusion_forward(&fi, &fs, &params)?;
    let identity = fusion_forward(&fi, &fs, &closed_gate(&params))? == fi;
    let side = (cfg.tokens as f64).sqrt().round() as usize;
    let readout_pixels = if side * side == cfg.tokens {
        let readout = Linear::random(cfg.d_model, 1, &mut rng);
        Some(mask_readout(&out, &readout, side, side)?.count())
    } else {
        None
    };
    let demo = DemoSummary {
        closed_gate_identity: identity,
        output_l2: out.data().iter().map(|v| v * v).sum::<f64>().sqrt(),
        readout_pixels,
    };

    let target = make_target(GradOp::Fusion, cfg.seed, &dims)?;
    let mut result = grad_check(target.as_ref(), cfg.step, cfg.tol)?;
    if !identity {
        result.pass = false;
        result.failure = Some("closed gate did not return F_I exactly".into());
    }
    let manifest = RunManifest::new("fusion-demo", Some(cfg.seed), &cfg)?;
    emit(ctx, "fusion-demo", &CheckReport::new(&result, cfg.seed, Some(demo)), args.report.as_ref(), manifest)
}
