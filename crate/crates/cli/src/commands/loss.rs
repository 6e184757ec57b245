use std::path::PathBuf;

use camokit_core::losses::{total_loss, LossConfig};
use camokit_core::raster::load_raster;
use clap::Args;

use crate::config::resolve;
use crate::error::CliResult;
use crate::manifest::{beside, to_json, write_file, RunManifest};
use crate::Context;

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Prediction (PF32 probabilities or PGM mask).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth mask (PGM).
    #[arg(long)]
    gt: PathBuf,
    /// Report path; standard output if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Boundary extraction window.
    #[arg(long)]
    theta1: Option<usize>,
    /// Boundary extension window.
    #[arg(long)]
    theta2: Option<usize>,
    #[arg(long)]
    lambda_mask: Option<f64>,
    #[arg(long)]
    lambda_dice: Option<f64>,
    #[arg(long)]
    lambda_adaptive: Option<f64>,
    #[arg(long)]
    lambda_boundary: Option<f64>,
    /// Probability clamp for log terms.
    #[arg(long)]
    eps: Option<f64>,
}

pub fn run(ctx: &Context, args: LossArgs) -> CliResult<()> {
    let mut cfg = LossConfig::default();
    let pairs = [
        (&mut cfg.gamma, args.gamma),
        (&mut cfg.alpha, args.alpha),
        (&mut cfg.lambda_mask, args.lambda_mask),
        (&mut cfg.lambda_dice, args.lambda_dice),
        (&mut cfg.lambda_adaptive, args.lambda_adaptive),
        (&mut cfg.lambda_boundary, args.lambda_boundary),
        (&mut cfg.eps, args.eps),
    ];
    for (dst, v) in pairs {
        if let Some(v) = v {
            *dst = v;
        }
    }
    if let Some(v) = args.theta1 {
        cfg.theta1 = v;
    }
    if let Some(v) = args.theta2 {
        cfg.theta2 = v;
    }
    let cfg = resolve(cfg, ctx.config_file(), "loss")?;
    cfg.validate()?;
    let pred = load_raster(&args.pred)?.into_prob();
    let gt = load_raster(&args.gt)?.into_mask();
    let report = total_loss(&pred, &gt, &cfg)?;
    let text = to_json(&report)?;

    let mut manifest = RunManifest::new("loss", None, &cfg)?;
    manifest.input(&args.pred);
    manifest.input(&args.gt);
    let default_manifest = match &args.report {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            manifest.output(path);
            beside(path)
        }
        None => {
            print!("{text}");
            PathBuf::from("loss.manifest.json")
        }
    };
    ctx.write_manifest(manifest, default_manifest)?;
    if report.degenerate.gamma_a || report.degenerate.boundary {
        ctx.info("loss: warning: degenerate input (empty foreground or boundary); see `degenerate` in the report");
    }
    ctx.info(format!("loss: total {:.6}", report.total));
    Ok(())
}
