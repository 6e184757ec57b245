use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use camokit_core::metrics::{aggregate, evaluate, ImageMetrics, MetricConfig};
use camokit_core::raster::load_raster;
use clap::Args;
use rayon::prelude::*;

use super::{file_name, list_files};
use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::manifest::{beside, to_json, write_file, RunManifest};
use crate::Context;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of predictions (PF32 or PGM).
    #[arg(long)]
    pred_dir: PathBuf,
    /// Directory of ground-truth masks (PGM).
    #[arg(long)]
    gt_dir: PathBuf,
    /// Suffix stripped from prediction names to get the pairing stem.
    #[arg(long)]
    pred_suffix: Option<String>,
    /// Suffix stripped from ground-truth names to get the pairing stem.
    #[arg(long)]
    gt_suffix: Option<String>,
    /// Report path; standard output if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// beta^2 of the F-measure.
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    theta1: Option<usize>,
    #[arg(long)]
    theta2: Option<usize>,
}

/// Map stem -> path. Without a suffix the stem is the name up to its last dot.
fn stems(dir: &Path, suffix: Option<&str>) -> CliResult<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for path in list_files(dir, suffix.unwrap_or(""))? {
        let name = file_name(&path)?;
        let stem = match suffix {
            Some(s) => name[..name.len() - s.len()].to_string(),
            None => match name.rsplit_once('.') {
                Some((stem, ext)) if ext == "pgm" || ext == "pf32" => stem.to_string(),
                _ => continue,
            },
        };
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(CliError::invalid(format!(
                "stem `{stem}` is ambiguous: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

pub fn run(ctx: &Context, args: EvalArgs) -> CliResult<()> {
    let mut cfg = MetricConfig::default();
    if let Some(v) = args.beta2 {
        cfg.beta2 = v;
    }
    if let Some(v) = args.theta1 {
        cfg.theta1 = v;
    }
    if let Some(v) = args.theta2 {
        cfg.theta2 = v;
    }
    let cfg = resolve(cfg, ctx.config_file(), "eval")?;
    cfg.validate()?;

    let preds = stems(&args.pred_dir, args.pred_suffix.as_deref())?;
    let gts = stems(&args.gt_dir, args.gt_suffix.as_deref())?;
    let mut pairs = Vec::with_capacity(preds.len());
    for (stem, pred) in &preds {
        let gt = gts
            .get(stem)
            .ok_or_else(|| CliError::invalid(format!("no ground truth for `{stem}` in {}", args.gt_dir.display())))?;
        pairs.push((stem.clone(), pred.clone(), gt.clone()));
    }
    if pairs.is_empty() {
        return Err(CliError::invalid(format!("no predictions found in {}", args.pred_dir.display())));
    }
    let per_image: Vec<ImageMetrics> = ctx.install(|| {
        pairs
            .par_iter()
            .map(|(stem, pred, gt)| {
                let p = load_raster(pred)?.into_prob();
                let g = load_raster(gt)?.into_mask();
                Ok(evaluate(stem, &p, &g, &cfg)?)
            })
            .collect::<CliResult<_>>()
    })?;
    let report = aggregate(per_image)?;
    let text = to_json(&report)?;

    let mut manifest = RunManifest::new("eval", None, &cfg)?;
    for (_, pred, gt) in &pairs {
        manifest.input(pred);
        manifest.input(gt);
    }
    let default_manifest = match &args.report {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            manifest.output(path);
            beside(path)
        }
        None => {
            print!("{text}");
            PathBuf::from("eval.manifest.json")
        }
    };
    ctx.write_manifest(manifest, default_manifest)?;
    ctx.info(format!(
        "eval: {} images, mae {:.4}, iou {:.4}, f_beta {:.4}, boundary_f1 {:.4}",
        report.count, report.mae, report.iou, report.f_beta, report.boundary_f1
    ));
    Ok(())
}
