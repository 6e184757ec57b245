use std::path::{Path, PathBuf};

use camokit_core::raster::{load_raster, write_pgm};
use camokit_core::rng::derive_seed;
use camokit_core::sketch::{augment, AugmentConfig, Augmented};
use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use super::{ensure_dir, file_name, list_files};
use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::manifest::{beside, write_file, RunManifest};
use crate::Context;

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Input sketch (PGM) for single-file mode.
    #[arg(long = "in", conflicts_with = "in_dir", required_unless_present = "in_dir")]
    input: Option<PathBuf>,
    /// Output raster (PGM) for single-file mode.
    #[arg(long, requires = "input")]
    out: Option<PathBuf>,
    /// Directory of input sketches for batch mode.
    #[arg(long, requires = "out_dir")]
    in_dir: Option<PathBuf>,
    /// Directory for batch outputs (same file names as the inputs).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Batch mode: only inputs whose names end with this.
    #[arg(long, default_value = ".pgm")]
    suffix: String,
    /// Vector sketch JSON: a file in single mode, a directory in batch mode.
    #[arg(long, value_name = "PATH")]
    emit_json: Option<PathBuf>,
    /// Patch count (perfect square).
    #[arg(long)]
    n: Option<usize>,
    /// Sketch rows per displacement unit.
    #[arg(long = "C")]
    c: Option<usize>,
    /// Displacement per unit, in pixels.
    #[arg(long = "K")]
    k: Option<f64>,
    /// Principal curves shorter than this are dropped.
    #[arg(long)]
    min_pixels: Option<usize>,
    /// Stroke width of the output raster.
    #[arg(long)]
    thickness: Option<usize>,
    /// Seed; in batch mode item `i` uses a seed derived from (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    /// Also displace curve endpoints.
    #[arg(long)]
    perturb_endpoints: bool,
}

fn resolve_config(ctx: &Context, args: &AugmentArgs) -> CliResult<AugmentConfig> {
    let mut cfg = AugmentConfig::default();
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.c {
        cfg.rows_per_unit = v;
    }
    if let Some(v) = args.k {
        cfg.increment = v;
    }
    if let Some(v) = args.min_pixels {
        cfg.min_pixels = v;
    }
    if let Some(v) = args.thickness {
        cfg.thickness = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    cfg.perturb_endpoints |= args.perturb_endpoints;
    let cfg = resolve(cfg, ctx.config_file(), "augment")?;
    cfg.validate()?;
    Ok(cfg)
}

fn augment_file(path: &Path, cfg: &AugmentConfig) -> CliResult<Augmented> {
    let sketch = load_raster(path)?.into_mask();
    Ok(augment(&sketch, cfg)?)
}

fn summary(name: &str, cfg: &AugmentConfig, out: &Augmented) -> serde_json::Value {
    json!({
        "name": name,
        "seed": cfg.seed,
        "rows": out.rows,
        "delta": out.delta,
        "curves": out.vector.curves.len(),
        "no_curves": out.no_curves,
    })
}

pub fn run(ctx: &Context, args: AugmentArgs) -> CliResult<()> {
    let cfg = resolve_config(ctx, &args)?;
    match (&args.input, &args.in_dir) {
        (Some(input), _) => single(ctx, &args, input, cfg),
        (None, Some(dir)) => batch(ctx, &args, dir, cfg),
        (None, None) => Err(CliError::invalid("either --in or --in-dir is required")),
    }
}

fn single(ctx: &Context, args: &AugmentArgs, input: &Path, cfg: AugmentConfig) -> CliResult<()> {
    let out_path = args.out.as_ref().ok_or_else(|| CliError::invalid("--out is required with --in"))?;
    let out = augment_file(input, &cfg)?;
    let mut manifest = RunManifest::new("augment", Some(cfg.seed), &cfg)?;
    manifest.input(input);
    write_file(out_path, &write_pgm(&out.raster))?;
    manifest.output(out_path);
    if let Some(json_path) = &args.emit_json {
        write_file(json_path, (out.vector.to_json() + "\n").as_bytes())?;
        manifest.output(json_path);
    }
    if out.no_curves {
        ctx.info(format!("augment: warning: {} produced no curves; output is empty", input.display()));
    }
    manifest.items = Some(json!([summary(&file_name(input)?, &cfg, &out)]));
    ctx.write_manifest(manifest, beside(out_path))?;
    ctx.info(format!("augment: {} curves, delta {} -> {}", out.vector.curves.len(), out.delta, out_path.display()));
    Ok(())
}

fn batch(ctx: &Context, args: &AugmentArgs, dir: &Path, cfg: AugmentConfig) -> CliResult<()> {
    let out_dir = args.out_dir.as_ref().ok_or_else(|| CliError::invalid("--out-dir is required with --in-dir"))?;
    let inputs = list_files(dir, &args.suffix)?;
    if inputs.is_empty() {
        return Err(CliError::invalid(format!("no inputs ending in `{}` in {}", args.suffix, dir.display())));
    }
    let results: Vec<(AugmentConfig, Augmented)> = ctx.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, path)| {
                let item = AugmentConfig { seed: derive_seed(cfg.seed, i as u64), ..cfg.clone() };
                let out = augment_file(path, &item)?;
                Ok((item, out))
            })
            .collect::<CliResult<_>>()
    })?;
    ensure_dir(out_dir)?;
    if let Some(json_dir) = &args.emit_json {
        ensure_dir(json_dir)?;
    }
    let mut manifest = RunManifest::new("augment", Some(cfg.seed), &cfg)?;
    let mut items = Vec::with_capacity(inputs.len());
    let mut empty = 0;
    for (path, (item, out)) in inputs.iter().zip(&results) {
        manifest.input(path);
        let name = file_name(path)?;
        let out_path = out_dir.join(&name);
        write_file(&out_path, &write_pgm(&out.raster))?;
        manifest.output(&out_path);
        if let Some(json_dir) = &args.emit_json {
            let stem = name.strip_suffix(".pgm").unwrap_or(&name);
            let json_path = json_dir.join(format!("{stem}.json"));
            write_file(&json_path, (out.vector.to_json() + "\n").as_bytes())?;
            manifest.output(&json_path);
        }
        empty += usize::from(out.no_curves);
        items.push(summary(&name, item, out));
    }
    manifest.items = Some(items.into());
    ctx.write_manifest(manifest, out_dir.join("manifest.json"))?;
    if empty > 0 {
        ctx.info(format!("augment: warning: {empty} sketches produced no curves"));
    }
    ctx.info(format!("augment: wrote {} sketches to {}", inputs.len(), out_dir.display()));
    Ok(())
}
