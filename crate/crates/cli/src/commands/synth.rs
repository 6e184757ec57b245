use std::path::PathBuf;

use camokit_core::raster::{write_pf32, write_pgm};
use camokit_core::rng::derive_seed;
use camokit_core::synth::{gen_sample, SynthConfig};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ensure_dir;
use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::manifest::{write_file, RunManifest};
use crate::Context;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of samples.
    #[arg(long)]
    count: Option<usize>,
    /// Master seed; sample `i` uses a seed derived from (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// Disks merged into each object.
    #[arg(long)]
    blobs: Option<usize>,
    /// Texture bias inside the object, in [0, 0.5].
    #[arg(long)]
    delta: Option<f64>,
    /// Value-noise lattice spacing in pixels.
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Sketch patch count (perfect square).
    #[arg(long)]
    n: Option<usize>,
    /// Sketch rows per displacement unit.
    #[arg(long = "C")]
    c: Option<usize>,
    /// Displacement per unit, in pixels.
    #[arg(long = "K")]
    k: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthRun {
    count: usize,
    sample: SynthConfig,
}

struct Encoded {
    id: String,
    seed: u64,
    delta: f64,
    files: [(String, Vec<u8>); 3],
}

pub fn run(ctx: &Context, args: SynthArgs) -> CliResult<()> {
    let mut sample = SynthConfig::default();
    let s = &mut sample;
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(s.seed, args.seed);
    set!(s.height, args.height);
    set!(s.width, args.width);
    set!(s.blob_count, args.blobs);
    set!(s.delta, args.delta);
    set!(s.noise_scale, args.noise_scale);
    set!(s.sketch.n, args.n);
    set!(s.sketch.rows_per_unit, args.c);
    set!(s.sketch.increment, args.k);
    let flags = SynthRun { count: args.count.unwrap_or(1), sample };
    let cfg = resolve(flags, ctx.config_file(), "synth")?;
    if cfg.count == 0 {
        return Err(CliError::invalid("--count must be at least 1"));
    }
    cfg.sample.validate()?;
    cfg.sample.sketch.validate()?;

    let width = (cfg.count - 1).to_string().len().max(4);
    let encoded: Vec<Encoded> = ctx.install(|| {
        (0..cfg.count)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(cfg.sample.seed, i as u64);
                let s = gen_sample(&SynthConfig { seed, ..cfg.sample.clone() })?;
                let id = format!("{i:0width$}");
                Ok(Encoded {
                    seed,
                    delta: s.augmented.delta,
                    files: [
                        (format!("{id}_img.pf32"), write_pf32(&s.image)),
                        (format!("{id}_gt.pgm"), write_pgm(&s.mask)),
                        (format!("{id}_sketch.pgm"), write_pgm(&s.sketch)),
                    ],
                    id,
                })
            })
            .collect::<CliResult<_>>()
    })?;

    ensure_dir(&args.out)?;
    let mut manifest = RunManifest::new("synth", Some(cfg.sample.seed), &cfg)?;
    let mut items = Vec::with_capacity(encoded.len());
    for e in &encoded {
        for (name, bytes) in &e.files {
            let path = args.out.join(name);
            write_file(&path, bytes)?;
            manifest.output(&path);
        }
        items.push(json!({"id": e.id, "seed": e.seed, "sketch_delta": e.delta}));
    }
    manifest.items = Some(items.into());
    ctx.write_manifest(manifest, args.out.join("manifest.json"))?;
    ctx.info(format!("synth: wrote {} samples to {}", cfg.count, args.out.display()));
    Ok(())
}
