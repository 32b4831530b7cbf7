use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use lsc_core::embed::{compile_baseline, compile_full};
use lsc_core::pipe::space_time_volume;
use lsc_core::{generate_benchmark, Family};
use serde::Serialize;

use crate::{square_grid, Tuning};

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated families: ghz, ladder, bv, dj, random_clifford.
    #[arg(long, value_delimiter = ',', required = true)]
    families: Vec<Family>,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[command(flatten)]
    tuning: Tuning,
    /// CSV table; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Row {
    pub family: String,
    pub size: usize,
    pub grid: String,
    pub compiler: &'static str,
    pub volume: u64,
    pub time_steps: u64,
    pub computational_steps: u64,
    pub layers: usize,
    pub time_ms: u64,
    pub reduction_pct: Option<f64>,
    pub used_baseline: bool,
}

pub fn rows(family: Family, size: usize, tuning: &Tuning) -> Result<[Row; 2]> {
    let c = generate_benchmark(family, size, tuning.seed)?;
    let grid = tuning.grid.unwrap_or_else(|| square_grid(size));
    let cfg = tuning.config(grid);
    let grid_s = format!("{}x{}", grid.0, grid.1);

    let start = Instant::now();
    let base = compile_baseline(&c, &cfg)?;
    let base_ms = start.elapsed().as_millis() as u64;
    let start = Instant::now();
    let full = compile_full(&c, &cfg)?;
    let full_ms = start.elapsed().as_millis() as u64;

    let base_vol = space_time_volume(&base);
    let steps = |p: &lsc_core::pipe::PipeDiagram| p.bounding_box().map_or(0, |b| b.extent()[2]);
    let search = Row {
        family: family.to_string(),
        size,
        grid: grid_s.clone(),
        compiler: "search",
        volume: full.volume,
        time_steps: full.pipe.time_steps(),
        computational_steps: steps(&full.pipe),
        layers: full.layers.len(),
        time_ms: full_ms,
        reduction_pct: Some(100.0 * (1.0 - full.volume as f64 / base_vol as f64)),
        used_baseline: full.used_baseline,
    };
    let baseline = Row {
        compiler: "baseline",
        volume: base_vol,
        time_steps: base.time_steps(),
        computational_steps: steps(&base),
        layers: 0,
        time_ms: base_ms,
        reduction_pct: None,
        used_baseline: true,
        ..search.clone()
    };
    Ok([search, baseline])
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => {
            Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for &family in &args.families {
        for &size in &args.sizes {
            for row in rows(family, size, &args.tuning)? {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
