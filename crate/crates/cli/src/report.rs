use std::time::Duration;

use lsc_core::embed::{CompileConfig, CompileResult};
use serde::Serialize;

use crate::Tuning;

#[derive(Serialize)]
pub struct ConfigEcho {
    pub grid: (usize, usize),
    pub opt: String,
    pub partition: String,
    pub iterations: usize,
    pub timeout_ms: u64,
    pub seeds_per_layer: usize,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Serialize)]
pub struct LayerReport {
    pub layer: usize,
    pub spiders: usize,
    pub placeholder_ports: usize,
    pub iterations: usize,
    pub volume: u64,
}

#[derive(Serialize)]
pub struct CompileReport {
    pub volume: u64,
    pub footprint: (u64, u64),
    /// Time steps including the input and output port planes.
    pub time_steps: u64,
    pub computational_steps: u64,
    pub compile_time_ms: u64,
    pub fallback_layer_count: usize,
    pub used_baseline: bool,
    pub baseline_volume: Option<u64>,
    pub layers: Vec<LayerReport>,
    pub verified: Option<bool>,
    pub warnings: Vec<String>,
    pub config: ConfigEcho,
}

impl CompileReport {
    pub fn new(r: &CompileResult, elapsed: Duration, t: &Tuning, cfg: &CompileConfig) -> Self {
        let ext = r.pipe.bounding_box().map_or([0; 3], |b| b.extent());
        CompileReport {
            volume: r.volume,
            footprint: (ext[0], ext[1]),
            time_steps: r.pipe.time_steps(),
            computational_steps: ext[2],
            compile_time_ms: elapsed.as_millis() as u64,
            fallback_layer_count: r.fallback_layers.len(),
            used_baseline: r.used_baseline,
            baseline_volume: r.baseline_volume,
            layers: r
                .layers
                .iter()
                .map(|l| LayerReport {
                    layer: l.layer,
                    spiders: l.spiders,
                    placeholder_ports: l.placeholder_ports,
                    iterations: l.iterations,
                    volume: l.volume,
                })
                .collect(),
            verified: None,
            warnings: r.warnings.clone(),
            config: ConfigEcho {
                grid: cfg.grid,
                opt: t.opt.to_string(),
                partition: cfg.partition.to_string(),
                iterations: cfg.iterations,
                timeout_ms: cfg.timeout_ms,
                seeds_per_layer: cfg.seeds_per_layer,
                seed: cfg.rng_seed,
                threads: cfg.threads,
            },
        }
    }
}
