//! Layer-by-layer embedding of sliced ZX programs into pipe diagrams.

mod baseline;
mod route;
mod search;
mod state;

use std::fmt;
use std::str::FromStr;

pub use baseline::compile_baseline;
pub use route::{Region, Route, Target};
pub use search::{uct_score, Action, Embedder, SearchStats};
pub use state::{Cell, EmbeddingState, Leaf};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pipe::{space_time_volume, validate_pipe_diagram, PipeDiagram, Violation};
use crate::schedule::{partition_program, PartitionConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptLevel {
    None,
    Place,
    Part,
    Full,
}

impl FromStr for OptLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(OptLevel::None),
            "place" => Ok(OptLevel::Place),
            "part" => Ok(OptLevel::Part),
            "full" => Ok(OptLevel::Full),
            _ => Err(Error::Config(format!("unknown optimisation level '{s}'"))),
        }
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptLevel::None => "none",
            OptLevel::Place => "place",
            OptLevel::Part => "part",
            OptLevel::Full => "full",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompileConfig {
    /// Data-qubit columns and rows.
    pub grid: (usize, usize),
    /// Lattice distance between neighbouring data patches.
    pub pitch: usize,
    pub placement_opt: bool,
    pub partition: PartitionConfig,
    pub iterations: usize,
    pub timeout_ms: u64,
    pub seeds_per_layer: usize,
    pub exploration_c: f64,
    pub rng_seed: u64,
    /// Worker threads for the per-layer searches; 1 is deterministic.
    pub threads: usize,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            grid: (4, 4),
            pitch: 2,
            placement_opt: true,
            partition: PartitionConfig::default(),
            iterations: 1000,
            timeout_ms: 2000,
            seeds_per_layer: 2,
            exploration_c: std::f64::consts::SQRT_2,
            rng_seed: 0,
            threads: 1,
        }
    }
}

impl CompileConfig {
    pub fn with_opt(mut self, opt: OptLevel) -> Self {
        self.placement_opt = matches!(opt, OptLevel::Place | OptLevel::Full);
        self.partition = match opt {
            OptLevel::None | OptLevel::Place => PartitionConfig::uniform(5),
            OptLevel::Part | OptLevel::Full => PartitionConfig::topology(None),
        };
        self
    }

    pub fn capacity(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    pub fn check(&self, c: &Circuit) -> Result<()> {
        if self.grid.0 == 0 || self.grid.1 == 0 || self.pitch == 0 {
            return Err(Error::Config(
                "grid dimensions and pitch must be at least 1".into(),
            ));
        }
        if self.iterations == 0 || self.seeds_per_layer == 0 || self.timeout_ms == 0 {
            return Err(Error::Config(
                "iterations, seeds and timeout must be positive".into(),
            ));
        }
        if c.num_qubits > self.capacity() {
            return Err(Error::Capacity {
                qubits: c.num_qubits,
                w: self.grid.0,
                h: self.grid.1,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerStats {
    pub layer: usize,
    pub spiders: usize,
    /// Spiders left holding connections into later layers.
    pub placeholder_ports: usize,
    pub iterations: usize,
    pub volume: u64,
}

#[derive(Clone, Debug)]
pub struct CompileResult {
    pub pipe: PipeDiagram,
    pub volume: u64,
    pub layers: Vec<LayerStats>,
    /// Layers no search could embed.
    pub fallback_layers: Vec<usize>,
    /// The sequential compilation was returned instead of the search result.
    pub used_baseline: bool,
    pub baseline_volume: Option<u64>,
    pub warnings: Vec<String>,
}

fn embed_program(
    c: &Circuit,
    cfg: &CompileConfig,
    stats: &mut Vec<LayerStats>,
    warnings: &mut Vec<String>,
) -> Result<PipeDiagram> {
    let sched = partition_program(c, &cfg.partition)?;
    warnings.extend(sched.warnings.iter().cloned());
    let (emb, mut st) = Embedder::new(&sched, cfg, c.num_qubits)?;
    for l in 1..=sched.num_layers() {
        let iterations = match emb.embed_layer_mcts(&mut st, l) {
            Some(s) => s.iterations,
            None if emb.embed_layer_relaxed(&mut st, l) => 0,
            None => return Err(Error::Embed(format!("layer {l}"))),
        };
        debug_assert!(
            validate_pipe_diagram(&st.partial).iter().all(|v| matches!(
                v,
                Violation::PortList { .. } | Violation::PortDegree { degree: 0, .. }
            )),
            "{:?}",
            validate_pipe_diagram(&st.partial)
        );
        stats.push(LayerStats {
            layer: l,
            spiders: sched.layer(l).spiders.len(),
            placeholder_ports: emb.placeholder_count(&st, l),
            iterations,
            volume: st.volume(),
        });
    }
    emb.finish(&mut st)?;
    Ok(st.partial)
}

/// Partition, slice and embed `c`. When some layer cannot be embedded, or
/// the sequential compilation turns out smaller, that one is returned.
pub fn compile_full(c: &Circuit, cfg: &CompileConfig) -> Result<CompileResult> {
    c.validate()?;
    cfg.check(c)?;
    let baseline = compile_baseline(c, cfg).ok();
    let baseline_volume = baseline.as_ref().map(space_time_volume);
    let mut layers = Vec::new();
    let mut warnings = Vec::new();
    let mut fallback_layers = Vec::new();
    let mut used_baseline = false;
    let pipe = match embed_program(c, cfg, &mut layers, &mut warnings) {
        Ok(p) if baseline_volume.is_none_or(|b| space_time_volume(&p) <= b) => p,
        Ok(_) => {
            used_baseline = true;
            baseline.expect("baseline volume implies a diagram")
        }
        Err(e) => {
            warnings.push(format!(
                "embedding failed ({e}); using the sequential compilation"
            ));
            if let Error::Embed(msg) = &e {
                if let Some(l) = msg.strip_prefix("layer ").and_then(|l| l.parse().ok()) {
                    fallback_layers.push(l);
                }
            }
            used_baseline = true;
            baseline.ok_or(e)?
        }
    };
    let violations = validate_pipe_diagram(&pipe);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidPipe(format!(
            "compiler produced an invalid diagram: {v}"
        )));
    }
    Ok(CompileResult {
        volume: space_time_volume(&pipe),
        pipe,
        layers,
        fallback_layers,
        used_baseline,
        baseline_volume,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_circuit, Gate};
    use crate::pipe::{diagram_to_json, CubeKind};
    use crate::verify::check_semantic_equivalence;

    fn small() -> CompileConfig {
        CompileConfig {
            grid: (2, 2),
            ..CompileConfig::default()
        }
    }

    #[test]
    fn single_h_is_one_hadamard_cube() {
        let c = Circuit::with_gates(1, vec![Gate::h(0)]).unwrap();
        let r = compile_full(&c, &small()).unwrap();
        assert_eq!(r.pipe.count_kind(CubeKind::Hadamard), 1);
        assert_eq!(r.pipe.count_kind(CubeKind::Standard), 0);
        assert!(check_semantic_equivalence(&c, &r.pipe, 1e-9).unwrap());
        assert_eq!(r.volume, space_time_volume(&r.pipe));
    }

    #[test]
    fn random_three_qubit_circuits_verify() {
        for seed in 0..10 {
            let c = random_circuit(3, 8, seed);
            let r = compile_full(&c, &small()).unwrap();
            assert!(validate_pipe_diagram(&r.pipe).is_empty());
            assert!(
                check_semantic_equivalence(&c, &r.pipe, 1e-9).unwrap(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn same_seed_same_json() {
        let cfg = CompileConfig {
            iterations: 50,
            timeout_ms: 600_000,
            ..small()
        };
        let c = random_circuit(4, 8, 3);
        let a = compile_full(&c, &cfg).unwrap();
        let b = compile_full(&c, &cfg).unwrap();
        assert_eq!(diagram_to_json(&a.pipe), diagram_to_json(&b.pipe));
    }

    #[test]
    fn capacity_is_checked() {
        let c = Circuit::new(5);
        assert!(matches!(
            compile_full(&c, &small()),
            Err(Error::Capacity { qubits: 5, .. })
        ));
    }

    #[test]
    fn opt_levels_parse() {
        for s in ["none", "place", "part", "full"] {
            assert_eq!(s.parse::<OptLevel>().unwrap().to_string(), s);
        }
        assert!("max".parse::<OptLevel>().is_err());
    }
}
