mod bench;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lsc_core::embed::{compile_full, CompileConfig, OptLevel};
use lsc_core::schedule::{partition_program, PartitionConfig};
use lsc_core::{pipe, verify, zx, Circuit};

use report::CompileReport;

#[derive(Parser)]
#[command(
    name = "lsc",
    version,
    about = "Compile quantum circuits to lattice-surgery pipe diagrams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a QASM file to a pipe diagram.
    Compile(CompileArgs),
    /// Compile benchmark families with the search compiler and the baseline.
    Bench(bench::BenchArgs),
}

#[derive(Args, Clone, Debug)]
pub struct Tuning {
    /// Data-qubit grid as WxH.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long, default_value = "full")]
    opt: OptLevel,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 2000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// topo, topo:T, uniform:K or none; overrides the --opt default.
    #[arg(long)]
    partition: Option<PartitionConfig>,
}

impl Tuning {
    fn config(&self, grid: (usize, usize)) -> CompileConfig {
        let mut cfg = CompileConfig {
            grid,
            iterations: self.iterations,
            timeout_ms: self.timeout_ms,
            rng_seed: self.seed,
            threads: threads(),
            ..CompileConfig::default()
        }
        .with_opt(self.opt);
        if let Some(p) = &self.partition {
            cfg.partition = *p;
        }
        cfg
    }
}

#[derive(Args)]
struct CompileArgs {
    /// OpenQASM 2 input.
    input: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
    /// Pipe-diagram JSON; defaults to the input with a .pipe.json extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Wavefront OBJ mesh of the diagram.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Check the diagram against the circuit by tensor contraction.
    #[arg(long)]
    verify: bool,
    /// Fused ZX diagram as JSON.
    #[arg(long)]
    dump_zx: Option<PathBuf>,
    /// Compile report as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

/// Failures caused by the user's input rather than the compiler.
#[derive(Debug)]
struct BadInput(String);

impl std::fmt::Display for BadInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BadInput {}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("bad grid dimension '{v}'")),
    };
    Ok((dim(w)?, dim(h)?))
}

fn threads() -> usize {
    std::env::var("TOPOLS_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Smallest square grid holding `n` qubits.
pub fn square_grid(n: usize) -> (usize, usize) {
    let mut side = 1;
    while side * side < n {
        side += 1;
    }
    (side, side)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BadInput(format!("reading {}: {e}", path.display())))?;
    Ok(lsc_core::parse_qasm(&text)?)
}

fn run_compile(args: &CompileArgs) -> Result<()> {
    let circuit = load(&args.input)?;
    let grid = args
        .tuning
        .grid
        .unwrap_or_else(|| square_grid(circuit.num_qubits));
    let cfg = args.tuning.config(grid);
    cfg.check(&circuit)?;

    if let Some(path) = &args.dump_zx {
        let sched = partition_program(&circuit, &cfg.partition)?;
        write(path, &zx::diagram_to_json(&sched.diagram))?;
    }

    let start = Instant::now();
    let result = compile_full(&circuit, &cfg)?;
    let elapsed = start.elapsed();
    let mut report = CompileReport::new(&result, elapsed, &args.tuning, &cfg);

    if args.verify {
        match verify::check_semantic_equivalence(&circuit, &result.pipe, 1e-9) {
            Ok(ok) => report.verified = Some(ok),
            Err(lsc_core::Error::TensorTooLarge(..)) => report
                .warnings
                .push("circuit too large to verify by tensor contraction".into()),
            Err(e) => return Err(e.into()),
        }
    }

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.input.with_extension("pipe.json"));
    write(&out, &pipe::diagram_to_json(&result.pipe))?;
    if let Some(path) = &args.mesh {
        write(path, &pipe::to_obj(&result.pipe))?;
    }
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &args.stats {
        write(path, &json)?;
    }
    println!("{json}");
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if report.verified == Some(false) {
        bail!("compiled diagram does not match the circuit");
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<BadInput>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<lsc_core::Error>() {
            use lsc_core::Error::*;
            return match err {
                Parse { .. }
                | Unsupported { .. }
                | InvalidCircuit(_)
                | UnknownFamily(_)
                | Config(_)
                | Capacity { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Compile(a) => run_compile(a),
        Command::Bench(a) => bench::run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("4x4"), Ok((4, 4)));
        assert_eq!(parse_grid("3X2"), Ok((3, 2)));
        assert!(parse_grid("0x4").is_err());
        assert!(parse_grid("44").is_err());
    }

    #[test]
    fn square_grid_fits() {
        assert_eq!(square_grid(1), (1, 1));
        assert_eq!(square_grid(16), (4, 4));
        assert_eq!(square_grid(17), (5, 5));
    }

    #[test]
    fn input_errors_exit_two() {
        let e: anyhow::Error = lsc_core::Error::Capacity {
            qubits: 5,
            w: 2,
            h: 2,
        }
        .into();
        assert_eq!(exit_code(&e), 2);
        let e: anyhow::Error = lsc_core::Error::Embed("layer 1".into()).into();
        assert_eq!(exit_code(&e), 1);
        assert_eq!(exit_code(&anyhow::Error::new(BadInput("x".into()))), 2);
    }
}
