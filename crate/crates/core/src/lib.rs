//! Lattice-surgery compiler core: circuits are lowered to ZX diagrams,
//! fused, sliced into layers and embedded into 3D pipe diagrams by a
//! Monte Carlo tree search.

pub mod circuit;
pub mod embed;
pub mod error;
pub mod pipe;
pub mod schedule;
pub mod verify;
pub mod zx;

pub use circuit::{generate_benchmark, parse_qasm, Circuit, Family, Gate, GateKind};
pub use error::{Error, Result};
