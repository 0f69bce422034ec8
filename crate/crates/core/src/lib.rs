//! Spectral classification of weighted shift operators `B = a·T̃_α` generated by
//! Morse-Smale maps.
//!
//! The crate is split along the pipeline:
//!
//! * [`expr`] parses coefficient and map formulas.
//! * [`dynamics`] iterates the maps, finds fixed points and their limits, and builds
//!   fundamental domains and orbit coefficient sequences.
//! * [`graph`] holds the oriented fixed-point graph and its `(G⁻, G⁺)` decompositions.
//! * [`classifier`] turns a graph and `λ` into a verdict on `B − λI`.
//! * [`discrete`] is the `ℓ²(ℤ)` weighted-shift laboratory used to check every verdict
//!   block by block.

pub mod classifier;
pub mod coefficient;
pub mod discrete;
pub mod dynamics;
pub mod expr;
pub mod graph;

pub use classifier::{Annulus, Classification, KernelInfo, Provenance, RangeInfo, Status};
pub use coefficient::Coefficient;
pub use discrete::{CoeffSeq, OracleReport, ZVec};
pub use dynamics::{FixedPoint, FixedPointKind, IntervalMap, MapModel};
pub use expr::Expr;
pub use graph::{Decomposition, MSGraph, Orientation};

/// Seed used whenever a caller does not supply one.
pub const DEFAULT_SEED: u64 = 42;
