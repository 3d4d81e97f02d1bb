//! Benchmark crate: see `benches/pipeline.rs`. Re-exports the core crate so
//! benches have a single import root.
pub use twirl_core::*;
