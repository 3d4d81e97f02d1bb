//! Core algorithms: circle lifts, staged constructions, perturbation steps,
//! and annulus twist maps.

pub mod bump;
pub mod circle;
pub mod diagnostics;
pub mod error;
pub mod lift;
pub mod linearize;
pub mod model;
pub mod orbit;
pub mod poly;
pub mod potential;
pub mod quad;
pub mod rootfind;
pub mod rotation;
pub mod schedule;
pub mod stage;
pub mod step;
pub mod tree;

pub use error::{CoreError, Result};
pub use lift::{LiftNode, LiftSpec, MonotoneLift, Patch};
pub use linearize::{build_linearizer, Linearizer, LinearizerConfig};
pub use model::{ModelMap, SlopeProfile};
pub use potential::{BumpSum, PlacedBump};
pub use schedule::{CocycleSchedule, CocycleTable, WindowPolicy, Windows};
pub use step::{apply_step, find_uv, transfer_check, StepConfig, StepOutcome, StepReport};
