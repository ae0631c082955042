//! Inner solvers shared by the outer algorithms.

pub mod armijo;
pub mod barrier;
pub mod dinkelbach;
pub mod pg;
pub mod waterfill;
pub mod ysub;

pub use armijo::{armijo_linesearch, ArmijoStep};
pub use barrier::{barrier_maximize, BarrierOptions, BarrierOutcome, BlockLayout};
pub use dinkelbach::{dinkelbach, dinkelbach_from, DinkelbachOutcome};
pub use pg::{project_block, project_capped_simplex, projected_gradient_concave, BlockSet, PgOptions, PgOutcome};
pub use waterfill::{bisect_multiplier, bisect_multiplier_from, waterfill, WaterfillProblem};
pub use ysub::{y_gradient, y_objective, y_subproblem};
