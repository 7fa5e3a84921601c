//! Solver library for staged drying processes that use interchangeable
//! technologies per stage.
//!
//! The library jointly optimizes the discrete sequence of sub-processes
//! (the *path*: one technology per stage) and the continuous operating
//! parameters of every stage (residence time, air temperature). The
//! combinatorial part is relaxed to a probability distribution over all
//! paths; an inverse-temperature parameter anneals the relaxed objective
//! from its entropy-dominated convex start to the original cost, tracking
//! the minimizer along the way.
//!
//! Crate layout:
//! - [`kinetics`]: semi-empirical thin-layer drying model (rate and
//!   equilibrium polynomials, one-stage moisture transition),
//! - [`process`]: per-stage energy costs, terminal moisture penalty, and
//!   full path cost for the reference hot-air / ultrasound dryer,
//! - [`path`]: the path space and distributions over it,
//! - [`anneal`]: Gibbs weights, free energy, and the annealing solver,
//! - [`oracle`]: brute-force reference optimizer for validation,
//! - [`minimize`]: box-constrained projected-gradient descent,
//! - [`exec`]: data-parallel map helpers (rayon behind the `parallel`
//!   feature, sequential fallback otherwise).

pub mod anneal;
pub mod exec;
pub mod kinetics;
pub mod math;
pub mod minimize;
pub mod model;
pub mod oracle;
pub mod path;
pub mod process;

pub use anneal::{
    free_energy, free_energy_from_costs, gibbs_weights, inner_minimize, solve, AnnealSchedule,
    SolveError, SolveOptions, SolveResult, TracePoint,
};
pub use kinetics::{
    celsius_from_kelvin, equilibrium_moisture, equivalent_time, kelvin_from_celsius, rate_constant,
    step, step_clamped, KineticsConstants, KineticsError, MoistureState, StageParams, Technology,
};
pub use minimize::{MinimizeError, MinimizeOptions, MinimizeOutcome, MinimizeStatus};
pub use model::{ParamBounds, PathCostModel};
pub use oracle::{exhaustive_solve, optimize_single_path, GridSpec, OracleError, OracleReport};
pub use path::{argmax_weight, enumerate_paths, Path, PathDistribution, PathSpaceError};
pub use process::{
    default_initial_params, path_cost, stage_cost, terminal_penalty, uniform_time_to_target,
    ConfigError, DryingModel, ModelError, ProcessConfig, StageCostBreakdown,
};
