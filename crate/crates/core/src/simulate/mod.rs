//! Sampling from mixed Askey–Wilson laws, path simulation, the finite-state
//! process, bridge endpoints and Monte Carlo estimators.

mod kernel;
mod paths;
mod table;

pub use paths::{path_rng, sample_path, sample_paths, PathRow, PathSampler, Trajectory};
pub use table::{sample_measure, Draw, InverseCdfTable, MeasureSampler, GRID_CELLS};
mod estimate;
pub use estimate::{
    mc_conditional, CondMeanCoeffs, Estimate, GreekFit, McConditionalReport, VarCell, MIN_CELL,
    MIN_PATHS, VAR_BINS,
};
mod discrete;
pub use discrete::{discrete_ck_residual, discrete_process, DiscreteProcess, DiscreteProcessSpec};
mod bridge;
pub use bridge::{bridge_endpoints, BridgeEndpoints, BridgeLaw, Endpoint};
