//! Simulation and analysis of a scalar fractional-order delay differential
//! equation with cubic delayed feedback,
//!
//! ```text
//! D^a x(t) = delta x(t - tau) - epsilon x(t - tau)^3 - p x(t)^2 + q x(t)
//! ```
//!
//! with Caputo derivative of order a in (0, 1].

pub mod chaos;
pub mod error;
pub mod model;
pub mod region;
pub mod solver;
pub mod stability;

pub use chaos::{
    bifurcation_scan, count_clusters, estimate_lag, local_extrema, max_lyapunov,
    BifurcationPoint, EmbeddingConfig,
};
pub use error::{Error, Result};
pub use model::{
    equilibria, linearize, rhs, Branch, Equilibrium, HistoryFn, LinearCoeffs, ModelParams,
    SampledHistory,
};
pub use region::{
    classify_region, g1, g2, landmarks, sample_grid, RegionGrid, RegionLabel, RegionLandmarks,
};
pub use solver::{
    commensurate_step, integrate, mittag_leffler_1p, reference_rk4, SolverConfig, TimeSeries,
};
pub use stability::{
    classify_equilibrium, classify_linear, crit_delay, crossing_oracle, CrossingPoint,
    StabilityKind, StabilityVerdict, TheoremId, VerdictSource,
};
