//! Numerical thresholds shared across modules.

/// Default tolerance for every equality predicate.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Sorted eigenvalues closer than this are merged into one spectral atom.
pub const EIGEN_CLUSTER_GAP: f64 = 1e-7;

/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-7;

/// Least-squares residual separating consistent from inconsistent systems.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Singular values above this count towards numerical rank.
pub const RANK_TOL: f64 = 1e-8;

/// Projections are keyed by entries rounded to this many decimals.
pub const KEY_DECIMALS: i32 = 6;

/// Projections closer than this (but farther than the identification
/// tolerance) are rejected as near-duplicates.
pub const NEAR_DUPLICATE_GRID: f64 = 1e-6;

/// Feasibility threshold for the phase-one simplex objective.
pub const LP_FEAS_TOL: f64 = 1e-9;
