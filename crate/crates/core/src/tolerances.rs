//! Numerical tolerances used across the library.
//!
//! Everything here is sized for desk-scale dense problems (n in the tens).
//! Solver residuals land well inside these bands; random inefficiencies land
//! well outside them.

/// Residual tolerance `‖Mv − ρv‖∞` for power-iteration eigenvalue solves.
pub const EIGEN_RESIDUAL: f64 = 1e-10;

/// Shift fraction: power iteration runs on `M + σI` with
/// `σ = POWER_SHIFT · max_entry(M)`, which makes periodic matrices primitive
/// without changing eigenvectors. The shift is subtracted from the result.
pub const POWER_SHIFT: f64 = 1e-3;

/// Half-width of the band around spectral radius 1 inside which an interior
/// profile is classified as Pareto efficient.
pub const PARETO_BAND: f64 = 1e-8;

/// Bound on the planner first-order-condition residual `‖θᵀJ(a)‖∞` required
/// of certified Pareto weights.
pub const FOC_RESIDUAL: f64 = 1e-8;

/// Fixed-point residual `‖B(a)a − a‖∞` required of a solved centrality
/// profile.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-10;

/// Budget residual bound for Lindahl price certificates. Looser than the
/// fixed-point residual because it compounds eigenvector and Jacobian error.
pub const BUDGET_RESIDUAL: f64 = 1e-8;

/// Relative step for central finite differences: `h = FD_STEP · max(1, a_j)`.
pub const FD_STEP: f64 = 1e-6;

/// Magnitude below which a Jacobian diagonal entry is treated as singular
/// (the benefits matrix divides by `−J_ii`).
pub const SINGULAR_DIAGONAL: f64 = 1e-12;

/// Margin kept between `alpha · ρ(G)` and 1 in the closed-form family solver.
pub const SPECTRAL_BOUND_MARGIN: f64 = 1e-9;

/// Floor substituted for zero coordinates when log utilities must be
/// evaluated on a coalition grid.
pub const GRID_FLOOR: f64 = 1e-9;

/// Noise band for sign checks on finite-difference Jacobians: off-diagonal
/// entries in `(−FD_NOISE, 0)` are clipped to zero, anything below it is an
/// assumption violation.
pub const FD_NOISE: f64 = 1e-6;

/// Iteration cap for power iterations on an n×n matrix.
pub fn max_power_iterations(n: usize) -> usize {
    100 * n + 10_000
}

/// Tolerance bundle threaded through the higher-level operations. The CLI
/// exposes overrides for `eig`, `pareto` and `fix`; the rest are fixed.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub eig: f64,
    pub pareto: f64,
    pub fix: f64,
    pub budget: f64,
    pub foc: f64,
    /// Overrides the per-size iteration cap when set.
    pub max_iter: Option<usize>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig: EIGEN_RESIDUAL,
            pareto: PARETO_BAND,
            fix: FIXED_POINT_RESIDUAL,
            budget: BUDGET_RESIDUAL,
            foc: FOC_RESIDUAL,
            max_iter: None,
        }
    }
}

