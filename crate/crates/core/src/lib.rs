//! Numerical engine for the marginal-benefits network of a public-goods
//! economy.
//!
//! The library builds the benefits matrix `B(a)` — entry (i, j) is how much
//! effort agent i would trade for one unit of agent j's effort — and computes
//! the objects that network supports:
//!
//! - efficiency diagnostics from the spectral radius of `B(a)` ([`efficiency`]),
//! - Pareto weights and constructive improvement directions ([`efficiency`]),
//! - centrality action profiles with Lindahl price certificates ([`lindahl`]),
//! - essential agents and separation-cost bounds ([`structure`]),
//! - Perron–Frobenius machinery shared by all of the above ([`spectral`]).
//!
//! The `externet` binary exposes the same analyses as batch commands over
//! economy JSON files; see [`cli`].

pub mod cli;
pub mod efficiency;
mod linalg;
pub mod lindahl;
pub mod model;
pub mod report;
pub mod spectral;
pub mod structure;
pub mod tolerances;

pub use efficiency::{EfficiencyReport, ParetoWeights, Verdict};
pub use lindahl::{LindahlCertificate, SolveOptions};
pub use model::{ActionProfile, BenefitsMatrix, EconomySpec, JacobianMatrix, UtilityOracle};
pub use spectral::PerronPair;
pub use structure::{EssentialAgentsReport, SeparationReport};
pub use tolerances::Tolerances;

/// Library version embedded in every report.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
