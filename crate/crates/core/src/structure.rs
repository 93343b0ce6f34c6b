//! Network-structural analyses: essential agents via agent removal, and
//! negotiation-separation cost bounds with a spectral split heuristic.
//!
//! An agent is essential when dropping them (zeroing their row and column,
//! so they neither give nor receive marginal benefits) moves the spectral
//! radius of the status-quo benefits matrix from above 1 to below 1 —
//! destroying every Pareto improvement on the status quo.

use ndarray::Array1;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{self, ActionProfile, BenefitsMatrix, EconomySpec, ModelError};
use crate::spectral::{self, SpectralError};
use crate::tolerances::Tolerances;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("benefits matrix at the zero profile is undefined (log-term utilities)")]
    UndefinedAtZero,
    #[error("profile is not efficient (rho = {rho}); separation bound needs Pareto weights")]
    NotEfficient { rho: f64 },
    #[error("bad partition: {0}")]
    BadPartition(String),
}

/// Per-agent removal sweep at the status quo. Agent indices are 0-based.
#[derive(Debug, Clone)]
pub struct EssentialAgentsReport {
    pub rho_full: f64,
    /// `rho_without[i] = ρ(B^{[-i]}(0))`.
    pub rho_without: Vec<f64>,
    pub essential: Vec<usize>,
    /// Agents whose removal lands inside the tolerance band around 1;
    /// deliberately not classified either way.
    pub marginal: Vec<usize>,
}

/// Zeroes row i and column i, keeping the dimension for index stability.
/// The spectral radius equals that of the principal submatrix on the
/// remaining agents.
pub fn remove_agent(b: &BenefitsMatrix, i: usize) -> Result<BenefitsMatrix, StructureError> {
    let n = b.n();
    if i >= n {
        return Err(StructureError::IndexOutOfRange { index: i, n });
    }
    let mut m = b.matrix().clone();
    for k in 0..n {
        m[[i, k]] = 0.0;
        m[[k, i]] = 0.0;
    }
    Ok(BenefitsMatrix::new(m, b.at().clone()).expect("zeroing preserves validity"))
}

/// Removal sweep with the two-threshold essentiality rule: the economy must
/// be strictly improvable before removal (`rho_full > 1 + τ`) and strictly
/// unimprovable after (`rho_without < 1 − τ`). Radii of the n removal
/// matrices are evaluated concurrently.
pub fn essential_agents(
    spec: &EconomySpec,
    tol: &Tolerances,
) -> Result<EssentialAgentsReport, StructureError> {
    if spec.has_log_terms() {
        return Err(StructureError::UndefinedAtZero);
    }
    let n = spec.n();
    let zero = ActionProfile::zeros(n);
    let b = model::benefits_at(spec, &zero).map_err(|e| match e {
        ModelError::DomainError(_) => StructureError::UndefinedAtZero,
        other => StructureError::Model(other),
    })?;
    let rho_full = spectral::spectral_radius_tol(b.matrix(), tol)?;

    let rho_without: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let removed = remove_agent(&b, i)?;
            Ok(spectral::spectral_radius_tol(removed.matrix(), tol)?)
        })
        .collect::<Result<Vec<f64>, StructureError>>()?;

    let mut essential = Vec::new();
    let mut marginal = Vec::new();
    if rho_full > 1.0 + tol.pareto {
        for (i, &r) in rho_without.iter().enumerate() {
            if r < 1.0 - tol.pareto {
                essential.push(i);
            } else if r <= 1.0 + tol.pareto {
                marginal.push(i);
            }
        }
    }
    Ok(EssentialAgentsReport {
        rho_full,
        rho_without,
        essential,
        marginal,
    })
}

/// One ordered cross pair of the separation bound:
/// `value = θ_i/θ_j · B_ij(a*) · a*_j`. Indices are 0-based.
#[derive(Debug, Clone)]
pub struct CrossTerm {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub partition: Vec<usize>,
    pub complement: Vec<usize>,
    /// Upper bound on the cost of separating negotiations along the
    /// partition: the θ-weighted cut of the benefits network.
    pub bound: f64,
    pub cross_terms: Vec<CrossTerm>,
    pub heuristic_used: bool,
}

/// The separation cost bound for splitting negotiations into `m` versus its
/// complement, summed over all ordered cross pairs. Cross terms are listed
/// in lexicographic (i, j) order regardless of which side was passed in, so
/// `bound(M)` and `bound(M^c)` are bit-identical.
pub fn separation_bound(
    spec: &EconomySpec,
    a_star: &ActionProfile,
    theta: &Array1<f64>,
    m: &[usize],
    tol: &Tolerances,
) -> Result<SeparationReport, StructureError> {
    let n = spec.n();
    if theta.len() != n || a_star.len() != n {
        return Err(StructureError::BadPartition(format!(
            "profile/weights sized for {} agents, economy has {n}",
            theta.len()
        )));
    }
    let mut in_m = vec![false; n];
    for &i in m {
        if i >= n {
            return Err(StructureError::IndexOutOfRange { index: i, n });
        }
        if in_m[i] {
            return Err(StructureError::BadPartition(format!(
                "agent {} listed twice",
                i + 1
            )));
        }
        in_m[i] = true;
    }
    let size = in_m.iter().filter(|&&x| x).count();
    if size == 0 || size == n {
        return Err(StructureError::BadPartition(
            "partition must be a nonempty proper subset".into(),
        ));
    }

    // The bound is stated for Jacobians row-normalized to J_ii = −1; B is
    // invariant to row scaling, so forming it from the raw Jacobian already
    // incorporates that normalization.
    let b = model::benefits_at(spec, a_star)?;
    let rho = spectral::spectral_radius_tol(b.matrix(), tol)?;
    if (rho - 1.0).abs() > tol.pareto {
        return Err(StructureError::NotEfficient { rho });
    }

    let av = a_star.values();
    let mut cross_terms = Vec::new();
    let mut bound = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j || in_m[i] == in_m[j] {
                continue;
            }
            let value = theta[i] / theta[j] * b.matrix()[[i, j]] * av[j];
            bound += value;
            cross_terms.push(CrossTerm { i, j, value });
        }
    }
    let (partition, complement): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| in_m[i]);
    Ok(SeparationReport {
        partition,
        complement,
        bound,
        cross_terms,
        heuristic_used: false,
    })
}

#[derive(Debug, Clone)]
pub struct SuggestedPartition {
    /// The side of the split containing agent 0 (0-based).
    pub m: Vec<usize>,
    /// Magnitude of the subdominant eigenvalue: a value near the spectral
    /// radius signals that a cheap split exists.
    pub subdominant_magnitude: f64,
    /// Set when the subdominant direction had no sign change; the returned
    /// split is then a singleton fallback and should be treated skeptically.
    pub degenerate: bool,
}

/// Spectral-bisection heuristic: partitions agents by the sign pattern of
/// the subdominant eigenvector. Zero entries go to the smaller side, ties to
/// agent 0's side. Explicitly a heuristic; downstream reports carry
/// `heuristic_used = true`.
pub fn suggest_partition(b: &BenefitsMatrix) -> Result<SuggestedPartition, StructureError> {
    let n = b.n();
    if n == 2 {
        let (mag, _) = spectral::subdominant_magnitude(b.matrix())?;
        return Ok(SuggestedPartition {
            m: vec![0],
            subdominant_magnitude: mag,
            degenerate: false,
        });
    }
    let (mag, v) = spectral::subdominant_magnitude(b.matrix())?;
    let max_abs = v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let zero_band = 1e-12 * max_abs;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut zeros = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        if x > zero_band {
            pos.push(i);
        } else if x < -zero_band {
            neg.push(i);
        } else {
            zeros.push(i);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        // No sign change: fall back to splitting off the heaviest entry.
        let heavy = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        return Ok(SuggestedPartition {
            m: vec![heavy],
            subdominant_magnitude: mag,
            degenerate: true,
        });
    }
    // Zero entries join the smaller side; on a tie, the side with agent 0.
    let target = if pos.len() < neg.len() {
        &mut pos
    } else if neg.len() < pos.len() {
        &mut neg
    } else if pos.contains(&0) {
        &mut pos
    } else {
        &mut neg
    };
    target.extend(zeros);
    target.sort_unstable();

    let m = if pos.contains(&0) { pos } else { neg };
    Ok(SuggestedPartition {
        m,
        subdominant_magnitude: mag,
        degenerate: false,
    })
}
