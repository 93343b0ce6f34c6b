//! Pareto-efficiency diagnostics built on the spectral radius of the
//! benefits matrix: an interior profile is efficient iff ρ(B(a)) = 1, the
//! status quo iff ρ(B(0)) ≤ 1. Off the knife edge, the right Perron vector
//! is a constructive Pareto-improvement direction; on it, the left Perron
//! vector yields the planner weights. A brute-force grid checker probes the
//! core property on tiny instances.

use ndarray::Array1;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{self, ActionProfile, EconomySpec, ModelError};
use crate::spectral::{self, SpectralError};
use crate::tolerances::{self, Tolerances};

#[derive(Debug, Error)]
pub enum EfficiencyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("profile is not interior")]
    NotInterior,
    #[error("profile is at efficiency (rho = {rho}); no improvement direction exists")]
    AtEfficiency { rho: f64 },
    #[error("profile is not efficient (rho = {rho})")]
    NotEfficient { rho: f64 },
    #[error("benefits matrix at zero is undefined: {0}")]
    UndefinedAtZero(String),
    #[error("coalition enumeration capped at {max} agents, economy has {n}")]
    TooManyAgents { n: usize, max: usize },
    #[error("certificate check `{what}` failed with value {value:.3e}")]
    CertificateFailed { what: &'static str, value: f64 },
    #[error("bad input: {0}")]
    BadInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Efficient,
    ImprovableUp,
    ImprovableDown,
    StatusQuoEfficient,
    StatusQuoImprovable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Efficient => "efficient",
            Verdict::ImprovableUp => "improvable_up",
            Verdict::ImprovableDown => "improvable_down",
            Verdict::StatusQuoEfficient => "status_quo_efficient",
            Verdict::StatusQuoImprovable => "status_quo_improvable",
        }
    }
}

/// Efficiency verdict at a profile, with the supporting object: a signed
/// improvement direction when improvable, positive Pareto weights when
/// efficient. Directions and weights are reported at unit 1-norm.
#[derive(Debug, Clone)]
pub struct EfficiencyReport {
    pub profile: ActionProfile,
    pub rho: f64,
    pub verdict: Verdict,
    pub direction: Option<Array1<f64>>,
    pub weights: Option<Array1<f64>>,
    pub tolerance: f64,
    pub note: Option<String>,
}

/// Pareto weights with their certified planner first-order-condition
/// residual `‖θᵀJ(a)‖∞`.
#[derive(Debug, Clone)]
pub struct ParetoWeights {
    pub theta: Array1<f64>,
    pub foc_residual: f64,
    pub rho: f64,
}

/// Planner weights from the left Perron vector: `θ_i = ℓ_i / (−J_ii)`,
/// normalized to unit 1-norm. For row-normalized utilities (every built-in
/// family has `J_ii = −1`) this is the left Perron vector itself; the
/// division keeps `θᵀJ = 0` exact for oracles that are not normalized.
fn theta_from_left(left: &Array1<f64>, jac: &model::JacobianMatrix) -> Array1<f64> {
    let j = jac.matrix();
    let mut theta = Array1::zeros(left.len());
    for i in 0..left.len() {
        theta[i] = left[i] / -j[[i, i]];
    }
    let norm = theta.sum();
    theta.mapv(|v| v / norm)
}

fn unit_one_norm(v: &Array1<f64>) -> Array1<f64> {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    v.mapv(|x| x / norm)
}

/// Classifies an interior profile by ρ(B(a)) against the `pareto` band.
pub fn classify_interior(
    spec: &EconomySpec,
    a: &ActionProfile,
    tol: &Tolerances,
) -> Result<EfficiencyReport, EfficiencyError> {
    if !a.is_interior() {
        return Err(EfficiencyError::NotInterior);
    }
    let jac = model::jacobian(spec, a)?;
    let b = model::benefits_matrix(&jac)?;
    let pp = spectral::perron_pair_tol(b.matrix(), tol)?;
    let rho = pp.radius;
    let report = if (rho - 1.0).abs() <= tol.pareto {
        EfficiencyReport {
            profile: a.clone(),
            rho,
            verdict: Verdict::Efficient,
            direction: None,
            weights: Some(theta_from_left(&pp.left, &jac)),
            tolerance: tol.pareto,
            note: None,
        }
    } else {
        let up = rho > 1.0;
        let d = if up {
            unit_one_norm(&pp.right)
        } else {
            unit_one_norm(&pp.right).mapv(|x| -x)
        };
        EfficiencyReport {
            profile: a.clone(),
            rho,
            verdict: if up {
                Verdict::ImprovableUp
            } else {
                Verdict::ImprovableDown
            },
            direction: Some(d),
            weights: None,
            tolerance: tol.pareto,
            note: None,
        }
    };
    Ok(report)
}

/// Classifies the zero profile. With log terms, `B(0)` is undefined because
/// marginal benefits diverge there; any such economy is improvable, so the
/// verdict is `StatusQuoImprovable` by convention, with a diagnostic note and
/// a uniform direction.
pub fn classify_status_quo(
    spec: &EconomySpec,
    tol: &Tolerances,
) -> Result<EfficiencyReport, EfficiencyError> {
    let n = spec.n();
    if spec.has_log_terms() {
        return Ok(EfficiencyReport {
            profile: ActionProfile::zeros(n),
            rho: f64::INFINITY,
            verdict: Verdict::StatusQuoImprovable,
            direction: Some(Array1::from_elem(n, 1.0 / n as f64)),
            weights: None,
            tolerance: tol.pareto,
            note: Some(
                "marginal log benefits diverge at 0; improvable by convention".to_string(),
            ),
        });
    }
    let zero = ActionProfile::zeros(n);
    let b = model::benefits_at(spec, &zero).map_err(|e| match e {
        ModelError::DomainError(d) => EfficiencyError::UndefinedAtZero(d),
        other => EfficiencyError::Model(other),
    })?;
    let (rho, dir) = spectral::dominant_pair_with(b.matrix(), tol.eig, tol.max_iter)?;
    let mut note = None;
    let verdict = if rho <= 1.0 + tol.pareto {
        if rho > 1.0 - tol.pareto {
            // Boundary case rho(B(0)) ≈ 1: efficiency holds at rho ≤ 1 but
            // improvability is not established inside the band.
            note = Some(format!(
                "rho(B(0)) = {rho} lies within the tolerance band of 1; \
                 improvability is not established"
            ));
        }
        Verdict::StatusQuoEfficient
    } else {
        Verdict::StatusQuoImprovable
    };
    let direction = if verdict == Verdict::StatusQuoImprovable {
        if !spectral::is_irreducible(b.matrix()) {
            note = Some(
                "B(0) is reducible; the improvement direction may have zero entries".to_string(),
            );
        }
        Some(unit_one_norm(&dir))
    } else {
        None
    };
    Ok(EfficiencyReport {
        profile: zero,
        rho,
        verdict,
        direction,
        weights: None,
        tolerance: tol.pareto,
        note,
    })
}

/// The constructive Pareto-improvement direction: the right Perron vector of
/// `B(a)` when ρ > 1 (everyone works more), its negative when ρ < 1
/// (everyone works less). Satisfies `Σ_j J_ij(a) d_j > 0` for all agents.
pub fn improvement_direction(
    spec: &EconomySpec,
    a: &ActionProfile,
    tol: &Tolerances,
) -> Result<Array1<f64>, EfficiencyError> {
    let jac = model::jacobian(spec, a)?;
    let b = model::benefits_matrix(&jac)?;
    let pp = spectral::perron_pair_tol(b.matrix(), tol)?;
    let rho = pp.radius;
    if (rho - 1.0).abs() <= tol.pareto {
        return Err(EfficiencyError::AtEfficiency { rho });
    }
    if rho < 1.0 && !a.is_interior() {
        return Err(EfficiencyError::NotInterior);
    }
    let d = if rho > 1.0 {
        unit_one_norm(&pp.right)
    } else {
        unit_one_norm(&pp.right).mapv(|x| -x)
    };
    let jd = jac.matrix().dot(&d);
    let min = jd.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(EfficiencyError::CertificateFailed {
            what: "improvement direction (min J·d)",
            value: min,
        });
    }
    Ok(d)
}

/// Finite check of a proposed improvement: per-agent utility changes at
/// `a + delta·d`; passes iff every change is strictly positive.
#[derive(Debug, Clone)]
pub struct ImprovementCheck {
    pub changes: Vec<f64>,
    pub pass: bool,
}

pub fn verify_improvement(
    spec: &EconomySpec,
    a: &ActionProfile,
    d: &Array1<f64>,
    delta: f64,
) -> Result<ImprovementCheck, EfficiencyError> {
    if d.len() != a.len() {
        return Err(EfficiencyError::Model(ModelError::DimensionError {
            expected: a.len(),
            got: d.len(),
        }));
    }
    let stepped = ActionProfile::from_array(a.values() + &(delta * d))?;
    let before = model::eval_utilities(spec, a)?;
    let after = model::eval_utilities(spec, &stepped)?;
    let changes: Vec<f64> = after.iter().zip(&before).map(|(x, y)| x - y).collect();
    let pass = changes.iter().all(|&c| c > 0.0);
    Ok(ImprovementCheck { changes, pass })
}

/// Pareto weights at an efficient interior profile, certified against the
/// planner first-order conditions.
pub fn pareto_weights(
    spec: &EconomySpec,
    a: &ActionProfile,
    tol: &Tolerances,
) -> Result<ParetoWeights, EfficiencyError> {
    if !a.is_interior() {
        return Err(EfficiencyError::NotInterior);
    }
    let jac = model::jacobian(spec, a)?;
    let b = model::benefits_matrix(&jac)?;
    let pp = spectral::perron_pair_tol(b.matrix(), tol)?;
    if (pp.radius - 1.0).abs() > tol.pareto {
        return Err(EfficiencyError::NotEfficient { rho: pp.radius });
    }
    let theta = theta_from_left(&pp.left, &jac);
    let foc = theta.dot(jac.matrix());
    let foc_residual = foc.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if foc_residual > tol.foc {
        return Err(EfficiencyError::CertificateFailed {
            what: "planner first-order conditions",
            value: foc_residual,
        });
    }
    Ok(ParetoWeights {
        theta,
        foc_residual,
        rho: pp.radius,
    })
}

/// A coalition that can deviate (outsiders reverting to zero effort) and
/// leave every member strictly better off. Member indices are 0-based.
#[derive(Debug, Clone)]
pub struct BlockingCoalition {
    pub members: Vec<usize>,
    pub deviation: Vec<f64>,
    pub gains: Vec<f64>,
}

const CORE_MAX_AGENTS: usize = 6;

/// Grid search for blocking coalitions. For every nonempty coalition
/// (including the grand coalition), coalition members sweep `[0, radius]`
/// on a per-agent grid while outsiders sit at zero; a coalition blocks when
/// some grid point makes every member strictly better off than at `a`.
///
/// The grid certifies only "no blocking coalition found at this resolution",
/// never a proof. For log utilities, zero coordinates are floored at
/// `GRID_FLOOR` so the deviation payoffs are defined.
pub fn core_check_bruteforce(
    spec: &EconomySpec,
    a: &ActionProfile,
    grid: usize,
    radius: f64,
) -> Result<Vec<BlockingCoalition>, EfficiencyError> {
    let n = spec.n();
    if n > CORE_MAX_AGENTS {
        return Err(EfficiencyError::TooManyAgents {
            n,
            max: CORE_MAX_AGENTS,
        });
    }
    if !a.is_interior() {
        return Err(EfficiencyError::NotInterior);
    }
    if grid < 2 {
        return Err(EfficiencyError::BadInput(format!(
            "grid must have at least 2 points, got {grid}"
        )));
    }
    if !(radius > 0.0) {
        return Err(EfficiencyError::BadInput(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let baseline = model::eval_utilities(spec, a)?;
    let levels: Vec<f64> = (0..grid)
        .map(|t| radius * t as f64 / (grid - 1) as f64)
        .collect();
    let floor_zeros = spec.has_log_terms();

    let masks: Vec<u32> = (1..(1u32 << n)).collect();
    let mut found: Vec<BlockingCoalition> = masks
        .par_iter()
        .filter_map(|&mask| {
            search_coalition(spec, mask, n, &levels, &baseline, floor_zeros)
        })
        .collect();
    found.sort_by(|x, y| x.members.cmp(&y.members));
    Ok(found)
}

fn search_coalition(
    spec: &EconomySpec,
    mask: u32,
    n: usize,
    levels: &[f64],
    baseline: &[f64],
    floor_zeros: bool,
) -> Option<BlockingCoalition> {
    let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
    let k = members.len();
    let mut digits = vec![0usize; k];
    let mut profile = vec![0.0_f64; n];
    loop {
        for (slot, &agent) in members.iter().enumerate() {
            profile[agent] = levels[digits[slot]];
        }
        let candidate: Vec<f64> = if floor_zeros {
            profile
                .iter()
                .map(|&v| if v == 0.0 { tolerances::GRID_FLOOR } else { v })
                .collect()
        } else {
            profile.clone()
        };
        if let Ok(point) = ActionProfile::new(candidate) {
            if let Ok(u) = model::eval_utilities(spec, &point) {
                let gains: Vec<f64> = members.iter().map(|&i| u[i] - baseline[i]).collect();
                if gains.iter().all(|&g| g > 0.0) {
                    return Some(BlockingCoalition {
                        members,
                        deviation: point.to_vec(),
                        gains,
                    });
                }
            }
        }
        // Odometer, last member fastest.
        let mut slot = k;
        loop {
            if slot == 0 {
                return None;
            }
            slot -= 1;
            digits[slot] += 1;
            if digits[slot] < levels.len() {
                break;
            }
            digits[slot] = 0;
        }
    }
}
