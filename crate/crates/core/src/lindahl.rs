//! Centrality action profiles and Lindahl price certificates.
//!
//! A nonzero profile with `B(a)a = a` (actions are right-eigenvector
//! centralities of the benefits network at those actions) is exactly a
//! Lindahl outcome. The solver finds such profiles by damped Newton on
//! `F(a) = B(a)a − a` with a damped fixed-point fallback, then certifies the
//! result: planner weights θ from the left Perron vector, prices
//! `P_ij = θ_i·J_ij(a*)` after row-normalizing `J_ii = −1`, and residuals for
//! centrality, budget balance, and ρ(B(a*)) = 1.
//!
//! For the parametric linear-log family the centrality condition reduces to
//! the linear system `a = h + αGa`, which doubles as a closed-form oracle:
//! degree centrality at α = 0, Bonacich centrality at h = 1, and the Perron
//! direction of G in the α → 1/ρ(G) limit.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::efficiency::{self, EfficiencyError};
use crate::linalg::{inf_norm, lu_solve};
use crate::model::{self, ActionProfile, EconomyKind, EconomySpec, ModelError};
use crate::spectral::{self, SpectralError};
use crate::tolerances::{self, Tolerances};

#[derive(Debug, Error)]
pub enum LindahlError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Efficiency(#[from] EfficiencyError),
    #[error("alpha·rho(G) = {alpha_rho} is too close to 1 for a stable solve")]
    SpectralBound { alpha_rho: f64 },
    #[error("h_{agent} = 0: interiority of the centrality profile is not guaranteed")]
    NonPositive { agent: usize },
    #[error("constant benefits matrix has rho = {rho}, so B·a = a has no nonzero solution")]
    NoSolution { rho: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
    #[error("iterates could not stay interior")]
    LeftDomain,
    #[error("closed-form residual {residual:.3e} exceeds certification bound")]
    ResidualCertificate { residual: f64 },
    #[error("bad input: {0}")]
    BadInput(String),
}

/// A solved centrality profile with its supporting price system.
#[derive(Debug, Clone)]
pub struct LindahlCertificate {
    pub a_star: ActionProfile,
    /// Pareto weights, positive, unit 1-norm.
    pub theta: Array1<f64>,
    /// Personalized prices: row i is θ_i times row i of the row-normalized
    /// Jacobian, so `P_ii = −θ_i`.
    pub prices: Array2<f64>,
    /// `‖B(a*)a* − a*‖∞`
    pub residual_centrality: f64,
    /// `‖P a*‖∞`
    pub residual_budget: f64,
    /// `|ρ(B(a*)) − 1|`
    pub residual_rho: f64,
    /// Set when the benefits matrix is constant and solutions form a ray;
    /// the reported profile is pinned to the initial guess's 1-norm.
    pub scale_free: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Enables seeded random restarts after a failed solve.
    pub seed: Option<u64>,
    pub restarts: usize,
    /// Newton iteration cap override.
    pub max_iter: Option<usize>,
    pub tol: Tolerances,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed: None,
            restarts: 3,
            max_iter: None,
            tol: Tolerances::default(),
        }
    }
}

const NEWTON_DEFAULT_ITER: usize = 200;
const FIXED_POINT_CAP: usize = 20_000;
const FIXED_POINT_DAMPING: f64 = 0.5;
const MAX_BACKTRACKS: usize = 40;

/// Closed-form centrality actions for the linear-log family:
/// `a = (I − αG)^{-1} h` with `h` the row sums of `H`.
pub fn solve_family_closed_form(
    alpha: f64,
    g: &Array2<f64>,
    h: &Array2<f64>,
) -> Result<ActionProfile, LindahlError> {
    let n = g.nrows();
    if g.ncols() != n || h.nrows() != n || h.ncols() != n {
        return Err(LindahlError::BadInput(format!(
            "G and H must both be {n}x{n}"
        )));
    }
    let rho_g = spectral::spectral_radius(g)?;
    let alpha_rho = alpha * rho_g;
    if alpha_rho >= 1.0 - tolerances::SPECTRAL_BOUND_MARGIN {
        return Err(LindahlError::SpectralBound { alpha_rho });
    }
    let hv: Array1<f64> = h.rows().into_iter().map(|r| r.sum()).collect();
    if let Some((agent, _)) = hv.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(LindahlError::NonPositive { agent: agent + 1 });
    }
    let mut system = g.mapv(|v| -alpha * v);
    for i in 0..n {
        system[[i, i]] += 1.0;
    }
    let a = lu_solve(&system, &hv).ok_or(LindahlError::SpectralBound { alpha_rho })?;
    let residual = inf_norm(&(&a - &hv - &(alpha * &g.dot(&a))));
    if residual > 1e-10 {
        return Err(LindahlError::ResidualCertificate { residual });
    }
    Ok(ActionProfile::from_array(a)?)
}

fn centrality_residual_vec(
    spec: &EconomySpec,
    a: &ActionProfile,
) -> Result<Array1<f64>, ModelError> {
    let b = model::benefits_at(spec, a)?;
    Ok(&b.matrix().dot(a.values()) - a.values())
}

fn default_init(spec: &EconomySpec) -> ActionProfile {
    if let EconomyKind::ParametricLinearLog { alpha, g, h } = spec.kind() {
        if let Ok(a) = solve_family_closed_form(*alpha, g, h) {
            return a;
        }
    }
    ActionProfile::ones(spec.n())
}

/// Solves `B(a)a = a` and assembles the full certificate.
pub fn solve_centrality(
    spec: &EconomySpec,
    init: Option<&ActionProfile>,
    opts: &SolveOptions,
) -> Result<LindahlCertificate, LindahlError> {
    let n = spec.n();
    if let Some(a0) = init {
        if a0.len() != n {
            return Err(LindahlError::Model(ModelError::DimensionError {
                expected: n,
                got: a0.len(),
            }));
        }
        if !a0.is_interior() {
            return Err(LindahlError::LeftDomain);
        }
    }
    let start = init.cloned().unwrap_or_else(|| default_init(spec));

    // Constant benefits matrices (raw inputs, or the family without log
    // terms) make B·a = a a linear eigenproblem: solutions are the Perron ray
    // when rho = 1 and only the zero profile otherwise.
    if let Some(b0) = constant_benefits(spec) {
        return solve_constant(spec, &b0, &start, opts);
    }

    match solve_iteratively(spec, &start, opts) {
        Ok((a, iters)) => finish_certificate(spec, a, iters, false, opts),
        Err(first_failure) => {
            if let Some(seed) = opts.seed {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..opts.restarts {
                    let jittered = Array1::from_shape_fn(n, |i| {
                        let factor = 10.0_f64.powf(rng.random_range(-1.0..1.0));
                        (start.values()[i] * factor).max(1e-6)
                    });
                    let retry = ActionProfile::from_array(jittered).expect("positive init");
                    if let Ok((a, iters)) = solve_iteratively(spec, &retry, opts) {
                        return finish_certificate(spec, a, iters, false, opts);
                    }
                }
            }
            Err(first_failure)
        }
    }
}

fn constant_benefits(spec: &EconomySpec) -> Option<Array2<f64>> {
    match spec.kind() {
        EconomyKind::RawBenefits { b0 } => Some(b0.clone()),
        EconomyKind::ParametricLinearLog { alpha, g, h } if h.iter().all(|&v| v == 0.0) => {
            Some(g.mapv(|v| alpha * v))
        }
        _ => None,
    }
}

fn solve_constant(
    spec: &EconomySpec,
    b0: &Array2<f64>,
    start: &ActionProfile,
    opts: &SolveOptions,
) -> Result<LindahlCertificate, LindahlError> {
    let tol = &opts.tol;
    let rho = spectral::spectral_radius_tol(b0, tol)?;
    if (rho - 1.0).abs() > tol.pareto {
        return Err(LindahlError::NoSolution { rho });
    }
    let scale: f64 = start.values().sum();
    // Tighten the eigen solve so the residual still meets the fixed-point
    // bound after rescaling the ray representative.
    let eig_tol = (tol.fix / (2.0 * scale.max(1.0))).min(tol.eig);
    let pp = spectral::perron_pair_with(b0, eig_tol, tol.max_iter)?;
    let a = ActionProfile::from_array(pp.right.mapv(|v| v * scale))?;
    let mut cert = finish_certificate(spec, a, pp.iterations, true, opts)?;
    cert.scale_free = true;
    Ok(cert)
}

/// Newton with backtracking damping, then a damped fixed-point fallback.
fn solve_iteratively(
    spec: &EconomySpec,
    start: &ActionProfile,
    opts: &SolveOptions,
) -> Result<(ActionProfile, usize), LindahlError> {
    let tol = &opts.tol;
    let newton_cap = opts.max_iter.unwrap_or(NEWTON_DEFAULT_ITER);
    let mut a = start.values().clone();
    let mut f = centrality_residual_vec(spec, start)?;
    let mut r = inf_norm(&f);
    let mut best = (a.clone(), r);
    let mut iterations = 0usize;

    'newton: for _ in 0..newton_cap {
        if r <= tol.fix {
            return Ok((ActionProfile::from_array(a)?, iterations));
        }
        iterations += 1;
        let jf = match fd_jacobian_of_residual(spec, &a) {
            Ok(j) => j,
            Err(_) => break 'newton,
        };
        let step = match lu_solve(&jf, &f.mapv(|v| -v)) {
            Some(s) => s,
            None => break 'newton,
        };
        let mut s = 1.0_f64;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = &a + &(s * &step);
            if candidate.iter().all(|&v| v > 0.0) {
                if let Ok(profile) = ActionProfile::from_array(candidate.clone()) {
                    if let Ok(fc) = centrality_residual_vec(spec, &profile) {
                        let rc = inf_norm(&fc);
                        if rc < r {
                            a = candidate;
                            f = fc;
                            r = rc;
                            accepted = true;
                            break;
                        }
                    }
                }
            }
            s *= 0.5;
        }
        if !accepted {
            break 'newton;
        }
        if r < best.1 {
            best = (a.clone(), r);
        }
    }
    if r <= tol.fix {
        return Ok((ActionProfile::from_array(a)?, iterations));
    }

    // Damped fixed point: a ← (1−ω)a + ω·B(a)a. Iterates of a nonnegative
    // matrix stay positive, so the domain cannot be left here.
    let (mut a, _) = best.clone();
    for _ in 0..FIXED_POINT_CAP {
        iterations += 1;
        let profile = ActionProfile::from_array(a.clone())?;
        let b = model::benefits_at(spec, &profile)?;
        let ba = b.matrix().dot(&a);
        a = a.mapv(|v| (1.0 - FIXED_POINT_DAMPING) * v) + &ba.mapv(|v| FIXED_POINT_DAMPING * v);
        let profile = ActionProfile::from_array(a.clone())?;
        let f = centrality_residual_vec(spec, &profile)?;
        let r = inf_norm(&f);
        if r < best.1 {
            best = (a.clone(), r);
        }
        if r <= tol.fix {
            return Ok((profile, iterations));
        }
    }
    Err(LindahlError::NoConvergence {
        iterations,
        residual: best.1,
        best: best.0.to_vec(),
    })
}

/// Central finite differences of `F(a) = B(a)a − a`, column by column.
fn fd_jacobian_of_residual(
    spec: &EconomySpec,
    a: &Array1<f64>,
) -> Result<Array2<f64>, LindahlError> {
    let n = a.len();
    let mut jf = Array2::zeros((n, n));
    for col in 0..n {
        let mut h = tolerances::FD_STEP * a[col].max(1.0);
        h = h.min(a[col] / 2.0);
        let mut plus = a.clone();
        let mut minus = a.clone();
        plus[col] += h;
        minus[col] -= h;
        let fp = centrality_residual_vec(spec, &ActionProfile::from_array(plus)?)?;
        let fm = centrality_residual_vec(spec, &ActionProfile::from_array(minus)?)?;
        for i in 0..n {
            jf[[i, col]] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jf)
}

fn finish_certificate(
    spec: &EconomySpec,
    a_star: ActionProfile,
    iterations: usize,
    scale_free: bool,
    opts: &SolveOptions,
) -> Result<LindahlCertificate, LindahlError> {
    let tol = &opts.tol;
    let weights = efficiency::pareto_weights(spec, &a_star, tol)?;
    let prices = lindahl_prices(spec, &a_star, &weights.theta)?;
    let residual_centrality = inf_norm(&centrality_residual_vec(spec, &a_star)?);
    let residual_budget = inf_norm(&prices.dot(a_star.values()));
    Ok(LindahlCertificate {
        a_star,
        theta: weights.theta,
        prices,
        residual_centrality,
        residual_budget,
        residual_rho: (weights.rho - 1.0).abs(),
        scale_free,
        iterations,
    })
}

/// Personalized prices supporting `a_star`: the Jacobian is row-normalized to
/// `J_ii = −1` (utilities themselves are untouched; the benefits matrix is
/// invariant to row scaling), then `P_ij = θ_i·J_ij` and `P_ii = −θ_i`.
pub fn lindahl_prices(
    spec: &EconomySpec,
    a_star: &ActionProfile,
    theta: &Array1<f64>,
) -> Result<Array2<f64>, LindahlError> {
    if theta.len() != a_star.len() {
        return Err(LindahlError::BadInput(format!(
            "theta has {} entries for {} agents",
            theta.len(),
            a_star.len()
        )));
    }
    if theta.iter().any(|&v| !(v > 0.0)) {
        return Err(LindahlError::BadInput(
            "theta must be strictly positive".into(),
        ));
    }
    if !a_star.is_interior() {
        return Err(LindahlError::LeftDomain);
    }
    let jac = model::jacobian(spec, a_star)?;
    let j = jac.matrix();
    let n = j.nrows();
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        let d = -j[[i, i]];
        if d.abs() < tolerances::SINGULAR_DIAGONAL {
            return Err(LindahlError::Model(ModelError::DegenerateDiagonal {
                i,
                value: d.abs(),
            }));
        }
        for k in 0..n {
            p[[i, k]] = theta[i] * (j[[i, k]] / d);
        }
    }
    Ok(p)
}

/// Itemized verification of a certificate against Lindahl's conditions.
#[derive(Debug, Clone)]
pub struct LindahlVerification {
    /// Budget exhaustion: max of `‖P a*‖∞` and the itemized form
    /// `|Σ_{j≠i} P_ij a*_j − a*_i Σ_{j≠i} P_ji|` (payments minus income).
    pub budget_residual: f64,
    pub budget_pass: bool,
    /// Largest deviation of price ratios from marginal rates of
    /// substitution, `|P_ij/P_ik − J_ij/J_ik|`.
    pub mrs_deviation: f64,
    pub mrs_pass: bool,
    pub rho_deviation: f64,
    pub rho_pass: bool,
    pub centrality_residual: f64,
    pub centrality_pass: bool,
    pub pass: bool,
    /// Optimality is checked to first order (budget exhaustion plus
    /// MRS = price ratios), which suffices under concavity.
    pub note: &'static str,
}

pub fn verify_lindahl(
    spec: &EconomySpec,
    cert: &LindahlCertificate,
    tol: &Tolerances,
) -> Result<LindahlVerification, LindahlError> {
    let a = &cert.a_star;
    let av = a.values();
    let n = a.len();
    let p = &cert.prices;
    if p.nrows() != n || p.ncols() != n {
        return Err(LindahlError::BadInput(format!(
            "price matrix is {}x{}, expected {n}x{n}",
            p.nrows(),
            p.ncols()
        )));
    }

    // (1) Budget exhaustion, in both the matrix form P·a* = 0 and the
    // ledger form: what i pays out must equal what i earns. The two agree
    // exactly when theta is the left Perron vector, and the ledger form is
    // what catches a wrong theta.
    let pa = inf_norm(&p.dot(av));
    let mut ledger: f64 = 0.0;
    for i in 0..n {
        let mut paid = 0.0;
        let mut income_rate = 0.0;
        for j in 0..n {
            if j != i {
                paid += p[[i, j]] * av[j];
                income_rate += p[[j, i]];
            }
        }
        ledger = ledger.max((paid - av[i] * income_rate).abs());
    }
    let budget_residual = pa.max(ledger);
    let budget_pass = budget_residual <= tol.budget;

    // (2) Price ratios = marginal rates of substitution, row by row.
    let jac = model::jacobian(spec, a)?;
    let j = jac.matrix();
    let mut mrs_deviation: f64 = 0.0;
    for i in 0..n {
        for jj in 0..n {
            if jj == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == jj {
                    continue;
                }
                if j[[i, k]].abs() <= tolerances::SINGULAR_DIAGONAL {
                    continue;
                }
                if p[[i, k]].abs() <= tolerances::SINGULAR_DIAGONAL {
                    mrs_deviation = f64::INFINITY;
                    continue;
                }
                let dev = (p[[i, jj]] / p[[i, k]] - j[[i, jj]] / j[[i, k]]).abs();
                mrs_deviation = mrs_deviation.max(dev);
            }
        }
    }
    let mrs_pass = mrs_deviation <= tol.budget;

    // (3) rho(B(a*)) = 1 and (4) the centrality residual.
    let b = model::benefits_matrix(&jac)?;
    let rho = spectral::spectral_radius_tol(b.matrix(), tol)?;
    let rho_deviation = (rho - 1.0).abs();
    let rho_pass = rho_deviation <= tol.pareto;
    let centrality_residual = inf_norm(&(&b.matrix().dot(av) - av));
    let centrality_pass = centrality_residual <= tol.fix;

    Ok(LindahlVerification {
        budget_residual,
        budget_pass,
        mrs_deviation,
        mrs_pass,
        rho_deviation,
        rho_pass,
        centrality_residual,
        centrality_pass,
        pass: budget_pass && mrs_pass && rho_pass && centrality_pass,
        note: "optimality checked to first order: budget exhaustion and MRS = price ratios, \
               sufficient under concavity",
    })
}
