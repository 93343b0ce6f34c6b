//! Economies, utilities, Jacobians, and the benefits matrix.
//!
//! Three kinds of economy are supported: the parametric linear-log family
//! `u_i(a) = −a_i + Σ_j [α G_ij a_j + H_ij log a_j]`, a raw benefits matrix
//! interpreted as linear utilities `u_i(a) = −a_i + Σ_j B0_ij a_j` (which
//! makes the benefits matrix profile-independent), and a caller-supplied
//! utility oracle differentiated by central finite differences when it does
//! not provide gradients.
//!
//! Two maintained assumptions are enforced on every Jacobian: effort is
//! costly (`∂u_i/∂a_i < 0`) and externalities are weakly positive
//! (`∂u_i/∂a_j ≥ 0` for `j ≠ i`).

use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral;
use crate::tolerances;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid economy: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("assumption `{assumption}` violated at ({i},{j}): J = {value}")]
    AssumptionViolation {
        i: usize,
        j: usize,
        assumption: &'static str,
        value: f64,
    },
    #[error("degenerate Jacobian diagonal at agent {i}: |J_ii| = {value:.3e}")]
    DegenerateDiagonal { i: usize, value: f64 },
    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub const ASSUMPTION_COSTLY_ACTIONS: &str = "costly actions";
pub const ASSUMPTION_POSITIVE_EXTERNALITIES: &str = "positive externalities";

/// A vector of nonnegative effort levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProfile {
    a: Array1<f64>,
}

impl ActionProfile {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        Self::from_array(Array1::from_vec(values))
    }

    pub fn from_array(a: Array1<f64>) -> Result<Self, ModelError> {
        for (i, &v) in a.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ModelError::DomainError(format!(
                    "action {v} of agent {} is not a nonnegative finite number",
                    i + 1
                )));
            }
        }
        Ok(ActionProfile { a })
    }

    pub fn ones(n: usize) -> Self {
        ActionProfile {
            a: Array1::from_elem(n, 1.0),
        }
    }

    pub fn zeros(n: usize) -> Self {
        ActionProfile {
            a: Array1::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// True iff every entry is strictly positive.
    pub fn is_interior(&self) -> bool {
        self.a.iter().all(|&v| v > 0.0)
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.a
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.a.to_vec()
    }

    /// Entrywise scaling by a nonnegative factor.
    pub fn scaled(&self, c: f64) -> Result<Self, ModelError> {
        Self::from_array(self.a.mapv(|v| v * c))
    }
}

/// Black-box utility evaluator. Implementations must be deterministic and
/// safe to call from multiple threads (wrap in a lock otherwise), and must
/// respect the two maintained assumptions at every interior profile they
/// accept.
pub trait UtilityOracle: Send + Sync {
    fn utilities(&self, a: &ActionProfile) -> Result<Vec<f64>, ModelError>;

    /// Row `i` of the Jacobian, `∂u_i/∂a_j` for all `j`, when the oracle can
    /// supply it analytically. `None` falls back to central finite
    /// differences of [`UtilityOracle::utilities`].
    fn gradient_row(&self, _i: usize, _a: &ActionProfile) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Clone)]
pub enum EconomyKind {
    ParametricLinearLog {
        alpha: f64,
        g: Array2<f64>,
        h: Array2<f64>,
    },
    RawBenefits {
        b0: Array2<f64>,
    },
    OracleBacked {
        oracle: Arc<dyn UtilityOracle>,
    },
}

impl std::fmt::Debug for EconomyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EconomyKind::ParametricLinearLog { alpha, .. } => {
                write!(f, "ParametricLinearLog {{ alpha: {alpha} }}")
            }
            EconomyKind::RawBenefits { .. } => write!(f, "RawBenefits"),
            EconomyKind::OracleBacked { .. } => write!(f, "OracleBacked"),
        }
    }
}

/// Utility-side description of a public-goods economy.
#[derive(Debug, Clone)]
pub struct EconomySpec {
    n: usize,
    kind: EconomyKind,
}

fn check_network_matrix(m: &Array2<f64>, n: usize, name: &str) -> Result<(), ModelError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(ModelError::InvalidSpec(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    for ((i, j), &v) in m.indexed_iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(ModelError::InvalidSpec(format!(
                "{name}[{},{}] = {v} must be a nonnegative finite number",
                i + 1,
                j + 1
            )));
        }
        if i == j && v != 0.0 {
            return Err(ModelError::InvalidSpec(format!(
                "{name} must have a zero diagonal, found {name}[{k},{k}] = {v}",
                k = i + 1
            )));
        }
    }
    Ok(())
}

impl EconomySpec {
    pub fn parametric_linear_log(
        alpha: f64,
        g: Array2<f64>,
        h: Array2<f64>,
    ) -> Result<Self, ModelError> {
        let n = g.nrows();
        if n < 2 {
            return Err(ModelError::InvalidSpec(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        check_network_matrix(&g, n, "G")?;
        check_network_matrix(&h, n, "H")?;
        if !alpha.is_finite() {
            return Err(ModelError::InvalidSpec(format!("alpha = {alpha}")));
        }
        // alpha < 1/ρ(G); a zero G has radius 0 and admits any alpha. The
        // margin absorbs eigenvalue-solver error in rho(G).
        let rho_g = spectral::spectral_radius(&g)
            .map_err(|e| ModelError::InvalidSpec(format!("G: {e}")))?;
        if alpha * rho_g >= 1.0 - tolerances::SPECTRAL_BOUND_MARGIN {
            return Err(ModelError::InvalidSpec(format!(
                "alpha = {alpha} must be below 1/rho(G) = {}",
                1.0 / rho_g
            )));
        }
        if alpha < 0.0 {
            return Err(ModelError::InvalidSpec(format!(
                "alpha = {alpha} must be nonnegative"
            )));
        }
        Ok(EconomySpec {
            n,
            kind: EconomyKind::ParametricLinearLog { alpha, g, h },
        })
    }

    pub fn raw_benefits(b0: Array2<f64>) -> Result<Self, ModelError> {
        let n = b0.nrows();
        if n < 2 {
            return Err(ModelError::InvalidSpec(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        check_network_matrix(&b0, n, "B0")?;
        Ok(EconomySpec {
            n,
            kind: EconomyKind::RawBenefits { b0 },
        })
    }

    pub fn oracle_backed(n: usize, oracle: Arc<dyn UtilityOracle>) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::InvalidSpec(format!(
                "need at least 2 agents, got {n}"
            )));
        }
        Ok(EconomySpec {
            n,
            kind: EconomyKind::OracleBacked { oracle },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &EconomyKind {
        &self.kind
    }

    /// True when utilities contain log terms, i.e. marginal benefits diverge
    /// at the zero profile and `B(0)` is undefined.
    pub fn has_log_terms(&self) -> bool {
        match &self.kind {
            EconomyKind::ParametricLinearLog { h, .. } => h.iter().any(|&v| v > 0.0),
            _ => false,
        }
    }

    fn check_profile(&self, a: &ActionProfile) -> Result<(), ModelError> {
        if a.len() != self.n {
            return Err(ModelError::DimensionError {
                expected: self.n,
                got: a.len(),
            });
        }
        Ok(())
    }
}

/// The n×n matrix of marginal utilities `J_ij = ∂u_i/∂a_j` at a profile.
#[derive(Debug, Clone)]
pub struct JacobianMatrix {
    j: Array2<f64>,
    at: ActionProfile,
}

impl JacobianMatrix {
    /// Wraps a precomputed Jacobian, enforcing the maintained assumptions.
    pub fn new(j: Array2<f64>, at: ActionProfile) -> Result<Self, ModelError> {
        if j.nrows() != j.ncols() || j.nrows() != at.len() {
            return Err(ModelError::DimensionError {
                expected: at.len(),
                got: j.nrows(),
            });
        }
        enforce_assumptions(&j)?;
        Ok(JacobianMatrix { j, at })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.j
    }

    pub fn at(&self) -> &ActionProfile {
        &self.at
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }
}

/// The normalized externality network `B_ij = J_ij / (−J_ii)`, nonnegative
/// with a zero diagonal.
#[derive(Debug, Clone)]
pub struct BenefitsMatrix {
    b: Array2<f64>,
    at: ActionProfile,
}

impl BenefitsMatrix {
    pub fn new(b: Array2<f64>, at: ActionProfile) -> Result<Self, ModelError> {
        if b.nrows() != b.ncols() || b.nrows() != at.len() {
            return Err(ModelError::DimensionError {
                expected: at.len(),
                got: b.nrows(),
            });
        }
        for ((i, j), &v) in b.indexed_iter() {
            if !v.is_finite() || v < 0.0 || (i == j && v != 0.0) {
                return Err(ModelError::InvalidSpec(format!(
                    "B[{},{}] = {v} is not a valid benefits entry",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(BenefitsMatrix { b, at })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn at(&self) -> &ActionProfile {
        &self.at
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }
}

/// Per-agent utilities at a profile.
pub fn eval_utilities(spec: &EconomySpec, a: &ActionProfile) -> Result<Vec<f64>, ModelError> {
    spec.check_profile(a)?;
    let av = a.values();
    match &spec.kind {
        EconomyKind::ParametricLinearLog { alpha, g, h } => {
            let n = spec.n;
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let mut u = -av[i];
                for j in 0..n {
                    u += alpha * g[[i, j]] * av[j];
                    let hij = h[[i, j]];
                    if hij > 0.0 {
                        if av[j] <= 0.0 {
                            return Err(ModelError::DomainError(format!(
                                "log of nonpositive action a_{} required by H[{},{}]",
                                j + 1,
                                i + 1,
                                j + 1
                            )));
                        }
                        u += hij * av[j].ln();
                    }
                }
                out.push(u);
            }
            Ok(out)
        }
        EconomyKind::RawBenefits { b0 } => {
            let ba = b0.dot(av);
            Ok((0..spec.n).map(|i| ba[i] - av[i]).collect())
        }
        EconomyKind::OracleBacked { oracle } => {
            let u = oracle.utilities(a)?;
            if u.len() != spec.n {
                return Err(ModelError::DimensionError {
                    expected: spec.n,
                    got: u.len(),
                });
            }
            Ok(u)
        }
    }
}

/// Jacobian without the assumption checks; used by `validate`, which reports
/// violations instead of failing on them.
fn raw_jacobian(spec: &EconomySpec, a: &ActionProfile) -> Result<Array2<f64>, ModelError> {
    spec.check_profile(a)?;
    let n = spec.n;
    let av = a.values();
    match &spec.kind {
        EconomyKind::ParametricLinearLog { alpha, g, h } => {
            let mut j = Array2::zeros((n, n));
            for i in 0..n {
                for k in 0..n {
                    if i == k {
                        j[[i, k]] = -1.0;
                        continue;
                    }
                    let mut v = alpha * g[[i, k]];
                    let hik = h[[i, k]];
                    if hik > 0.0 {
                        if av[k] <= 0.0 {
                            return Err(ModelError::DomainError(format!(
                                "marginal log benefit H[{},{}]/a_{} undefined at a_{} = 0",
                                i + 1,
                                k + 1,
                                k + 1,
                                k + 1
                            )));
                        }
                        v += hik / av[k];
                    }
                    j[[i, k]] = v;
                }
            }
            Ok(j)
        }
        EconomyKind::RawBenefits { b0 } => {
            let mut j = b0.clone();
            for i in 0..n {
                j[[i, i]] = -1.0;
            }
            Ok(j)
        }
        EconomyKind::OracleBacked { oracle } => {
            let mut j = Array2::zeros((n, n));
            let mut missing_rows = Vec::new();
            for i in 0..n {
                match oracle.gradient_row(i, a) {
                    Some(row) => {
                        if row.len() != n {
                            return Err(ModelError::DimensionError {
                                expected: n,
                                got: row.len(),
                            });
                        }
                        for (k, v) in row.into_iter().enumerate() {
                            j[[i, k]] = v;
                        }
                    }
                    None => missing_rows.push(i),
                }
            }
            if !missing_rows.is_empty() {
                fill_fd_columns(spec, a, &missing_rows, &mut j)?;
            }
            Ok(j)
        }
    }
}

/// Central finite differences of the oracle utilities, filling the listed
/// rows. Steps are `FD_STEP · max(1, a_j)`, capped at `a_j/2` so the left
/// evaluation point stays interior.
fn fill_fd_columns(
    spec: &EconomySpec,
    a: &ActionProfile,
    rows: &[usize],
    j: &mut Array2<f64>,
) -> Result<(), ModelError> {
    let n = spec.n;
    let av = a.values();
    for col in 0..n {
        let mut h = tolerances::FD_STEP * av[col].max(1.0);
        if av[col] > 0.0 {
            h = h.min(av[col] / 2.0);
        }
        let mut plus = av.to_vec();
        let mut minus = av.to_vec();
        plus[col] += h;
        minus[col] -= h;
        let up = eval_utilities(spec, &ActionProfile::new(plus)?)?;
        let um = eval_utilities(spec, &ActionProfile::new(minus)?)?;
        for &i in rows {
            j[[i, col]] = (up[i] - um[i]) / (2.0 * h);
        }
    }
    Ok(())
}

fn enforce_assumptions(j: &Array2<f64>) -> Result<(), ModelError> {
    for ((i, k), &v) in j.indexed_iter() {
        if i == k {
            if !(v < 0.0) {
                return Err(ModelError::AssumptionViolation {
                    i,
                    j: k,
                    assumption: ASSUMPTION_COSTLY_ACTIONS,
                    value: v,
                });
            }
        } else if v < -tolerances::FD_NOISE {
            return Err(ModelError::AssumptionViolation {
                i,
                j: k,
                assumption: ASSUMPTION_POSITIVE_EXTERNALITIES,
                value: v,
            });
        }
    }
    Ok(())
}

/// Clip finite-difference noise: off-diagonal entries inside `(-FD_NOISE, 0)`
/// become 0 so the benefits matrix stays nonnegative.
fn clip_fd_noise(j: &mut Array2<f64>) {
    for ((i, k), v) in j.indexed_iter_mut() {
        if i != k && *v < 0.0 && *v > -tolerances::FD_NOISE {
            *v = 0.0;
        }
    }
}

/// The Jacobian `J(a)`, analytic where possible, with the maintained
/// assumptions asserted post hoc.
pub fn jacobian(spec: &EconomySpec, a: &ActionProfile) -> Result<JacobianMatrix, ModelError> {
    let mut j = raw_jacobian(spec, a)?;
    clip_fd_noise(&mut j);
    enforce_assumptions(&j)?;
    Ok(JacobianMatrix {
        j,
        at: a.clone(),
    })
}

/// `B_ij = J_ij / (−J_ii)` off the diagonal, 0 on it.
pub fn benefits_matrix(jac: &JacobianMatrix) -> Result<BenefitsMatrix, ModelError> {
    let n = jac.n();
    let j = jac.matrix();
    let mut b = Array2::zeros((n, n));
    for i in 0..n {
        let d = -j[[i, i]];
        if d.abs() < tolerances::SINGULAR_DIAGONAL {
            return Err(ModelError::DegenerateDiagonal {
                i,
                value: j[[i, i]].abs(),
            });
        }
        for k in 0..n {
            if i != k {
                b[[i, k]] = (j[[i, k]] / d).max(0.0);
            }
        }
    }
    Ok(BenefitsMatrix {
        b,
        at: jac.at.clone(),
    })
}

/// Convenience: benefits matrix straight from a spec and profile.
pub fn benefits_at(spec: &EconomySpec, a: &ActionProfile) -> Result<BenefitsMatrix, ModelError> {
    benefits_matrix(&jacobian(spec, a)?)
}

/// Per-sample assumption and irreducibility checks.
#[derive(Debug, Clone, Serialize)]
pub struct SampleValidation {
    pub profile: Vec<f64>,
    pub costly_actions: bool,
    pub positive_externalities: bool,
    pub irreducible: bool,
    pub violations: Vec<ViolationEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationEntry {
    /// 1-based agent indices.
    pub i: usize,
    pub j: usize,
    pub assumption: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub samples: Vec<SampleValidation>,
    pub pass: bool,
}

/// Checks Assumptions 1–2 and irreducibility of `B` at each sample profile
/// (the all-ones profile is always included). Failures are report entries,
/// never errors: the checks are sampled, not proven, since oracles are
/// black boxes.
pub fn validate(spec: &EconomySpec, samples: &[ActionProfile]) -> ValidationReport {
    let mut profiles: Vec<ActionProfile> = vec![ActionProfile::ones(spec.n)];
    profiles.extend(samples.iter().cloned());

    let mut out = Vec::with_capacity(profiles.len());
    for p in &profiles {
        let entry = validate_sample(spec, p);
        out.push(entry);
    }
    let pass = out
        .iter()
        .all(|s| s.costly_actions && s.positive_externalities && s.irreducible);
    ValidationReport { samples: out, pass }
}

fn validate_sample(spec: &EconomySpec, p: &ActionProfile) -> SampleValidation {
    let mut entry = SampleValidation {
        profile: p.to_vec(),
        costly_actions: false,
        positive_externalities: false,
        irreducible: false,
        violations: Vec::new(),
        note: None,
    };
    let mut j = match raw_jacobian(spec, p) {
        Ok(j) => j,
        Err(e) => {
            entry.note = Some(e.to_string());
            return entry;
        }
    };
    clip_fd_noise(&mut j);
    entry.costly_actions = true;
    entry.positive_externalities = true;
    for ((i, k), &v) in j.indexed_iter() {
        if i == k && !(v < 0.0) {
            entry.costly_actions = false;
            entry.violations.push(ViolationEntry {
                i: i + 1,
                j: k + 1,
                assumption: ASSUMPTION_COSTLY_ACTIONS.to_string(),
                value: v,
            });
        } else if i != k && v < 0.0 {
            entry.positive_externalities = false;
            entry.violations.push(ViolationEntry {
                i: i + 1,
                j: k + 1,
                assumption: ASSUMPTION_POSITIVE_EXTERNALITIES.to_string(),
                value: v,
            });
        }
    }
    if entry.costly_actions {
        // Support of B equals the off-diagonal support of J.
        let n = spec.n;
        let mut support = Array2::zeros((n, n));
        for i in 0..n {
            for k in 0..n {
                if i != k && j[[i, k]] > 0.0 {
                    support[[i, k]] = 1.0;
                }
            }
        }
        entry.irreducible = spectral::is_irreducible(&support);
    }
    entry
}

// ---------------------------------------------------------------------------
// Economy JSON schema
// ---------------------------------------------------------------------------

/// File form of an economy. Matrices are row-major lists of rows; row index
/// is the beneficiary, column index the provider. Oracle-backed economies
/// have no file form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EconomyFile {
    pub n: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B0", skip_serializing_if = "Option::is_none")]
    pub b0: Option<Vec<Vec<f64>>>,
}

fn rows_to_array(rows: &[Vec<f64>], n: usize, name: &str) -> Result<Array2<f64>, ModelError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(ModelError::InvalidSpec(format!(
            "{name} must be an {n}x{n} list of rows"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((n, n), flat)
        .map_err(|e| ModelError::InvalidSpec(format!("{name}: {e}")))
}

fn array_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl EconomySpec {
    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let file: EconomyFile = serde_json::from_str(s)
            .map_err(|e| ModelError::InvalidSpec(format!("economy JSON: {e}")))?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &EconomyFile) -> Result<Self, ModelError> {
        match file.kind.as_str() {
            "linear_log" => {
                let alpha = file.alpha.unwrap_or(0.0);
                let g = match &file.g {
                    Some(rows) => rows_to_array(rows, file.n, "G")?,
                    None => Array2::zeros((file.n, file.n)),
                };
                let h = match &file.h {
                    Some(rows) => rows_to_array(rows, file.n, "H")?,
                    None => Array2::zeros((file.n, file.n)),
                };
                EconomySpec::parametric_linear_log(alpha, g, h)
            }
            "raw_benefits" => {
                let b0 = file
                    .b0
                    .as_ref()
                    .ok_or_else(|| ModelError::InvalidSpec("raw_benefits needs B0".into()))?;
                EconomySpec::raw_benefits(rows_to_array(b0, file.n, "B0")?)
            }
            other => Err(ModelError::InvalidSpec(format!(
                "unknown economy kind {other:?} (expected \"linear_log\" or \"raw_benefits\")"
            ))),
        }
    }

    pub fn to_file(&self) -> Result<EconomyFile, ModelError> {
        match &self.kind {
            EconomyKind::ParametricLinearLog { alpha, g, h } => Ok(EconomyFile {
                n: self.n,
                kind: "linear_log".into(),
                alpha: Some(*alpha),
                g: Some(array_to_rows(g)),
                h: Some(array_to_rows(h)),
                b0: None,
            }),
            EconomyKind::RawBenefits { b0 } => Ok(EconomyFile {
                n: self.n,
                kind: "raw_benefits".into(),
                alpha: None,
                g: None,
                h: None,
                b0: Some(array_to_rows(b0)),
            }),
            EconomyKind::OracleBacked { .. } => Err(ModelError::InvalidSpec(
                "oracle-backed economies have no file form".into(),
            )),
        }
    }

    pub fn to_json_string(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(&self.to_file()?)
            .map_err(|e| ModelError::InvalidSpec(e.to_string()))
    }
}
