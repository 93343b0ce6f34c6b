//! Perron–Frobenius machinery for nonnegative matrices: spectral radius,
//! left/right Perron vectors, irreducibility, cycle-based estimates, and the
//! subdominant eigenvalue used by the negotiation-split heuristic.
//!
//! All solvers are shifted power iterations. Periodic (imprimitive) matrices
//! break plain power iteration, so we iterate on `M + σI` with
//! `σ = POWER_SHIFT · max_entry(M)` and subtract the shift from the converged
//! value; the shift leaves eigenvectors untouched. Acyclic positive support
//! short-circuits to a spectral radius of exactly 0, which power iteration
//! cannot distinguish from a tiny positive value.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg::{inf_norm, outer};
use crate::tolerances::{self, Tolerances};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("negative entry at ({i},{j}): {value}")]
    NegativeEntry { i: usize, j: usize, value: f64 },
    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Spectral radius with both Perron vectors of an irreducible nonnegative
/// matrix. Vectors are strictly positive and normalized to unit 1-norm;
/// `residual` is `max(‖Mr − ρr‖∞, ‖ℓᵀM − ρℓᵀ‖∞)`.
#[derive(Debug, Clone)]
pub struct PerronPair {
    pub radius: f64,
    pub right: Array1<f64>,
    pub left: Array1<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn check_nonneg_square(m: &Array2<f64>) -> Result<usize, SpectralError> {
    let (r, c) = (m.nrows(), m.ncols());
    if r != c {
        return Err(SpectralError::NotSquare(r, c));
    }
    for ((i, j), &v) in m.indexed_iter() {
        if v < 0.0 || !v.is_finite() {
            return Err(SpectralError::NegativeEntry { i, j, value: v });
        }
    }
    Ok(r)
}

/// Adjacency lists of the positive-support digraph (edge i→j iff M_ij > 0).
/// Strong connectivity and acyclicity do not depend on edge orientation
/// conventions, so this one is used for both.
fn support_adjacency(m: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    (0..n)
        .map(|i| (0..n).filter(|&j| m[[i, j]] > 0.0).collect())
        .collect()
}

/// True iff the positive-support digraph is strongly connected.
pub fn is_irreducible(m: &Array2<f64>) -> bool {
    let n = m.nrows();
    if n != m.ncols() || n == 0 {
        return false;
    }
    tarjan_scc(&support_adjacency(m)).len() == 1
}

/// Tarjan SCC, iterative to avoid recursion limits on adversarial inputs.
fn tarjan_scc(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = graph.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0usize;

    // Explicit DFS frame: (node, next child offset).
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while !call.is_empty() {
            let (v, child) = {
                let frame = call.last_mut().expect("nonempty call stack");
                let v = frame.0;
                if frame.1 < graph[v].len() {
                    let w = graph[v][frame.1];
                    frame.1 += 1;
                    (v, Some(w))
                } else {
                    (v, None)
                }
            };
            match child {
                Some(w) if index[w] == usize::MAX => {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                }
                Some(w) => {
                    if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
                None => {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("scc stack underflow");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comps.push(comp);
                    }
                }
            }
        }
    }
    comps
}

/// Kahn topological sort on the positive support; true iff no cycle exists
/// (so the matrix is nilpotent and its spectral radius is exactly 0).
fn support_is_acyclic(m: &Array2<f64>) -> bool {
    let n = m.nrows();
    let adj = support_adjacency(m);
    let mut indeg = vec![0usize; n];
    for out in &adj {
        for &j in out {
            indeg[j] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = queue.pop() {
        seen += 1;
        for &j in &adj[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push(j);
            }
        }
    }
    seen == n
}

struct PowerResult {
    lambda: f64,
    vector: Array1<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// One-sided power iteration on `M + shift·I`, tracking the eigenvalue of the
/// unshifted matrix. The start vector is uniform, so for a nonnegative matrix
/// all iterates stay nonnegative and the 1-norm doubles as the growth rate.
fn power_iterate(m: &Array2<f64>, shift: f64, tol: f64, max_iter: usize) -> PowerResult {
    let n = m.nrows();
    let mut v = Array1::from_elem(n, 1.0 / n as f64);
    let mut mv = m.dot(&v);
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let w = &mv + &(shift * &v);
        let norm = w.sum();
        if norm <= 0.0 {
            // Only reachable with shift = 0 and Mv = 0: radius 0.
            return PowerResult {
                lambda: 0.0,
                vector: v,
                iterations: it,
                residual: 0.0,
                converged: true,
            };
        }
        let vnew = &w / norm;
        mv = m.dot(&vnew);
        lambda = norm - shift;
        residual = inf_norm(&(&mv - &(lambda * &vnew)));
        v = vnew;
        if residual <= tol {
            return PowerResult {
                lambda,
                vector: v,
                iterations: it,
                residual,
                converged: true,
            };
        }
    }
    PowerResult {
        lambda,
        vector: v,
        iterations: max_iter,
        residual,
        converged: false,
    }
}

/// Escalation ladder of shift fractions. The small first shift preserves the
/// convergence rate of well-behaved matrices; periodic and near-periodic
/// support (every 2-agent benefits matrix is exactly 2-periodic) contracts
/// like (1 − 2σ/ρ)^k, which cannot reach the residual tolerance within the
/// iteration cap at σ = 1e-3·max, so a stalled run retries with a larger
/// shift. Shifts only translate eigenvalues, so the answer is unaffected.
const SHIFT_LADDER: [f64; 2] = [tolerances::POWER_SHIFT, 0.05];

struct TwoSided {
    radius: f64,
    right: Array1<f64>,
    left: Array1<f64>,
    iterations: usize,
    residual: f64,
}

/// Simultaneous right/left power iteration with shift escalation. The radius
/// is the two-sided Rayleigh quotient `ℓᵀMr / (ℓᵀr)` whenever the vectors
/// overlap (error quadratic in the vector residuals, and symmetric under
/// transposition), falling back to the averaged one-sided growth estimates
/// on reducible matrices whose left/right supports can be disjoint.
fn two_sided_dominant(m: &Array2<f64>, tol: f64, cap: usize) -> Result<TwoSided, SpectralError> {
    let mt = m.t().to_owned();
    let max_entry = m.iter().fold(0.0_f64, |a, &x| a.max(x));
    let inner = tol / 4.0;

    let mut stalled = (0usize, f64::INFINITY);
    for frac in SHIFT_LADDER {
        let shift = frac * max_entry;
        let r = power_iterate(m, shift, inner, cap);
        let l = power_iterate(&mt, shift, inner, cap);
        if !(r.converged && l.converged) {
            let worst = if r.residual > l.residual { &r } else { &l };
            stalled = (worst.iterations, worst.residual);
            continue;
        }
        let mut right = r.vector;
        let mut left = l.vector;
        let mut iterations = r.iterations.max(l.iterations);
        let mut radius = bilinear_radius(m, &right, &left, r.lambda, l.lambda);
        let mut residual = pair_residual(m, &mt, radius, &right, &left);
        let mut extra = 0;
        while residual > tol && extra < 2_000 {
            let wr = &m.dot(&right) + &(shift * &right);
            right = &wr / wr.sum();
            let wl = &mt.dot(&left) + &(shift * &left);
            left = &wl / wl.sum();
            let lam_r = m.dot(&right).sum();
            let lam_l = mt.dot(&left).sum();
            radius = bilinear_radius(m, &right, &left, lam_r, lam_l);
            residual = pair_residual(m, &mt, radius, &right, &left);
            extra += 1;
            iterations += 1;
        }
        if residual <= tol {
            return Ok(TwoSided {
                radius: radius.max(0.0),
                right,
                left,
                iterations,
                residual,
            });
        }
        stalled = (iterations, residual);
    }
    Err(SpectralError::NoConvergence {
        iterations: stalled.0,
        residual: stalled.1,
    })
}

fn bilinear_radius(
    m: &Array2<f64>,
    right: &Array1<f64>,
    left: &Array1<f64>,
    lam_r: f64,
    lam_l: f64,
) -> f64 {
    let denom = left.dot(right);
    if denom > 1e-12 {
        left.dot(&m.dot(right)) / denom
    } else {
        0.5 * (lam_r + lam_l)
    }
}

fn pair_residual(
    m: &Array2<f64>,
    mt: &Array2<f64>,
    radius: f64,
    right: &Array1<f64>,
    left: &Array1<f64>,
) -> f64 {
    let rr = inf_norm(&(&m.dot(right) - &(radius * right)));
    let rl = inf_norm(&(&mt.dot(left) - &(radius * left)));
    rr.max(rl)
}

/// Spectral radius of a nonnegative matrix, to absolute tolerance
/// [`tolerances::EIGEN_RESIDUAL`]. Exactly 0 for acyclic positive support.
pub fn spectral_radius(m: &Array2<f64>) -> Result<f64, SpectralError> {
    spectral_radius_with(m, tolerances::EIGEN_RESIDUAL, None)
}

pub fn spectral_radius_with(
    m: &Array2<f64>,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<f64, SpectralError> {
    Ok(dominant_pair_with(m, tol, max_iter)?.0)
}

/// Radius together with a dominant right direction (unit 1-norm, nonnegative;
/// the Perron vector when the matrix is irreducible). Works on reducible
/// matrices, where the direction may have zero entries.
pub fn dominant_pair(m: &Array2<f64>) -> Result<(f64, Array1<f64>), SpectralError> {
    dominant_pair_with(m, tolerances::EIGEN_RESIDUAL, None)
}

pub fn dominant_pair_with(
    m: &Array2<f64>,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<(f64, Array1<f64>), SpectralError> {
    let n = check_nonneg_square(m)?;
    if support_is_acyclic(m) {
        return Ok((0.0, Array1::from_elem(n, 1.0 / n as f64)));
    }
    let cap = max_iter.unwrap_or_else(|| tolerances::max_power_iterations(n));
    let solved = two_sided_dominant(m, tol, cap)?;
    Ok((solved.radius, solved.right))
}

/// Left and right Perron vectors of an irreducible nonnegative matrix.
pub fn perron_pair(m: &Array2<f64>) -> Result<PerronPair, SpectralError> {
    perron_pair_with(m, tolerances::EIGEN_RESIDUAL, None)
}

pub fn perron_pair_with(
    m: &Array2<f64>,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<PerronPair, SpectralError> {
    let n = check_nonneg_square(m)?;
    if !is_irreducible(m) {
        return Err(SpectralError::NotIrreducible);
    }
    let cap = max_iter.unwrap_or_else(|| tolerances::max_power_iterations(n));
    let solved = two_sided_dominant(m, tol, cap)?;
    Ok(PerronPair {
        radius: solved.radius,
        right: solved.right,
        left: solved.left,
        iterations: solved.iterations,
        residual: solved.residual,
    })
}

/// `trace(M^ℓ)^{1/ℓ}` for `ℓ = 1..=lmax` (0 whenever the trace vanishes).
/// The running maximum over a trailing window approaches the spectral radius.
/// Powers are accumulated with per-step rescaling in the log domain, so long
/// horizons neither overflow nor underflow.
pub fn cycle_value_estimate(m: &Array2<f64>, lmax: usize) -> Result<Vec<f64>, SpectralError> {
    check_nonneg_square(m)?;
    let mut out = Vec::with_capacity(lmax);
    let mut p = m.clone();
    let mut log_scale = 0.0_f64;
    for ell in 1..=lmax {
        if ell > 1 {
            p = p.dot(m);
        }
        let max_entry = p.iter().fold(0.0_f64, |a, &x| a.max(x));
        if max_entry == 0.0 {
            // Nilpotent from here on: every later power is zero too.
            out.resize(lmax, 0.0);
            break;
        }
        p.mapv_inplace(|x| x / max_entry);
        log_scale += max_entry.ln();
        let tr = p.diag().sum();
        if tr > 0.0 {
            out.push(((tr.ln() + log_scale) / ell as f64).exp());
        } else {
            out.push(0.0);
        }
    }
    Ok(out)
}

/// Fraction of the spectral radius used to shift the deflated matrix when
/// hunting the subdominant eigenvalue. The shift biases the iteration toward
/// eigenvalues with real part near +ρ — the ones that matter for detecting
/// nearly-uncoupled structure — while still catching the −ρ end of a
/// symmetric spectrum.
const SUBDOMINANT_SHIFT: f64 = 0.25;

/// Magnitude of the subdominant eigenvalue of an irreducible nonnegative
/// matrix, with an associated real vector (sign pattern feeds the split
/// heuristic). Found by deflating the Perron root, `M − ρ rℓᵀ/(ℓᵀr)`, and
/// power-iterating the result shifted by ρ/4. If a complex pair makes the
/// direction rotate instead of converge, falls back to a magnitude-only
/// growth-rate estimate on the unshifted deflated matrix.
pub fn subdominant_magnitude(m: &Array2<f64>) -> Result<(f64, Array1<f64>), SpectralError> {
    subdominant_magnitude_with(m, tolerances::EIGEN_RESIDUAL, None)
}

pub fn subdominant_magnitude_with(
    m: &Array2<f64>,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<(f64, Array1<f64>), SpectralError> {
    let n = check_nonneg_square(m)?;
    let pp = perron_pair_with(m, tol, max_iter)?;
    let denom = pp.left.dot(&pp.right);
    let deflated = m - &(outer(&pp.right, &pp.left) * (pp.radius / denom));
    let sigma = pp.radius * SUBDOMINANT_SHIFT;
    let cap = max_iter.unwrap_or_else(|| tolerances::max_power_iterations(n));

    // Generic deterministic start: structured matrices can make a patterned
    // start (all-ones, alternating signs) an exact eigenvector of the wrong
    // eigenvalue, which would trap the iteration there.
    let mut v = Array1::from_shape_fn(n, |i| (1.3 * i as f64 + 0.7).sin());
    let norm0 = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm0);
    let scale = deflated.iter().fold(0.0_f64, |a, &x| a.max(x.abs())).max(1.0);

    for _ in 0..cap {
        let w = &deflated.dot(&v) + &(sigma * &v);
        let lambda = v.dot(&w); // Rayleigh estimate of the shifted eigenvalue
        let res = (&w - &(lambda * &v)).dot(&(&w - &(lambda * &v))).sqrt();
        let norm = w.dot(&w).sqrt();
        if norm <= scale * 1e-300 {
            // Deflated matrix annihilated the iterate: nothing beyond ρ.
            return Ok((0.0, pp.right));
        }
        let vnew = &w / norm;
        if res <= tol.max(1e-14 * scale) {
            return Ok(((lambda - sigma).abs(), vnew));
        }
        v = vnew;
    }

    // Rotation (complex pair) or a tight gap: estimate the magnitude from the
    // average growth rate of the unshifted deflated iteration.
    let window = 200;
    let mut log_sum = 0.0;
    let mut counted = 0usize;
    for k in 0..(2 * window) {
        let w = deflated.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm <= scale * 1e-300 {
            return Ok((0.0, v));
        }
        if k >= window {
            log_sum += norm.ln();
            counted += 1;
        }
        v = &w / norm;
    }
    Ok(((log_sum / counted as f64).exp(), v))
}

/// Convenience used by callers that thread a [`Tolerances`] bundle.
pub(crate) fn perron_pair_tol(m: &Array2<f64>, tol: &Tolerances) -> Result<PerronPair, SpectralError> {
    perron_pair_with(m, tol.eig, tol.max_iter)
}

pub(crate) fn spectral_radius_tol(m: &Array2<f64>, tol: &Tolerances) -> Result<f64, SpectralError> {
    spectral_radius_with(m, tol.eig, tol.max_iter)
}
