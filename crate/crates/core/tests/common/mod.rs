//! Shared test fixtures: seeded random economies and an independent dense
//! eigensolver oracle (nalgebra Schur) for cross-checking power iteration.

#![allow(dead_code)]

use externet::model::EconomySpec;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spectral radius via nalgebra's Schur-based eigensolver; independent of
/// the library's power iteration.
pub fn dense_radius_oracle(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let flat: Vec<f64> = m.iter().copied().collect();
    let dm = nalgebra::DMatrix::from_row_slice(n, n, &flat);
    dm.complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Random irreducible nonnegative matrix: a weighted ring guarantees strong
/// connectivity, a dense sprinkle keeps it aperiodic.
pub fn random_irreducible(r: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, (i + 1) % n]] = r.random_range(0.2..1.0);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && r.random_bool(0.5) {
                m[[i, j]] += r.random_range(0.0..1.0);
            }
        }
    }
    m
}

/// Random economy from the linear-log family with `n ∈ [2, 15]` and
/// `α ∈ [0, 0.9/ρ(G)]`. The H ring keeps every `h_i` positive and the
/// benefits network irreducible at any interior profile.
pub fn random_family_economy(r: &mut ChaCha8Rng) -> EconomySpec {
    let n = r.random_range(2..=15);
    random_family_economy_sized(r, n)
}

pub fn random_family_economy_sized(r: &mut ChaCha8Rng, n: usize) -> EconomySpec {
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j && r.random_bool(0.5) {
                g[[i, j]] = r.random_range(0.0..1.0);
            }
        }
    }
    let rho_g = externet::spectral::spectral_radius(&g).expect("nonnegative G");
    let alpha = if rho_g > 0.0 {
        r.random_range(0.0..0.9) / rho_g
    } else {
        r.random_range(0.0..0.9)
    };

    let mut h = Array2::zeros((n, n));
    for i in 0..n {
        h[[i, (i + 1) % n]] = r.random_range(0.5..1.5);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && r.random_bool(0.3) {
                h[[i, j]] += r.random_range(0.0..1.0);
            }
        }
    }
    EconomySpec::parametric_linear_log(alpha, g, h).expect("valid random family")
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{}", env!("CARGO_MANIFEST_DIR"), name)
}
