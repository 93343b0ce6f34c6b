//! Cross-module invariants on seeded random suites, cross-checked against an
//! independent dense eigensolver where one exists.

mod common;

use common::{dense_radius_oracle, random_family_economy, random_irreducible, rng};
use externet::efficiency;
use externet::lindahl::{self, SolveOptions};
use externet::model::{self, ActionProfile, EconomyKind};
use externet::spectral;
use externet::structure;
use externet::Tolerances;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn perron_residuals_hold_on_random_matrices() {
    let mut r = rng(11);
    for trial in 0..200 {
        let n = r.random_range(2..=20);
        let m = random_irreducible(&mut r, n);
        let pp = spectral::perron_pair(&m).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        assert!(
            pp.residual <= 1e-10,
            "trial {trial}: residual {}",
            pp.residual
        );
        assert!(pp.right.iter().all(|&v| v > 0.0));
        assert!(pp.left.iter().all(|&v| v > 0.0));
        if n <= 8 {
            let oracle = dense_radius_oracle(&m);
            assert!(
                (pp.radius - oracle).abs() <= 1e-8,
                "trial {trial}: power {} vs dense {}",
                pp.radius,
                oracle
            );
        }
    }
}

#[test]
fn subdominant_magnitude_matches_dense_oracle() {
    let mut r = rng(12);
    for trial in 0..40 {
        let n = r.random_range(3..=7);
        let m = random_irreducible(&mut r, n);
        let (mag, _) = spectral::subdominant_magnitude(&m).unwrap();
        // The dense oracle sorts all eigenvalue magnitudes; the estimate must
        // sit between the smallest and the radius, and when the subdominant
        // is real and well separated it should match it closely.
        let flat: Vec<f64> = m.iter().copied().collect();
        let dm = nalgebra::DMatrix::from_row_slice(n, n, &flat);
        let mut mags: Vec<f64> = dm.complex_eigenvalues().iter().map(|c| c.norm()).collect();
        mags.sort_by(f64::total_cmp);
        let rho = mags[n - 1];
        assert!(
            mag <= rho + 1e-6,
            "trial {trial}: subdominant {mag} above radius {rho}"
        );
    }
}

#[test]
fn cycle_values_approach_the_radius() {
    // The limsup is realized as a running max over a trailing window of
    // length n; short horizons can overshoot by up to n^{1/l}, so the window
    // sits at the end of the sequence.
    let mut r = rng(13);
    let mut checked = 0;
    while checked < 20 {
        let n = r.random_range(2..=15);
        let m = random_irreducible(&mut r, n);
        let rho = spectral::spectral_radius(&m).unwrap();
        if rho < 0.5 {
            continue;
        }
        checked += 1;
        let lmax = (5 * n).max(40);
        let values = spectral::cycle_value_estimate(&m, lmax).unwrap();
        let window_max = values[(lmax - n)..].iter().cloned().fold(0.0, f64::max);
        assert!(
            (window_max - rho).abs() <= 0.05 * rho,
            "n = {n}: trailing-window max {window_max} vs rho {rho}"
        );
    }
}

#[test]
fn family_benefits_identity_on_random_economies() {
    let mut r = rng(14);
    for _ in 0..30 {
        let spec = random_family_economy(&mut r);
        let n = spec.n();
        let a = ActionProfile::new((0..n).map(|_| r.random_range(0.3..3.0)).collect()).unwrap();
        let b = model::benefits_at(&spec, &a).unwrap();
        let EconomyKind::ParametricLinearLog { alpha, g, h } = spec.kind() else {
            unreachable!()
        };
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j {
                    0.0
                } else {
                    alpha * g[[i, j]] + h[[i, j]] / a.values()[j]
                };
                let got = b.matrix()[[i, j]];
                assert!(
                    (got - expect).abs() <= 1e-12 * expect.abs().max(1.0),
                    "B[{i},{j}] = {got}, expected {expect}"
                );
            }
        }
    }
}

#[test]
fn prop1_round_trip_on_random_economies() {
    let mut r = rng(15);
    let tol = Tolerances::default();
    for trial in 0..50 {
        let spec = random_family_economy(&mut r);
        let cert = lindahl::solve_centrality(&spec, None, &SolveOptions::default())
            .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        let report = efficiency::classify_interior(&spec, &cert.a_star, &tol).unwrap();
        assert_eq!(report.verdict, efficiency::Verdict::Efficient, "trial {trial}");

        // With α = 0 the benefits entries H_ij/a_j are decreasing in a, so
        // scaling the solved profile flips the verdict in a known direction.
        let EconomyKind::ParametricLinearLog { alpha, .. } = spec.kind() else {
            unreachable!()
        };
        if *alpha == 0.0 {
            let down = cert.a_star.scaled(0.9).unwrap();
            let up = cert.a_star.scaled(1.1).unwrap();
            assert_eq!(
                efficiency::classify_interior(&spec, &down, &tol).unwrap().verdict,
                efficiency::Verdict::ImprovableUp
            );
            assert_eq!(
                efficiency::classify_interior(&spec, &up, &tol).unwrap().verdict,
                efficiency::Verdict::ImprovableDown
            );
        }
    }
}

#[test]
fn improvement_steps_pay_off_at_several_scales() {
    let mut r = rng(16);
    let tol = Tolerances::default();
    for _ in 0..20 {
        let spec = random_family_economy(&mut r);
        let cert = lindahl::solve_centrality(&spec, None, &SolveOptions::default()).unwrap();
        let squeezed = cert.a_star.scaled(0.8).unwrap();
        let d = efficiency::improvement_direction(&spec, &squeezed, &tol).unwrap();
        let jd = model::jacobian(&spec, &squeezed)
            .unwrap()
            .matrix()
            .dot(&d);
        assert!(jd.iter().all(|&v| v > 0.0));
        for delta in [1e-2, 1e-3, 1e-4] {
            let check = efficiency::verify_improvement(&spec, &squeezed, &d, delta).unwrap();
            assert!(check.pass, "delta = {delta}: {:?}", check.changes);
        }
    }
}

#[test]
fn core_holds_at_small_lindahl_points() {
    let mut r = rng(17);
    for n in [2usize, 3, 4] {
        for _ in 0..3 {
            let spec = common::random_family_economy_sized(&mut r, n);
            let cert = lindahl::solve_centrality(&spec, None, &SolveOptions::default()).unwrap();
            let radius = 3.0 * cert.a_star.values().iter().cloned().fold(0.0, f64::max);
            let blocking =
                efficiency::core_check_bruteforce(&spec, &cert.a_star, 15, radius).unwrap();
            assert!(
                blocking.is_empty(),
                "n = {n}: blocking coalitions {blocking:?}"
            );
        }
    }
}

#[test]
fn price_rows_scale_jacobian_rows_and_budget_balances() {
    // Theorem 1, desk form of the converse: any price matrix whose rows are
    // positive multiples of the Jacobian rows and which satisfies P·a* = 0
    // certifies the centrality property of a*.
    let mut r = rng(18);
    for _ in 0..20 {
        let spec = random_family_economy(&mut r);
        let cert = lindahl::solve_centrality(&spec, None, &SolveOptions::default()).unwrap();
        let n = spec.n();
        let scalings: Vec<f64> = (0..n).map(|_| r.random_range(0.1..5.0)).collect();
        let jac = model::jacobian(&spec, &cert.a_star).unwrap();
        let mut p = jac.matrix().clone();
        for i in 0..n {
            for j in 0..n {
                p[[i, j]] *= scalings[i];
            }
        }
        let pa = p.dot(cert.a_star.values());
        let pa_norm = pa.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(pa_norm <= 1e-8, "P a* = {pa_norm}");
        let b = model::benefits_at(&spec, &cert.a_star).unwrap();
        let resid = &b.matrix().dot(cert.a_star.values()) - cert.a_star.values();
        let resid_norm = resid.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(resid_norm <= 1e-8, "centrality residual {resid_norm}");
    }
}

#[test]
fn agent_removal_never_raises_the_radius() {
    let mut r = rng(19);
    for _ in 0..25 {
        let n = r.random_range(2..=10);
        let mut b0 = random_irreducible(&mut r, n);
        for i in 0..n {
            b0[[i, i]] = 0.0;
        }
        let spec = model::EconomySpec::raw_benefits(b0).unwrap();
        let report = structure::essential_agents(&spec, &Tolerances::default()).unwrap();
        for (i, &rho) in report.rho_without.iter().enumerate() {
            assert!(
                rho <= report.rho_full + 1e-10,
                "agent {i}: {rho} > {}",
                report.rho_full
            );
        }
    }
}

#[test]
fn essential_set_permutes_with_the_agents() {
    let mut r = rng(20);
    let tol = Tolerances::default();
    for _ in 0..10 {
        let n = r.random_range(3..=8);
        let mut b0 = random_irreducible(&mut r, n);
        for i in 0..n {
            b0[[i, i]] = 0.0;
        }
        // Random permutation by repeated swaps.
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = r.random_range(0..=i);
            perm.swap(i, j);
        }
        let permuted = Array2::from_shape_fn((n, n), |(i, j)| b0[[perm[i], perm[j]]]);

        let base = structure::essential_agents(
            &model::EconomySpec::raw_benefits(b0).unwrap(),
            &tol,
        )
        .unwrap();
        let shuffled = structure::essential_agents(
            &model::EconomySpec::raw_benefits(permuted).unwrap(),
            &tol,
        )
        .unwrap();
        // essential(permuted)[k] = position of perm[k] in the base set.
        let mut expect: Vec<usize> = (0..n).filter(|&k| base.essential.contains(&perm[k])).collect();
        expect.sort_unstable();
        let mut got = shuffled.essential.clone();
        got.sort_unstable();
        assert_eq!(got, expect, "perm {perm:?}");
    }
}

#[test]
fn separation_terms_are_nonnegative_and_sum_to_the_bound() {
    let mut r = rng(21);
    let tol = Tolerances::default();
    for _ in 0..10 {
        let n = r.random_range(3..=8);
        let spec = common::random_family_economy_sized(&mut r, n);
        let cert = lindahl::solve_centrality(&spec, None, &SolveOptions::default()).unwrap();
        let split = r.random_range(1..n);
        let m: Vec<usize> = (0..split).collect();
        let report =
            structure::separation_bound(&spec, &cert.a_star, &cert.theta, &m, &tol).unwrap();
        assert!(report.cross_terms.iter().all(|t| t.value >= 0.0));
        let total: f64 = report.cross_terms.iter().map(|t| t.value).sum();
        assert_eq!(total.to_bits(), report.bound.to_bits());

        let complement: Vec<usize> = (split..n).collect();
        let flipped =
            structure::separation_bound(&spec, &cert.a_star, &cert.theta, &complement, &tol)
                .unwrap();
        assert_eq!(report.bound.to_bits(), flipped.bound.to_bits());
    }
}

// Proptest strategies: small dense nonnegative matrices made irreducible by a
// unit ring.

fn ring_plus(n: usize, extra: Vec<f64>) -> Array2<f64> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, (i + 1) % n]] = 1.0;
    }
    for (idx, v) in extra.into_iter().enumerate() {
        let (i, j) = (idx / n, idx % n);
        m[[i, j]] += v;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radius_is_transpose_invariant(
        n in 2usize..6,
        entries in proptest::collection::vec(0.0f64..1.0, 36),
    ) {
        let m = ring_plus(n, entries[..n * n].to_vec());
        let rho = spectral::spectral_radius(&m).unwrap();
        let rho_t = spectral::spectral_radius(&m.t().to_owned()).unwrap();
        prop_assert!((rho - rho_t).abs() <= 1e-10, "{rho} vs {rho_t}");
    }

    #[test]
    fn radius_is_monotone_in_the_entries(
        n in 2usize..6,
        entries in proptest::collection::vec(0.0f64..1.0, 36),
        bumps in proptest::collection::vec(0.0f64..0.5, 36),
    ) {
        let m = ring_plus(n, entries[..n * n].to_vec());
        let mut bigger = m.clone();
        for (idx, &b) in bumps[..n * n].iter().enumerate() {
            bigger[[idx / n, idx % n]] += b;
        }
        let rho = spectral::spectral_radius(&m).unwrap();
        let rho_big = spectral::spectral_radius(&bigger).unwrap();
        prop_assert!(rho <= rho_big + 1e-10, "{rho} > {rho_big}");
    }

    #[test]
    fn radius_and_perron_vectors_scale_correctly(
        n in 2usize..6,
        entries in proptest::collection::vec(0.0f64..1.0, 36),
        c in 0.01f64..100.0,
    ) {
        let m = ring_plus(n, entries[..n * n].to_vec());
        let scaled = m.mapv(|v| c * v);
        let pp = spectral::perron_pair(&m).unwrap();
        let pp_c = spectral::perron_pair(&scaled).unwrap();
        prop_assert!((pp_c.radius - c * pp.radius).abs() <= 1e-8 * c.max(1.0));
        for i in 0..n {
            prop_assert!((pp.right[i] - pp_c.right[i]).abs() <= 1e-8);
            prop_assert!((pp.left[i] - pp_c.left[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn improvement_direction_is_signed_perron(
        n in 2usize..5,
        entries in proptest::collection::vec(0.1f64..1.0, 25),
        scale in 0.2f64..5.0,
    ) {
        // Raw-benefits economy with B = scale·(ring + dense): rho scales, and
        // whenever it is off 1 the direction exists with uniform sign.
        let mut b0 = ring_plus(n, entries[..n * n].to_vec()).mapv(|v| v * scale);
        for i in 0..n {
            b0[[i, i]] = 0.0;
        }
        let spec = model::EconomySpec::raw_benefits(b0).unwrap();
        let a = ActionProfile::ones(n);
        let tol = Tolerances::default();
        let rho = spectral::spectral_radius(
            model::benefits_at(&spec, &a).unwrap().matrix(),
        ).unwrap();
        if (rho - 1.0).abs() > 1e-6 {
            let d = efficiency::improvement_direction(&spec, &a, &tol).unwrap();
            let norm: f64 = d.iter().map(|v| v.abs()).sum();
            prop_assert!((norm - 1.0).abs() <= 1e-9);
            prop_assert!(d.iter().all(|&v| v > 0.0) || d.iter().all(|&v| v < 0.0));
            let jd = model::jacobian(&spec, &a).unwrap().matrix().dot(&d);
            prop_assert!(jd.iter().all(|&v| v > 0.0));
        }
    }
}

#[test]
fn perron_vectors_are_unit_norm() {
    let mut r = rng(22);
    for _ in 0..20 {
        let n = r.random_range(2..=12);
        let m = random_irreducible(&mut r, n);
        let pp = spectral::perron_pair(&m).unwrap();
        let sum_r: f64 = pp.right.sum();
        let sum_l: f64 = pp.left.sum();
        assert!((sum_r - 1.0).abs() <= 1e-12);
        assert!((sum_l - 1.0).abs() <= 1e-12);
    }
}
