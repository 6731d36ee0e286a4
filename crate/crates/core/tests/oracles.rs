//! Cross-checks against an independent brute-force solver and frozen
//! reference values.

use intertwiner::dynamics::{drift_report, slow_mode_rates, StateVector};
use intertwiner::intertwine::{recursive_tower, solve_relation, spectral_route, verify_relation, Relation};
use intertwiner::matrix::{c, frobenius, identity, pauli, projection_residual, DEFAULT_TOL};
use intertwiner::models::{build_circuit, build_dimer, parity, CircuitParams};
use intertwiner::spectral::{classify_degeneracies, eig_biorthogonal, DEFAULT_CLUSTER_TOL};
use intertwiner::{CMatrix, CVector, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hermitian unit matrices `E_kl`, built independently of the library.
fn hermitian_units(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::new();
    for k in 0..n {
        for l in k..n {
            let mut m = CMatrix::zeros(n, n);
            if k == l {
                m[(k, k)] = c(1.0, 0.0);
                out.push(m);
            } else {
                m[(k, l)] = c(1.0, 0.0);
                m[(l, k)] = c(1.0, 0.0);
                out.push(m.clone());
                m[(k, l)] = c(0.0, 1.0);
                m[(l, k)] = c(0.0, -1.0);
                out.push(m);
            }
        }
    }
    out
}

/// Real dimension and a basis of Hermitian solutions of
/// `ηH = e^{iφ}H†η`, by assembling the real map column by column.
fn brute_force(h: &CMatrix, phi: f64) -> Vec<CMatrix> {
    let n = h.nrows();
    let units = hermitian_units(n);
    let rot = C64::from_polar(1.0, phi);
    let hd = h.adjoint();
    let mut map = DMatrix::<f64>::zeros(2 * n * n, units.len());
    for (j, e) in units.iter().enumerate() {
        let image = e * h - &hd * e * rot;
        for (i, z) in image.iter().enumerate() {
            map[(2 * i, j)] = z.re;
            map[(2 * i + 1, j)] = z.im;
        }
    }
    let scale = map.norm().max(1.0);
    let svd = map.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut out = Vec::new();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= 1e-9 * scale {
            let row = v_t.row(k);
            let mut eta = CMatrix::zeros(n, n);
            for (j, e) in units.iter().enumerate() {
                eta += e * c(row[j], 0.0);
            }
            out.push(eta);
        }
    }
    out
}

/// `H = M + e^{iφ} P M† P` satisfies `PH = e^{iφ}H†P` for any `M`.
fn random_symmetric(n: usize, phi: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let p = parity(n);
    &m + &p * m.adjoint() * &p * C64::from_polar(1.0, phi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nullspace_matches_brute_force(n in 2usize..=5, phi in -3.0f64..3.0, seed in any::<u64>()) {
        let h = random_symmetric(n, phi, &mut ChaCha8Rng::seed_from_u64(seed));
        let oracle = brute_force(&h, phi);
        let set = solve_relation(&h, Relation::intertwine(phi), DEFAULT_TOL).unwrap();
        prop_assert_eq!(oracle.len(), n);
        prop_assert_eq!(set.len(), oracle.len());
        prop_assert!(projection_residual(set.elements(), &oracle, DEFAULT_TOL) <= 1e-8);
        prop_assert!(projection_residual(&oracle, set.elements(), DEFAULT_TOL) <= 1e-8);
    }

    #[test]
    fn three_routes_agree_on_generic_input(n in 2usize..=5, phi in -3.0f64..3.0, seed in any::<u64>()) {
        let h = random_symmetric(n, phi, &mut ChaCha8Rng::seed_from_u64(seed));
        let rel = Relation::intertwine(phi);
        let nullspace = solve_relation(&h, rel, DEFAULT_TOL).unwrap();
        let spectral = spectral_route(&h, rel, DEFAULT_TOL).unwrap();
        let recursive = recursive_tower(&parity(n), &h, rel, DEFAULT_TOL).unwrap();
        for set in [&spectral, &recursive] {
            prop_assert_eq!(set.len(), n);
            prop_assert!(projection_residual(set.elements(), nullspace.elements(), DEFAULT_TOL) <= 1e-8);
            prop_assert!(projection_residual(nullspace.elements(), set.elements(), DEFAULT_TOL) <= 1e-8);
        }
    }
}

#[test]
fn dimer_tower_is_frozen() {
    let (j, gamma) = (1.0, 0.4);
    let (h, _) = build_dimer(j, gamma).unwrap();
    let (sx, sy, sz) = pauli();
    let tower = recursive_tower(&sx, &h, Relation::pt(), DEFAULT_TOL).unwrap();
    assert_eq!(tower.len(), 2);
    let second = (identity(2) * c(j, 0.0) + &sy * c(gamma, 0.0)) * c(0.5, 0.0);
    assert!(frobenius(&(&tower.elements()[1] - &second)) < 1e-15);
    assert!(verify_relation(&sx, &h, Relation::pt()) <= 1e-15);
    assert!(verify_relation(&sz, &h, Relation::pt()) > 0.1);
}

#[test]
fn circuit_exceptional_points_are_frozen() {
    let p = CircuitParams::new(0.0, 0.6).unwrap();
    assert!((p.gamma0() - 2.3717082451262845).abs() < 1e-15);
    assert!((p.gamma_pt() - 0.7905694150420948).abs() < 1e-15);
    for gamma in [p.gamma_pt(), p.gamma0()] {
        let h = build_circuit(&CircuitParams::new(gamma, 0.6).unwrap()).unwrap().hamiltonian;
        let spec = eig_biorthogonal(&h, DEFAULT_TOL).unwrap();
        let report = classify_degeneracies(&h, &spec, DEFAULT_CLUSTER_TOL).unwrap();
        assert!(report.exceptional().count() >= 1, "γ={gamma}");
    }
    let h = build_circuit(&CircuitParams::new(0.0, 0.6).unwrap()).unwrap().hamiltonian;
    let spec = eig_biorthogonal(&h, DEFAULT_TOL).unwrap();
    assert!(spec.eigenvalues.iter().all(|z| z.im.abs() < 1e-12));
}

#[test]
fn slow_mode_rates_are_frozen() {
    let frozen =
        [(1.1, 0.6417424305044159), (1.5, 0.3819660112501051), (2.0, 0.2679491924311228), (3.0, 0.1715728752538097)];
    for (gamma, want) in frozen {
        let (h, _) = build_dimer(1.0, gamma).unwrap();
        let passive = &h - identity(2) * c(0.0, gamma / 2.0);
        let rates = slow_mode_rates(&passive, DEFAULT_TOL).unwrap();
        assert!((rates[0] - want).abs() < 1e-12, "γ={gamma}");
    }
    let (h, _) = build_dimer(1.0, 0.6).unwrap();
    let passive = &h - identity(2) * c(0.0, 0.3);
    for r in slow_mode_rates(&passive, DEFAULT_TOL).unwrap() {
        assert!((r - 0.6).abs() < 1e-12);
    }
}

#[test]
fn unbroken_dimer_conserves_pt_norm() {
    let (h, _) = build_dimer(1.0, 0.5).unwrap();
    let (sx, _, _) = pauli();
    let psi = StateVector::new(CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)])).unwrap();
    let r = drift_report(&h, &[sx], &psi, 20.0, 2001, 0.0).unwrap();
    assert!(r.max_drift() <= 1e-8);
    assert!(!r.imaginary_flag);
}
