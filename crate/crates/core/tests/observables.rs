use std::f64::consts::PI;
use std::sync::Arc;

use fqh_core::basis::{enumerate_basis, enumerate_up_to};
use fqh_core::evolve::evolve_pure_with;
use fqh_core::lattice::{gauge_transform, landau_gauge};
use fqh_core::observables::{
    current_direct, current_isolated_fit, densities, g2_map, g2_map_with_count, pair_correlations, state_fidelity,
    CurrentForm, IsolationFit,
};
use fqh_core::state::AnyState;
use fqh_core::{
    build_hamiltonian, diagonalize, Couplings, DensityMatrix, DriveSchedule, GaugeField, Lattice, Potential,
    SectorBasis, StateVector, C64,
};
use proptest::prelude::*;

fn ground_state(basis: &Arc<SectorBasis>, gauge: &GaugeField, c: &Couplings, v: &Potential) -> StateVector {
    let h = build_hamiltonian(basis.lattice(), gauge, c, v, basis).unwrap();
    let gs = diagonalize(&h, true).unwrap().ground_state().unwrap();
    StateVector::new(basis.clone(), gs).unwrap()
}

fn random_state(basis: &Arc<SectorBasis>, re: &[f64], im: &[f64]) -> StateVector {
    let amps = (0..basis.dim()).map(|k| C64::new(re[k % re.len()], im[(3 * k) % im.len()])).collect();
    let mut psi = StateVector::new(basis.clone(), amps).unwrap();
    psi.normalize();
    psi
}

#[test]
fn continuity_along_a_trajectory() {
    let lat = Lattice::new(4, 4).unwrap();
    let basis = Arc::new(enumerate_basis(&lat, 2).unwrap());
    let gauge = landau_gauge(&lat, 0.3);
    let c = Couplings::uniform(&lat, 5.0);
    let v = Potential::from_sites(&lat, [(6, 3.0)]).unwrap();
    let sched = DriveSchedule::constant(&lat, c.clone(), v, 0.05).unwrap();
    let psi0 = StateVector::fock(basis, &[0, 5]).unwrap();
    let h = 1e-4;
    let mut dens = Vec::new();
    let mut div = Vec::new();
    evolve_pure_with(&sched, &gauge, &psi0, h, Some(h), |_, psi, _| {
        dens.push(densities(psi));
        div.push(current_direct(psi, &gauge, &c, CurrentForm::Covariant).unwrap().divergence());
    })
    .unwrap();
    let mut worst = 0.0f64;
    for k in 2..dens.len() - 2 {
        for s in 0..16 {
            let dn = (-dens[k + 2][s] + 8.0 * dens[k + 1][s] - 8.0 * dens[k - 1][s] + dens[k - 2][s]) / (12.0 * h);
            worst = worst.max((dn - div[k][s]).abs());
        }
    }
    assert!(worst < 1e-4, "continuity residual {worst} photons/us");
}

#[test]
fn literal_current_breaks_continuity_at_finite_flux() {
    let lat = Lattice::new(3, 3).unwrap();
    let basis = Arc::new(enumerate_basis(&lat, 1).unwrap());
    let gauge = landau_gauge(&lat, 0.25);
    let c = Couplings::uniform(&lat, 5.0);
    let gs = ground_state(&basis, &gauge, &c, &Potential::flat(&lat));
    let cov = current_direct(&gs, &gauge, &c, CurrentForm::Covariant).unwrap();
    let lit = current_direct(&gs, &gauge, &c, CurrentForm::Literal).unwrap();
    let cov_div = cov.divergence().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let lit_div = lit.divergence().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    assert!(cov_div < 1e-9);
    assert!(lit_div > 1e-3);
}

#[test]
fn observables_are_gauge_invariant() {
    let lat = Lattice::new(4, 4).unwrap();
    let basis = Arc::new(enumerate_basis(&lat, 2).unwrap());
    let c = Couplings::uniform(&lat, 5.0);
    let v = Potential::from_sites(&lat, [(0, 1.0)]).unwrap();
    let g = landau_gauge(&lat, 0.3);
    let chi: Vec<f64> = (0..16).map(|s| 0.37 * s as f64 - 1.1 * (s % 3) as f64).collect();
    let g2 = gauge_transform(&g, &chi).unwrap();
    let a = ground_state(&basis, &g, &c, &v);
    let b = ground_state(&basis, &g2, &c, &v);
    for (x, y) in densities(&a).iter().zip(densities(&b)) {
        assert!((x - y).abs() < 1e-9);
    }
    let ja = current_direct(&a, &g, &c, CurrentForm::Covariant).unwrap();
    let jb = current_direct(&b, &g2, &c, CurrentForm::Covariant).unwrap();
    for (x, y) in ja.values().iter().zip(jb.values()) {
        assert!((x - y).abs() < 1e-8);
    }
    let bulk = [5, 6, 9, 10];
    let ma = g2_map(&a, &bulk).unwrap();
    let mb = g2_map(&b, &bulk).unwrap();
    for (d, x) in &ma.values {
        assert!((x - mb.values[d]).abs() < 1e-9);
    }
}

#[test]
fn uncorrelated_density_gives_prefactor() {
    let lat = Lattice::new(2, 2).unwrap();
    let basis = Arc::new(enumerate_up_to(&lat, 4).unwrap());
    let p: f64 = 0.3;
    let amps = basis
        .states()
        .iter()
        .map(|m| {
            let k = m.count_ones() as i32;
            C64::new((p.powi(k) * (1.0 - p).powi(4 - k)).sqrt(), 0.0)
        })
        .collect();
    let psi = StateVector::new(basis, amps).unwrap();
    let map = g2_map_with_count(&psi, &[0, 1, 2, 3], 2).unwrap();
    assert!(!map.values.is_empty());
    for g in map.values.values() {
        assert!((g - 2.0).abs() < 1e-12);
    }
}

#[test]
fn localized_pair_correlates_only_at_its_separation() {
    let lat = Lattice::new(4, 4).unwrap();
    let basis = Arc::new(enumerate_basis(&lat, 2).unwrap());
    let psi = StateVector::fock(basis, &[5, 10]).unwrap();
    let map = g2_map(&psi, &[5, 6, 9, 10]).unwrap();
    assert_eq!(map.values.len(), 2);
    assert!((map.get(1, 1).unwrap() - 2.0).abs() < 1e-12);
    assert!((map.get(-1, -1).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn g2_rejects_single_photon() {
    let lat = Lattice::new(2, 2).unwrap();
    let psi = StateVector::fock(Arc::new(enumerate_basis(&lat, 1).unwrap()), &[0]).unwrap();
    assert!(matches!(g2_map(&psi, &[0]), Err(fqh_core::Error::UndefinedCorrelation(1))));
}

#[test]
fn isolation_fit_recovers_direct_current() {
    let lat = Lattice::new(3, 3).unwrap();
    let basis = Arc::new(enumerate_basis(&lat, 2).unwrap());
    let gauge = landau_gauge(&lat, 0.2);
    let c = Couplings::uniform(&lat, 5.0);
    let flat = Potential::flat(&lat);
    let gs = ground_state(&basis, &gauge, &c, &flat);
    let direct = current_direct(&gs, &gauge, &c, CurrentForm::Covariant).unwrap();
    let state = AnyState::Pure(gs);
    let scale = direct.values().iter().fold(0.0f64, |m, j| m.max(j.abs()));
    for b in lat.bonds().iter().take(6) {
        let fit = current_isolated_fit(&state, &gauge, &c, &flat, (b.a, b.b), &IsolationFit::default()).unwrap();
        let want = direct.get(b.a, b.b).unwrap();
        assert!((fit.current - want).abs() < 1e-3 * scale, "bond {}-{}: {} vs {}", b.a, b.b, fit.current, want);
    }
}

#[test]
fn fidelity_agrees_across_representations() {
    let lat = Lattice::new(3, 3).unwrap();
    let basis = Arc::new(enumerate_basis(&lat, 2).unwrap());
    let a = random_state(&basis, &[0.3, -1.0, 0.7], &[0.2, 0.5]);
    let b = random_state(&basis, &[1.0, 0.1], &[-0.4, 0.9, 0.3]);
    let pure = state_fidelity(&AnyState::Pure(a.clone()), &AnyState::Pure(b.clone())).unwrap();
    let mixed = state_fidelity(&AnyState::Pure(a.clone()), &AnyState::Mixed(DensityMatrix::from_pure(&b))).unwrap();
    let both = state_fidelity(&AnyState::Mixed(DensityMatrix::from_pure(&a)), &AnyState::Mixed(DensityMatrix::from_pure(&b))).unwrap();
    assert!((pure - mixed).abs() < 1e-10);
    assert!((pure - both).abs() < 1e-6);
    let same = state_fidelity(&AnyState::Pure(a.clone()), &AnyState::Pure(a)).unwrap();
    assert!((same - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pair_sum_rule(re in prop::collection::vec(-1.0f64..1.0, 7), im in prop::collection::vec(-1.0f64..1.0, 5), n in 2usize..=4) {
        let lat = Lattice::new(3, 3).unwrap();
        let basis = Arc::new(enumerate_basis(&lat, n).unwrap());
        prop_assume!(re.iter().any(|x| x.abs() > 1e-3));
        let psi = random_state(&basis, &re, &im);
        let pairs = pair_correlations(&psi);
        let mut total = 0.0;
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    total += pairs[(i, j)];
                }
            }
        }
        prop_assert!((total - (n * (n - 1)) as f64).abs() < 1e-10);
        prop_assert!((densities(&psi).iter().sum::<f64>() - n as f64).abs() < 1e-10);
    }

    #[test]
    fn g2_is_inversion_symmetric(phi in 0.05f64..0.45, v0 in -3.0f64..3.0) {
        let lat = Lattice::new(4, 4).unwrap();
        let basis = Arc::new(enumerate_basis(&lat, 2).unwrap());
        let c = Couplings::uniform(&lat, 5.0);
        let gs = ground_state(&basis, &landau_gauge(&lat, phi), &c, &Potential::from_sites(&lat, [(0, v0)]).unwrap());
        let map = g2_map(&gs, &[5, 6, 9, 10]).unwrap();
        for (&(dx, dy), g) in &map.values {
            prop_assert!(*g >= -1e-12);
            prop_assert!(map.get(-dx, -dy).is_some());
        }
    }

    #[test]
    fn currents_are_antisymmetric(phi in -0.5f64..0.5, chi in prop::collection::vec(-PI..PI, 9)) {
        let lat = Lattice::new(3, 3).unwrap();
        let basis = Arc::new(enumerate_basis(&lat, 2).unwrap());
        let c = Couplings::uniform(&lat, 4.0);
        let g = gauge_transform(&landau_gauge(&lat, phi), &chi).unwrap();
        let gs = ground_state(&basis, &g, &c, &Potential::flat(&lat));
        let field = current_direct(&gs, &g, &c, CurrentForm::Covariant).unwrap();
        for b in lat.bonds() {
            prop_assert!((field.get(b.a, b.b).unwrap() + field.get(b.b, b.a).unwrap()).abs() < 1e-12);
        }
        prop_assert!(field.divergence().iter().all(|d| d.abs() < 1e-8));
    }
}
