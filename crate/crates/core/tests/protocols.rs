use std::f64::consts::TAU;

use fqh_core::fit::{fit_sinusoid, linear_fit};
use fqh_core::observables::{densities, state_fidelity};
use fqh_core::protocols::adiabatic::{
    make_adiabatic_schedule, run_preparation, run_reversal_fidelity, PreparationConfig,
};
use fqh_core::protocols::butterfly::{run_butterfly, ButterflyConfig};
use fqh_core::protocols::calibration::{ab_loop_time, rabi_amplitude, run_ab_loop, run_deflection, run_two_site_rabi};
use fqh_core::protocols::defects::{middle_pair_geometry, run_defect_response};
use fqh_core::protocols::gap_map::run_gap_map;
use fqh_core::protocols::streda::{run_streda, StredaMode};
use fqh_core::protocols::{linear_grid, Model};
use fqh_core::state::AnyState;
use fqh_core::{QuantumState, StateVector};
use proptest::prelude::*;

#[test]
fn rabi_amplitudes_follow_lorentzian() {
    let j = 5.0;
    let deltas = [-20.0, -10.0, 0.0, 10.0, 20.0];
    let chevron = run_two_site_rabi(j, &deltas, 0.2, 1e-3).unwrap();
    for (d, a) in deltas.iter().zip(&chevron.amplitudes) {
        assert!((a - rabi_amplitude(j, *d)).abs() < 2e-3, "delta {d}: {a}");
    }
    assert!((rabi_amplitude(j, 2.0 * j) - 0.5).abs() < 1e-15);
    assert!((chevron.amplitudes[0] - chevron.amplitudes[4]).abs() < 1e-9);
    let p = chevron.record.column("transfer_photons").unwrap();
    let t = chevron.record.column("t_us").unwrap();
    let k = t.iter().position(|x| (x - 0.05).abs() < 1e-9).unwrap();
    assert!((p[2 * t.len() / 5 + k] - 1.0).abs() < 1e-8);
}

#[test]
fn aharonov_bohm_loop_is_periodic_and_mirrored() {
    assert!((ab_loop_time(5.0) - 0.05).abs() < 1e-15);
    let phis = [-0.3, -0.1, 0.0, 0.1, 0.3, 0.7, 0.9, 1.1];
    let rec = run_ab_loop(5.0, &phis).unwrap();
    let p: Vec<&[f64]> = (0..4).map(|s| rec.column(&format!("p{s}_photons")).unwrap()).collect();
    let at = |k: usize| [p[0][k], p[1][k], p[2][k], p[3][k]];
    let close = |a: [f64; 4], b: [f64; 4]| a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8);
    assert!(close(at(3), at(7)));
    assert!(close(at(0), at(5)));
    assert!(close(at(1), at(6)));
    // reflecting the square through the 0-3 diagonal swaps sites 1 and 2 and reverses the flux
    let m = at(1);
    assert!(close(at(3), [m[0], m[2], m[1], m[3]]));
    let zero = at(2);
    assert!((zero[3] - 1.0).abs() < 1e-8, "phi = 0 moves the photon to the far corner");
    assert!(at(4)[3] < zero[3] - 0.1);
}

#[test]
fn deflection_mirrors_under_flux_reversal() {
    let plus = run_deflection(5.0, 0.1, 0.3, 0.01).unwrap();
    let minus = run_deflection(5.0, -0.1, 0.3, 0.01).unwrap();
    let zero = run_deflection(5.0, 0.0, 0.3, 0.01).unwrap();
    let (xp, xm, x0) = (plus.column("x_index").unwrap(), minus.column("x_index").unwrap(), zero.column("x_index").unwrap());
    for k in 0..xp.len() {
        assert!((xp[k] + xm[k] - 3.0).abs() < 1e-8);
        assert!((x0[k] - 1.5).abs() < 1e-8);
    }
    let (yp, ym) = (plus.column("y_index").unwrap(), minus.column("y_index").unwrap());
    assert!(yp.iter().zip(ym).all(|(a, b)| (a - b).abs() < 1e-8));
    assert!(xm[xm.len() / 3] > 1.5 + 1e-3, "negative flux deflects to +x");
}

#[test]
fn butterfly_is_periodic_and_even_in_flux() {
    let cfg = ButterflyConfig { lx: 3, ly: 3, t_evolve_us: 0.8, ..ButterflyConfig::default() };
    let map = run_butterfly(&cfg, &[0.2, 1.2, -0.2]).unwrap();
    for k in 0..map.freqs_mhz.len() {
        assert!((map.spectra[0][k] - map.spectra[1][k]).abs() < 1e-9);
        assert!((map.spectra[0][k] - map.spectra[2][k]).abs() < 1e-9);
    }
    for errs in map.peak_errors() {
        assert!(errs.iter().all(|e| *e <= map.resolution_mhz));
    }
}

#[test]
fn schedule_scales_with_duration() {
    let cfg = PreparationConfig::new(2, 0.3).unwrap().with_duration(1.0);
    let half = make_adiabatic_schedule(&cfg.clone().with_duration(0.5)).unwrap();
    let full = make_adiabatic_schedule(&cfg).unwrap();
    for k in 0..=20 {
        let t = k as f64 / 20.0;
        let (ja, va) = full.schedule.at(t);
        let (jb, vb) = half.schedule.at(t / 2.0);
        assert!(ja.values().iter().zip(jb.values()).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(va.values().iter().zip(vb.values()).all(|(a, b)| (a - b).abs() < 1e-12));
    }
    assert!(full.schedule.at(0.0).0.max_abs() == 0.0);
    assert!((full.schedule.at(1.0).0.max_abs() - 5.0).abs() < 1e-12);
    assert!(full.schedule.at(1.0).1.max_abs() < 1e-12);
}

#[test]
fn vanishing_duration_leaves_state_in_place() {
    let mut cfg = PreparationConfig::new(2, 0.3).unwrap().with_duration(1e-4);
    cfg.dt_us = 1e-6;
    let prep = run_preparation(&cfg, None).unwrap();
    let n = densities(prep.final_state.as_dyn());
    for s in 0..16 {
        let want = if cfg.initial_sites.contains(&s) { 1.0 } else { 0.0 };
        assert!((n[s] - want).abs() < 1e-3);
    }
}

#[test]
fn reversal_improves_as_duration_doubles() {
    let fids: Vec<f64> = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|&t| run_reversal_fidelity(&PreparationConfig::new(2, 0.1).unwrap().with_duration(t), None).unwrap().fidelity)
        .collect();
    assert!(fids.windows(2).all(|w| w[1] > w[0]), "{fids:?}");
    assert!(fids[3] > 0.95);
}

#[test]
fn long_preparation_reaches_ground_state() {
    let cfg = PreparationConfig::new(2, 0.1).unwrap().with_duration(2.0);
    let prep = run_preparation(&cfg, None).unwrap();
    let model = Model::new(4, 4, 2, 5.0).unwrap();
    let gs = model.ground_state(0.1, None).unwrap();
    let f = state_fidelity(&prep.final_state, &AnyState::Pure(gs)).unwrap();
    assert!(f > 0.95, "overlap {f}");
}

#[test]
fn ideal_streda_fit_is_exact_on_its_own_line() {
    let model = Model::new(4, 4, 2, 5.0).unwrap();
    let phis = linear_grid(0.25, 0.32, 0.01).unwrap();
    let res = run_streda(&model, &phis, &StredaMode::Ideal).unwrap();
    let refit = linear_fit(&res.phis, &res.rho_bulk).unwrap();
    assert_eq!(refit.slope, res.fit.slope);
    assert_eq!(res.to_record().unwrap().num_rows(), phis.len());
    assert!(run_streda(&model, &phis[..2], &StredaMode::Ideal).is_err());
}

#[test]
fn zero_depth_defects_leave_densities_unchanged() {
    let base = PreparationConfig::new(2, 0.15).unwrap().with_duration(1.0);
    let (dips, bumps) = middle_pair_geometry(&base.lattice().unwrap()).unwrap();
    let resp = run_defect_response(&base, &dips, &bumps, &[0.0, 1.0], None).unwrap();
    assert_eq!(resp.delta_upper()[0], 0.0);
    assert!((resp.n_upper[0] + resp.n_lower[0] - 2.0).abs() < 1e-5);
    assert!((resp.n_upper[1] + resp.n_lower[1] - 2.0).abs() < 1e-5);
    assert!(resp.delta_upper()[1] > 0.0, "dips on the top row attract photons");
}

#[test]
fn deep_traps_open_the_gap() {
    let model = Model::new(4, 4, 2, 5.0).unwrap();
    let map = run_gap_map(&model, &[0.1, 0.2, 0.3], &[0.0, -15.0]).unwrap();
    for (a, b) in map.gaps_mhz[0].iter().zip(&map.gaps_mhz[1]) {
        assert!(b > a);
    }
    assert!(map.gaps_mhz[1].iter().all(|g| *g > 5.0));
    assert_eq!(map.to_record().unwrap().num_rows(), 6);
}

#[test]
fn localized_start_matches_mask() {
    let cfg = PreparationConfig::new(3, 0.3).unwrap();
    let model = Model::new(4, 4, 3, 5.0).unwrap();
    let psi = StateVector::fock(model.basis.clone(), &cfg.initial_sites).unwrap();
    let idx = model.basis.index_of(cfg.initial_mask()).unwrap();
    assert_eq!(psi.populations()[idx], 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_fit_recovers_synthetic_lines(slope in -10.0f64..10.0, intercept in -5.0f64..5.0, n in 3usize..20) {
        let x: Vec<f64> = (0..n).map(|k| 0.2 + 0.01 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + intercept).collect();
        let fit = linear_fit(&x, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9 * slope.abs().max(1.0));
        prop_assert!((fit.intercept - intercept).abs() < 1e-9 * intercept.abs().max(1.0));
        prop_assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn sinusoid_fit_recovers_frequency(f in 2.0f64..20.0, a in -1.0f64..1.0, b in 0.2f64..1.0, c in -0.5f64..0.5) {
        let t: Vec<f64> = (0..200).map(|k| 0.002 * k as f64).collect();
        let w = TAU * f;
        let y: Vec<f64> = t.iter().map(|x| a * (w * x).cos() + b * (w * x).sin() + c).collect();
        let fit = fit_sinusoid(&t, &y).unwrap();
        prop_assert!((fit.omega - w).abs() < 1e-6 * w);
        prop_assert!((fit.initial_slope() - b * w).abs() < 1e-5 * w);
    }
}
