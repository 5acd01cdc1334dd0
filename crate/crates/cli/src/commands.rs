//! One function per subcommand; each returns the artifacts to write.

use anyhow::{bail, Result};
use fqh_core::evolve::Dephasing;
use fqh_core::lattice::{gauge_transform, landau_gauge};
use fqh_core::observables::{default_bulk_sites, state_fidelity, CurrentForm, IsolationFit};
use fqh_core::protocols::adiabatic::{
    default_initial_sites, fidelity_sweep, local_minima, run_preparation, PreparationConfig,
};
use fqh_core::protocols::butterfly::{run_butterfly, ButterflyConfig as CoreButterfly};
use fqh_core::protocols::calibration::{rabi_amplitude, run_ab_loop, run_deflection, run_two_site_rabi};
use fqh_core::protocols::correlations::{g2_flux_sweep, DistanceClasses};
use fqh_core::protocols::currents::run_currents;
use fqh_core::protocols::defects::{full_row_geometry, geometry_meta, middle_pair_geometry, run_defect_response};
use fqh_core::protocols::gap_map::run_gap_map;
use fqh_core::protocols::streda::{mode_meta, run_streda, StredaMode};
use fqh_core::protocols::Model;
use fqh_core::state::AnyState;
use fqh_core::{diagonalize, build_hamiltonian, basis::enumerate_basis, Couplings, ExperimentRecord, Lattice, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{CurrentFormName, DefectGeometry, RunConfig, StredaModeName};
use crate::svg::{render, render_currents, Chart, Series};

/// A record plus its plot.
pub struct Artifact {
    pub record: ExperimentRecord,
    pub svg: Option<String>,
}

impl Artifact {
    fn new(record: ExperimentRecord, svg: String) -> Self {
        Self { record, svg: Some(svg) }
    }

    fn data(record: ExperimentRecord) -> Self {
        Self { record, svg: None }
    }
}

fn model(cfg: &RunConfig, photons: usize) -> Result<Model> {
    Ok(Model::new(cfg.lattice.lx, cfg.lattice.ly, photons, cfg.lattice.j_mhz)?)
}

/// Preparation settings from the `schedule` block at flux `phi`.
pub fn prep_config(cfg: &RunConfig, phi: f64) -> Result<PreparationConfig> {
    let s = &cfg.schedule;
    let lat = Lattice::new(cfg.lattice.lx, cfg.lattice.ly)?;
    let initial_sites = match &s.initial_sites {
        Some(v) => v.clone(),
        None => default_initial_sites(&lat, s.photons)?,
    };
    Ok(PreparationConfig {
        lx: cfg.lattice.lx,
        ly: cfg.lattice.ly,
        n_photons: s.photons,
        phi,
        duration_us: s.duration_us.unwrap_or(if s.photons >= 3 { 1.8 } else { 1.0 }),
        initial_sites,
        j_mhz: cfg.lattice.j_mhz,
        disorder_mhz: s.disorder_mhz,
        stage1_fraction: s.stage1_fraction,
        gap_floor_mhz: s.gap_floor_mhz,
        grid_points: s.grid_points,
        defects: None,
        dt_us: s.dt_us,
        record_every_us: s.record_every_us,
    })
}

pub fn noise(cfg: &RunConfig) -> Result<Option<Dephasing>> {
    let sites = cfg.site_t2()?;
    match cfg.noise.t2_us {
        Some(t2) => Ok(Some(Dephasing::with_overrides(t2, sites)?)),
        None if sites.is_empty() => Ok(None),
        None => Ok(Some(Dephasing::with_overrides(f64::INFINITY, sites)?)),
    }
}

fn points(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().copied().zip(y.iter().copied()).collect()
}

pub fn rabi(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let r = &cfg.rabi;
    let deltas = r.detunings_mhz.values()?;
    let j = cfg.lattice.j_mhz;
    let chevron = run_two_site_rabi(j, &deltas, r.duration_us, r.sample_us)?;
    let fine: Vec<(f64, f64)> = (0..=200)
        .map(|k| {
            let d = deltas[0] + (deltas[deltas.len() - 1] - deltas[0]) * k as f64 / 200.0;
            (d, rabi_amplitude(j, d))
        })
        .collect();
    let chart = Chart::new("Two-site Rabi transfer", "detuning (MHz)", "max transfer (photons)")
        .push(Series::markers("simulated", points(&deltas, &chevron.amplitudes)))
        .push(Series::line("(2J)^2/((2J)^2+d^2)", fine));
    Ok(vec![Artifact::new(chevron.record, render(&chart))])
}

pub fn ab_loop(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let phis = cfg.ab_loop.phis.values()?;
    let rec = run_ab_loop(cfg.lattice.j_mhz, &phis)?;
    let mut chart = Chart::new("Single photon around one plaquette", "flux (quanta)", "population (photons)");
    for s in 0..4 {
        let name = format!("p{s}_photons");
        chart = chart.push(Series::line(format!("site {s}"), points(&phis, rec.column(&name).expect("loop column"))));
    }
    Ok(vec![Artifact::new(rec, render(&chart))])
}

pub fn deflect(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let d = &cfg.deflect;
    let phis = d.phis.values()?;
    let runs = phis
        .iter()
        .map(|&phi| run_deflection(cfg.lattice.j_mhz, phi, d.duration_us, d.sample_us))
        .collect::<fqh_core::Result<Vec<_>>>()?;
    let mut rec = ExperimentRecord::with_columns("deflect", &["phi_quanta", "t_us", "x_index", "y_index"])?;
    let mut chart = Chart::new("Centroid of a launched photon", "time (us)", "<x> (sites)");
    for (phi, run) in phis.iter().zip(&runs) {
        let (t, x, y) = (run.column("t_us").unwrap(), run.column("x_index").unwrap(), run.column("y_index").unwrap());
        for k in 0..t.len() {
            rec.push_row(&[*phi, t[k], x[k], y[k]])?;
        }
        chart = chart.push(Series::line(format!("phi = {phi}"), points(t, x)));
    }
    rec.set_meta("j_mhz", cfg.lattice.j_mhz);
    rec.set_meta("duration_us", d.duration_us);
    Ok(vec![Artifact::new(rec, render(&chart))])
}

pub fn butterfly(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let b = &cfg.butterfly;
    let core = CoreButterfly {
        lx: cfg.lattice.lx,
        ly: cfg.lattice.ly,
        j_mhz: cfg.lattice.j_mhz,
        t_evolve_us: b.t_evolve_us,
        dt_sample_us: b.dt_sample_us,
        dt_us: cfg.schedule.dt_us,
    };
    let phis = b.phis.values()?;
    let map = run_butterfly(&core, &phis)?;
    let mut rec = map.to_record()?;
    let worst = map.peak_errors().iter().flatten().fold(0.0f64, |m, e| m.max(*e));
    rec.set_meta("max_peak_error_mhz", worst);
    let peaks: Vec<(f64, f64)> = phis.iter().zip(&map.peaks_mhz).flat_map(|(p, f)| f.iter().map(move |x| (*p, *x))).collect();
    let exact: Vec<(f64, f64)> = phis.iter().zip(&map.exact_mhz).flat_map(|(p, f)| f.iter().map(move |x| (*p, *x))).collect();
    let chart = Chart::new("Single-photon spectrum", "flux (quanta)", "frequency (MHz)")
        .push(Series::markers("exact", exact))
        .push(Series::markers("spectral peaks", peaks));
    Ok(vec![Artifact::new(rec, render(&chart))])
}

pub fn gap_map(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let g = &cfg.gap_map;
    let phis = g.phis.values()?;
    let disorders = g.disorders_mhz.values()?;
    let map = run_gap_map(&model(cfg, g.photons)?, &phis, &disorders)?;
    let mut rec = map.to_record()?;
    rec.set_meta("photons", g.photons);
    rec.set_meta("min_gap_phi", json!(map.min_gap_locus()));
    let mut chart = Chart::new(format!("Many-body gap, N = {}", g.photons), "flux (quanta)", "gap (MHz)");
    for (d, row) in disorders.iter().zip(&map.gaps_mhz) {
        chart = chart.push(Series::line(format!("{d} MHz"), points(&phis, row)));
    }
    Ok(vec![Artifact::new(rec, render(&chart))])
}

pub fn prepare(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let pc = prep_config(cfg, cfg.flux.phi)?;
    let noise = noise(cfg)?;
    let prep = run_preparation(&pc, noise.as_ref())?;
    let mut rec = prep.record;
    let gs = model(cfg, pc.n_photons)?.ground_state(pc.phi, None)?;
    rec.set_meta("ground_state_fidelity", state_fidelity(&prep.final_state, &AnyState::Pure(gs))?);
    let t = rec.column("t_us").expect("time column").to_vec();
    let mut chart = Chart::new(format!("Adiabatic preparation, phi = {}", pc.phi), "time (us)", "density (photons)");
    for s in 0..cfg.lattice.lx * cfg.lattice.ly {
        let n = rec.column(&format!("n{s}_photons")).expect("density column");
        chart = chart.push(Series::line(format!("site {s}"), points(&t, n)));
    }
    Ok(vec![Artifact::new(rec, render(&chart))])
}

pub fn fidelity(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let phis = cfg.fidelity_sweep.phis.values()?;
    let base = prep_config(cfg, cfg.flux.phi)?;
    let noise = noise(cfg)?;
    let f = fidelity_sweep(&base, &phis, noise.as_ref())?;
    let mut rec = ExperimentRecord::new("fidelity_sweep");
    rec.push_column("phi_quanta", phis.clone())?;
    rec.push_column("fidelity_ratio", f.clone())?;
    rec.set_meta("duration_us", base.duration_us);
    rec.set_meta("photons", base.n_photons);
    rec.set_meta("t2_us", noise.as_ref().map_or(serde_json::Value::Null, |d| json!(d.t2_us)));
    rec.set_meta("local_minima_phi", json!(local_minima(&f).iter().map(|&k| phis[k]).collect::<Vec<_>>()));
    let chart = Chart::new("Reversal fidelity", "flux (quanta)", "F").push(Series::line("F", points(&phis, &f)));
    Ok(vec![Artifact::new(rec, render(&chart))])
}

pub fn g2(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let g = &cfg.g2;
    let phis = g.phis.values()?;
    let sweep = g2_flux_sweep(&model(cfg, g.photons)?, &phis, DistanceClasses { small_max: g.small_max, large_min: g.large_min })?;
    let mut rec = sweep.to_record()?;
    rec.set_meta("small_max", g.small_max);
    rec.set_meta("large_min", g.large_min);
    rec.set_meta("photons", g.photons);
    let chart = Chart::new("Density correlations", "flux (quanta)", "mean g2")
        .push(Series::line(format!("|d| <= {}", g.small_max), points(&phis, &sweep.small)))
        .push(Series::line(format!("|d| >= {}", g.large_min), points(&phis, &sweep.large)));
    Ok(vec![Artifact::new(rec, render(&chart)), Artifact::data(sweep.radial_record()?)])
}

pub fn currents(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let c = &cfg.currents;
    let phis = c.phis.values()?;
    let m = model(cfg, c.photons)?;
    let form = match c.form {
        CurrentFormName::Covariant => CurrentForm::Covariant,
        CurrentFormName::Literal => CurrentForm::Literal,
    };
    let fit = IsolationFit {
        duration_us: c.fit_duration_us,
        sample_us: c.fit_sample_us,
        dt_us: cfg.schedule.dt_us,
        ..IsolationFit::default()
    };
    let runs = phis
        .iter()
        .map(|&phi| run_currents(&m, phi, form, c.fit.then_some(&fit)))
        .collect::<fqh_core::Result<Vec<_>>>()?;
    let mut rec = ExperimentRecord::with_columns(
        "currents",
        &["phi_quanta", "from_index", "to_index", "j_direct_per_us", "j_fit_per_us"],
    )?;
    let mut summaries = Vec::new();
    for r in &runs {
        for ((b, j), f) in m.lattice.bonds().iter().zip(r.summary.field.values()).zip(&r.fitted) {
            rec.push_row(&[r.summary.phi, b.a as f64, b.b as f64, *j, *f])?;
        }
        summaries.push(json!({
            "phi": r.summary.phi,
            "boundary_circulation_per_us": r.summary.boundary_circulation,
            "bulk_circulation_per_us": r.summary.bulk_circulation,
            "radial_mean_abs_per_us": r.summary.radial_mean_abs,
            "max_divergence_per_us": r.summary.max_divergence,
        }));
    }
    rec.set_meta("summaries", json!(summaries));
    rec.set_meta("form", json!(c.form));
    rec.set_meta("photons", c.photons);
    let panels: Vec<(String, &fqh_core::observables::CurrentField)> =
        runs.iter().map(|r| (format!("phi = {}", r.summary.phi), &r.summary.field)).collect();
    Ok(vec![Artifact::new(rec, render_currents(&m.lattice, &panels))])
}

pub fn defects(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let d = &cfg.defects;
    let phis = d.phis.values()?;
    let v = d.v_over_j.values()?;
    if !v.contains(&0.0) {
        bail!("defects.v_over_j must include 0 as the reference point");
    }
    let lat = Lattice::new(cfg.lattice.lx, cfg.lattice.ly)?;
    let (dips, bumps) = match d.geometry {
        DefectGeometry::MiddlePair => middle_pair_geometry(&lat)?,
        DefectGeometry::FullRows => full_row_geometry(&lat),
    };
    let mut rec = ExperimentRecord::with_columns(
        "defects",
        &["phi_quanta", "v_over_j_ratio", "n_upper_photons", "n_lower_photons", "dn_upper_photons", "dn_lower_photons"],
    )?;
    let mut chart = Chart::new("Density response to boundary traps", "V/J", "change in upper photons");
    for &phi in &phis {
        let base = prep_config(cfg, phi)?.with_duration(d.duration_us);
        let resp = run_defect_response(&base, &dips, &bumps, &v, cfg.noise.t2_us)?;
        let (du, dl) = (resp.delta_upper(), resp.delta_lower());
        for k in 0..v.len() {
            rec.push_row(&[phi, v[k], resp.n_upper[k], resp.n_lower[k], du[k], dl[k]])?;
        }
        chart = chart.push(Series::line(format!("phi = {phi}"), points(&v, &du)));
    }
    rec.set_meta("geometry", geometry_meta(&dips, &bumps));
    rec.set_meta("duration_us", d.duration_us);
    rec.set_meta("t2_us", json!(cfg.noise.t2_us));
    Ok(vec![Artifact::new(rec, render(&chart))])
}

pub fn streda(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let s = &cfg.streda;
    let phis = s.phis.values()?;
    let mode = match s.mode {
        StredaModeName::Ideal => StredaMode::Ideal,
        StredaModeName::Realistic => {
            StredaMode::Realistic { base: prep_config(cfg, cfg.flux.phi)?, t2_us: cfg.noise.t2_us }
        }
    };
    let res = run_streda(&model(cfg, s.photons)?, &phis, &mode)?;
    let mut rec = res.to_record()?;
    rec.set_meta("mode", mode_meta(&mode));
    rec.set_meta("photons", s.photons);
    let line: Vec<(f64, f64)> = phis.iter().map(|p| (*p, res.fit.slope * p + res.fit.intercept)).collect();
    let chart = Chart::new(format!("Bulk density, slope {:.3}", res.fit.slope), "flux (quanta)", "bulk density (photons)")
        .push(Series::markers("rho_bulk", points(&phis, &res.rho_bulk)).with_errors(res.rho_bulk_err.clone()))
        .push(Series::line("linear fit", line));
    Ok(vec![Artifact::new(rec, render(&chart))])
}

/// Spectrum of the single-photon Hamiltonian before and after a seeded random gauge
/// transformation; returns the largest eigenvalue shift in MHz.
pub fn gauge_check(cfg: &RunConfig, seed: u64) -> Result<f64> {
    let lat = Lattice::new(cfg.lattice.lx, cfg.lattice.ly)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi: Vec<f64> = (0..lat.num_sites()).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    let g = landau_gauge(&lat, cfg.flux.phi);
    let g2 = gauge_transform(&g, &chi)?;
    let basis = enumerate_basis(&lat, 1)?;
    let c = Couplings::uniform(&lat, cfg.lattice.j_mhz);
    let v = Potential::flat(&lat);
    let a = diagonalize(&build_hamiltonian(&lat, &g, &c, &v, &basis)?, false)?.eigenvalues;
    let b = diagonalize(&build_hamiltonian(&lat, &g2, &c, &v, &basis)?, false)?.eigenvalues;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / std::f64::consts::TAU)
}

/// Bulk sites exist only on 4x4; surfaced early for the protocols that need them.
pub fn require_bulk(cfg: &RunConfig) -> Result<()> {
    default_bulk_sites(&Lattice::new(cfg.lattice.lx, cfg.lattice.ly)?)?;
    Ok(())
}
