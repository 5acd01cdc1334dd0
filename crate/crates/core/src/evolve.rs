//! Fixed-step RK4 propagation of pure states and dephasing Lindblad dynamics.
//!
//! Each step samples `H` at `t`, `t + h/2` and `t + h` (the classic scheme with
//! midpoint-sampled Hamiltonian). The step is `T / ceil(T / dt)` so the final
//! time is hit exactly.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianTemplate, InstantHamiltonian};
use crate::lattice::GaugeField;
use crate::observables;
use crate::record::ExperimentRecord;
use crate::schedule::DriveSchedule;
use crate::state::{DensityMatrix, QuantumState, StateVector};
use crate::{C64, DEFAULT_DT_US};

/// Norm / trace drift allowed over a whole run.
pub const DRIFT_LIMIT: f64 = 1e-6;

/// Quantities that can be sampled along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    /// One column per site, `n<site>_photons`.
    Densities,
    /// `norm_ratio` (squared norm or trace).
    Norm,
    /// `energy_mhz`, `<H>/2pi`.
    Energy,
    /// `x_index`, `y_index`.
    Centroid,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub dt_us: f64,
    /// Sampling interval; `None` samples only the start and end.
    pub record_every_us: Option<f64>,
    pub observables: Vec<Observable>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { dt_us: DEFAULT_DT_US, record_every_us: None, observables: Vec::new() }
    }
}

impl EvolveOptions {
    pub fn with_dt(dt_us: f64) -> Self {
        Self { dt_us, ..Self::default() }
    }

    pub fn recording(mut self, every_us: f64, obs: &[Observable]) -> Self {
        self.record_every_us = Some(every_us);
        self.observables = obs.to_vec();
        self
    }
}

/// Pure dephasing with per-site coherence times, us. `f64::INFINITY` disables a site.
#[derive(Debug, Clone, PartialEq)]
pub struct Dephasing {
    pub t2_us: f64,
    pub site_t2_us: BTreeMap<usize, f64>,
}

impl Dephasing {
    pub fn uniform(t2_us: f64) -> Result<Self> {
        Self::with_overrides(t2_us, BTreeMap::new())
    }

    pub fn none() -> Self {
        Self { t2_us: f64::INFINITY, site_t2_us: BTreeMap::new() }
    }

    pub fn with_overrides(t2_us: f64, site_t2_us: BTreeMap<usize, f64>) -> Result<Self> {
        for &t in std::iter::once(&t2_us).chain(site_t2_us.values()) {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::config(format!("T2 must be positive, got {t}")));
            }
        }
        Ok(Self { t2_us, site_t2_us })
    }

    /// Coherence decay rate of one site, 1/us.
    pub fn rate(&self, site: usize) -> f64 {
        1.0 / self.site_t2_us.get(&site).copied().unwrap_or(self.t2_us)
    }

    /// `D_ab = -sum_{s in a xor b} 1/T2_s` over a list of occupation masks.
    pub fn damping_mask(&self, states: &[u32], num_sites: usize) -> DMatrix<f64> {
        let rates: Vec<f64> = (0..num_sites).map(|s| self.rate(s)).collect();
        let d = states.len();
        DMatrix::from_fn(d, d, |a, b| {
            let mut diff = states[a] ^ states[b];
            let mut g = 0.0;
            while diff != 0 {
                g += rates[diff.trailing_zeros() as usize];
                diff &= diff - 1;
            }
            -g
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub final_state: S,
    pub record: ExperimentRecord,
}

/// Step plan shared by both integrators.
struct Steps {
    n: usize,
    h: f64,
    sample_every: usize,
}

fn plan(schedule: &DriveSchedule, tpl: &HamiltonianTemplate, opts: &EvolveOptions) -> Result<Steps> {
    let dt = opts.dt_us;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config(format!("dt must be positive, got {dt}")));
    }
    let norm = schedule
        .endpoints()
        .map(|(j, v)| tpl.instant(j, v).norm_bound())
        .fold(0.0, f64::max);
    let norm_mhz = norm / TAU;
    if norm_mhz > 0.0 {
        let max_us = 0.1 / norm_mhz;
        if dt > max_us * (1.0 + 1e-12) {
            return Err(Error::TimeStep { dt_us: dt, max_us, norm_mhz });
        }
    }
    let total = schedule.duration();
    let n = (total / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if n > 0 { total / n as f64 } else { 0.0 };
    let sample_every = match opts.record_every_us {
        Some(every) if h > 0.0 => ((every / h).round() as usize).max(1),
        _ => usize::MAX,
    };
    Ok(Steps { n, h, sample_every })
}

/// Template for the schedule's lattice in the state's sector.
fn template_for(schedule: &DriveSchedule, gauge: &GaugeField, basis: &crate::SectorBasis) -> Result<HamiltonianTemplate> {
    if basis.lattice() != schedule.lattice() {
        return Err(Error::config("state and schedule live on different lattices"));
    }
    HamiltonianTemplate::new(basis, gauge)
}

/// `y += a * x`.
fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Propagates `psi0` under the schedule, calling `sample(t, psi)` at `t = 0`, every
/// `sample_every_us` and at the end.
pub fn evolve_pure_with<F>(
    schedule: &DriveSchedule,
    gauge: &GaugeField,
    psi0: &StateVector,
    dt_us: f64,
    sample_every_us: Option<f64>,
    mut sample: F,
) -> Result<StateVector>
where
    F: FnMut(f64, &StateVector, &InstantHamiltonian<'_>),
{
    let tpl = template_for(schedule, gauge, psi0.basis())?;
    let opts = EvolveOptions { dt_us, record_every_us: sample_every_us, observables: Vec::new() };
    let Steps { n, h, sample_every } = plan(schedule, &tpl, &opts)?;
    let hamiltonian_at = |t: f64| {
        let (j, v) = schedule.at(t);
        tpl.instant(&j, &v)
    };

    let mut psi = psi0.clone();
    let norm0 = psi.norm_sqr();
    let d = psi.amplitudes().len();
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![zero; d], vec![zero; d], vec![zero; d], vec![zero; d], vec![zero; d]);
    let mi = C64::new(0.0, -1.0);

    let mut h_start = hamiltonian_at(0.0);
    sample(0.0, &psi, &h_start);
    for step in 0..n {
        let t = step as f64 * h;
        let h_mid = hamiltonian_at(t + 0.5 * h);
        let h_end = hamiltonian_at(t + h);
        let x = psi.amplitudes();

        h_start.apply(x, &mut k1);
        k1.iter_mut().for_each(|v| *v *= mi);

        tmp.copy_from_slice(x);
        axpy(&mut tmp, C64::new(0.5 * h, 0.0), &k1);
        h_mid.apply(&tmp, &mut k2);
        k2.iter_mut().for_each(|v| *v *= mi);

        tmp.copy_from_slice(x);
        axpy(&mut tmp, C64::new(0.5 * h, 0.0), &k2);
        h_mid.apply(&tmp, &mut k3);
        k3.iter_mut().for_each(|v| *v *= mi);

        tmp.copy_from_slice(x);
        axpy(&mut tmp, C64::new(h, 0.0), &k3);
        h_end.apply(&tmp, &mut k4);
        k4.iter_mut().for_each(|v| *v *= mi);

        let w = h / 6.0;
        for (i, a) in psi.amplitudes_mut().iter_mut().enumerate() {
            *a += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * w;
        }

        let done = step + 1;
        if done == n || done % sample_every == 0 {
            sample(if done == n { schedule.duration() } else { done as f64 * h }, &psi, &h_end);
        }
        h_start = h_end;
    }

    let drift = (psi.norm_sqr() - norm0).abs();
    if drift > DRIFT_LIMIT {
        return Err(Error::IntegratorAccuracy { drift, dt_us });
    }
    Ok(psi)
}

/// Unitary evolution with observables recorded into an [`ExperimentRecord`].
pub fn evolve_pure(
    schedule: &DriveSchedule,
    gauge: &GaugeField,
    psi0: &StateVector,
    opts: &EvolveOptions,
) -> Result<Trajectory<StateVector>> {
    let mut rec = Recorder::new("evolve_pure", psi0.basis().lattice().num_sites(), &opts.observables)?;
    let final_state = evolve_pure_with(schedule, gauge, psi0, opts.dt_us, opts.record_every_us, |t, psi, ham| {
        rec.sample(t, psi, || energy_pure(psi, ham));
    })?;
    let mut record = rec.finish()?;
    record.set_meta("dt_us", opts.dt_us);
    record.set_meta("duration_us", schedule.duration());
    Ok(Trajectory { final_state, record })
}

/// Integrates `d rho/dt = -i[H(t), rho] + D(rho)` with the closed-form dephasing mask.
pub fn evolve_lindblad_with<F>(
    schedule: &DriveSchedule,
    gauge: &GaugeField,
    rho0: &DensityMatrix,
    dephasing: &Dephasing,
    dt_us: f64,
    sample_every_us: Option<f64>,
    mut sample: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, &DensityMatrix, &InstantHamiltonian<'_>),
{
    let tpl = template_for(schedule, gauge, rho0.basis())?;
    let opts = EvolveOptions { dt_us, record_every_us: sample_every_us, observables: Vec::new() };
    let Steps { n, h, sample_every } = plan(schedule, &tpl, &opts)?;
    let hamiltonian_at = |t: f64| {
        let (j, v) = schedule.at(t);
        tpl.instant(&j, &v)
    };
    let mask = dephasing.damping_mask(tpl.states(), schedule.lattice().num_sites());
    let d = tpl.dim();

    let mut rho = rho0.clone();
    let tr0 = rho.trace();
    let mut scratch = DMatrix::<C64>::zeros(d, d);
    let mut k = [DMatrix::<C64>::zeros(d, d), DMatrix::zeros(d, d), DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
    let mut tmp = DMatrix::<C64>::zeros(d, d);

    // out = -i (H r - (H r)^dag) + mask .* r
    let rhs = |ham: &InstantHamiltonian<'_>, r: &DMatrix<C64>, scratch: &mut DMatrix<C64>, out: &mut DMatrix<C64>| {
        ham.apply_columns(r.as_slice(), scratch.as_mut_slice());
        for c in 0..d {
            for rr in 0..d {
                let comm = scratch[(rr, c)] - scratch[(c, rr)].conj();
                out[(rr, c)] = C64::new(comm.im, -comm.re) + r[(rr, c)] * mask[(rr, c)];
            }
        }
    };

    let mut h_start = hamiltonian_at(0.0);
    sample(0.0, &rho, &h_start);
    for step in 0..n {
        let t = step as f64 * h;
        let h_mid = hamiltonian_at(t + 0.5 * h);
        let h_end = hamiltonian_at(t + h);
        let [k1, k2, k3, k4] = &mut k;

        rhs(&h_start, rho.matrix(), &mut scratch, k1);
        tmp.copy_from(rho.matrix());
        axpy(tmp.as_mut_slice(), C64::new(0.5 * h, 0.0), k1.as_slice());
        rhs(&h_mid, &tmp, &mut scratch, k2);
        tmp.copy_from(rho.matrix());
        axpy(tmp.as_mut_slice(), C64::new(0.5 * h, 0.0), k2.as_slice());
        rhs(&h_mid, &tmp, &mut scratch, k3);
        tmp.copy_from(rho.matrix());
        axpy(tmp.as_mut_slice(), C64::new(h, 0.0), k3.as_slice());
        rhs(&h_end, &tmp, &mut scratch, k4);

        let w = h / 6.0;
        let m = rho.matrix_mut();
        for i in 0..d * d {
            m.as_mut_slice()[i] +=
                (k1.as_slice()[i] + 2.0 * k2.as_slice()[i] + 2.0 * k3.as_slice()[i] + k4.as_slice()[i]) * w;
        }

        let done = step + 1;
        if done == n || done % sample_every == 0 {
            sample(if done == n { schedule.duration() } else { done as f64 * h }, &rho, &h_end);
        }
        h_start = h_end;
    }

    let drift = (rho.trace() - tr0).abs();
    if drift > DRIFT_LIMIT {
        return Err(Error::TraceDrift { drift, dt_us });
    }
    Ok(rho)
}

pub fn evolve_lindblad(
    schedule: &DriveSchedule,
    gauge: &GaugeField,
    rho0: &DensityMatrix,
    dephasing: &Dephasing,
    opts: &EvolveOptions,
) -> Result<Trajectory<DensityMatrix>> {
    let mut rec = Recorder::new("evolve_lindblad", rho0.basis().lattice().num_sites(), &opts.observables)?;
    let final_state =
        evolve_lindblad_with(schedule, gauge, rho0, dephasing, opts.dt_us, opts.record_every_us, |t, rho, ham| {
            rec.sample(t, rho, || energy_mixed(rho, ham));
        })?;
    let mut record = rec.finish()?;
    record.set_meta("dt_us", opts.dt_us);
    record.set_meta("duration_us", schedule.duration());
    record.set_meta("t2_us", if dephasing.t2_us.is_finite() { dephasing.t2_us.into() } else { serde_json::Value::Null });
    Ok(Trajectory { final_state, record })
}

/// `<psi|H|psi> / 2pi`, MHz.
pub fn energy_pure(psi: &StateVector, ham: &InstantHamiltonian<'_>) -> f64 {
    let x = psi.amplitudes();
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    ham.apply(x, &mut y);
    x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / TAU
}

/// `Tr(H rho) / 2pi`, MHz.
pub fn energy_mixed(rho: &DensityMatrix, ham: &InstantHamiltonian<'_>) -> f64 {
    let d = ham.dim();
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    ham.apply_columns(rho.matrix().as_slice(), &mut out);
    (0..d).map(|i| out[i * d + i].re).sum::<f64>() / TAU
}

struct Recorder {
    record: ExperimentRecord,
    obs: Vec<Observable>,
}

impl Recorder {
    fn new(name: &str, num_sites: usize, obs: &[Observable]) -> Result<Self> {
        let mut obs = obs.to_vec();
        obs.sort();
        obs.dedup();
        let mut names = vec!["t_us".to_string()];
        for o in &obs {
            match o {
                Observable::Densities => names.extend((0..num_sites).map(|s| format!("n{s}_photons"))),
                Observable::Norm => names.push("norm_ratio".into()),
                Observable::Energy => names.push("energy_mhz".into()),
                Observable::Centroid => names.extend(["x_index".to_string(), "y_index".to_string()]),
            }
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(Self { record: ExperimentRecord::with_columns(name, &refs)?, obs })
    }

    fn sample(&mut self, t: f64, state: &dyn QuantumState, energy: impl FnOnce() -> f64) {
        let mut row = vec![t];
        let mut energy = Some(energy);
        for o in &self.obs {
            match o {
                Observable::Densities => row.extend(observables::densities(state)),
                Observable::Norm => row.push(state.trace()),
                Observable::Energy => row.push(energy.take().map_or(f64::NAN, |f| f())),
                Observable::Centroid => {
                    let (x, y) = observables::centroid(state);
                    row.extend([x, y]);
                }
            }
        }
        self.record.push_row(&row).expect("row width fixed at construction");
    }

    fn finish(self) -> Result<ExperimentRecord> {
        Ok(self.record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::lattice::{landau_gauge, Couplings, Lattice, Potential};
    use std::sync::Arc;

    fn dimer() -> (Lattice, Arc<crate::SectorBasis>) {
        let l = Lattice::new(2, 1).unwrap();
        let b = Arc::new(enumerate_basis(&l, 1).unwrap());
        (l, b)
    }

    #[test]
    fn dimer_full_transfer_at_half_period() {
        let (l, b) = dimer();
        let s = DriveSchedule::constant(&l, Couplings::uniform(&l, 5.0), Potential::flat(&l), 0.05).unwrap();
        let psi = StateVector::fock(b, &[0]).unwrap();
        let out = evolve_pure(&s, &landau_gauge(&l, 0.0), &psi, &EvolveOptions::default()).unwrap();
        let p = out.final_state.populations();
        assert!((p[1] - 1.0).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn time_step_guard() {
        let (l, b) = dimer();
        let s = DriveSchedule::constant(&l, Couplings::uniform(&l, 5.0), Potential::flat(&l), 0.05).unwrap();
        let psi = StateVector::fock(b, &[0]).unwrap();
        let r = evolve_pure(&s, &landau_gauge(&l, 0.0), &psi, &EvolveOptions::with_dt(0.03));
        assert!(matches!(r, Err(Error::TimeStep { .. })));
    }

    #[test]
    fn recorder_samples_on_interval() {
        let (l, b) = dimer();
        let s = DriveSchedule::constant(&l, Couplings::uniform(&l, 5.0), Potential::flat(&l), 0.1).unwrap();
        let psi = StateVector::fock(b, &[0]).unwrap();
        let opts = EvolveOptions::default().recording(0.01, &[Observable::Densities, Observable::Norm, Observable::Energy]);
        let out = evolve_pure(&s, &landau_gauge(&l, 0.0), &psi, &opts).unwrap();
        let t = out.record.column("t_us").unwrap();
        assert_eq!(t.len(), 11);
        assert!((t[10] - 0.1).abs() < 1e-15);
        let n0 = out.record.column("n0_photons").unwrap();
        // n0(t) = cos^2(2 pi J t)
        for (ti, ni) in t.iter().zip(n0) {
            assert!((ni - (TAU * 5.0 * ti).cos().powi(2)).abs() < 1e-9);
        }
        assert!(out.record.column("energy_mhz").unwrap().iter().all(|e| e.abs() < 1e-9));
    }

    #[test]
    fn single_site_coherence_decay() {
        // One site in the full two-level space: (|0> + |1>)/sqrt2, off-diagonal = e^{-t/T2}/2.
        let l = Lattice::new(1, 1).unwrap();
        let states = vec![0u32, 1];
        let mask = Dephasing::uniform(6.2).unwrap().damping_mask(&states, 1);
        assert_eq!(mask[(0, 0)], 0.0);
        assert!((mask[(0, 1)] + 1.0 / 6.2).abs() < 1e-15);
        let _ = l;
    }

    #[test]
    fn dephasing_rejects_nonpositive() {
        assert!(Dephasing::uniform(-1.0).is_err());
        assert!(Dephasing::uniform(0.0).is_err());
        assert_eq!(Dephasing::none().rate(3), 0.0);
    }
}
