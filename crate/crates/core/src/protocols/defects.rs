//! Density response of the prepared state to boundary traps of depth `V`.

use rayon::prelude::*;
use serde_json::json;

use super::adiabatic::{run_preparation, Defects, PreparationConfig};
use super::sites_of;
use crate::error::Result;
use crate::evolve::Dephasing;
use crate::lattice::Lattice;
use crate::observables::imbalance;
use crate::record::ExperimentRecord;

/// Dips on the two middle sites of the top row, bumps on the two middle sites of the
/// bottom row.
pub fn middle_pair_geometry(lattice: &Lattice) -> Result<(Vec<usize>, Vec<usize>)> {
    let (lx, top) = (lattice.lx(), lattice.ly() - 1);
    let mid = lx / 2;
    let dips = sites_of(lattice, &[(mid - 1, top), (mid, top)])?;
    let bumps = sites_of(lattice, &[(mid - 1, 0), (mid, 0)])?;
    Ok((dips, bumps))
}

/// Whole top row as dips, whole bottom row as bumps.
pub fn full_row_geometry(lattice: &Lattice) -> (Vec<usize>, Vec<usize>) {
    let top = lattice.ly() - 1;
    ((0..lattice.lx()).map(|x| lattice.site(x, top)).collect(), (0..lattice.lx()).map(|x| lattice.site(x, 0)).collect())
}

#[derive(Debug, Clone)]
pub struct DefectResponse {
    pub phi: f64,
    pub v_over_j: Vec<f64>,
    pub n_upper: Vec<f64>,
    pub n_lower: Vec<f64>,
}

impl DefectResponse {
    /// `N_upper(V) - N_upper(0)`; requires `V = 0` in the grid, otherwise relative to the first point.
    pub fn delta_upper(&self) -> Vec<f64> {
        let base = self.reference(&self.n_upper);
        self.n_upper.iter().map(|n| n - base).collect()
    }

    pub fn delta_lower(&self) -> Vec<f64> {
        let base = self.reference(&self.n_lower);
        self.n_lower.iter().map(|n| n - base).collect()
    }

    fn reference(&self, v: &[f64]) -> f64 {
        let k = self.v_over_j.iter().position(|x| *x == 0.0).unwrap_or(0);
        v[k]
    }

    pub fn to_record(&self) -> Result<ExperimentRecord> {
        let mut r = ExperimentRecord::new("defects");
        r.push_column("v_over_j_ratio", self.v_over_j.clone())?;
        r.push_column("n_upper_photons", self.n_upper.clone())?;
        r.push_column("n_lower_photons", self.n_lower.clone())?;
        r.push_column("dn_upper_photons", self.delta_upper())?;
        r.push_column("dn_lower_photons", self.delta_lower())?;
        r.set_meta("phi", self.phi);
        Ok(r)
    }
}

/// Prepares the state with defects of depth `V = (V/J) * J` ramped in during stage 2 and
/// reports the upper/lower photon numbers. The grid should contain `V/J = 0`.
pub fn run_defect_response(
    base: &PreparationConfig,
    dips: &[usize],
    bumps: &[usize],
    v_over_j: &[f64],
    t2_us: Option<f64>,
) -> Result<DefectResponse> {
    let noise = t2_us.map(Dephasing::uniform).transpose()?;
    let pairs: Vec<(f64, f64)> = v_over_j
        .par_iter()
        .map(|&r| {
            let defects = (r != 0.0).then(|| Defects { dips: dips.to_vec(), bumps: bumps.to_vec(), depth_mhz: r * base.j_mhz });
            let cfg = base.clone().with_defects(defects);
            let prep = run_preparation(&cfg, noise.as_ref())?;
            Ok(imbalance(prep.final_state.as_dyn()))
        })
        .collect::<Result<_>>()?;
    Ok(DefectResponse {
        phi: base.phi,
        v_over_j: v_over_j.to_vec(),
        n_upper: pairs.iter().map(|p| p.0).collect(),
        n_lower: pairs.iter().map(|p| p.1).collect(),
    })
}

pub fn geometry_meta(dips: &[usize], bumps: &[usize]) -> serde_json::Value {
    json!({"dips": dips, "bumps": bumps})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometries_on_4x4() {
        let l = Lattice::new(4, 4).unwrap();
        assert_eq!(middle_pair_geometry(&l).unwrap(), (vec![13, 14], vec![1, 2]));
        assert_eq!(full_row_geometry(&l), (vec![12, 13, 14, 15], vec![0, 1, 2, 3]));
    }
}
